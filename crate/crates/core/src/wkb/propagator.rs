use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chart::{RaySource, SourceChart};
use crate::dynamics::{focal_time, PhasePoint, WavefrontShape};
use crate::error::{invalid, Error, Result};
use crate::geometry::{DeckBall, DeckGroup, DeckWord, DiskPoint, MobiusMap};
use crate::lagrangian::LagrangianState;

/// Numerical knobs of the branch search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagatorConfig {
    /// Number of rays in the coarse forward bundle.
    pub n_rays: usize,
    /// Arrival tolerance (hyperbolic distance) for a refined branch.
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            n_rays: 4096,
            tol: 1e-9,
            max_newton: 40,
        }
    }
}

/// A transported ray of the initial Lagrangian.
#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    /// Source parameter in the chart of the state.
    pub source: [f64; 2],
    /// Arrival on the universal cover.
    pub lifted: PhasePoint,
    /// Arrival with its base reduced into the octagon.
    pub reduced: PhasePoint,
    pub deck_word: DeckWord,
    pub action: f64,
    pub shape: WavefrontShape,
    pub jacobian: f64,
}

/// A ray whose projection degenerated before the requested time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayFailure {
    pub source: [f64; 2],
    pub blow_up_time: f64,
}

/// One term of the WKB sum at an observation point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    /// Arrival covector in the observation frame.
    pub xi: [f64; 2],
    /// Phase value `S` at the observation point.
    pub phase: f64,
    /// `a(y) / sqrt(J)`.
    pub amplitude: f64,
    pub source: DiskPoint,
    pub source_param: [f64; 2],
    pub deck_word: String,
    pub jacobian: f64,
    #[serde(skip, default = "identity")]
    pub deck: MobiusMap,
}

fn identity() -> MobiusMap {
    MobiusMap::IDENTITY
}

/// Search bookkeeping attached to a table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagnostics {
    pub candidates: usize,
    pub newton_failures: usize,
    /// `Σ b_j^2`, to be compared with the mass density of the transported state.
    pub local_mass: f64,
}

/// All branches of the propagated state at one observation point and time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchTable {
    pub x0: DiskPoint,
    /// Rotation of the observation frame from the canonical frame at `x0`.
    pub frame: f64,
    pub t: f64,
    pub branches: Vec<BranchRecord>,
    pub count: usize,
    pub diagnostics: BranchDiagnostics,
}

/// Forward bundle at a fixed time, indexed for nearest-ray lookups.
pub struct RayBundle {
    pub t: f64,
    sources: Vec<RaySource>,
    keys: Vec<[f64; 2]>,
    cell: f64,
    cells: HashMap<(i64, i64), Vec<u32>>,
    /// Moves the amplitude centre to 0.
    anchor: MobiusMap,
    radial: (f64, f64),
    ball: Arc<DeckBall>,
    candidates: Vec<u32>,
}

impl RayBundle {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    fn cell_of(&self, key: [f64; 2]) -> (i64, i64) {
        ((key[0] / self.cell).floor() as i64, (key[1] / self.cell).floor() as i64)
    }

    fn nearest(&self, key: [f64; 2]) -> Option<usize> {
        let (cx, cy) = self.cell_of(key);
        let mut best: Option<(f64, u32)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(cx + dx, cy + dy)) {
                    for &i in ids {
                        let k = self.keys[i as usize];
                        let d = (k[0] - key[0]).powi(2) + (k[1] - key[1]).powi(2);
                        if best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, i));
                        }
                    }
                }
            }
        }
        best.map(|(_, i)| i as usize)
    }
}

/// Riemannian normal coordinates of `m(0)` around 0.
fn log_key(m: &MobiusMap) -> [f64; 2] {
    let d = m.displacement();
    if d == 0.0 {
        return [0.0, 0.0];
    }
    let th = m.hyperboloid().bearing();
    [d * th.cos(), d * th.sin()]
}

/// Transports a Lagrangian state and finds its branches at observation points.
pub struct Propagator<'a> {
    pub state: &'a LagrangianState,
    pub group: &'a DeckGroup,
    pub chart: SourceChart,
    pub config: PropagatorConfig,
}

impl<'a> Propagator<'a> {
    pub fn new(state: &'a LagrangianState, group: &'a DeckGroup, config: PropagatorConfig) -> Self {
        Propagator {
            state,
            group,
            chart: SourceChart::for_state(state),
            config,
        }
    }

    pub fn source(&self, q: [f64; 2]) -> Result<RaySource> {
        self.chart.source(self.state, q)
    }

    /// Regular grid of source parameters covering the support, `n_side` per axis.
    pub fn source_grid(&self, n_side: usize) -> Result<Vec<(usize, usize, [f64; 2])>> {
        let [lo, hi] = self.chart.support_box(self.state, 0.02)?;
        let mut out = Vec::with_capacity(n_side * n_side);
        for i in 0..n_side {
            for j in 0..n_side {
                let q = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / (n_side - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / (n_side - 1) as f64,
                ];
                if let SourceChart::Normal { .. } = self.chart {
                    if q[0].hypot(q[1]) > hi[0] {
                        continue;
                    }
                }
                out.push((i, j, q));
            }
        }
        Ok(out)
    }

    /// First time in `(0, t]` where the projected Jacobian vanishes, if any.
    pub fn degeneration_time(&self, src: &RaySource, t: f64) -> Option<f64> {
        let (nn, nl, _) = src.hessian;
        if nn == 0.0 && nl == 0.0 {
            return focal_time(src.shape(), t, src.speed);
        }
        let steps = 256;
        (1..=steps)
            .map(|k| t * k as f64 / steps as f64)
            .find(|&s| src.jacobian(s) <= 0.0)
    }

    pub fn ray(&self, q: [f64; 2], t: f64) -> Result<std::result::Result<Ray, RayFailure>> {
        let src = self.source(q)?;
        if let Some(time) = self.degeneration_time(&src, t) {
            return Ok(Err(RayFailure {
                source: q,
                blow_up_time: time,
            }));
        }
        let lifted = PhasePoint {
            frame: src.arrival(t),
            speed: src.speed,
        };
        let (reduced, deck_word) = self.group.reduce_frame(&lifted.frame)?;
        let shape = match crate::dynamics::riccati_evolve(WavefrontShape(src.shape()), t, src.speed) {
            crate::dynamics::RiccatiOutcome::Regular(u) => u,
            crate::dynamics::RiccatiOutcome::BlowUp { time } => {
                return Ok(Err(RayFailure {
                    source: q,
                    blow_up_time: time,
                }))
            }
        };
        Ok(Ok(Ray {
            source: q,
            lifted,
            reduced: PhasePoint {
                frame: reduced,
                speed: src.speed,
            },
            deck_word,
            action: src.action(t),
            shape,
            jacobian: src.jacobian(t),
        }))
    }

    /// Rays from a grid of about `n_rays` source parameters, in grid order.
    pub fn propagate_bundle(&self, t: f64, n_rays: usize) -> Result<Vec<std::result::Result<Ray, RayFailure>>> {
        if t < 0.0 || n_rays < 64 {
            return Err(invalid("propagate_bundle needs t >= 0 and at least 64 rays"));
        }
        let side = (n_rays as f64).sqrt().ceil() as usize;
        self.source_grid(side)?
            .into_iter()
            .map(|(_, _, q)| self.ray(q, t))
            .collect()
    }

    /// Builds the indexed forward bundle and the deck elements worth testing.
    pub fn bundle(&self, t: f64) -> Result<RayBundle> {
        if t < 0.0 {
            return Err(invalid("negative time"));
        }
        let side = ((self.config.n_rays as f64).sqrt().ceil() as usize).max(8);
        let grid = self.source_grid(side)?;
        let anchor = MobiusMap::transvection(self.state.amplitude.center).inverse();
        let mut sources = Vec::with_capacity(grid.len());
        let mut keys = Vec::with_capacity(grid.len());
        let mut slot = vec![u32::MAX; side * side];
        for (i, j, q) in &grid {
            let src = self.source(*q)?;
            slot[i * side + j] = sources.len() as u32;
            keys.push(log_key(&anchor.compose(&src.arrival(t))));
            sources.push(src);
        }
        // Cell size from the largest gap between grid neighbours.
        let mut gap: f64 = 0.0;
        for i in 0..side {
            for j in 0..side {
                let a = slot[i * side + j];
                if a == u32::MAX {
                    continue;
                }
                for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                    if ni < side && nj < side {
                        let b = slot[ni * side + nj];
                        if b != u32::MAX {
                            let (ka, kb) = (keys[a as usize], keys[b as usize]);
                            gap = gap.max((ka[0] - kb[0]).hypot(ka[1] - kb[1]));
                        }
                    }
                }
            }
        }
        let cell = (2.0 * gap).max(1e-6);
        let mut cells: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            let c = ((k[0] / cell).floor() as i64, (k[1] / cell).floor() as i64);
            cells.entry(c).or_default().push(i as u32);
        }
        let radii: Vec<f64> = keys.iter().map(|k| k[0].hypot(k[1])).collect();
        let radial = (
            radii.iter().copied().fold(f64::INFINITY, f64::min),
            radii.iter().copied().fold(0.0, f64::max),
        );

        // Angular occupancy of the bundle as seen from the anchor.
        const BINS: usize = 4096;
        let bin_width = 2.0 * PI / BINS as f64;
        let mut occupied = vec![false; BINS];
        for (k, &r) in keys.iter().zip(&radii) {
            let th = k[1].atan2(k[0]);
            // Keys are normal coordinates, so a key gap `cell` subtends `cell / r`.
            let spread = if r < 1e-9 { PI } else { (cell / r).min(PI) };
            mark_arc(&mut occupied, th, spread + bin_width, bin_width);
        }
        let mut prefix = vec![0u32; BINS + 1];
        for b in 0..BINS {
            prefix[b + 1] = prefix[b] + occupied[b] as u32;
        }

        let tile = DeckGroup::circumradius() + 0.05;
        let centre_offset = self.state.amplitude.center.distance_from_origin();
        let ball = self.group.ball(radial.1 + cell + tile + centre_offset + 0.1)?;
        let mut candidates = Vec::new();
        for (idx, e) in ball.elements.iter().enumerate() {
            if e.displacement > radial.1 + cell + tile + centre_offset + 0.1 {
                continue;
            }
            let rel = anchor.compose(&e.map);
            let d = rel.displacement();
            if d < radial.0 - tile - cell || d > radial.1 + tile + cell {
                continue;
            }
            if d > tile + cell {
                let hw = ((tile + cell).sinh() / d.sinh()).min(1.0).asin();
                let th = rel.hyperboloid().bearing();
                if !arc_hits(&prefix, th, hw, bin_width) {
                    continue;
                }
            }
            candidates.push(idx as u32);
        }
        Ok(RayBundle {
            t,
            sources,
            keys,
            cell,
            cells,
            anchor,
            radial,
            ball,
            candidates,
        })
    }

    /// Refines the source parameter whose ray at time `t` arrives at `target(0)`.
    pub fn solve_arrival(&self, target: &MobiusMap, t: f64, start: [f64; 2]) -> Option<RaySource> {
        let residual = |src: &RaySource| {
            let m = src.frame.inverse().compose(target);
            let k = log_key(&m);
            [k[0] - src.speed * t, k[1]]
        };
        let mut q = start;
        let mut src = self.source(q).ok()?;
        let step = 1e-7;
        for _ in 0..self.config.max_newton {
            let r = residual(&src);
            let miss = src.arrival(t).inverse().compose(target).displacement();
            if miss < 1e-3 * self.config.tol {
                return Some(src);
            }
            let mut jac = [[0.0; 2]; 2];
            for k in 0..2 {
                let mut qk = q;
                qk[k] += step;
                let rk = residual(&self.source(qk).ok()?);
                jac[0][k] = (rk[0] - r[0]) / step;
                jac[1][k] = (rk[1] - r[1]) / step;
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if !det.is_finite() || det.abs() < 1e-300 {
                return None;
            }
            let mut dq = [
                -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
            ];
            let len = dq[0].hypot(dq[1]);
            let cap = 0.25 * self.state.amplitude.radius;
            if len > cap {
                dq = [dq[0] * cap / len, dq[1] * cap / len];
            }
            q = [q[0] + dq[0], q[1] + dq[1]];
            src = self.source(q).ok()?;
            if len < 1e-15 {
                break;
            }
        }
        let miss = src.arrival(t).inverse().compose(target).displacement();
        (miss < self.config.tol).then_some(src)
    }

    /// All branches at `x0` (reduced into the octagon first).
    pub fn find_branches(&self, bundle: &RayBundle, x0: DiskPoint, frame: f64) -> Result<BranchTable> {
        let (x0, _) = self.group.reduce_to_domain(x0)?;
        let t = bundle.t;
        let obs = MobiusMap::frame(x0, frame);
        let mut diagnostics = BranchDiagnostics::default();
        let mut branches = Vec::new();
        let lo = bundle.radial.0 - 2.0 * bundle.cell;
        let hi = bundle.radial.1 + 2.0 * bundle.cell;
        for &idx in &bundle.candidates {
            let element = &bundle.ball.elements[idx as usize];
            let target = element.map.compose(&obs);
            let rel = bundle.anchor.compose(&target);
            let d = rel.displacement();
            if d < lo || d > hi {
                continue;
            }
            let key = log_key(&rel);
            let Some(start) = bundle.nearest(key) else {
                continue;
            };
            diagnostics.candidates += 1;
            let Some(src) = self.solve_arrival(&target, t, bundle.sources[start].param) else {
                if bundle.sources[start].amplitude > 0.0 {
                    diagnostics.newton_failures += 1;
                }
                continue;
            };
            if src.amplitude <= 0.0 {
                continue;
            }
            let jacobian = src.jacobian(t);
            if jacobian <= 0.0 {
                diagnostics.newton_failures += 1;
                continue;
            }
            let arrival = obs.inverse().compose(&element.map.inverse()).compose(&src.arrival(t));
            let (sn, cs) = arrival.direction().sin_cos();
            branches.push(BranchRecord {
                xi: [src.speed * cs, src.speed * sn],
                phase: src.action(t),
                amplitude: src.amplitude / jacobian.sqrt(),
                source: src.base()?,
                source_param: src.param,
                deck_word: bundle.ball.word(idx as usize).to_string(),
                jacobian,
                deck: element.map,
            });
        }
        branches.sort_by(|a, b| {
            a.deck_word
                .cmp(&b.deck_word)
                .then(a.source_param[0].total_cmp(&b.source_param[0]))
                .then(a.source_param[1].total_cmp(&b.source_param[1]))
        });
        diagnostics.local_mass = branches.iter().map(|b| b.amplitude * b.amplitude).sum();
        Ok(BranchTable {
            x0,
            frame,
            t,
            count: branches.len(),
            branches,
            diagnostics,
        })
    }

    /// Re-solves one branch at a nearby observation point; returns `(S, b, ξ)`.
    pub fn continue_branch(
        &self,
        branch: &BranchRecord,
        t: f64,
        x: DiskPoint,
        frame: f64,
    ) -> Option<(f64, f64, [f64; 2])> {
        let obs = MobiusMap::frame(x, frame);
        let target = branch.deck.compose(&obs);
        let src = self.solve_arrival(&target, t, branch.source_param)?;
        let jacobian = src.jacobian(t);
        if src.amplitude <= 0.0 || jacobian <= 0.0 {
            return Some((src.action(t), 0.0, [0.0, 0.0]));
        }
        let arrival = target.inverse().compose(&src.arrival(t));
        let (sn, cs) = arrival.direction().sin_cos();
        Some((
            src.action(t),
            src.amplitude / jacobian.sqrt(),
            [src.speed * cs, src.speed * sn],
        ))
    }

    /// First grid time from which all sampled pairs of rays separate and all
    /// projected Jacobians stay positive.
    pub fn detect_t0(&self, t_grid: &[f64], pair_samples: usize) -> Result<f64> {
        if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("t_grid must be non-empty and increasing"));
        }
        let side = ((2.0 * pair_samples as f64).sqrt().ceil() as usize).clamp(4, 24);
        let sources: Vec<RaySource> = self
            .source_grid(side)?
            .into_iter()
            .map(|(_, _, q)| self.source(q))
            .collect::<Result<_>>()?;
        let n = sources.len();
        let total = n * (n - 1) / 2;
        let stride = (total / pair_samples.max(1)).max(1);
        let mut pairs = Vec::new();
        let mut k = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                if k.is_multiple_of(stride) && !same_geodesic(&sources[i], &sources[j]) {
                    pairs.push((i, j));
                }
                k += 1;
            }
        }
        let last = t_grid.len() - 1;
        // good_from[k]: every pair separates on all grid intervals from k on.
        let mut first_bad_interval = 0usize;
        let mut offender = None;
        for &(i, j) in &pairs {
            let dist: Vec<f64> = t_grid
                .iter()
                .map(|&t| {
                    sources[i]
                        .arrival(t)
                        .inverse()
                        .compose(&sources[j].arrival(t))
                        .displacement()
                })
                .collect();
            for m in (0..last).rev() {
                if dist[m + 1] <= dist[m] {
                    if m + 1 > first_bad_interval {
                        first_bad_interval = m + 1;
                        offender = Some((i, j, t_grid[m]));
                    }
                    break;
                }
            }
        }
        for (idx, &t) in t_grid.iter().enumerate() {
            if sources
                .iter()
                .any(|s| s.amplitude > 0.0 && self.degeneration_time(s, t).is_some())
            {
                first_bad_interval = first_bad_interval.max(idx + 1);
            }
        }
        if first_bad_interval > last || (first_bad_interval == last && last > 0) {
            let (i, j, time) = offender.unwrap_or((0, 0, t_grid[last]));
            return Err(Error::NoExpansionTime {
                pair: (sources[i].param, sources[j].param),
                time,
            });
        }
        Ok(t_grid[first_bad_interval])
    }
}

fn same_geodesic(a: &RaySource, b: &RaySource) -> bool {
    let rel = a.frame.inverse().compose(&b.frame);
    rel.hyperboloid().x2.abs() < 1e-9 && rel.direction().abs() < 1e-9
}

fn mark_arc(occupied: &mut [bool], centre: f64, half: f64, width: f64) {
    let n = occupied.len() as i64;
    let a = ((centre - half + PI) / width).floor() as i64;
    let b = ((centre + half + PI) / width).floor() as i64;
    if b - a >= n {
        occupied.iter_mut().for_each(|o| *o = true);
        return;
    }
    for k in a..=b {
        occupied[k.rem_euclid(n) as usize] = true;
    }
}

fn arc_hits(prefix: &[u32], centre: f64, half: f64, width: f64) -> bool {
    let n = (prefix.len() - 1) as i64;
    let a = ((centre - half + PI) / width).floor() as i64;
    let b = ((centre + half + PI) / width).floor() as i64;
    if b - a >= n {
        return prefix[n as usize] > 0;
    }
    let count = |lo: i64, hi: i64| prefix[(hi + 1) as usize] - prefix[lo as usize];
    let (ra, rb) = (a.rem_euclid(n), b.rem_euclid(n));
    if ra <= rb {
        count(ra, rb) > 0
    } else {
        count(ra, n - 1) + count(0, rb) > 0
    }
}
