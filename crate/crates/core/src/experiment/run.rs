use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PointsSpec};
use crate::error::{Error, Result};
use crate::geometry::{octagon_quadrature, random_domain_point, DeckGroup, DiskPoint};
use crate::lagrangian::{energy_measure, finite_difference_jet, LagrangianState, Phase};
use crate::stats::{
    covariance_check, gaussianity_moments, mass_conservation, rational_independence, two_sample_energy,
    uniform_direction_baseline, weak_convergence_distance, weyl_equidistribution, write_aggregate_csv, DirectionAtom,
    IsotropicTarget, MassSample, TestReport, Verdict,
};
use crate::waves::{covariance, sample_isotropic, sample_planewave, PlaneWaveEnsemble, SpectralMeasure};
use crate::wkb::{
    group_branches, sample_local_exact, sample_local_limit, unit_disk_point, BranchTable, LocalWaveModel, Propagator,
    PropagatorConfig, RayBundle,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    EikonalCheck,
    Propagate,
    Equidist,
    Independence,
    LocalLimit,
    RwmSample,
    All,
}

impl Subcommand {
    pub const NAMES: [&'static str; 7] = [
        "propagate",
        "local-limit",
        "rwm-sample",
        "equidist",
        "eikonal-check",
        "independence",
        "all",
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::EikonalCheck => "eikonal-check",
            Subcommand::Propagate => "propagate",
            Subcommand::Equidist => "equidist",
            Subcommand::Independence => "independence",
            Subcommand::LocalLimit => "local-limit",
            Subcommand::RwmSample => "rwm-sample",
            Subcommand::All => "all",
        }
    }

    fn stages(self) -> Vec<Subcommand> {
        match self {
            Subcommand::All => vec![
                Subcommand::EikonalCheck,
                Subcommand::Propagate,
                Subcommand::Equidist,
                Subcommand::Independence,
                Subcommand::LocalLimit,
                Subcommand::RwmSample,
            ],
            s => vec![s],
        }
    }

    /// RNG stream reserved for the stage.
    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Subcommand::EikonalCheck,
            Subcommand::Propagate,
            Subcommand::Equidist,
            Subcommand::Independence,
            Subcommand::LocalLimit,
            Subcommand::RwmSample,
            Subcommand::All,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}; expected one of {:?}", Self::NAMES)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seed_stream: u64,
    pub messages: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub subcommand: Subcommand,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub expansion_time: Option<f64>,
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
    pub verdicts: BTreeMap<String, Verdict>,
}

/// Everything a run produces, held in memory until written.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifact {
    pub manifest: Manifest,
    pub reports: Vec<TestReport>,
    pub tables: Vec<BranchTable>,
    pub models: Vec<LocalWaveModel>,
    /// Relative path to file contents, including `manifest.json`.
    pub files: BTreeMap<String, Vec<u8>>,
}

impl RunArtifact {
    /// True iff every report that is not inconclusive passed.
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn report(&self, name: &str) -> Option<&TestReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes)?;
        }
        Ok(())
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    state: LagrangianState,
    group: DeckGroup,
    points: Vec<DiskPoint>,
    bundle: Option<RayBundle>,
    tables: BTreeMap<(u64, usize), BranchTable>,
    t0: Option<std::result::Result<f64, String>>,
    reports: Vec<TestReport>,
    models: Vec<LocalWaveModel>,
    files: BTreeMap<String, Vec<u8>>,
    warnings: Vec<String>,
    messages: Vec<String>,
}

fn stage_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Serialize)]
struct BranchRow<'a> {
    j: usize,
    deck_word: &'a str,
    y_re: f64,
    y_im: f64,
    xi_1: f64,
    xi_2: f64,
    phase: f64,
    b: f64,
    #[serde(rename = "J")]
    jacobian: f64,
}

fn branch_csv(table: &BranchTable) -> Result<Vec<u8>> {
    let rows: Vec<BranchRow> = table
        .branches
        .iter()
        .enumerate()
        .map(|(j, b)| BranchRow {
            j,
            deck_word: &b.deck_word,
            y_re: b.source.z().re,
            y_im: b.source.z().im,
            xi_1: b.xi[0],
            xi_2: b.xi[1],
            phase: b.phase,
            b: b.amplitude,
            jacobian: b.jacobian,
        })
        .collect();
    if rows.is_empty() {
        return Ok(b"j,deck_word,y_re,y_im,xi_1,xi_2,phase,b,J\n".to_vec());
    }
    csv_bytes(&rows)
}

impl<'a> Context<'a> {
    fn propagator(&self) -> Propagator<'_> {
        Propagator::new(
            &self.state,
            &self.group,
            PropagatorConfig {
                n_rays: self.cfg.propagate.n_rays,
                tol: self.cfg.propagate.tol,
                ..PropagatorConfig::default()
            },
        )
    }

    fn speed_range(&self) -> Result<(f64, f64)> {
        Ok(energy_measure(&self.state, 16)?.support())
    }

    fn expansion_time(&mut self) -> Option<f64> {
        if self.t0.is_none() {
            let grid = &self.cfg.propagate.t0_grid;
            let outcome = self
                .propagator()
                .detect_t0(grid, self.cfg.propagate.t0_pairs)
                .map_err(|e| e.to_string());
            let mut report = TestReport::new("t0_detection", self.cfg.propagate.t0_pairs);
            report
                .threshold("grid_end", grid.last().copied().unwrap_or(0.0))
                .primary("t0", "grid_end");
            match &outcome {
                Ok(t0) => {
                    report.stat("t0", *t0);
                    report.finish(Verdict::Pass);
                }
                Err(msg) => {
                    report.note(msg.clone());
                    report.finish(Verdict::Fail);
                }
            }
            self.reports.push(report.with_seed(self.cfg.seed));
            self.t0 = Some(outcome);
        }
        self.t0.as_ref().and_then(|r| r.as_ref().ok().copied())
    }

    fn check_time(&mut self, t: f64, what: &str) {
        match self.expansion_time() {
            Some(t0) if t < t0 => self
                .warnings
                .push(format!("pre-T0: {what} at t = {t} is below the expansion time {t0}")),
            None => self.warnings.push(format!(
                "pre-T0: {what} at t = {t} runs without a detected expansion time"
            )),
            _ => {}
        }
    }

    fn table(&mut self, t: f64, k: usize) -> Result<BranchTable> {
        let key = (t.to_bits(), k);
        if let Some(tab) = self.tables.get(&key) {
            return Ok(tab.clone());
        }
        if self.bundle.as_ref().is_none_or(|b| b.t != t) {
            self.bundle = None;
            self.bundle = Some(self.propagator().bundle(t)?);
        }
        let bundle = self.bundle.as_ref().expect("bundle built above");
        let table = self.propagator().find_branches(bundle, self.points[k], 0.0)?;
        self.files
            .insert(format!("branches/t{t}_p{k}.csv"), branch_csv(&table)?);
        self.tables.insert(key, table.clone());
        Ok(table)
    }

    fn push(&mut self, report: TestReport) {
        self.reports.push(report.with_seed(self.cfg.seed));
    }

    fn eikonal_check(&mut self) -> Result<bool> {
        let Some(eik) = self.state.eikonal().cloned() else {
            self.messages
                .push("skipped: the state is not monochromatic eikonal data".into());
            return Ok(false);
        };
        let n = self.cfg.eikonal_check.grid;
        let (mut speed_err, mut phase_err) = (0.0f64, 0.0f64);
        let mut count = 0;
        for i in 0..n {
            let s = eik.data.length * (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let tau = eik.half_width * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0) * 0.98;
                let p = eik.characteristic(s, tau).origin_image()?;
                let fd = finite_difference_jet(&eik, &p, 1e-5)?;
                speed_err = speed_err.max((fd.speed() - 1.0).abs());
                phase_err = phase_err.max((eik.value(&p)? - eik.data.profile.eval(s).0 - tau).abs());
                count += 1;
            }
        }
        let mut r = TestReport::new("eikonal_unit_speed", count);
        r.stat("max_speed_error", speed_err)
            .threshold("max_speed_error", 1e-8)
            .primary("max_speed_error", "max_speed_error");
        let r = r.finish(Verdict::from_pass(speed_err < 1e-8));
        self.push(r);
        let mut r = TestReport::new("eikonal_characteristic_phase", count);
        r.stat("max_phase_error", phase_err)
            .threshold("max_phase_error", 1e-12)
            .primary("max_phase_error", "max_phase_error");
        let r = r.finish(Verdict::from_pass(phase_err < 1e-12));
        self.push(r);
        Ok(true)
    }

    fn propagate(&mut self) -> Result<bool> {
        self.expansion_time();
        let cfg = &self.cfg.propagate;
        let (lo, hi) = self.speed_range()?;
        let mut growth_rows = Vec::new();
        let mut decay = (Vec::new(), Vec::new());
        let mut counts = (Vec::new(), Vec::new());
        for &t in &cfg.times.clone() {
            self.check_time(t, "branch search");
            let mut speed_err: f64 = 0.0;
            let mut n_branches = 0;
            let (mut max_b, mut max_m) = (0.0f64, 0usize);
            for k in 0..self.points.len() {
                let table = self.table(t, k)?;
                for b in &table.branches {
                    let expected = self.state.phase.jet(&b.source)?.speed();
                    speed_err = speed_err.max((b.xi[0].hypot(b.xi[1]) - expected).abs());
                    max_b = max_b.max(b.amplitude);
                }
                n_branches += table.count;
                max_m = max_m.max(table.count);
                growth_rows.push(GrowthRow {
                    t,
                    point: k,
                    branches: table.count,
                    max_b: table.branches.iter().map(|b| b.amplitude).fold(0.0, f64::max),
                    local_mass: table.diagnostics.local_mass,
                    newton_failures: table.diagnostics.newton_failures,
                });
            }
            let mut r = TestReport::new(&format!("branch_speed_t{t}"), n_branches);
            r.stat("max_speed_error", speed_err)
                .threshold("max_speed_error", 1e-9)
                .primary("max_speed_error", "max_speed_error");
            let verdict = if n_branches == 0 {
                r.note("no branches at the observation points");
                Verdict::Inconclusive
            } else {
                Verdict::from_pass(speed_err <= 1e-9)
            };
            let r = r.finish(verdict);
            self.push(r);
            if (6.0..=12.0).contains(&t) && max_b > 0.0 {
                decay.0.push(t);
                decay.1.push(max_b.ln());
                counts.0.push(t);
                counts.1.push((max_m as f64).ln());
            }
        }
        self.files
            .insert("plots/branch_growth.csv".into(), csv_bytes(&growth_rows)?);

        let mut r = TestReport::new("amplitude_decay", decay.0.len());
        let target = -0.5 * lo;
        r.threshold("relative_error", 0.2).calibrate("target_exponent", target);
        let r = if decay.0.len() >= 2 {
            let fitted = slope(&decay.0, &decay.1);
            let rel = (fitted - target).abs() / target.abs();
            r.stat("fitted_exponent", fitted)
                .stat("relative_error", rel)
                .primary("relative_error", "relative_error");
            r.finish(Verdict::from_pass(rel <= 0.2))
        } else {
            r.note("needs at least two times in [6, 12]");
            r.finish(Verdict::Inconclusive)
        };
        self.push(r);

        let mut r = TestReport::new("branch_growth", counts.0.len());
        r.threshold("relative_error", 0.2).calibrate("target_rate", hi);
        let r = if counts.0.len() >= 2 {
            let fitted = slope(&counts.0, &counts.1);
            let rel = (fitted - hi).abs() / hi;
            r.stat("fitted_rate", fitted)
                .stat("relative_error", rel)
                .primary("relative_error", "relative_error");
            r.finish(Verdict::from_pass(rel <= 0.2))
        } else {
            r.note("needs at least two times in [6, 12]");
            r.finish(Verdict::Inconclusive)
        };
        self.push(r);

        if cfg.mass_order > 0 {
            let nodes = octagon_quadrature(cfg.mass_order);
            let reference = self.state.mass();
            let mut rows = Vec::new();
            for &t in &cfg.mass_times.clone() {
                self.check_time(t, "mass survey");
                let bundle = self.propagator().bundle(t)?;
                let prop = self.propagator();
                let survey: Vec<MassSample> = nodes
                    .iter()
                    .map(|n| {
                        let tab = prop.find_branches(&bundle, n.point, 0.0)?;
                        Ok(MassSample {
                            weight: n.weight,
                            density: tab.diagnostics.local_mass,
                            newton_failures: tab.diagnostics.newton_failures,
                        })
                    })
                    .collect::<Result<_>>()?;
                let r = mass_conservation(&survey, reference).renamed(format!("mass_conservation_t{t}"));
                rows.push(MassRow {
                    t,
                    transported: r.statistics["transported_mass"],
                    reference,
                    relative_error: r.statistics["relative_error"],
                    newton_failures: r.statistics["newton_failures"] as usize,
                    nodes: nodes.len(),
                });
                self.push(r);
            }
            self.files.insert("plots/mass_survey.csv".into(), csv_bytes(&rows)?);
        }
        Ok(true)
    }

    fn target(&self) -> Result<SpectralMeasure> {
        let em = energy_measure(&self.state, 16)?;
        let measure = SpectralMeasure::Atoms { atoms: em.atoms };
        measure.validate()?;
        Ok(measure)
    }

    fn equidist(&mut self, rng: &mut ChaCha8Rng) -> Result<bool> {
        let t = self.cfg.equidist.t;
        self.check_time(t, "equidistribution");
        let table = self.table(t, 0)?;
        let h = *self.cfg.local_limit.h.last().expect("validated non-empty");
        let model = group_branches(&table, h, self.cfg.local_limit.dir_tol)?;
        let atoms: Vec<DirectionAtom> = model
            .beta
            .iter()
            .zip(&model.xi)
            .map(|(b, xi)| DirectionAtom { weight: b * b, xi: *xi })
            .collect();
        let target = IsotropicTarget { radial: self.target()? };
        let baseline = uniform_direction_baseline(&atoms, &target, self.cfg.equidist.baseline_draws, rng);
        let r = weak_convergence_distance(&atoms, &target, baseline).renamed(format!("weak_convergence_t{t}"));
        self.push(r);
        let rows: Vec<DirectionRow> = atoms
            .iter()
            .map(|a| DirectionRow {
                angle: a.xi[1].atan2(a.xi[0]),
                radius: a.xi[0].hypot(a.xi[1]),
                weight: a.weight,
            })
            .collect();
        self.files
            .insert(format!("plots/directions_t{t}.csv"), csv_bytes(&rows)?);
        Ok(true)
    }

    fn independence(&mut self, rng: &mut ChaCha8Rng) -> Result<bool> {
        let c = self.cfg.independence.clone();
        self.check_time(c.t, "independence");
        let table = self.table(c.t, 0)?;
        let model = group_branches(&table, c.h, self.cfg.local_limit.dir_tol)?;
        let mut order: Vec<usize> = (0..model.len()).collect();
        order.sort_by(|&a, &b| model.beta[b].total_cmp(&model.beta[a]).then(a.cmp(&b)));
        order.truncate(c.top_k);
        let xi: Vec<[f64; 2]> = order.iter().map(|&k| model.xi[k]).collect();
        let cert = rational_independence(&xi, c.n_max, c.tol);
        let certified = cert.passed();
        self.push(cert);
        let mut weyl = if certified {
            let theta: Vec<Vec<f64>> = (0..c.weyl_samples)
                .map(|_| {
                    let phases = model.local_phases(c.alpha, unit_disk_point(rng));
                    order
                        .iter()
                        .map(|&k| (phases[k] / std::f64::consts::TAU).rem_euclid(1.0))
                        .collect()
                })
                .collect();
            weyl_equidistribution(&theta, c.weyl_n_max)
        } else {
            let mut r = TestReport::new("weyl_equidistribution", 0);
            r.note("skipped: directions not certified independent");
            r.finish(Verdict::Inconclusive)
        };
        weyl.stat("classes_used", order.len() as f64);
        self.push(weyl);
        Ok(certified)
    }

    fn local_limit(&mut self, rng: &mut ChaCha8Rng) -> Result<bool> {
        let c = self.cfg.local_limit.clone();
        self.check_time(c.t, "local limit");
        let table = self.table(c.t, 0)?;
        let target = self.target()?;
        let target_mass = target.mass();
        let mut points = vec![[0.0, 0.0]];
        points.extend(c.lags.iter().map(|&r| [r, 0.0]));
        for &h in &c.h {
            let model = group_branches(&table, h, c.dir_tol)?;
            let energy: f64 = model.beta.iter().map(|b| b * b).sum();
            let samples = sample_local_limit(&model, c.alpha, &points, c.n_samples, rng)?;
            let origin = samples.column(0);

            let reference: Vec<Complex64> = (0..c.n_samples)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re, im) * (0.5 * energy).sqrt()
                })
                .collect();
            let calib = gaussianity_moments(&reference);
            let mut g = gaussianity_moments(&origin);
            g.stat("classes", model.len() as f64)
                .stat("max_class_size", model.max_class_size() as f64)
                .calibrate("reference_fourth_moment_ratio", calib.statistics["fourth_moment_ratio"])
                .calibrate("reference_mean_z", calib.statistics["mean_z"]);
            if model.len() < 100 {
                g.note(format!(
                    "only {} classes; the CLT regime asks for at least 100",
                    model.len()
                ));
            }
            self.push(g.renamed(format!("gaussianity_h{h}")));

            let expected: Vec<Complex64> = c
                .lags
                .iter()
                .map(|&r| Complex64::new(energy / target_mass * covariance(&target, r), 0.0))
                .collect();
            let lagged: Vec<Vec<Complex64>> = (1..points.len()).map(|p| samples.column(p)).collect();
            let cov = covariance_check(&format!("covariance_h{h}"), &origin, &lagged, &expected);
            let rows: Vec<CovRow> = c
                .lags
                .iter()
                .enumerate()
                .map(|(k, &r)| CovRow {
                    r,
                    empirical_re: cov.statistics[&format!("lag{k}_re")],
                    empirical_im: cov.statistics[&format!("lag{k}_im")],
                    expected: expected[k].re,
                    standard_error: cov.statistics[&format!("lag{k}_se")],
                })
                .collect();
            self.files
                .insert(format!("plots/local_covariance_h{h}.csv"), csv_bytes(&rows)?);
            self.push(cov);

            let lag_points: Vec<[f64; 2]> = c.lags.iter().map(|&r| [r, 0.0]).collect();
            let window = model.window_covariance(c.alpha, &lag_points);
            let mut wc = covariance_check(&format!("window_covariance_h{h}"), &origin, &lagged, &window);
            let bias = window
                .iter()
                .zip(&expected)
                .map(|(w, e)| (w - e).norm())
                .fold(0.0, f64::max);
            wc.stat("max_window_bias", bias)
                .note("expected values are the exact window average of the frozen model");
            self.push(wc);

            let ens = PlaneWaveEnsemble::new(model.beta.clone(), model.xi.clone())?;
            let m = c.two_sample_size.min(c.n_samples);
            let planewave = sample_planewave(&ens, &[[0.0, 0.0]], m, rng)?;
            let ts = two_sample_energy(&origin[..m], &planewave.values, c.permutations, rng);
            self.push(ts.renamed(format!("two_sample_h{h}")));

            if c.exact_samples > 0 {
                let pair = ChaCha8Rng::seed_from_u64(rng.next_u64());
                let frozen = sample_local_limit(&model, c.alpha, &points, c.exact_samples, &mut pair.clone())?;
                let prop = self.propagator();
                let exact = sample_local_exact(&prop, &table, h, c.alpha, &points, c.exact_samples, &mut pair.clone())?;
                // Leading-order remainder of freezing amplitudes and linearising phases
                // over an offset of size `d`.
                let lip = self.state.amplitude.max_gradient();
                let hess = self.speed_range()?.1;
                let bounds: Vec<f64> = points
                    .iter()
                    .map(|y| {
                        let d = h.powf(c.alpha) + h * y[0].hypot(y[1]);
                        table
                            .branches
                            .iter()
                            .map(|b| lip * d / b.jacobian.sqrt() + b.amplitude * hess * d * d / (2.0 * h))
                            .sum()
                    })
                    .collect();
                let (mut ratio, mut diff) = (0.0f64, 0.0f64);
                for (k, (a, b)) in frozen.values.iter().zip(&exact.values).enumerate() {
                    let e = (a - b).norm();
                    diff = diff.max(e);
                    ratio = ratio.max(e / bounds[k % points.len()]);
                }
                let mut r = TestReport::new(&format!("frozen_vs_exact_h{h}"), c.exact_samples);
                r.stat("max_bound_ratio", ratio)
                    .stat("max_abs_difference", diff)
                    .threshold("max_bound_ratio", 1.0)
                    .primary("max_bound_ratio", "max_bound_ratio")
                    .note("both samplers share the same window offsets");
                self.push(r.finish(Verdict::from_pass(ratio <= 1.0)));
            }

            let hist = modulus_histogram(&origin, energy);
            self.files
                .insert(format!("plots/local_modulus_h{h}.csv"), csv_bytes(&hist)?);
            self.models.push(model);
        }
        Ok(true)
    }

    fn rwm_sample(&mut self, rng: &mut ChaCha8Rng) -> Result<bool> {
        let c = self.cfg.rwm_sample.clone();
        let mut points = vec![[0.0, 0.0]];
        points.extend(c.radii.iter().map(|&r| [r, 0.0]));
        let samples = sample_isotropic(&c.measure, c.n_waves, &points, c.n_samples, rng)?;
        let origin = samples.column(0);
        let expected: Vec<Complex64> = c
            .radii
            .iter()
            .map(|&r| Complex64::new(covariance(&c.measure, r), 0.0))
            .collect();
        let lagged: Vec<Vec<Complex64>> = (1..points.len()).map(|p| samples.column(p)).collect();
        let cov = covariance_check("rwm_covariance", &origin, &lagged, &expected);
        let rows: Vec<CovRow> = c
            .radii
            .iter()
            .enumerate()
            .map(|(k, &r)| CovRow {
                r,
                empirical_re: cov.statistics[&format!("lag{k}_re")],
                empirical_im: cov.statistics[&format!("lag{k}_im")],
                expected: expected[k].re,
                standard_error: cov.statistics[&format!("lag{k}_se")],
            })
            .collect();
        self.files.insert("plots/rwm_covariance.csv".into(), csv_bytes(&rows)?);
        self.push(cov);
        let g = gaussianity_moments(&origin).renamed("rwm_gaussianity");
        self.push(g);
        Ok(true)
    }
}

#[derive(Serialize)]
struct GrowthRow {
    t: f64,
    point: usize,
    branches: usize,
    max_b: f64,
    local_mass: f64,
    newton_failures: usize,
}

#[derive(Serialize)]
struct MassRow {
    t: f64,
    transported: f64,
    reference: f64,
    relative_error: f64,
    newton_failures: usize,
    nodes: usize,
}

#[derive(Serialize)]
struct DirectionRow {
    angle: f64,
    radius: f64,
    weight: f64,
}

#[derive(Serialize)]
struct CovRow {
    r: f64,
    empirical_re: f64,
    empirical_im: f64,
    expected: f64,
    standard_error: f64,
}

#[derive(Serialize)]
struct HistRow {
    modulus: f64,
    empirical_density: f64,
    rayleigh_density: f64,
}

/// Histogram of `|f|` next to the Rayleigh density of a complex Gaussian with `E|f|^2 = energy`.
fn modulus_histogram(values: &[Complex64], energy: f64) -> Vec<HistRow> {
    let bins = 40;
    let top = 4.0 * energy.sqrt();
    let width = top / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (v.norm() / width) as usize;
        if k < bins {
            counts[k] += 1;
        }
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let r = (k as f64 + 0.5) * width;
            HistRow {
                modulus: r,
                empirical_density: n as f64 / (values.len() as f64 * width),
                rayleigh_density: 2.0 * r / energy * (-r * r / energy).exp(),
            }
        })
        .collect()
}

/// Runs the stages of `subcommand` and assembles the artifact.
pub fn run(cfg: &ExperimentConfig, subcommand: Subcommand) -> Result<RunArtifact> {
    cfg.validate()?;
    let state = cfg.state.build()?;
    let group = DeckGroup::bolza();
    let points = match cfg.propagate.points.random_count()? {
        Some(k) => {
            let mut rng = stage_rng(cfg.seed, 0);
            (0..k).map(|_| random_domain_point(&group, &mut rng)).collect()
        }
        None => match &cfg.propagate.points {
            PointsSpec::List(v) => v
                .iter()
                .map(|p| DiskPoint::from_xy(p[0], p[1]))
                .collect::<Result<_>>()?,
            PointsSpec::Named(_) => unreachable!("named points are random"),
        },
    };
    let mut ctx = Context {
        cfg,
        state,
        group,
        points,
        bundle: None,
        tables: BTreeMap::new(),
        t0: None,
        reports: Vec::new(),
        models: Vec::new(),
        files: BTreeMap::new(),
        warnings: Vec::new(),
        messages: Vec::new(),
    };
    let mut stages = Vec::new();
    for stage in subcommand.stages() {
        let mut rng = stage_rng(cfg.seed, stage.stream());
        ctx.messages.clear();
        let outcome = match stage {
            Subcommand::EikonalCheck => ctx.eikonal_check(),
            Subcommand::Propagate => ctx.propagate(),
            Subcommand::Equidist => ctx.equidist(&mut rng),
            Subcommand::Independence => ctx.independence(&mut rng),
            Subcommand::LocalLimit => ctx.local_limit(&mut rng),
            Subcommand::RwmSample => ctx.rwm_sample(&mut rng),
            Subcommand::All => unreachable!("expanded above"),
        };
        let status = match outcome {
            Ok(true) => StageStatus::Ok,
            Ok(false) => StageStatus::Skipped,
            Err(e) => {
                log::warn!("stage {stage} failed: {e}");
                ctx.messages.push(e.to_string());
                StageStatus::Failed
            }
        };
        stages.push(StageRecord {
            name: stage.name().into(),
            status,
            seed_stream: stage.stream(),
            messages: ctx.messages.clone(),
        });
    }
    ctx.warnings.dedup();

    let tables: Vec<BranchTable> = ctx.tables.values().cloned().collect();
    let reports = ctx.reports;
    let mut files = ctx.files;
    files.insert("tables.json".into(), json_bytes(&tables)?);
    files.insert("models.json".into(), json_bytes(&ctx.models)?);
    files.insert("reports.json".into(), json_bytes(&reports)?);
    let mut agg = Vec::new();
    write_aggregate_csv(&reports, &mut agg)?;
    files.insert("reports.csv".into(), agg);

    let mut listed: Vec<String> = files.keys().cloned().collect();
    listed.push("manifest.json".into());
    listed.sort();
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand,
        seed: cfg.seed,
        config: cfg.clone(),
        expansion_time: ctx.t0.as_ref().and_then(|r| r.as_ref().ok().copied()),
        stages,
        warnings: ctx.warnings,
        files: listed,
        verdicts: reports.iter().map(|r| (r.name.clone(), r.verdict)).collect(),
    };
    files.insert("manifest.json".into(), json_bytes(&manifest)?);
    Ok(RunArtifact {
        manifest,
        reports,
        tables,
        models: ctx.models,
        files,
    })
}
