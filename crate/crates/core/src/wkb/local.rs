use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::propagator::{BranchTable, Propagator};
use crate::error::{invalid, Error, Result};
use crate::geometry::{DiskPoint, Frame};
use crate::waves::{disk_average, superpose, BlockSeeder, FieldSamples};

/// Frozen-coefficient plane-wave model of the propagated state near `x0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalWaveModel {
    pub h: f64,
    pub x0: DiskPoint,
    pub t: f64,
    /// One direction per class.
    pub xi: Vec<[f64; 2]>,
    /// `B_k = Σ_{j in class k} b_j e^{i S_j / h}`.
    pub coefficients: Vec<Complex64>,
    /// `β_k = |B_k|`.
    pub beta: Vec<f64>,
    /// Table indices of each class.
    pub classes: Vec<Vec<usize>>,
}

impl LocalWaveModel {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn max_class_size(&self) -> usize {
        self.classes.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Arg B_k ∈ [0, 2π)`.
    pub fn arguments(&self) -> Vec<f64> {
        self.coefficients.iter().map(|b| b.arg().rem_euclid(TAU)).collect()
    }

    /// Phases `ϑ_k(x̃) = Arg B_k + h^{α-1} ξ_k · x̃`.
    pub fn local_phases(&self, alpha: f64, x_tilde: [f64; 2]) -> Vec<f64> {
        let scale = self.h.powf(alpha - 1.0);
        self.arguments()
            .iter()
            .zip(&self.xi)
            .map(|(arg, x)| arg + scale * (x[0] * x_tilde[0] + x[1] * x_tilde[1]))
            .collect()
    }

    /// Exact average over `x̃` of `f(0) conj f(y)` for the frozen model, one
    /// value per lag. At finite `h` the cross terms between close directions
    /// do not average out.
    pub fn window_covariance(&self, alpha: f64, lags: &[[f64; 2]]) -> Vec<Complex64> {
        let scale = self.h.powf(alpha - 1.0);
        let args = self.arguments();
        let n = self.len();
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for k in 0..n {
                let w = (self.xi[j][0] - self.xi[k][0]).hypot(self.xi[j][1] - self.xi[k][1]);
                column[k] +=
                    Complex64::from_polar(self.beta[j] * self.beta[k], args[j] - args[k]) * disk_average(scale * w);
            }
        }
        lags.iter()
            .map(|y| {
                column
                    .iter()
                    .zip(&self.xi)
                    .map(|(c, x)| c * Complex64::from_polar(1.0, -(x[0] * y[0] + x[1] * y[1])))
                    .sum()
            })
            .collect()
    }
}

/// Groups branches whose directions agree within `dir_tol` (single linkage).
pub fn group_branches(table: &BranchTable, h: f64, dir_tol: f64) -> Result<LocalWaveModel> {
    if !(h > 0.0) || !(dir_tol > 0.0) {
        return Err(invalid("h and dir_tol must be positive"));
    }
    let n = table.branches.len();
    let angle = |k: usize| {
        let x = table.branches[k].xi;
        x[1].atan2(x[0])
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)).then(a.cmp(&b)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let close = |a: usize, b: usize| {
        let (p, q) = (table.branches[a].xi, table.branches[b].xi);
        (p[0] - q[0]).hypot(p[1] - q[1]) < dir_tol
    };
    // Directions within dir_tol differ in angle by at most dir_tol / λ_min.
    let lambda_min = table
        .branches
        .iter()
        .map(|b| b.xi[0].hypot(b.xi[1]))
        .fold(f64::INFINITY, f64::min);
    let window = dir_tol / lambda_min.max(1e-12);
    for (pos, &a) in order.iter().enumerate() {
        for step in 1..n {
            let b = order[(pos + step) % n];
            if (angle(b) - angle(a)).rem_euclid(TAU) > window {
                break;
            }
            if close(a, b) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for k in 0..n {
        let r = find(&mut parent, k);
        if slot[r] == usize::MAX {
            slot[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[slot[r]].push(k);
    }
    for class in &classes {
        for (i, &a) in class.iter().enumerate() {
            for &b in &class[i + 1..] {
                if !close(a, b) {
                    return Err(Error::AmbiguousClustering(dir_tol));
                }
            }
        }
    }
    let mut xi = Vec::with_capacity(classes.len());
    let mut coefficients: Vec<Complex64> = Vec::with_capacity(classes.len());
    for class in &classes {
        let lead = class
            .iter()
            .copied()
            .max_by(|&a, &b| {
                table.branches[a]
                    .amplitude
                    .total_cmp(&table.branches[b].amplitude)
                    .then(b.cmp(&a))
            })
            .expect("classes are non-empty");
        xi.push(table.branches[lead].xi);
        coefficients.push(
            class
                .iter()
                .map(|&j| {
                    let br = &table.branches[j];
                    Complex64::from_polar(br.amplitude, (br.phase / h).rem_euclid(TAU))
                })
                .sum(),
        );
    }
    Ok(LocalWaveModel {
        h,
        x0: table.x0,
        t: table.t,
        beta: coefficients.iter().map(|c| c.norm()).collect(),
        xi,
        coefficients,
        classes,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.5 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("α = {alpha} must lie in (1/2, 1)")))
    }
}

/// Point uniformly distributed in the Euclidean unit disk.
pub fn unit_disk_point<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    let r = rng.random::<f64>().sqrt();
    let (s, c) = (TAU * rng.random::<f64>()).sin_cos();
    [r * c, r * s]
}

/// Samples of `Σ_k β_k e^{i ξ_k·y + i ϑ_k(x̃)}` with `x̃` uniform in the unit disk.
pub fn sample_local_limit<R: Rng + ?Sized>(
    model: &LocalWaveModel,
    alpha: f64,
    points: &[[f64; 2]],
    n_samples: usize,
    rng: &mut R,
) -> Result<FieldSamples> {
    check_alpha(alpha)?;
    if model.is_empty() {
        return Err(invalid("local model has no classes"));
    }
    let seeder = BlockSeeder::from_rng(rng);
    Ok(seeder.fill_rows(n_samples, points.len(), |rng, row| {
        let theta = model.local_phases(alpha, unit_disk_point(rng));
        let weights: Vec<Complex64> = model
            .beta
            .iter()
            .zip(&theta)
            .map(|(&b, &th)| Complex64::from_polar(b, th))
            .collect();
        superpose(&weights, &model.xi, points, row);
    }))
}

/// Same sampling as [`sample_local_limit`], but each branch is re-solved at
/// `x = exp_{x0}(h^α x̃ + h y)` and `Σ_j b_j(x) e^{i S_j(x)/h}` is returned.
pub fn sample_local_exact<R: Rng + ?Sized>(
    propagator: &Propagator<'_>,
    table: &BranchTable,
    h: f64,
    alpha: f64,
    points: &[[f64; 2]],
    n_samples: usize,
    rng: &mut R,
) -> Result<FieldSamples> {
    check_alpha(alpha)?;
    let frame = Frame {
        base: table.x0,
        angle: table.frame,
    };
    let seeder = BlockSeeder::from_rng(rng);
    let scale = h.powf(alpha);
    Ok(seeder.fill_rows(n_samples, points.len(), |rng, row| {
        let xt = unit_disk_point(rng);
        for (out, y) in row.iter_mut().zip(points) {
            let offset = [scale * xt[0] + h * y[0], scale * xt[1] + h * y[1]];
            let Ok(x) = frame.exp(offset) else { continue };
            for br in &table.branches {
                if let Some((s, b, _)) = propagator.continue_branch(br, table.t, x, table.frame) {
                    *out += Complex64::from_polar(b, (s / h).rem_euclid(TAU));
                }
            }
        }
    }))
}
