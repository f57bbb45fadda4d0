//! Plane-wave ensembles and isotropic Gaussian random waves in the plane.

mod sampling;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quad::adaptive;

pub use sampling::{sample_isotropic, sample_planewave, superpose, BlockSeeder, FieldSamples};

/// `J0(x)` as the circle average `(1/π) ∫_0^π cos(x cos θ) dθ`.
pub fn bessel_j0(x: f64) -> f64 {
    adaptive(|th: f64| (x * th.cos()).cos(), 0.0, PI, 1e-12 * PI) / PI
}

/// `J1(x) = (1/π) ∫_0^π cos(θ - x sin θ) dθ`.
pub fn bessel_j1(x: f64) -> f64 {
    adaptive(|th: f64| (th - x * th.sin()).cos(), 0.0, PI, 1e-12 * PI) / PI
}

/// Average of `e^{i w·x}` over the unit disk, `2 J1(|w|) / |w|`.
pub fn disk_average(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        return 1.0 - w * w / 8.0;
    }
    2.0 * bessel_j1(w) / w
}

/// Spectral measure on radii `λ > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralMeasure {
    /// `Σ w_k δ_{λ_k}`.
    Atoms { atoms: Vec<(f64, f64)> },
    /// Piecewise-constant density on equal bins of `[lo, hi]`; `weights` are bin masses.
    Density { lo: f64, hi: f64, weights: Vec<f64> },
}

impl SpectralMeasure {
    pub fn monochromatic(mass: f64) -> Self {
        SpectralMeasure::Atoms {
            atoms: vec![(1.0, mass)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SpectralMeasure::Atoms { atoms } => !atoms.is_empty() && atoms.iter().all(|&(l, w)| l > 0.0 && w >= 0.0),
            SpectralMeasure::Density { lo, hi, weights } => {
                *lo > 0.0 && hi > lo && !weights.is_empty() && weights.iter().all(|&w| w >= 0.0)
            }
        };
        if ok && self.mass() > 0.0 {
            Ok(())
        } else {
            Err(invalid("spectral measure needs positive radii and positive mass"))
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            SpectralMeasure::Atoms { atoms } => atoms.iter().map(|a| a.1).sum(),
            SpectralMeasure::Density { weights, .. } => weights.iter().sum(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            SpectralMeasure::Atoms { atoms } => atoms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.0), hi.max(a.0))
            }),
            SpectralMeasure::Density { lo, hi, .. } => (*lo, *hi),
        }
    }

    /// `∫ f dμ`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            SpectralMeasure::Atoms { atoms } => atoms.iter().map(|&(l, w)| w * f(l)).sum(),
            SpectralMeasure::Density { lo, hi, weights } => {
                let width = (hi - lo) / weights.len() as f64;
                weights
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(k, &w)| {
                        let a = lo + k as f64 * width;
                        w / width * adaptive(&f, a, a + width, 1e-12 * width)
                    })
                    .sum()
            }
        }
    }

    /// A radius drawn from `μ / mass`.
    pub fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pick = |weights: &mut dyn Iterator<Item = f64>, total: f64, rng: &mut R| {
            let mut u = rng.random::<f64>() * total;
            let mut last = 0;
            for (k, w) in weights.enumerate() {
                last = k;
                if u < w {
                    return k;
                }
                u -= w;
            }
            last
        };
        match self {
            SpectralMeasure::Atoms { atoms } if atoms.len() == 1 => atoms[0].0,
            SpectralMeasure::Atoms { atoms } => {
                let k = pick(&mut atoms.iter().map(|a| a.1), self.mass(), rng);
                atoms[k].0
            }
            SpectralMeasure::Density { lo, hi, weights } => {
                let k = pick(&mut weights.iter().copied(), self.mass(), rng);
                let width = (hi - lo) / weights.len() as f64;
                lo + width * (k as f64 + rng.random::<f64>())
            }
        }
    }
}

/// `E f(x) conj f(y)` for `|x - y| = r` in the isotropic field with spectral measure `μ`.
pub fn covariance(mu: &SpectralMeasure, r: f64) -> f64 {
    if r == 0.0 {
        return mu.mass();
    }
    mu.integrate(|l| bessel_j0(l * r))
}

/// `Σ β_j e^{i(y·ξ_j + ϑ_j)}` with i.i.d. uniform phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveEnsemble {
    pub beta: Vec<f64>,
    pub xi: Vec<[f64; 2]>,
}

impl PlaneWaveEnsemble {
    pub fn new(beta: Vec<f64>, xi: Vec<[f64; 2]>) -> Result<Self> {
        if beta.is_empty() || beta.len() != xi.len() || beta.iter().any(|&b| !(b >= 0.0)) {
            return Err(invalid("ensemble needs matching non-empty β ≥ 0 and ξ lists"));
        }
        Ok(PlaneWaveEnsemble { beta, xi })
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// `Σ β_j^2 = E|f(y)|^2`.
    pub fn energy(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }
}
