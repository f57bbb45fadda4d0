use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::DiskPoint;
use crate::quad::gauss_legendre;

/// Smooth bump `peak · (1 - (d/R)^2)^3` in the hyperbolic distance `d` from `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpAmplitude {
    pub center: DiskPoint,
    pub radius: f64,
    #[serde(default = "one")]
    pub peak: f64,
}

fn one() -> f64 {
    1.0
}

impl BumpAmplitude {
    pub fn new(center: DiskPoint, radius: f64, peak: f64) -> Result<Self> {
        if !(radius > 0.0) || !peak.is_finite() {
            return Err(invalid(format!("bad amplitude radius {radius} / peak {peak}")));
        }
        Ok(BumpAmplitude { center, radius, peak })
    }

    pub fn value(&self, p: &DiskPoint) -> f64 {
        self.value_at_distance(self.center.distance(p))
    }

    pub fn value_at_distance(&self, d: f64) -> f64 {
        if d >= self.radius {
            return 0.0;
        }
        let x = 1.0 - (d / self.radius).powi(2);
        self.peak * x * x * x
    }

    /// Largest `|∇a|`, attained at `d = R / √5`.
    pub fn max_gradient(&self) -> f64 {
        96.0 / (25.0 * 5f64.sqrt()) * self.peak.abs() / self.radius
    }

    /// `∫ a^2 dA` from the series `Σ_k R^{2k+2} / (2k+1)! · k! 6! / (2 (k+7)!)`.
    pub fn l2_norm_sq(&self) -> f64 {
        let r2 = self.radius * self.radius;
        let mut sum = 0.0;
        // term_k = R^{2k+2}/(2k+1)! * k! * 720 / (2 (k+7)!)
        let mut power = r2; // R^{2k+2}
        let mut odd_fact = 1.0; // (2k+1)!
        let mut ratio = 720.0 / (2.0 * 5040.0); // k! 6! / (2 (k+7)!)
        for k in 0..200 {
            let term = power / odd_fact * ratio;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            let kf = k as f64;
            power *= r2;
            odd_fact *= (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
            ratio *= (kf + 1.0) / (kf + 8.0);
        }
        2.0 * std::f64::consts::PI * self.peak * self.peak * sum
    }

    /// Same integral by radial Gauss-Legendre quadrature.
    pub fn l2_norm_sq_quadrature(&self, order: usize) -> f64 {
        let integral: f64 = gauss_legendre(order, 0.0, self.radius)
            .iter()
            .map(|&(r, w)| w * self.value_at_distance(r).powi(2) * r.sinh())
            .sum();
        2.0 * std::f64::consts::PI * integral
    }

    pub fn support_area(&self) -> f64 {
        2.0 * std::f64::consts::PI * (self.radius.cosh() - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_quadrature() {
        for &r in &[0.1, 0.5, 1.3, 3.0] {
            let a = BumpAmplitude::new(DiskPoint::ORIGIN, r, 1.7).unwrap();
            let exact = a.l2_norm_sq();
            let quad = a.l2_norm_sq_quadrature(40);
            assert!((exact / quad - 1.0).abs() < 1e-12, "r = {r}: {exact} vs {quad}");
        }
    }

    #[test]
    fn max_gradient_is_the_sup_of_the_slope() {
        let a = BumpAmplitude::new(DiskPoint::ORIGIN, 0.4, 2.0).unwrap();
        let step = 1e-6;
        let sup = (1..4000)
            .map(|k| {
                let d = 0.4 * k as f64 / 4000.0;
                (a.value_at_distance(d + step) - a.value_at_distance(d - step)).abs() / (2.0 * step)
            })
            .fold(0.0, f64::max);
        assert!((sup - a.max_gradient()).abs() < 1e-6 * a.max_gradient());
    }

    #[test]
    fn flat_limit() {
        // For small R the integral approaches the Euclidean value π R^2 / 7.
        let a = BumpAmplitude::new(DiskPoint::ORIGIN, 1e-3, 1.0).unwrap();
        let flat = std::f64::consts::PI * 1e-6 / 7.0;
        assert!((a.l2_norm_sq() / flat - 1.0).abs() < 1e-6);
    }
}
