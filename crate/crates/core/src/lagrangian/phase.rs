use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{DiskPoint, Frame};

/// Value, gradient and covariant Hessian of a phase, the last two in the
/// canonical orthonormal frame at the evaluation point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl PhaseJet {
    pub fn speed(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }

    /// Hessian entries `(nn, nℓ, ℓℓ)` in the frame `n = grad/|grad|`, `ℓ = n` turned left.
    pub fn ray_hessian(&self) -> (f64, f64, f64) {
        let s = self.speed();
        let n = [self.grad[0] / s, self.grad[1] / s];
        let l = [-n[1], n[0]];
        let q = |u: [f64; 2], v: [f64; 2]| {
            (0..2)
                .map(|i| (0..2).map(|j| u[i] * self.hess[i][j] * v[j]).sum::<f64>())
                .sum::<f64>()
        };
        (q(n, n), q(n, l), q(l, l))
    }
}

/// A real phase function on a region of the disk.
pub trait Phase: Send + Sync {
    fn jet(&self, p: &DiskPoint) -> Result<PhaseJet>;

    fn value(&self, p: &DiskPoint) -> Result<f64> {
        Ok(self.jet(p)?.value)
    }
}

/// `λ0 d + κ d^2 / 2` with `d` the distance to a source point outside the support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPhase {
    pub source: DiskPoint,
    pub base_speed: f64,
    pub slope: f64,
}

impl RadialPhase {
    /// Phase whose speed runs linearly from `lo` to `hi` across a ball of
    /// radius `radius` at distance `offset` from the source.
    pub fn with_speed_range(source: DiskPoint, offset: f64, radius: f64, lo: f64, hi: f64) -> Result<Self> {
        if offset <= radius || !(lo > 0.0) || hi < lo {
            return Err(invalid("radial phase needs offset > radius and 0 < lo <= hi"));
        }
        let slope = (hi - lo) / (2.0 * radius);
        Ok(RadialPhase {
            source,
            base_speed: lo - slope * (offset - radius),
            slope,
        })
    }
}

impl Phase for RadialPhase {
    fn jet(&self, p: &DiskPoint) -> Result<PhaseJet> {
        let toward = Frame::canonical(*p).log(self.source);
        let d = toward[0].hypot(toward[1]);
        if d < 1e-9 {
            return Err(invalid("radial phase evaluated at its source"));
        }
        let n = [-toward[0] / d, -toward[1] / d];
        let speed = self.base_speed + self.slope * d;
        let transverse = speed / d.tanh();
        let hess = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let nn = n[i] * n[j];
                let id = if i == j { 1.0 } else { 0.0 };
                self.slope * nn + transverse * (id - nn)
            })
        });
        Ok(PhaseJet {
            value: self.base_speed * d + 0.5 * self.slope * d * d,
            grad: [speed * n[0], speed * n[1]],
            hess,
        })
    }
}

/// Weighted sum `Σ c_k B_{ζ_k}` of Busemann functions
/// `B_ζ(z) = log(|ζ - z|^2 / (1 - |z|^2))` at boundary points `ζ_k = e^{i angle_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorocyclicPhase {
    pub terms: Vec<BusemannTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusemannTerm {
    pub weight: f64,
    pub angle: f64,
}

impl Phase for HorocyclicPhase {
    fn jet(&self, p: &DiskPoint) -> Result<PhaseJet> {
        let z = p.z();
        let defect = 1.0 - z.norm_sqr();
        let mut jet = PhaseJet {
            value: 0.0,
            grad: [0.0; 2],
            hess: [[0.0; 2]; 2],
        };
        for term in &self.terms {
            let zeta = Complex64::from_polar(1.0, term.angle);
            let gap = z - zeta;
            let value = (gap.norm_sqr() / defect).ln();
            // Euclidean gradient scaled into the orthonormal frame.
            let g = (2.0 * gap / gap.norm_sqr() + 2.0 * z / defect) * (0.5 * defect);
            let n = [g.re, g.im];
            jet.value += term.weight * value;
            for i in 0..2 {
                jet.grad[i] += term.weight * n[i];
                for j in 0..2 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    jet.hess[i][j] += term.weight * (id - n[i] * n[j]);
                }
            }
        }
        Ok(jet)
    }
}

/// Finite-difference jet of `phase` in normal coordinates at `p`.
pub fn finite_difference_jet<P: Phase + ?Sized>(phase: &P, p: &DiskPoint, step: f64) -> Result<PhaseJet> {
    let frame = Frame::canonical(*p);
    let f = |y0: f64, y1: f64| -> Result<f64> { phase.value(&frame.exp([y0, y1])?) };
    let h = step;
    let f0 = f(0.0, 0.0)?;
    let fx = (f(h, 0.0)?, f(-h, 0.0)?);
    let fy = (f(0.0, h)?, f(0.0, -h)?);
    let fxy = f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?;
    let hxx = (fx.0 - 2.0 * f0 + fx.1) / (h * h);
    let hyy = (fy.0 - 2.0 * f0 + fy.1) / (h * h);
    let hxy = fxy / (4.0 * h * h);
    Ok(PhaseJet {
        value: f0,
        grad: [(fx.0 - fx.1) / (2.0 * h), (fy.0 - fy.1) / (2.0 * h)],
        hess: [[hxx, hxy], [hxy, hyy]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_jets_close(a: &PhaseJet, b: &PhaseJet, tol: f64) {
        assert!((a.value - b.value).abs() < tol);
        for i in 0..2 {
            assert!((a.grad[i] - b.grad[i]).abs() < tol, "grad {:?} vs {:?}", a.grad, b.grad);
            for j in 0..2 {
                assert!(
                    (a.hess[i][j] - b.hess[i][j]).abs() < 1e3 * tol,
                    "hess {:?} vs {:?}",
                    a.hess,
                    b.hess
                );
            }
        }
    }

    #[test]
    fn radial_jet_matches_finite_differences() {
        let phase = RadialPhase {
            source: DiskPoint::from_xy(-0.6, 0.2).unwrap(),
            base_speed: 0.7,
            slope: 0.3,
        };
        let p = DiskPoint::from_xy(0.25, -0.1).unwrap();
        let exact = phase.jet(&p).unwrap();
        let fd = finite_difference_jet(&phase, &p, 1e-4).unwrap();
        assert_jets_close(&exact, &fd, 1e-7);
    }

    #[test]
    fn horocyclic_jet_matches_finite_differences() {
        let phase = HorocyclicPhase {
            terms: vec![
                BusemannTerm {
                    weight: 0.6,
                    angle: 0.3,
                },
                BusemannTerm {
                    weight: 0.45,
                    angle: 2.1,
                },
            ],
        };
        let p = DiskPoint::from_xy(-0.15, 0.3).unwrap();
        let exact = phase.jet(&p).unwrap();
        let fd = finite_difference_jet(&phase, &p, 1e-4).unwrap();
        assert_jets_close(&exact, &fd, 1e-7);
    }

    #[test]
    fn busemann_has_unit_gradient() {
        let phase = HorocyclicPhase {
            terms: vec![BusemannTerm {
                weight: 1.0,
                angle: -0.8,
            }],
        };
        for &(x, y) in &[(0.0, 0.0), (0.5, 0.3), (-0.7, -0.2)] {
            let jet = phase.jet(&DiskPoint::from_xy(x, y).unwrap()).unwrap();
            assert!((jet.speed() - 1.0).abs() < 1e-14);
        }
    }
}
