use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mobius::MobiusMap;
use crate::error::{Error, Result};

/// A point of the Poincaré disk, kept strictly inside `|z| < 1 - GUARD`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub const GUARD: f64 = 1e-12;
    pub const ORIGIN: DiskPoint = DiskPoint(Complex64::new(0.0, 0.0));

    pub fn new(z: Complex64) -> Result<Self> {
        if z.re.is_finite() && z.im.is_finite() && z.norm() < 1.0 - Self::GUARD {
            Ok(DiskPoint(z))
        } else {
            Err(Error::Boundary {
                re: z.re,
                im: z.im,
                guard: Self::GUARD,
            })
        }
    }

    pub fn from_xy(x: f64, y: f64) -> Result<Self> {
        Self::new(Complex64::new(x, y))
    }

    /// The point at hyperbolic distance `dist` from 0 in direction `angle`.
    pub fn polar(dist: f64, angle: f64) -> Result<Self> {
        Self::new(Complex64::from_polar((0.5 * dist).tanh(), angle))
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }

    /// Ratio between hyperbolic and Euclidean lengths at this point.
    pub fn conformal_factor(&self) -> f64 {
        2.0 / (1.0 - self.0.norm_sqr())
    }

    pub fn distance(&self, other: &DiskPoint) -> f64 {
        let num = (self.0 - other.0).norm();
        let den = ((1.0 - self.0.norm_sqr()) * (1.0 - other.0.norm_sqr())).sqrt();
        2.0 * (num / den).asinh()
    }

    pub fn distance_from_origin(&self) -> f64 {
        2.0 * self.0.norm().atanh()
    }

    /// Beltrami-Klein coordinates, in which geodesics are straight chords.
    pub fn to_klein(&self) -> Complex64 {
        2.0 * self.0 / (1.0 + self.0.norm_sqr())
    }

    pub fn from_klein(k: Complex64) -> Result<Self> {
        let r2 = k.norm_sqr();
        if r2 >= 1.0 {
            return Err(Error::Boundary {
                re: k.re,
                im: k.im,
                guard: Self::GUARD,
            });
        }
        Self::new(k / (1.0 + (1.0 - r2).sqrt()))
    }
}

impl TryFrom<[f64; 2]> for DiskPoint {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        DiskPoint::from_xy(v[0], v[1])
    }
}

impl From<DiskPoint> for [f64; 2] {
    fn from(p: DiskPoint) -> Self {
        [p.0.re, p.0.im]
    }
}

/// Tangent vector at `base`, stored by its Euclidean chart components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: DiskPoint,
    pub chart: Complex64,
}

impl TangentVector {
    /// The vector with the given components in the canonical frame at `base`.
    pub fn from_frame(base: DiskPoint, components: [f64; 2]) -> Self {
        TangentVector {
            base,
            chart: Complex64::new(components[0], components[1]) / base.conformal_factor(),
        }
    }

    pub fn frame_components(&self) -> [f64; 2] {
        let v = self.chart * self.base.conformal_factor();
        [v.re, v.im]
    }

    pub fn norm(&self) -> f64 {
        self.chart.norm() * self.base.conformal_factor()
    }
}

/// Orthonormal frame at `base`, rotated by `angle` from the canonical one
/// whose axes are the chart axes scaled by `(1 - |z|^2) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub base: DiskPoint,
    pub angle: f64,
}

impl Frame {
    pub fn canonical(base: DiskPoint) -> Self {
        Frame { base, angle: 0.0 }
    }

    pub fn to_mobius(&self) -> MobiusMap {
        MobiusMap::frame(self.base, self.angle)
    }

    pub fn from_mobius(m: &MobiusMap) -> Result<Self> {
        Ok(Frame {
            base: m.origin_image()?,
            angle: m.direction(),
        })
    }

    /// Frame exponential: `y` holds components in this frame.
    pub fn exp(&self, y: [f64; 2]) -> Result<DiskPoint> {
        self.to_mobius().apply(exp_at_origin(y)?)
    }

    /// Inverse of [`Frame::exp`].
    pub fn log(&self, q: DiskPoint) -> [f64; 2] {
        let w = self.to_mobius().inverse().apply_complex(q.z());
        let r = w.norm();
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let s = 2.0 * r.atanh() / r;
        [s * w.re, s * w.im]
    }
}

fn exp_at_origin(y: [f64; 2]) -> Result<DiskPoint> {
    let len = y[0].hypot(y[1]);
    if len == 0.0 {
        return Ok(DiskPoint::ORIGIN);
    }
    let scale = (0.5 * len).tanh() / len;
    DiskPoint::from_xy(scale * y[0], scale * y[1])
}

/// Riemannian exponential map of the disk.
pub fn exp_map(v: &TangentVector) -> Result<DiskPoint> {
    Frame::canonical(v.base).exp(v.frame_components())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distance_from_origin_matches_formula() {
        let p = DiskPoint::polar(2.5, 1.1).unwrap();
        assert_abs_diff_eq!(p.distance(&DiskPoint::ORIGIN), 2.5, epsilon = 1e-13);
        assert_abs_diff_eq!(p.distance_from_origin(), 2.5, epsilon = 1e-13);
    }

    #[test]
    fn guard_rejects_boundary() {
        assert!(DiskPoint::from_xy(1.0, 0.0).is_err());
        assert!(DiskPoint::from_xy(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn exp_has_unit_speed() {
        let base = DiskPoint::from_xy(0.4, -0.3).unwrap();
        let v = TangentVector::from_frame(base, [0.6, -0.8]);
        for &t in &[0.1, 0.5, 2.0] {
            let scaled = TangentVector {
                base,
                chart: v.chart * t,
            };
            let q = exp_map(&scaled).unwrap();
            assert_abs_diff_eq!(q.distance(&base), t, epsilon = 1e-13);
        }
    }

    #[test]
    fn frame_log_inverts_exp() {
        let frame = Frame {
            base: DiskPoint::from_xy(-0.2, 0.5).unwrap(),
            angle: 2.2,
        };
        let y = [0.7, -1.3];
        let back = frame.log(frame.exp(y).unwrap());
        assert_abs_diff_eq!(back[0], y[0], epsilon = 1e-12);
        assert_abs_diff_eq!(back[1], y[1], epsilon = 1e-12);
    }

    #[test]
    fn klein_round_trip() {
        let p = DiskPoint::from_xy(0.31, -0.72).unwrap();
        let back = DiskPoint::from_klein(p.to_klein()).unwrap();
        assert_abs_diff_eq!((back.z() - p.z()).norm(), 0.0, epsilon = 1e-15);
    }
}
