use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::disk::DiskPoint;
use crate::error::Result;

/// An orientation-preserving isometry `z -> (a z + b) / (conj(b) z + conj(a))`
/// with `|a|^2 - |b|^2 = 1`.
///
/// The same matrix doubles as an orthonormal frame: the frame sits at `M(0)`
/// and points along `M'(0)`. Right-multiplying by [`MobiusMap::translation`]
/// moves the frame along its geodesic, which is exactly the unit-speed flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
}

/// Coordinates of `M(0)` on the hyperboloid `X0^2 - X1^2 - X2^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperboloid {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl Hyperboloid {
    /// Signed distance along the frame direction to the foot of the perpendicular.
    pub fn along(&self) -> f64 {
        (self.x1 / (1.0 + self.x2 * self.x2).sqrt()).asinh()
    }

    /// Signed distance to the frame's geodesic, positive on the left.
    pub fn perp(&self) -> f64 {
        self.x2.asinh()
    }

    /// Direction of the point as seen from the frame origin.
    pub fn bearing(&self) -> f64 {
        self.x2.atan2(self.x1)
    }
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
    };

    /// Builds a map from a possibly unnormalised pair; panics on a degenerate one.
    pub fn new(a: Complex64, b: Complex64) -> Self {
        let det = a.norm_sqr() - b.norm_sqr();
        assert!(det > 0.0, "not an SU(1,1) element: |a|^2 - |b|^2 = {det}");
        let s = det.sqrt().recip();
        MobiusMap { a: a * s, b: b * s }
    }

    pub fn rotation(angle: f64) -> Self {
        MobiusMap {
            a: Complex64::from_polar(1.0, 0.5 * angle),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// Hyperbolic translation by `dist` along the positive real axis.
    pub fn translation(dist: f64) -> Self {
        let h = 0.5 * dist;
        MobiusMap {
            a: Complex64::new(h.cosh(), 0.0),
            b: Complex64::new(h.sinh(), 0.0),
        }
    }

    /// The transvection taking 0 to `p` with positive real derivative at 0.
    pub fn transvection(p: DiskPoint) -> Self {
        let z = p.z();
        let s = (1.0 - z.norm_sqr()).sqrt().recip();
        MobiusMap {
            a: Complex64::new(s, 0.0),
            b: z * s,
        }
    }

    /// Frame at `p` rotated by `angle` from the positive real direction.
    pub fn frame(p: DiskPoint, angle: f64) -> Self {
        Self::transvection(p).compose(&Self::rotation(angle))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.b.conj(),
            b: self.a * other.b + self.b * other.a.conj(),
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    pub fn det(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    pub fn renormalized(&self) -> MobiusMap {
        let s = self.det().sqrt().recip();
        MobiusMap {
            a: self.a * s,
            b: self.b * s,
        }
    }

    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    pub fn apply(&self, p: DiskPoint) -> Result<DiskPoint> {
        DiskPoint::new(self.apply_complex(p.z()))
    }

    /// Derivative of the map at `z`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d = self.b.conj() * z + self.a.conj();
        (d * d).inv()
    }

    /// Base point `M(0)` in the disk.
    pub fn origin_image(&self) -> Result<DiskPoint> {
        DiskPoint::new(self.b / self.a.conj())
    }

    /// Angle of the frame direction `M'(0)` at `M(0)`, in `(-π, π]`.
    pub fn direction(&self) -> f64 {
        let a2 = self.a * self.a;
        a2.im.atan2(a2.re)
    }

    pub fn hyperboloid(&self) -> Hyperboloid {
        let w = 2.0 * self.a * self.b;
        Hyperboloid {
            x0: self.a.norm_sqr() + self.b.norm_sqr(),
            x1: w.re,
            x2: w.im,
        }
    }

    /// Hyperbolic distance from 0 to `M(0)`.
    pub fn displacement(&self) -> f64 {
        2.0 * self.b.norm().asinh()
    }

    /// Distance between two elements of PSL(2), insensitive to the overall sign.
    pub fn projective_distance(&self, other: &MobiusMap) -> f64 {
        let plus = (self.a - other.a).norm() + (self.b - other.b).norm();
        let minus = (self.a + other.a).norm() + (self.b + other.b).norm();
        plus.min(minus) / (self.a.norm() + self.b.norm())
    }

    /// Translation length of a hyperbolic element, zero otherwise.
    pub fn translation_length(&self) -> f64 {
        let tr = self.a.re.abs();
        if tr <= 1.0 {
            0.0
        } else {
            2.0 * tr.acosh()
        }
    }
}

/// Running product of Möbius maps, renormalised every few compositions.
#[derive(Clone, Copy, Debug)]
pub struct MobiusProduct {
    value: MobiusMap,
    since_normalization: u32,
}

impl MobiusProduct {
    pub const RENORMALIZE_EVERY: u32 = 64;

    pub fn new(start: MobiusMap) -> Self {
        MobiusProduct {
            value: start,
            since_normalization: 0,
        }
    }

    pub fn push_right(&mut self, m: &MobiusMap) {
        self.value = self.value.compose(m);
        self.tick();
    }

    pub fn push_left(&mut self, m: &MobiusMap) {
        self.value = m.compose(&self.value);
        self.tick();
    }

    fn tick(&mut self) {
        self.since_normalization += 1;
        if self.since_normalization >= Self::RENORMALIZE_EVERY {
            self.value = self.value.renormalized();
            self.since_normalization = 0;
        }
    }

    pub fn value(&self) -> MobiusMap {
        self.value
    }
}
