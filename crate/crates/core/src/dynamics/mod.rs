//! Hamiltonian flow of `|ξ|^2 / 2` on the unit cotangent bundles, its
//! linearisation and the scalar Riccati law for wavefront shapes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{DiskPoint, MobiusMap, TangentVector};

/// A covector `(x, ξ)` with `ξ ≠ 0`, stored as the frame at `x` pointing
/// along `ξ` together with `|ξ|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub frame: MobiusMap,
    pub speed: f64,
}

impl PhasePoint {
    /// `covector` is identified with a vector through the metric.
    pub fn new(covector: TangentVector) -> Result<Self> {
        let speed = covector.norm();
        if !(speed > 0.0) {
            return Err(invalid("phase point needs a non-zero covector"));
        }
        let [c1, c2] = covector.frame_components();
        Ok(PhasePoint {
            frame: MobiusMap::frame(covector.base, c2.atan2(c1)),
            speed,
        })
    }

    pub fn base(&self) -> Result<DiskPoint> {
        self.frame.origin_image()
    }

    /// Covector components in the canonical frame at the base.
    pub fn covector(&self) -> [f64; 2] {
        let (s, c) = self.frame.direction().sin_cos();
        [self.speed * c, self.speed * s]
    }

    pub fn flow(&self, t: f64) -> PhasePoint {
        PhasePoint {
            frame: self.frame.compose(&MobiusMap::translation(self.speed * t)),
            speed: self.speed,
        }
    }
}

/// `Φ^t(ρ)` for the Hamiltonian `|ξ|^2 / 2`.
pub fn geodesic_flow(rho: &PhasePoint, t: f64) -> PhasePoint {
    rho.flow(t)
}

/// Tangent vector to `T*X` in Fermi components
/// `(δx_parallel, δx_perp, δξ_parallel, δξ_perp)` relative to the orbit.
pub type FermiVector = [f64; 4];

/// Differential of `Φ^t` at a point of speed `speed`, in Fermi components.
pub fn linearized_flow(speed: f64, t: f64) -> [[f64; 4]; 4] {
    let (ch, sh) = ((speed * t).cosh(), (speed * t).sinh());
    [
        [1.0, 0.0, t, 0.0],
        [0.0, ch, 0.0, sh / speed],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, speed * sh, 0.0, ch],
    ]
}

pub fn apply(m: &[[f64; 4]; 4], v: &FermiVector) -> FermiVector {
    std::array::from_fn(|i| (0..4).map(|j| m[i][j] * v[j]).sum())
}

/// Invariant splitting of `T_ρ(T*X)` at a phase point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnosovSplitting {
    pub speed: f64,
    pub unstable: FermiVector,
    pub stable: FermiVector,
    /// Flow direction.
    pub neutral: FermiVector,
    /// Radial scaling of the covector.
    pub energy: FermiVector,
    /// Expansion rate along `unstable`, equal to the speed.
    pub rate: f64,
}

/// Stable, unstable and neutral directions at `ρ`, normalised for the
/// Sasaki metric (Euclidean in Fermi components).
pub fn splitting_at(rho: &PhasePoint) -> AnosovSplitting {
    let speed = rho.speed;
    let n = (1.0 + speed * speed).sqrt();
    AnosovSplitting {
        speed,
        unstable: [0.0, 1.0 / n, 0.0, speed / n],
        stable: [0.0, 1.0 / n, 0.0, -speed / n],
        neutral: [1.0, 0.0, 0.0, 0.0],
        energy: [0.0, 0.0, 1.0, 0.0],
        rate: speed,
    }
}

/// Slope `u = δξ_perp / (|ξ| δx_perp)` of a wavefront's perpendicular
/// Lagrangian direction; `-1` is stable and `+1` unstable.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct WavefrontShape(pub f64);

/// Result of evolving a wavefront shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiccatiOutcome {
    Regular(WavefrontShape),
    /// The perpendicular Jacobi field vanishes at `time` (a focal point).
    BlowUp {
        time: f64,
    },
}

/// First focal time between 0 and `t` for initial shape `u0`, if any.
pub fn focal_time(u0: f64, t: f64, speed: f64) -> Option<f64> {
    if u0.abs() <= 1.0 {
        return None;
    }
    let t_star = (-1.0 / u0).atanh() / speed;
    let inside = if t >= 0.0 {
        t_star > 0.0 && t_star <= t
    } else {
        t_star < 0.0 && t_star >= t
    };
    inside.then_some(t_star)
}

/// Closed-form solution of `u' = λ (1 - u^2)`.
pub fn riccati_evolve(u0: WavefrontShape, t: f64, speed: f64) -> RiccatiOutcome {
    if let Some(time) = focal_time(u0.0, t, speed) {
        return RiccatiOutcome::BlowUp { time };
    }
    let th = (speed * t).tanh();
    RiccatiOutcome::Regular(WavefrontShape((u0.0 + th) / (1.0 + u0.0 * th)))
}

/// Growth `J(t) = cosh λt + u0 sinh λt` of the perpendicular Jacobi field.
pub fn jacobian_along(u0: WavefrontShape, t: f64, speed: f64) -> Result<f64> {
    if let Some(time) = focal_time(u0.0, t, speed) {
        return Err(Error::BlowUp(time));
    }
    Ok((speed * t).cosh() + u0.0 * (speed * t).sinh())
}

/// Which invariant direction the margin is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginKind {
    /// Distance of the shapes from the stable slope `-1`.
    Stable,
    /// Distance from the unstable slope `+1`, used for initial curves.
    UnstableNeutral,
}

/// Smallest distance of the shapes from the chosen invariant slope.
pub fn transversality_margin(shapes: &[WavefrontShape], kind: MarginKind) -> Result<f64> {
    if shapes.is_empty() {
        return Err(invalid("no shapes supplied"));
    }
    let target = match kind {
        MarginKind::Stable => -1.0,
        MarginKind::UnstableNeutral => 1.0,
    };
    Ok(shapes
        .iter()
        .map(|u| (u.0 - target).abs())
        .fold(f64::INFINITY, f64::min))
}
