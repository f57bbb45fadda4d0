use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::geometry::{DiskPoint, Frame, MobiusMap};
use crate::lagrangian::{LagrangianState, Phase, PhaseModel};

/// Parametrisation of the initial Lagrangian by a 2D source parameter `q`:
/// characteristic coordinates `(s, τ)` for eikonal phases, normal coordinates
/// at the amplitude centre otherwise.
#[derive(Clone, Copy, Debug)]
pub enum SourceChart {
    Collar,
    Normal { frame: Frame },
}

/// Initial data of the ray leaving the source parameter `q`.
#[derive(Clone, Copy, Debug)]
pub struct RaySource {
    pub param: [f64; 2],
    /// Frame at `y` pointing along `∂φ0(y)`.
    pub frame: MobiusMap,
    pub speed: f64,
    pub phase: f64,
    pub amplitude: f64,
    /// Hessian of `φ0` in the ray frame: `(nn, nℓ, ℓℓ)`.
    pub hessian: (f64, f64, f64),
}

impl RaySource {
    pub fn base(&self) -> Result<DiskPoint> {
        self.frame.origin_image()
    }

    /// Frame at the arrival point after time `t`.
    pub fn arrival(&self, t: f64) -> MobiusMap {
        self.frame.compose(&MobiusMap::translation(self.speed * t))
    }

    pub fn action(&self, t: f64) -> f64 {
        self.phase + 0.5 * self.speed * self.speed * t
    }

    /// Initial wavefront shape `φ_ℓℓ / λ`.
    pub fn shape(&self) -> f64 {
        self.hessian.2 / self.speed
    }

    /// Determinant of the differential of `y -> π Φ^t(y, ∂φ0(y))` in orthonormal frames.
    pub fn jacobian(&self, t: f64) -> f64 {
        let (nn, nl, ll) = self.hessian;
        let lt = self.speed * t;
        let (ch, sh) = (lt.cosh(), lt.sinh());
        (1.0 + t * nn) * (ch + ll * sh / self.speed) - t * nl * nl * sh / self.speed
    }
}

impl SourceChart {
    pub fn for_state(state: &LagrangianState) -> Self {
        match state.phase {
            PhaseModel::Eikonal(_) => SourceChart::Collar,
            _ => SourceChart::Normal {
                frame: Frame::canonical(state.amplitude.center),
            },
        }
    }

    pub fn source(&self, state: &LagrangianState, q: [f64; 2]) -> Result<RaySource> {
        match (self, &state.phase) {
            (SourceChart::Collar, PhaseModel::Eikonal(eik)) => {
                let frame = eik.characteristic(q[0], q[1]);
                let base = frame.origin_image()?;
                Ok(RaySource {
                    param: q,
                    frame,
                    speed: 1.0,
                    phase: eik.data.profile.eval(q[0]).0 + q[1],
                    amplitude: state.amplitude.value(&base),
                    hessian: (0.0, 0.0, eik.shape(q[0], q[1])?.0),
                })
            }
            (SourceChart::Normal { frame }, phase) => {
                let base = frame.exp(q)?;
                let jet = phase.jet(&base)?;
                Ok(RaySource {
                    param: q,
                    frame: MobiusMap::frame(base, jet.grad[1].atan2(jet.grad[0])),
                    speed: jet.speed(),
                    phase: jet.value,
                    amplitude: state.amplitude.value(&base),
                    hessian: jet.ray_hessian(),
                })
            }
            (SourceChart::Collar, _) => Err(invalid("collar chart needs an eikonal phase")),
        }
    }

    /// Parameter box covering the amplitude support, padded by `pad`.
    pub fn support_box(&self, state: &LagrangianState, pad: f64) -> Result<[[f64; 2]; 2]> {
        let amp = &state.amplitude;
        match (self, &state.phase) {
            (SourceChart::Collar, PhaseModel::Eikonal(eik)) => {
                let frame = Frame::canonical(amp.center);
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for k in 0..128 {
                    let th = 2.0 * PI * k as f64 / 128.0;
                    let p = frame.exp([amp.radius * th.cos(), amp.radius * th.sin()])?;
                    let c = eik.invert(&p)?;
                    for (i, v) in [c.s, c.tau].into_iter().enumerate() {
                        lo[i] = lo[i].min(v);
                        hi[i] = hi[i].max(v);
                    }
                }
                let span = [hi[0] - lo[0], hi[1] - lo[1]];
                Ok([
                    [
                        (lo[0] - pad * span[0]).max(0.0),
                        (lo[1] - pad * span[1]).max(-eik.half_width),
                    ],
                    [
                        (hi[0] + pad * span[0]).min(eik.data.length),
                        (hi[1] + pad * span[1]).min(eik.half_width),
                    ],
                ])
            }
            _ => {
                let r = amp.radius * (1.0 + pad);
                Ok([[-r, -r], [r, r]])
            }
        }
    }
}
