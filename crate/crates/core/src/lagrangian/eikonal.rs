use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phase::{Phase, PhaseJet};
use crate::dynamics::{riccati_evolve, RiccatiOutcome, WavefrontShape};
use crate::error::{invalid, Error, Result};
use crate::geometry::{DiskPoint, MobiusMap};

/// Shape of the initial curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    Geodesic,
    /// Circle of the given hyperbolic radius, centre on the left.
    Circle {
        radius: f64,
    },
    /// Horocycle whose centre lies on the left.
    Horocycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalSide {
    Left,
    Right,
}

/// Boundary values `u(s)` of the phase along the curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `value + slope (s - center) + curvature (s - center)^2 / 2`.
    Quadratic {
        value: f64,
        slope: f64,
        curvature: f64,
        center: f64,
    },
    /// `offset + amplitude sin(frequency s + shift)`.
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        shift: f64,
    },
}

impl Profile {
    /// `(u, u', u'')` at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Constant { value } => (value, 0.0, 0.0),
            Profile::Quadratic {
                value,
                slope,
                curvature,
                center,
            } => {
                let x = s - center;
                (
                    value + slope * x + 0.5 * curvature * x * x,
                    slope + curvature * x,
                    curvature,
                )
            }
            Profile::Sine {
                offset,
                amplitude,
                frequency,
                shift,
            } => {
                let (sn, cs) = (frequency * s + shift).sin_cos();
                (
                    offset + amplitude * sn,
                    amplitude * frequency * cs,
                    -amplitude * frequency * frequency * sn,
                )
            }
        }
    }
}

/// Initial curve `Σ` with a chosen normal side and boundary profile `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceData {
    pub curve: CurveKind,
    pub start: DiskPoint,
    /// Angle of the unit tangent at `start` in the canonical frame.
    pub direction: f64,
    pub length: f64,
    pub normal: NormalSide,
    pub profile: Profile,
}

/// Covector of the monochromatic data at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialCovector {
    pub s: f64,
    /// Frame at `Σ(s)` pointing along the unit covector `u' T + c ν`.
    pub frame: MobiusMap,
    pub tangential: f64,
    pub normal: f64,
}

impl HypersurfaceData {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(invalid("curve length must be positive"));
        }
        if let CurveKind::Circle { radius } = self.curve {
            if !(radius > 0.0) {
                return Err(invalid("circle radius must be positive"));
            }
        }
        let n = 512;
        for i in 0..=n {
            let s = self.length * i as f64 / n as f64;
            let (_, du, _) = self.profile.eval(s);
            if du.abs() >= 1.0 - 1e-9 {
                return Err(invalid(format!("|u'| = {} >= 1 at s = {s}", du.abs())));
            }
        }
        Ok(())
    }

    fn sigma(&self) -> f64 {
        match self.normal {
            NormalSide::Left => 1.0,
            NormalSide::Right => -1.0,
        }
    }

    /// Geodesic curvature towards the left normal.
    pub fn left_curvature(&self) -> f64 {
        match self.curve {
            CurveKind::Geodesic => 0.0,
            CurveKind::Circle { radius } => 1.0 / radius.tanh(),
            CurveKind::Horocycle => 1.0,
        }
    }

    /// Frame at `Σ(s)` pointing along the unit tangent.
    pub fn tangent_frame(&self, s: f64) -> MobiusMap {
        let placement = MobiusMap::frame(self.start, self.direction);
        match self.curve {
            CurveKind::Geodesic => placement.compose(&MobiusMap::translation(s)),
            CurveKind::Circle { radius } => {
                let centre = placement
                    .compose(&MobiusMap::rotation(-FRAC_PI_2))
                    .compose(&MobiusMap::translation(-radius));
                centre
                    .compose(&MobiusMap::rotation(s / radius.sinh()))
                    .compose(&MobiusMap::translation(radius))
                    .compose(&MobiusMap::rotation(FRAC_PI_2))
            }
            CurveKind::Horocycle => {
                let parabolic = MobiusMap {
                    a: Complex64::new(1.0, 0.5 * s),
                    b: Complex64::new(0.0, -0.5 * s),
                };
                placement
                    .compose(&MobiusMap::rotation(FRAC_PI_2))
                    .compose(&parabolic)
                    .compose(&MobiusMap::rotation(-FRAC_PI_2))
            }
        }
    }

    pub fn covector(&self, s: f64) -> InitialCovector {
        let (_, du, _) = self.profile.eval(s);
        let c = (1.0 - du * du).sqrt();
        let turn = self.sigma() * du.clamp(-1.0, 1.0).acos();
        InitialCovector {
            s,
            frame: self.tangent_frame(s).compose(&MobiusMap::rotation(turn)),
            tangential: du,
            normal: c,
        }
    }

    /// Covectors `v_u(s)` sampled at `n` evenly spaced parameters.
    pub fn monochromatic_covectors(&self, n: usize) -> Result<Vec<InitialCovector>> {
        self.validate()?;
        let n = n.max(2);
        Ok((0..n)
            .map(|i| self.covector(self.length * i as f64 / (n - 1) as f64))
            .collect())
    }

    /// Shape of the front leaving `Σ(s)`: `u'' / c^2 - k / c`, with `k` the
    /// curvature towards the chosen normal.
    pub fn initial_shape(&self, s: f64) -> WavefrontShape {
        let (_, du, ddu) = self.profile.eval(s);
        let c2 = 1.0 - du * du;
        let k = self.sigma() * self.left_curvature();
        WavefrontShape(ddu / c2 - k / c2.sqrt())
    }
}

/// Solution of `|∂φ| = 1` in a collar `{(s, τ) : |τ| <= half_width}` around `Σ`,
/// with `φ = u` on `Σ`, built from its characteristics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EikonalPhase {
    pub data: HypersurfaceData,
    pub half_width: f64,
}

/// Point of the collar in characteristic coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollarCoords {
    pub s: f64,
    pub tau: f64,
}

impl EikonalPhase {
    pub const DEFAULT_HALF_WIDTH: f64 = 0.3;

    pub fn new(data: HypersurfaceData, half_width: f64) -> Result<Self> {
        data.validate()?;
        let phase = EikonalPhase { data, half_width };
        phase.check_collar()?;
        Ok(phase)
    }

    /// Frame at the point `(s, τ)` pointing along `∂φ`.
    pub fn characteristic(&self, s: f64, tau: f64) -> MobiusMap {
        self.data.covector(s).frame.compose(&MobiusMap::translation(tau))
    }

    /// Shape of the level curve of `φ` through `(s, τ)`.
    pub fn shape(&self, s: f64, tau: f64) -> Result<WavefrontShape> {
        match riccati_evolve(self.data.initial_shape(s), tau, 1.0) {
            RiccatiOutcome::Regular(u) => Ok(u),
            RiccatiOutcome::BlowUp { time } => Err(Error::BlowUp(time)),
        }
    }

    /// Component of `∂_s` of the characteristic map along `∂φ`.
    pub fn parallel_jacobian(&self, s: f64) -> f64 {
        self.data.profile.eval(s).1
    }

    /// Component of `∂_s` of the characteristic map along the left normal of `∂φ`.
    pub fn transverse_jacobian(&self, s: f64, tau: f64) -> f64 {
        let (_, du, _) = self.data.profile.eval(s);
        let c = (1.0 - du * du).sqrt();
        let k0 = self.data.initial_shape(s).0;
        let sigma = if self.data.normal == NormalSide::Left {
            1.0
        } else {
            -1.0
        };
        -sigma * c * (tau.cosh() + k0 * tau.sinh())
    }

    /// Area element of the `(s, τ)` chart.
    pub fn area_element(&self, s: f64, tau: f64) -> f64 {
        self.transverse_jacobian(s, tau).abs()
    }

    fn in_chart(&self, c: &CollarCoords, slack: f64) -> bool {
        c.s >= -slack && c.s <= self.data.length + slack && c.tau.abs() <= self.half_width + slack
    }

    /// Characteristic coordinates of `p`.
    pub fn invert(&self, p: &DiskPoint) -> Result<CollarCoords> {
        let target = MobiusMap::transvection(*p);
        let (ns, nt) = (64, 12);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=ns {
            let s = self.data.length * i as f64 / ns as f64;
            for j in 0..=nt {
                let tau = self.half_width * (2.0 * j as f64 / nt as f64 - 1.0);
                let d = self.characteristic(s, tau).inverse().compose(&target).displacement();
                if d < best.0 {
                    best = (d, s, tau);
                }
            }
        }
        let (_, mut s, mut tau) = best;
        for _ in 0..50 {
            let h = self.characteristic(s, tau).inverse().compose(&target).hyperboloid();
            let (along, perp) = (h.along(), h.perp());
            if along.abs() < 1e-15 && perp.abs() < 1e-15 {
                break;
            }
            let ds = perp / self.transverse_jacobian(s, tau);
            let dt = along - self.parallel_jacobian(s) * ds;
            s += ds;
            tau += dt;
            if !(s.is_finite() && tau.is_finite()) {
                return Err(Error::OutOfDomain);
            }
            if ds.abs() < 1e-16 && dt.abs() < 1e-16 {
                break;
            }
        }
        let coords = CollarCoords { s, tau };
        let residual = self.characteristic(s, tau).inverse().compose(&target).displacement();
        if residual > 1e-10 || !self.in_chart(&coords, 1e-12) {
            return Err(Error::OutOfDomain);
        }
        Ok(coords)
    }

    /// Checks that characteristics do not focus or cross inside the collar.
    pub fn check_collar(&self) -> Result<()> {
        let (ns, nt) = (48usize, 8usize);
        let mut pts = Vec::with_capacity((ns + 1) * (nt + 1));
        for i in 0..=ns {
            let s = self.data.length * i as f64 / ns as f64;
            for tau in [-self.half_width, self.half_width] {
                if self.shape(s, tau).is_err() || self.transverse_jacobian(s, tau).abs() < 1e-6 {
                    return Err(Error::CollarTooWide {
                        width: self.half_width,
                        s,
                    });
                }
            }
            for j in 0..=nt {
                let tau = self.half_width * (2.0 * j as f64 / nt as f64 - 1.0);
                pts.push((s, tau, self.characteristic(s, tau).origin_image()?));
            }
        }
        let ds = self.data.length / ns as f64;
        let dt = 2.0 * self.half_width / nt as f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let gap = ((a.0 - b.0) / ds).abs().max(((a.1 - b.1) / dt).abs());
                if gap >= 2.0 {
                    let param = (a.0 - b.0).hypot(a.1 - b.1);
                    if a.2.distance(&b.2) < 0.05 * param.min(ds.min(dt) * 2.0) {
                        return Err(Error::CollarTooWide {
                            width: self.half_width,
                            s: a.0,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

impl Phase for EikonalPhase {
    fn jet(&self, p: &DiskPoint) -> Result<PhaseJet> {
        let c = self.invert(p)?;
        let frame = self.characteristic(c.s, c.tau);
        let (sn, cs) = frame.direction().sin_cos();
        let kappa = self.shape(c.s, c.tau)?.0;
        let l = [-sn, cs];
        Ok(PhaseJet {
            value: self.data.profile.eval(c.s).0 + c.tau,
            grad: [cs, sn],
            hess: [
                [kappa * l[0] * l[0], kappa * l[0] * l[1]],
                [kappa * l[1] * l[0], kappa * l[1] * l[1]],
            ],
        })
    }
}
