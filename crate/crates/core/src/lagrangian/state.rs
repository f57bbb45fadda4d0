use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::amplitude::BumpAmplitude;
use super::eikonal::EikonalPhase;
use super::phase::{HorocyclicPhase, Phase, PhaseJet, RadialPhase};
use crate::error::{invalid, Result};
use crate::geometry::{DiskPoint, Frame};
use crate::quad::gauss_legendre;

/// The phase functions the lab knows how to propagate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseModel {
    Eikonal(EikonalPhase),
    Radial(RadialPhase),
    Horocyclic(HorocyclicPhase),
}

impl Phase for PhaseModel {
    fn jet(&self, p: &DiskPoint) -> Result<PhaseJet> {
        match self {
            PhaseModel::Eikonal(ph) => ph.jet(p),
            PhaseModel::Radial(ph) => ph.jet(p),
            PhaseModel::Horocyclic(ph) => ph.jet(p),
        }
    }
}

/// `a e^{iφ/h}` on a lift of the support to the disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub amplitude: BumpAmplitude,
    pub phase: PhaseModel,
}

impl LagrangianState {
    pub fn new(amplitude: BumpAmplitude, phase: PhaseModel) -> Result<Self> {
        let state = LagrangianState { amplitude, phase };
        state.validate()?;
        Ok(state)
    }

    /// `|∂φ|` is constant (equal to one) on the support.
    pub fn is_monochromatic(&self) -> bool {
        matches!(self.phase, PhaseModel::Eikonal(_))
    }

    pub fn eikonal(&self) -> Option<&EikonalPhase> {
        match &self.phase {
            PhaseModel::Eikonal(e) => Some(e),
            _ => None,
        }
    }

    /// Evaluates the phase on the support boundary and centre; fails if any
    /// point lies outside the phase's domain or has a vanishing gradient.
    pub fn validate(&self) -> Result<()> {
        let frame = Frame::canonical(self.amplitude.center);
        let r = self.amplitude.radius;
        let mut pts = vec![self.amplitude.center];
        for k in 0..64 {
            let th = 2.0 * PI * k as f64 / 64.0;
            for frac in [0.5, 1.0] {
                pts.push(frame.exp([frac * r * th.cos(), frac * r * th.sin()])?);
            }
        }
        for p in &pts {
            let jet = self.phase.jet(p)?;
            if !(jet.speed() > 1e-6) {
                return Err(invalid("phase gradient vanishes on the support"));
            }
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.amplitude.l2_norm_sq()
    }
}

/// Push-forward of `a^2 dA` under `x -> |∂φ(x)|`, as weighted atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyMeasure {
    /// `(λ, weight)` sorted by `λ`.
    pub atoms: Vec<(f64, f64)>,
}

impl EnergyMeasure {
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.atoms.first().map_or(0.0, |a| a.0),
            self.atoms.last().map_or(0.0, |a| a.0),
        )
    }

    /// Bin weights over `[lo, hi]`; atoms outside the range are clamped to the ends.
    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for &(l, w) in &self.atoms {
            let i = (((l - lo) / (hi - lo)) * bins as f64).floor();
            h[(i.max(0.0) as usize).min(bins - 1)] += w;
        }
        h
    }
}

/// Energy distribution of a state from a polar quadrature of order `order`
/// over the amplitude support.
pub fn energy_measure(state: &LagrangianState, order: usize) -> Result<EnergyMeasure> {
    let amp = &state.amplitude;
    let frame = Frame::canonical(amp.center);
    let n_angle = 2 * order;
    let mut atoms = Vec::with_capacity(order * n_angle);
    for &(r, wr) in &gauss_legendre(order, 0.0, amp.radius) {
        let weight = wr * r.sinh() * amp.value_at_distance(r).powi(2) * 2.0 * PI / n_angle as f64;
        for k in 0..n_angle {
            let th = 2.0 * PI * (k as f64 + 0.5) / n_angle as f64;
            let p = frame.exp([r * th.cos(), r * th.sin()])?;
            let speed = if state.is_monochromatic() {
                1.0
            } else {
                state.phase.jet(&p)?.speed()
            };
            atoms.push((speed, weight));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (l, w) in atoms {
        match merged.last_mut() {
            Some(last) if (l - last.0).abs() <= 1e-12 * l.abs().max(1.0) => last.1 += w,
            _ => merged.push((l, w)),
        }
    }
    Ok(EnergyMeasure { atoms: merged })
}
