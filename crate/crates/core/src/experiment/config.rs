use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiskPoint, MobiusMap};
use crate::lagrangian::{
    BumpAmplitude, BusemannTerm, CurveKind, EikonalPhase, HorocyclicPhase, HypersurfaceData, LagrangianState,
    NormalSide, PhaseModel, Profile, RadialPhase,
};
use crate::waves::SpectralMeasure;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Bump amplitude; the centre defaults to the middle of the curve for eikonal states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSpec {
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    pub radius: f64,
    #[serde(default = "one")]
    pub peak: f64,
}

fn one() -> f64 {
    1.0
}

/// Initial Lagrangian state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Monochromatic data `u` on a curve, placed by its midpoint and the tangent there.
    Eikonal {
        curve: CurveKind,
        midpoint: [f64; 2],
        direction: f64,
        length: f64,
        normal: NormalSide,
        profile: Profile,
        #[serde(default = "default_collar")]
        collar: f64,
        amplitude: AmplitudeSpec,
    },
    /// Radial phase with speed running over `lambda` across the support; the
    /// source sits `offset` away from the support centre at angle `bearing`.
    Radial {
        offset: f64,
        bearing: f64,
        lambda: [f64; 2],
        amplitude: AmplitudeSpec,
    },
    Horocyclic {
        terms: Vec<BusemannTerm>,
        amplitude: AmplitudeSpec,
    },
}

fn default_collar() -> f64 {
    EikonalPhase::DEFAULT_HALF_WIDTH
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::Eikonal {
            curve: CurveKind::Geodesic,
            midpoint: [0.02, 0.03],
            direction: 0.37,
            length: 1.4,
            normal: NormalSide::Left,
            profile: Profile::Sine {
                offset: 0.0,
                amplitude: 0.2,
                frequency: 1.3,
                shift: 0.4,
            },
            collar: EikonalPhase::DEFAULT_HALF_WIDTH,
            amplitude: AmplitudeSpec {
                center: None,
                radius: 0.25,
                peak: 1.0,
            },
        }
    }
}

impl StateSpec {
    pub fn build(&self) -> Result<LagrangianState> {
        match self {
            StateSpec::Eikonal {
                curve,
                midpoint,
                direction,
                length,
                normal,
                profile,
                collar,
                amplitude,
            } => {
                let canonical = HypersurfaceData {
                    curve: *curve,
                    start: DiskPoint::from_xy(0.0, 0.0)?,
                    direction: 0.0,
                    length: *length,
                    normal: *normal,
                    profile: *profile,
                };
                let mid = MobiusMap::frame(DiskPoint::from_xy(midpoint[0], midpoint[1])?, *direction);
                let start = mid.compose(&canonical.tangent_frame(0.5 * length).inverse());
                let data = HypersurfaceData {
                    start: start.origin_image()?,
                    direction: start.direction(),
                    ..canonical
                };
                let phase = EikonalPhase::new(data, *collar)?;
                let centre = match amplitude.center {
                    Some(c) => DiskPoint::from_xy(c[0], c[1])?,
                    None => phase.characteristic(0.5 * length, 0.0).origin_image()?,
                };
                let amp = BumpAmplitude::new(centre, amplitude.radius, amplitude.peak)?;
                LagrangianState::new(amp, PhaseModel::Eikonal(phase))
            }
            StateSpec::Radial {
                offset,
                bearing,
                lambda,
                amplitude,
            } => {
                let c = amplitude
                    .center
                    .ok_or_else(|| config_err("radial state needs amplitude.center"))?;
                let centre = DiskPoint::from_xy(c[0], c[1])?;
                let source =
                    crate::geometry::Frame::canonical(centre).exp([offset * bearing.cos(), offset * bearing.sin()])?;
                let phase = RadialPhase::with_speed_range(source, *offset, amplitude.radius, lambda[0], lambda[1])?;
                let amp = BumpAmplitude::new(centre, amplitude.radius, amplitude.peak)?;
                LagrangianState::new(amp, PhaseModel::Radial(phase))
            }
            StateSpec::Horocyclic { terms, amplitude } => {
                let c = amplitude
                    .center
                    .ok_or_else(|| config_err("horocyclic state needs amplitude.center"))?;
                let amp = BumpAmplitude::new(DiskPoint::from_xy(c[0], c[1])?, amplitude.radius, amplitude.peak)?;
                LagrangianState::new(amp, PhaseModel::Horocyclic(HorocyclicPhase { terms: terms.clone() }))
            }
        }
    }

    /// `[λ1, λ2]` of the speeds the state can carry.
    pub fn speed_range(&self) -> Option<[f64; 2]> {
        match self {
            StateSpec::Eikonal { .. } => Some([1.0, 1.0]),
            StateSpec::Radial { lambda, .. } => Some(*lambda),
            StateSpec::Horocyclic { .. } => None,
        }
    }
}

/// Observation points: explicit disk coordinates or `"random:k"` draws in the octagon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointsSpec {
    List(Vec<[f64; 2]>),
    Named(String),
}

impl PointsSpec {
    /// Number of random points requested, if any.
    pub fn random_count(&self) -> Result<Option<usize>> {
        match self {
            PointsSpec::List(_) => Ok(None),
            PointsSpec::Named(s) => {
                let k = s
                    .strip_prefix("random:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| config_err(format!("points must be a list or \"random:k\", got {s:?}")))?;
                Ok(Some(k))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagateConfig {
    pub times: Vec<f64>,
    pub points: PointsSpec,
    pub n_rays: usize,
    pub tol: f64,
    /// Grid used to detect the expansion time.
    pub t0_grid: Vec<f64>,
    pub t0_pairs: usize,
    /// Octagon quadrature order of the mass survey; 0 skips the survey.
    pub mass_order: usize,
    pub mass_times: Vec<f64>,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        PropagateConfig {
            times: vec![6.0, 8.0, 10.0, 12.0],
            points: PointsSpec::List(vec![[0.1, -0.2]]),
            n_rays: 4096,
            tol: 1e-9,
            t0_grid: (1..=12).map(f64::from).collect(),
            t0_pairs: 200,
            mass_order: 16,
            mass_times: vec![8.0, 10.0, 12.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalLimitConfig {
    pub t: f64,
    pub h: Vec<f64>,
    pub alpha: f64,
    pub n_samples: usize,
    /// Distances (in rescaled units) at which the covariance is checked.
    pub lags: Vec<f64>,
    pub dir_tol: f64,
    /// Permutations in the two-sample calibration.
    pub permutations: usize,
    /// Samples per side in the two-sample test.
    pub two_sample_size: usize,
    /// Samples re-solved branch by branch to check the frozen model; 0 skips.
    pub exact_samples: usize,
}

impl Default for LocalLimitConfig {
    fn default() -> Self {
        LocalLimitConfig {
            t: 12.0,
            h: vec![1e-2, 1e-3],
            alpha: 0.75,
            n_samples: 20_000,
            lags: vec![0.5, 1.0, 1.5, 2.4, 4.0],
            dir_tol: crate::wkb::DEFAULT_DIR_TOL,
            permutations: 100,
            two_sample_size: 400,
            exact_samples: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwmConfig {
    pub measure: SpectralMeasure,
    pub n_waves: usize,
    pub n_samples: usize,
    pub radii: Vec<f64>,
}

impl Default for RwmConfig {
    fn default() -> Self {
        RwmConfig {
            measure: SpectralMeasure::monochromatic(1.0),
            n_waves: 4096,
            n_samples: 200_000,
            radii: (1..=10).map(|k| f64::from(6 * k) / 10.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquidistConfig {
    pub t: f64,
    /// Uniform-direction draws averaged into the baseline.
    pub baseline_draws: usize,
}

impl Default for EquidistConfig {
    fn default() -> Self {
        EquidistConfig {
            t: 12.0,
            baseline_draws: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EikonalCheckConfig {
    /// Collar grid is `grid x grid`.
    pub grid: usize,
}

impl Default for EikonalCheckConfig {
    fn default() -> Self {
        EikonalCheckConfig { grid: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndependenceConfig {
    pub t: f64,
    pub h: f64,
    pub alpha: f64,
    /// Strongest classes (by β) whose directions are certified and checked.
    pub top_k: usize,
    pub n_max: usize,
    pub tol: f64,
    pub weyl_n_max: usize,
    pub weyl_samples: usize,
}

impl Default for IndependenceConfig {
    fn default() -> Self {
        IndependenceConfig {
            t: 12.0,
            h: 1e-3,
            alpha: 0.75,
            top_k: 3,
            n_max: 12,
            tol: 1e-2,
            weyl_n_max: 3,
            weyl_samples: 10_000,
        }
    }
}

/// Everything one run needs; every section has defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub seed: u64,
    pub state: StateSpec,
    pub propagate: PropagateConfig,
    pub local_limit: LocalLimitConfig,
    pub rwm_sample: RwmConfig,
    pub equidist: EquidistConfig,
    pub eikonal_check: EikonalCheckConfig,
    pub independence: IndependenceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 20240917,
            state: StateSpec::default(),
            propagate: PropagateConfig::default(),
            local_limit: LocalLimitConfig::default(),
            rwm_sample: RwmConfig::default(),
            equidist: EquidistConfig::default(),
            eikonal_check: EikonalCheckConfig::default(),
            independence: IndependenceConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let alpha_ok = |a: f64| a > 0.5 && a < 1.0;
        if !alpha_ok(self.local_limit.alpha) || !alpha_ok(self.independence.alpha) {
            return Err(config_err("alpha must lie in (1/2, 1)"));
        }
        if let Some([lo, hi]) = self.state.speed_range() {
            if matches!(self.state, StateSpec::Radial { .. }) && !(lo > 0.0 && lo < hi) {
                return Err(config_err("lambda must satisfy 0 < lambda1 < lambda2"));
            }
        }
        let p = &self.propagate;
        let ll = &self.local_limit;
        let counts = [
            p.n_rays,
            p.t0_pairs,
            ll.n_samples,
            ll.permutations,
            ll.two_sample_size,
            self.rwm_sample.n_waves,
            self.rwm_sample.n_samples,
            self.equidist.baseline_draws,
            self.eikonal_check.grid,
            self.independence.top_k,
            self.independence.n_max,
            self.independence.weyl_samples,
        ];
        if counts.contains(&0) {
            return Err(config_err("all counts must be positive"));
        }
        if p.n_rays < 64 {
            return Err(config_err("n_rays must be at least 64"));
        }
        if !(1e-12..=1e-6).contains(&p.tol) {
            return Err(config_err("tol must lie in [1e-12, 1e-6]"));
        }
        let times = p
            .times
            .iter()
            .chain(&p.mass_times)
            .chain([&ll.t, &self.equidist.t, &self.independence.t]);
        if times.clone().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(config_err("times must be finite and non-negative"));
        }
        if p.t0_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("t0_grid must be increasing"));
        }
        if ll.h.iter().chain([&self.independence.h]).any(|h| !(*h > 0.0)) || ll.h.is_empty() {
            return Err(config_err("h values must be positive"));
        }
        if self.rwm_sample.n_waves < 16 {
            return Err(config_err("rwm-sample.n_waves must be at least 16"));
        }
        self.rwm_sample.measure.validate()?;
        if let PointsSpec::List(v) = &p.points {
            if v.is_empty() {
                return Err(config_err("at least one observation point is needed"));
            }
        }
        p.points.random_count()?;
        Ok(())
    }
}
