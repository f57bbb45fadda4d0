//! Frozen local plane-wave model at one point and its sampled statistics.

use hypwave::experiment::ExperimentConfig;
use hypwave::geometry::{DeckGroup, DiskPoint};
use hypwave::stats::{covariance_check, gaussianity_moments};
use hypwave::wkb::{group_branches, sample_local_limit, Propagator, PropagatorConfig, DEFAULT_DIR_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hypwave::Result<()> {
    let (t, alpha) = (10.0, 0.75);
    let state = ExperimentConfig::default().state.build()?;
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());
    let bundle = prop.bundle(t)?;
    let table = prop.find_branches(&bundle, DiskPoint::from_xy(0.1, -0.2)?, 0.0)?;
    let lags = [0.5, 1.0, 2.4];
    let mut points = vec![[0.0, 0.0]];
    points.extend(lags.iter().map(|&r| [r, 0.0]));
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    for h in [1e-2, 1e-3] {
        let model = group_branches(&table, h, DEFAULT_DIR_TOL)?;
        let samples = sample_local_limit(&model, alpha, &points, 20_000, &mut rng)?;
        let origin = samples.column(0);
        let lagged: Vec<_> = (1..points.len()).map(|p| samples.column(p)).collect();
        let g = gaussianity_moments(&origin);
        let window = model.window_covariance(alpha, &points[1..]);
        let cov = covariance_check("window", &origin, &lagged, &window);
        println!(
            "h = {h}: {} classes from {} branches, fourth moment ratio {:.4}, window covariance z {:.2} ({})",
            model.len(),
            table.count,
            g.statistics["fourth_moment_ratio"],
            cov.statistics["max_z"],
            cov.verdict.as_str()
        );
    }
    Ok(())
}
