//! Isotropic random waves against the Bessel covariance.

use hypwave::stats::{covariance_check, gaussianity_moments};
use hypwave::waves::{covariance, sample_isotropic, SpectralMeasure};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hypwave::Result<()> {
    let mu = SpectralMeasure::monochromatic(1.0);
    let radii: Vec<f64> = (1..=6).map(|k| 0.8 * k as f64).collect();
    let mut points = vec![[0.0, 0.0]];
    points.extend(radii.iter().map(|&r| [r, 0.0]));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples = sample_isotropic(&mu, 1024, &points, 40_000, &mut rng)?;

    let origin = samples.column(0);
    let lagged: Vec<_> = (1..points.len()).map(|p| samples.column(p)).collect();
    let expected: Vec<_> = radii.iter().map(|&r| Complex64::new(covariance(&mu, r), 0.0)).collect();
    let report = covariance_check("rwm", &origin, &lagged, &expected);
    for (k, r) in radii.iter().enumerate() {
        println!(
            "r = {r:.1}: empirical {:+.4}, J0 {:+.4}, se {:.4}",
            report.statistics[&format!("lag{k}_re")],
            expected[k].re,
            report.statistics[&format!("lag{k}_se")]
        );
    }
    let g = gaussianity_moments(&origin);
    println!(
        "covariance {} (max z {:.2}); fourth moment ratio {:.4}",
        report.verdict.as_str(),
        report.statistics["max_z"],
        g.statistics["fourth_moment_ratio"]
    );
    Ok(())
}
