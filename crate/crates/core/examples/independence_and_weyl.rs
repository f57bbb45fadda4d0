//! Integer-relation search on directions and Weyl sums of a Kronecker walk.

use hypwave::stats::{rational_independence, weyl_equidistribution};

fn main() {
    let generic = [
        [1.0, 0.0],
        [0.5, 3f64.sqrt() / 2.0],
        [2f64.sqrt().recip(), -(0.5f64.sqrt())],
    ];
    let collinear = [[0.6, 0.8], [-0.3, -0.4], [0.0, 1.0]];
    for (name, xi) in [("generic", &generic[..]), ("collinear", &collinear[..])] {
        let r = rational_independence(xi, 8, 1e-2);
        println!(
            "{name}: {} min combination {:.3e} {:?}",
            r.verdict.as_str(),
            r.statistics["min_combination"],
            r.notes
        );
    }

    let freqs = [2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt()];
    for (name, scale) in [("irrational", 1.0), ("resonant", 0.0)] {
        let theta: Vec<Vec<f64>> = (0..40_000)
            .map(|m| {
                freqs
                    .iter()
                    .map(|f| ((m as f64) * (f * scale + 0.25)).rem_euclid(1.0))
                    .collect()
            })
            .collect();
        let w = weyl_equidistribution(&theta, 3);
        println!(
            "{name} walk: max Weyl sum {:.4} vs {:.4} -> {}",
            w.statistics["max_weyl_sum"],
            w.thresholds.values().next().copied().unwrap_or(f64::NAN),
            w.verdict.as_str()
        );
    }
}
