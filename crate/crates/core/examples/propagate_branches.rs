//! Propagates the default state and lists the WKB branches at one point.

use hypwave::experiment::ExperimentConfig;
use hypwave::geometry::{DeckGroup, DiskPoint};
use hypwave::wkb::{Propagator, PropagatorConfig};

fn main() -> hypwave::Result<()> {
    let t: f64 = std::env::args().nth(1).map_or(Ok(8.0), |s| s.parse()).expect("time");
    let state = ExperimentConfig::default().state.build()?;
    let group = DeckGroup::bolza();
    let prop = Propagator::new(&state, &group, PropagatorConfig::default());

    let t0 = prop.detect_t0(&[1.0, 2.0, 3.0, 4.0], 100)?;
    println!("expansion time on the grid: {t0}");

    let bundle = prop.bundle(t)?;
    println!(
        "bundle at t = {t}: {} rays, {} deck candidates",
        bundle.len(),
        bundle.candidate_count()
    );
    let table = prop.find_branches(&bundle, DiskPoint::from_xy(0.1, -0.2)?, 0.0)?;
    println!(
        "{} branches, Σ b² = {:.6e}, newton failures {}",
        table.count, table.diagnostics.local_mass, table.diagnostics.newton_failures
    );
    println!(
        "{:>4} {:>14} {:>10} {:>10} {:>12} {:>12}",
        "j", "deck word", "ξ1", "ξ2", "b", "J"
    );
    for (j, b) in table.branches.iter().take(15).enumerate() {
        println!(
            "{j:>4} {:>14} {:>10.6} {:>10.6} {:>12.4e} {:>12.4e}",
            b.deck_word, b.xi[0], b.xi[1], b.amplitude, b.jacobian
        );
    }
    Ok(())
}
