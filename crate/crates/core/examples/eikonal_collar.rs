//! Builds the default eikonal state and checks its phase on the collar.

use hypwave::experiment::ExperimentConfig;
use hypwave::lagrangian::{energy_measure, Phase};

fn main() -> hypwave::Result<()> {
    let state = ExperimentConfig::default().state.build()?;
    let eik = state.eikonal().expect("default state is eikonal");
    eik.check_collar()?;
    println!(
        "collar half-width {}, monochromatic {}",
        eik.half_width,
        state.is_monochromatic()
    );

    let mut worst_speed = 0.0f64;
    let mut worst_phase = 0.0f64;
    for i in 0..=6 {
        for j in 0..=6 {
            let s = eik.data.length * (0.05 + 0.9 * i as f64 / 6.0);
            let tau = eik.half_width * (j as f64 / 3.0 - 1.0) * 0.9;
            let p = eik.characteristic(s, tau).origin_image()?;
            let jet = eik.jet(&p)?;
            let coords = eik.invert(&p)?;
            worst_speed = worst_speed.max((jet.speed() - 1.0).abs());
            worst_phase = worst_phase.max((jet.value - eik.data.profile.eval(s).0 - tau).abs());
            if i == 3 && j % 2 == 0 {
                println!(
                    "s = {s:.3}, τ = {tau:+.3}: φ = {:+.6}, inverted (s, τ) = ({:.6}, {:+.6}), shape {:.4}",
                    jet.value,
                    coords.s,
                    coords.tau,
                    eik.shape(s, tau)?.0
                );
            }
        }
    }
    println!("max ||dφ| - 1| = {worst_speed:.2e}, max |φ - (u(s) + τ)| = {worst_phase:.2e}");

    let em = energy_measure(&state, 16)?;
    println!(
        "energy measure: mass {:.6} = |a|^2 {:.6}, support {:?}",
        em.mass(),
        state.amplitude.l2_norm_sq(),
        em.support()
    );
    Ok(())
}
