//! Geodesic flow, its stable and unstable directions, and the Riccati law
//! for wavefront shapes.

use hypwave::dynamics::{
    apply, focal_time, jacobian_along, linearized_flow, riccati_evolve, splitting_at, PhasePoint, RiccatiOutcome,
    WavefrontShape,
};
use hypwave::geometry::{DiskPoint, TangentVector};

fn norm(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn main() -> hypwave::Result<()> {
    let rho = PhasePoint::new(TangentVector::from_frame(DiskPoint::from_xy(0.1, 0.2)?, [0.8, -0.6]))?;
    let split = splitting_at(&rho);
    println!("speed {} (expansion rate {})", split.speed, split.rate);
    for t in [1.0, 2.0, 4.0] {
        let m = linearized_flow(split.speed, t);
        println!(
            "t = {t}: unstable x{:.4e} (e^t {:.4e}), stable x{:.4e}, flow x{:.1}",
            norm(&apply(&m, &split.unstable)),
            (split.speed * t).exp(),
            norm(&apply(&m, &split.stable)),
            norm(&apply(&m, &split.neutral)),
        );
    }
    let moved = rho.flow(2.0).base()?;
    println!("base travels {:.12} in time 2", moved.distance(&rho.base()?));

    for u0 in [-1.0, -0.5, 0.0, 2.0, -2.0] {
        match riccati_evolve(WavefrontShape(u0), 5.0, 1.0) {
            RiccatiOutcome::Regular(u) => println!(
                "u0 = {u0:>4}: u(5) = {:.6}, J(5) = {:.4}",
                u.0,
                jacobian_along(WavefrontShape(u0), 5.0, 1.0)?
            ),
            RiccatiOutcome::BlowUp { time } => {
                println!(
                    "u0 = {u0:>4}: focal point at t = {time:.6} ({:?})",
                    focal_time(u0, 5.0, 1.0)
                )
            }
        }
    }
    Ok(())
}
