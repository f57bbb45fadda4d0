//! Disk geometry, the Bolza deck group and the octagon quadrature.

use hypwave::geometry::{
    exp_map, integrate_surface, DeckGroup, DeckWord, DiskPoint, MobiusMap, TangentVector, BOLZA_RELATION,
};

fn main() -> hypwave::Result<()> {
    let group = DeckGroup::bolza();
    println!(
        "octagon: inradius {:.6}, circumradius {:.6}, area {:.6} (4π = {:.6})",
        DeckGroup::inradius(),
        DeckGroup::circumradius(),
        DeckGroup::area(),
        4.0 * std::f64::consts::PI
    );
    for order in [4, 8, 12] {
        println!(
            "quadrature area, order {order}: {:.14}",
            integrate_surface(order, |_| 1.0)
        );
    }

    let relation = DeckWord(BOLZA_RELATION.iter().map(|&k| k as u8).collect());
    let residual = group.word_map(&relation).projective_distance(&MobiusMap::IDENTITY);
    println!("relation {relation}: distance from identity {residual:.2e}");

    let base = DiskPoint::from_xy(0.3, -0.1)?;
    let far = exp_map(&TangentVector::from_frame(base, [4.0, 2.5]))?;
    let (reduced, word) = group.reduce_to_domain(far)?;
    let back = group.word_map(&word).apply(reduced)?;
    println!(
        "d(base, far) = {:.9} (|v| = {:.9}); reduced by word {word} to {:.6}, round-trip error {:.1e}",
        base.distance(&far),
        4.0f64.hypot(2.5),
        reduced.z(),
        back.distance(&far)
    );

    for radius in [2.0, 4.0, 6.0] {
        println!(
            "deck ball of radius {radius}: {} elements",
            group.enumerate_deck(radius)?.len()
        );
    }
    Ok(())
}
