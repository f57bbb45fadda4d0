//! Integration and sampling over the octagon fundamental domain.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::Rng;

use super::deck::DeckGroup;
use super::disk::DiskPoint;
use crate::quad::gauss_legendre;

/// Quadrature node on the surface: a point of the octagon and its area weight.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceNode {
    pub point: DiskPoint,
    pub weight: f64,
}

/// Polar Gauss-Legendre rule about the octagon centre with one sector per
/// edge. Each sector is parametrised by arclength `σ` along its edge, so
/// the radial limit `cosh R = cosh ρ cosh σ` is analytic across the sector.
///
/// `order` nodes are used in each direction of each sector.
pub fn octagon_quadrature(order: usize) -> Vec<SurfaceNode> {
    let rho = DeckGroup::inradius();
    let half_side = (DeckGroup::circumradius().cosh() / rho.cosh()).acosh();
    let (sh, ch) = (rho.sinh(), rho.cosh());
    let edge_rule = gauss_legendre(order, -half_side, half_side);
    let radial = gauss_legendre(order, 0.0, 1.0);
    let mut nodes = Vec::with_capacity(8 * order * order);
    for k in 0..8 {
        let mid = (k + 1) as f64 * FRAC_PI_4;
        for &(sigma, ws) in &edge_rule {
            let th = sigma.tanh();
            let theta = mid + (th / sh).atan();
            let dtheta = sh * (1.0 - th * th) / (sh * sh + th * th);
            let reach = (ch * sigma.cosh()).acosh();
            for &(u, wu) in &radial {
                let r = u * reach;
                nodes.push(SurfaceNode {
                    point: DiskPoint::polar(r, theta).expect("octagon lies inside the disk"),
                    weight: ws * dtheta * wu * reach * r.sinh(),
                });
            }
        }
    }
    nodes
}

/// Integral over the surface of a function given on the octagon.
pub fn integrate_surface<F: FnMut(DiskPoint) -> f64>(order: usize, mut f: F) -> f64 {
    octagon_quadrature(order).iter().map(|n| n.weight * f(n.point)).sum()
}

/// Point of the octagon distributed by hyperbolic area.
pub fn random_domain_point<R: Rng + ?Sized>(group: &DeckGroup, rng: &mut R) -> DiskPoint {
    let outer = DeckGroup::circumradius();
    loop {
        let u: f64 = rng.random();
        let r = (1.0 + u * (outer.cosh() - 1.0)).acosh();
        let angle = rng.random::<f64>() * 2.0 * PI;
        let p = DiskPoint::polar(r, angle).expect("radius below circumradius");
        if group.contains(p, 0.0) {
            return p;
        }
    }
}
