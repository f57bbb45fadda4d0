//! Hyperbolic plane in the disk model and the Bolza surface as a quotient.

mod deck;
mod disk;
mod mobius;
mod surface;

pub use deck::{DeckBall, DeckElement, DeckGroup, DeckWord, BOLZA_RELATION};
pub use disk::{exp_map, DiskPoint, Frame, TangentVector};
pub use mobius::{Hyperboloid, MobiusMap, MobiusProduct};
pub use surface::{integrate_surface, octagon_quadrature, random_domain_point, SurfaceNode};
