use std::collections::{HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::disk::DiskPoint;
use super::mobius::{MobiusMap, MobiusProduct};
use crate::error::{Error, Result};

/// Word in the side-pairing generators, read left to right as a composition.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeckWord(pub Vec<u8>);

impl DeckWord {
    pub fn identity() -> Self {
        DeckWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for DeckWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for g in &self.0 {
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for DeckWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "e" {
            return Ok(DeckWord::identity());
        }
        s.chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d < 8 => Ok(d as u8),
                _ => Err(Error::InvalidArgument(format!("bad deck word {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(DeckWord)
    }
}

/// One element of an enumerated ball of the deck group.
#[derive(Clone, Copy, Debug)]
pub struct DeckElement {
    pub map: MobiusMap,
    /// Hyperbolic distance from 0 to the image of 0.
    pub displacement: f64,
    parent: u32,
    generator: u8,
}

/// All deck transformations moving 0 by at most `radius`.
#[derive(Debug)]
pub struct DeckBall {
    pub radius: f64,
    pub elements: Vec<DeckElement>,
}

impl DeckBall {
    pub fn word(&self, index: usize) -> DeckWord {
        let mut word = Vec::new();
        let mut i = index;
        while i != 0 {
            let e = &self.elements[i];
            word.push(e.generator);
            i = e.parent as usize;
        }
        DeckWord(word)
    }
}

/// The deck group of the Bolza surface acting on the disk, with the regular
/// octagon centred at 0 as fundamental domain.
pub struct DeckGroup {
    generators: [MobiusMap; 8],
    cache: Mutex<Option<Arc<DeckBall>>>,
    budget: usize,
}

impl fmt::Debug for DeckGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeckGroup").field("budget", &self.budget).finish()
    }
}

/// Generator order whose product is the identity.
pub const BOLZA_RELATION: [usize; 8] = [0, 5, 2, 7, 4, 1, 6, 3];

impl DeckGroup {
    pub const DEFAULT_BUDGET: usize = 8_000_000;
    const MAX_REDUCTION_STEPS: usize = 100_000;

    pub fn bolza() -> Self {
        let a = Complex64::new(1.0 + SQRT_2, 0.0);
        let b = (2.0 + 2.0 * SQRT_2).sqrt();
        let generators = std::array::from_fn(|k| MobiusMap {
            a,
            b: Complex64::from_polar(b, k as f64 * FRAC_PI_4),
        });
        DeckGroup {
            generators,
            cache: Mutex::new(None),
            budget: Self::DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn generator(&self, k: usize) -> MobiusMap {
        self.generators[k % 8]
    }

    pub fn generators(&self) -> &[MobiusMap; 8] {
        &self.generators
    }

    /// Index of the inverse generator.
    pub fn inverse_index(k: usize) -> usize {
        (k + 4) % 8
    }

    pub fn word_map(&self, word: &DeckWord) -> MobiusMap {
        let mut prod = MobiusProduct::new(MobiusMap::IDENTITY);
        for &g in &word.0 {
            prod.push_right(&self.generators[g as usize]);
        }
        prod.value().renormalized()
    }

    /// Distance from the centre of the octagon to the midpoint of a side.
    pub fn inradius() -> f64 {
        (1.0 + SQRT_2).acosh()
    }

    /// Distance from the centre of the octagon to a vertex.
    pub fn circumradius() -> f64 {
        (3.0 + 2.0 * SQRT_2).acosh()
    }

    pub fn area() -> f64 {
        4.0 * PI
    }

    pub fn vertices() -> [DiskPoint; 8] {
        let r = Self::circumradius();
        std::array::from_fn(|k| DiskPoint::polar(r, FRAC_PI_8 + k as f64 * FRAC_PI_4).unwrap())
    }

    /// Closed-octagon membership with an absolute slack in Klein coordinates.
    pub fn contains(&self, p: DiskPoint, slack: f64) -> bool {
        let k = p.to_klein();
        let limit = Self::inradius().tanh() + slack;
        (0..8).all(|j| {
            let (s, c) = (j as f64 * FRAC_PI_4).sin_cos();
            k.re * c + k.im * s <= limit
        })
    }

    /// Reduces a frame: returns `(reduced, word)` with `frame = word_map(word) ∘ reduced`
    /// and the base of `reduced` in the closed octagon.
    pub fn reduce_frame(&self, frame: &MobiusMap) -> Result<(MobiusMap, DeckWord)> {
        let mut current = MobiusProduct::new(*frame);
        let mut word = Vec::new();
        let inverses: [MobiusMap; 8] = std::array::from_fn(|k| self.generators[k].inverse());
        for _ in 0..Self::MAX_REDUCTION_STEPS {
            let here = current.value().displacement();
            let mut best: Option<(usize, f64)> = None;
            for (k, inv) in inverses.iter().enumerate() {
                let d = inv.compose(&current.value()).displacement();
                if d < here - 1e-12 && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((k, d));
                }
            }
            match best {
                Some((k, _)) => {
                    current.push_left(&inverses[k]);
                    word.push(k as u8);
                }
                None => return Ok((current.value().renormalized(), DeckWord(word))),
            }
        }
        Err(Error::ReductionDiverged(Self::MAX_REDUCTION_STEPS))
    }

    /// Reduces a point: returns `(q, word)` with `p = word_map(word)(q)`, `q` in the octagon.
    pub fn reduce_to_domain(&self, p: DiskPoint) -> Result<(DiskPoint, DeckWord)> {
        let (m, w) = self.reduce_frame(&MobiusMap::transvection(p))?;
        Ok((m.origin_image()?, w))
    }

    /// Ball of deck elements of displacement at most `radius`, cached by radius.
    pub fn ball(&self, radius: f64) -> Result<Arc<DeckBall>> {
        let mut guard = self.cache.lock().expect("deck cache poisoned");
        if let Some(ball) = guard.as_ref() {
            if ball.radius >= radius {
                return Ok(Arc::clone(ball));
            }
        }
        let ball = Arc::new(self.enumerate_ball(radius)?);
        *guard = Some(Arc::clone(&ball));
        Ok(ball)
    }

    /// Deck elements with displacement at most `radius`, paired with their words.
    pub fn enumerate_deck(&self, radius: f64) -> Result<Vec<(MobiusMap, DeckWord)>> {
        let ball = self.ball(radius)?;
        Ok(ball
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.displacement <= radius)
            .map(|(i, e)| (e.map, ball.word(i)))
            .collect())
    }

    fn enumerate_ball(&self, radius: f64) -> Result<DeckBall> {
        let estimate = 0.5 * ((radius.cosh()) - 1.0);
        if estimate > self.budget as f64 {
            return Err(Error::ResourceLimit {
                radius,
                estimate,
                budget: self.budget,
            });
        }
        const ANGLE_CELL: f64 = 1e-9;
        let mut elements = vec![DeckElement {
            map: MobiusMap::IDENTITY,
            displacement: 0.0,
            parent: 0,
            generator: 0,
        }];
        let mut index: HashMap<i64, Vec<u32>> = HashMap::new();
        let n_cells = (2.0 * std::f64::consts::PI / ANGLE_CELL).ceil() as i64;
        // Elements near the identity share one bucket; their bearing is noise.
        let key = |m: &MobiusMap| {
            if m.displacement() < 1e-6 {
                -1
            } else {
                (((m.hyperboloid().bearing() + std::f64::consts::PI) / ANGLE_CELL).floor() as i64).rem_euclid(n_cells)
            }
        };
        index.entry(key(&MobiusMap::IDENTITY)).or_default().push(0);
        let mut queue = VecDeque::from([0u32]);
        while let Some(i) = queue.pop_front() {
            let parent = elements[i as usize].map;
            for (k, g) in self.generators.iter().enumerate() {
                let m = g.compose(&parent);
                let d = m.displacement();
                if d > radius {
                    continue;
                }
                let cell = key(&m);
                let near = if cell < 0 {
                    [-1, -1, -1]
                } else {
                    [(cell - 1).rem_euclid(n_cells), cell, (cell + 1) % n_cells]
                };
                let seen = near.into_iter().any(|c| {
                    index.get(&c).is_some_and(|ids| {
                        ids.iter().any(|&j| {
                            let e = &elements[j as usize];
                            (e.displacement - d).abs() < 1e-6 && e.map.projective_distance(&m) < 1e-8
                        })
                    })
                });
                if seen {
                    continue;
                }
                let id = elements.len() as u32;
                elements.push(DeckElement {
                    map: m.renormalized(),
                    displacement: d,
                    parent: i,
                    generator: k as u8,
                });
                index.entry(cell).or_default().push(id);
                queue.push_back(id);
            }
        }
        Ok(DeckBall { radius, elements })
    }
}
