use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitCircle};
use rayon::prelude::*;

use super::{PlaneWaveEnsemble, SpectralMeasure};
use crate::error::{invalid, Result};

/// Field values, one row of `n_points` entries per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSamples {
    pub n_points: usize,
    pub values: Vec<Complex64>,
}

impl FieldSamples {
    pub fn n_samples(&self) -> usize {
        self.values.len() / self.n_points.max(1)
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.values[k * self.n_points..(k + 1) * self.n_points]
    }

    pub fn column(&self, p: usize) -> Vec<Complex64> {
        self.values.iter().skip(p).step_by(self.n_points).copied().collect()
    }
}

/// Derives independent ChaCha streams for fixed-size sample blocks, so the
/// output does not depend on how blocks are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockSeeder {
    pub master: u64,
}

impl BlockSeeder {
    pub const BLOCK: usize = 512;

    pub fn from_rng<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        BlockSeeder { master: rng.next_u64() }
    }

    pub fn stream(&self, block: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(block as u64);
        rng
    }

    /// Runs `fill(rng, row)` for every sample row, blockwise in parallel.
    pub fn fill_rows<F>(&self, n_samples: usize, n_points: usize, fill: F) -> FieldSamples
    where
        F: Fn(&mut ChaCha8Rng, &mut [Complex64]) + Sync,
    {
        let mut values = vec![Complex64::new(0.0, 0.0); n_samples * n_points];
        if n_points > 0 {
            values
                .par_chunks_mut(Self::BLOCK * n_points)
                .enumerate()
                .for_each(|(block, chunk)| {
                    let mut rng = self.stream(block);
                    for row in chunk.chunks_mut(n_points) {
                        fill(&mut rng, row);
                    }
                });
        }
        FieldSamples { n_points, values }
    }
}

/// Detects evaluation points of the form `p_0 + k δ`.
fn progression(points: &[[f64; 2]]) -> Option<([f64; 2], [f64; 2])> {
    if points.len() < 3 {
        return None;
    }
    let p0 = points[0];
    let step = [points[1][0] - p0[0], points[1][1] - p0[1]];
    let scale = step[0].hypot(step[1]);
    if scale == 0.0 {
        return None;
    }
    let ok = points.iter().enumerate().all(|(k, p)| {
        let e = [p0[0] + k as f64 * step[0] - p[0], p0[1] + k as f64 * step[1] - p[1]];
        e[0].hypot(e[1]) <= 1e-13 * scale * k.max(1) as f64
    });
    ok.then_some((p0, step))
}

fn cis(x: f64) -> Complex64 {
    let (s, c) = x.sin_cos();
    Complex64::new(c, s)
}

/// Adds `Σ_j w_j e^{i ξ_j · y}` at each point `y` into `out`.
pub fn superpose(weights: &[Complex64], xi: &[[f64; 2]], points: &[[f64; 2]], out: &mut [Complex64]) {
    if let Some((p0, step)) = progression(points) {
        for (w, x) in weights.iter().zip(xi) {
            let start = x[0] * p0[0] + x[1] * p0[1];
            let mut z = if start == 0.0 { *w } else { *w * cis(start) };
            let rot = cis(x[0] * step[0] + x[1] * step[1]);
            for o in out.iter_mut() {
                *o += z;
                z *= rot;
            }
        }
    } else {
        for (w, x) in weights.iter().zip(xi) {
            for (o, p) in out.iter_mut().zip(points) {
                *o += *w * cis(x[0] * p[0] + x[1] * p[1]);
            }
        }
    }
}

/// Samples of `Σ β_j e^{i(y·ξ_j + ϑ_j)}` with fresh uniform phases per sample.
pub fn sample_planewave<R: Rng + ?Sized>(
    ens: &PlaneWaveEnsemble,
    points: &[[f64; 2]],
    n_samples: usize,
    rng: &mut R,
) -> Result<FieldSamples> {
    if ens.is_empty() {
        return Err(invalid("empty ensemble"));
    }
    let seeder = BlockSeeder::from_rng(rng);
    Ok(seeder.fill_rows(n_samples, points.len(), |rng, row| {
        let weights: Vec<Complex64> = ens.beta.iter().map(|&b| b * cis(TAU * rng.random::<f64>())).collect();
        superpose(&weights, &ens.xi, points, row);
    }))
}

/// Samples of an `N`-wave approximation of the isotropic field with spectral measure `μ`.
pub fn sample_isotropic<R: Rng + ?Sized>(
    mu: &SpectralMeasure,
    n_waves: usize,
    points: &[[f64; 2]],
    n_samples: usize,
    rng: &mut R,
) -> Result<FieldSamples> {
    mu.validate()?;
    if n_waves < 16 {
        return Err(invalid("sample_isotropic needs at least 16 waves"));
    }
    let beta = (mu.mass() / n_waves as f64).sqrt();
    let seeder = BlockSeeder::from_rng(rng);
    Ok(seeder.fill_rows(n_samples, points.len(), |rng, row| {
        let mut weights = Vec::with_capacity(n_waves);
        let mut xi = Vec::with_capacity(n_waves);
        for _ in 0..n_waves {
            let [c, s]: [f64; 2] = UnitCircle.sample(rng);
            let l = mu.sample_radius(rng);
            xi.push([l * c, l * s]);
            let [re, im]: [f64; 2] = UnitCircle.sample(rng);
            weights.push(Complex64::new(beta * re, beta * im));
        }
        superpose(&weights, &xi, points, row);
    }))
}
