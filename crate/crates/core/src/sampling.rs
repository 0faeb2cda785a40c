//! Seeded samplers for patterns, angles and points of H_0.
//!
//! Every sample index gets its own ChaCha8 stream: the generator is seeded
//! with the experiment seed and `set_stream(index)` selects the stream, so a
//! sample can be replayed from (seed, index) alone.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gz::{from_ladder, gz_inverse, AnglePattern, GzPattern, LadderVector};
use crate::matrix::HermitianMatrix;

pub const REJECTION_BUDGET: usize = 1_000_000;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PatternSampler {
    /// Ladders uniform in [-radius, radius] boxes, rejected until the cone gap
    /// exceeds delta.
    LadderBox { radius: f64 },
    /// Levels grown outwards from lambda^(1) in [-1, 1], each slack drawn from
    /// (delta, 2 delta) at the ends and uniformly inside, then checked.
    Interlacing,
}

pub fn sample_pattern(n: usize, delta: f64, sampler: PatternSampler, rng: &mut impl Rng) -> Result<GzPattern> {
    for _ in 0..REJECTION_BUDGET {
        let p = match sampler {
            PatternSampler::LadderBox { radius } => {
                let ell = (1..=n).map(|k| (0..k).map(|_| rng.gen_range(-radius..=radius)).collect()).collect();
                from_ladder(&LadderVector { ell })
            }
            PatternSampler::Interlacing => grow_pattern(n, delta, rng),
        };
        if n == 1 || p.gap() > delta {
            return Ok(p);
        }
    }
    Err(Error::Sampling(format!("no pattern with cone gap > {delta} after {REJECTION_BUDGET} draws; use a smaller delta")))
}

fn grow_pattern(n: usize, delta: f64, rng: &mut impl Rng) -> GzPattern {
    let mut lambda = vec![vec![rng.gen_range(-1.0..1.0)]];
    for k in 1..n {
        let l: &Vec<f64> = &lambda[k - 1];
        let mut u = Vec::with_capacity(k + 1);
        u.push(l[0] + delta * (1.0 + rng.gen::<f64>()));
        for i in 0..k - 1 {
            let (lo, hi) = (l[i + 1] + delta, l[i] - delta);
            u.push(if hi > lo { rng.gen_range(lo..hi) } else { (lo + hi) / 2.0 });
        }
        u.push(l[k - 1] - delta * (1.0 + rng.gen::<f64>()));
        lambda.push(u);
    }
    GzPattern { lambda }
}

pub fn sample_angles(n: usize, rng: &mut impl Rng) -> AnglePattern {
    AnglePattern { psi: (1..n).map(|k| (0..k).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()).collect() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct H0Sample {
    pub index: u64,
    pub pattern: GzPattern,
    pub angles: AnglePattern,
    pub matrix: HermitianMatrix,
}

pub fn sample_point(n: usize, delta: f64, sampler: PatternSampler, seed: u64, index: u64) -> Result<H0Sample> {
    let mut rng = stream(seed, index);
    let pattern = sample_pattern(n, delta, sampler, &mut rng)?;
    let angles = sample_angles(n, &mut rng);
    let matrix = gz_inverse(&pattern, &angles)?;
    Ok(H0Sample { index, pattern, angles, matrix })
}
