//! Seeded random coefficient sequences.
//!
//! Generator: `ChaCha8Rng::seed_from_u64(seed)`. Each coefficient draws the
//! `p * p` entries of `G` in row-major order, real part then imaginary part,
//! from `StandardNormal`, then a top singular value `t ~ U[0.1, norm_cap]`,
//! and returns `t G / |G|_2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{RunConfig, NORM_FLOOR};
use crate::error::Result;
use crate::hermitian::{c, CMatrix};
use crate::opuc::VerblunskySequence;

pub fn random_contraction<R: Rng>(rng: &mut R, p: usize, norm_cap: f64) -> CMatrix {
    let mut g = CMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = c(re, im);
        }
    }
    let t = rng.random_range(NORM_FLOOR..=norm_cap);
    let top = g.singular_values().max();
    g * c(t / top, 0.0)
}

pub fn random_sequence<R: Rng>(rng: &mut R, p: usize, n: usize, norm_cap: f64) -> Result<VerblunskySequence> {
    VerblunskySequence::new(p, (0..n).map(|_| random_contraction(rng, p, norm_cap)).collect())
}

/// Independent stream for trial `index` under `seed`, so parallel trials do
/// not depend on scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `trunc` random `dim x dim` strict contractions.
pub fn cmd_gen(config: &RunConfig) -> Result<VerblunskySequence> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    random_sequence(&mut rng, config.dim, config.trunc, config.norm_cap)
}
