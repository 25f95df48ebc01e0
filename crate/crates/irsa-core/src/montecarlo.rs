//! Seeded Monte Carlo simulation of the protocol.
//!
//! Each trial draws one collision matrix (degrees from Λ, then a uniform
//! d-subset of slots per user), peels it, and records the residual u. Every
//! trial owns a dedicated RNG substream keyed by (master seed, trial index),
//! and all statistics are computed from an integer residual-count table, so
//! the estimate is bit-identical no matter how trials are chunked across
//! threads.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SystemConfig;
use crate::degree::DegreeDistribution;
use crate::exec::{run_indexed, Parallelism};
use crate::peel::{peel_matrix, CollisionMatrix, PeelPolicy};
use crate::{Error, Result};

/// Simulation size and reproducibility knobs.
#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    pub trials: u64,
    pub master_seed: u64,
    /// How many work units the trial range is split into. Purely a
    /// scheduling knob: the estimate is identical for any value.
    pub parallel_chunks: u64,
    pub parallelism: Parallelism,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            trials: 1000,
            master_seed: 0,
            parallel_chunks: 64,
            parallelism: Parallelism::default(),
        }
    }
}

/// Empirical residual distribution and loss-rate estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SimEstimate {
    /// Relative frequency of each observed residual u (absent u never occurred).
    pub pmf_hat: BTreeMap<u32, f64>,
    /// Mean of u/k over the trials.
    pub plr_hat: f64,
    /// Sample standard deviation of u/k divided by √trials.
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// The RNG for one trial: a pure function of (master_seed, trial), so any
/// subset of trials can be replayed independently and in any order.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

struct DegreeSampler {
    support: Vec<u32>,
    weights: WeightedIndex<f64>,
}

impl DegreeSampler {
    fn new(dist: &DegreeDistribution) -> Self {
        let support = dist.support();
        let weights = WeightedIndex::new(
            support.iter().map(|&d| crate::rational::to_f64(&dist.prob(d))),
        )
        .expect("a validated distribution has positive total weight");
        DegreeSampler { support, weights }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> u32 {
        self.support[self.weights.sample(rng)]
    }
}

fn sample_with<R: Rng>(
    sampler: &DegreeSampler,
    cfg: &SystemConfig,
    rng: &mut R,
) -> CollisionMatrix {
    let t = cfg.t;
    let mut cols = vec![0u32; t as usize];
    let mut slots: Vec<u32> = Vec::with_capacity(t as usize);
    for user in 0..cfg.k {
        let degree = sampler.draw(rng);
        assert!(degree <= t, "degree {degree} cannot pick distinct slots among {t}");
        // Partial Fisher–Yates: the first `degree` entries end up a uniform
        // random subset of the t slots.
        slots.clear();
        slots.extend(0..t);
        for j in 0..degree as usize {
            let swap = rng.random_range(j..t as usize);
            slots.swap(j, swap);
        }
        for &slot in &slots[..degree as usize] {
            cols[slot as usize] |= 1 << user;
        }
    }
    CollisionMatrix::new(cfg.k, cols).expect("sampled columns fit k users")
}

/// Draw one collision matrix: row i gets d_i ~ Λ replicas in d_i distinct
/// uniformly chosen slots. Deterministic in the RNG state.
pub fn sample_matrix<R: Rng>(
    dist: &DegreeDistribution,
    cfg: &SystemConfig,
    rng: &mut R,
) -> CollisionMatrix {
    sample_with(&DegreeSampler::new(dist), cfg, rng)
}

fn estimate_from_counts(counts: &[u64], k: u32, trials: u64, seed: u64) -> SimEstimate {
    let n = trials as f64;
    let mut pmf_hat = BTreeMap::new();
    let mut mean = 0.0f64;
    let mut mean_sq = 0.0f64;
    for (u, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let ratio = u as f64 / f64::from(k);
        let weight = count as f64;
        pmf_hat.insert(u as u32, weight / n);
        mean += weight * ratio;
        mean_sq += weight * ratio * ratio;
    }
    mean /= n;
    mean_sq /= n;
    let stderr = if trials < 2 {
        0.0
    } else {
        let sample_var = (mean_sq - mean * mean) * n / (n - 1.0);
        (sample_var.max(0.0) / n).sqrt()
    };
    SimEstimate { pmf_hat, plr_hat: mean, stderr, trials, seed }
}

/// Run `trials` independent frame realizations through the peeler and
/// estimate the residual pmf and the loss rate.
pub fn simulate(
    dist: &DegreeDistribution,
    cfg: &SystemConfig,
    sim: &SimConfig,
) -> Result<SimEstimate> {
    if sim.trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    dist.validate_for_slots(cfg.t)?;

    let sampler = DegreeSampler::new(dist);
    let chunks = sim.parallel_chunks.clamp(1, sim.trials);
    let per_chunk = sim.trials.div_ceil(chunks);

    let tables = run_indexed(sim.parallelism, chunks as usize, |chunk| {
        let lo = chunk as u64 * per_chunk;
        let hi = (lo + per_chunk).min(sim.trials);
        let mut counts = vec![0u64; cfg.k as usize + 1];
        for trial in lo..hi {
            let mut rng = trial_rng(sim.master_seed, trial);
            let matrix = sample_with(&sampler, cfg, &mut rng);
            let u = peel_matrix(&matrix, PeelPolicy::default());
            debug_assert_ne!(u, 1);
            counts[u as usize] += 1;
        }
        Ok(counts)
    })?;

    let mut counts = vec![0u64; cfg.k as usize + 1];
    for table in tables {
        for (total, part) in counts.iter_mut().zip(table) {
            *total += part;
        }
    }
    Ok(estimate_from_counts(&counts, cfg.k, sim.trials, sim.master_seed))
}
