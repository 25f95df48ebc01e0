//! Asymptotic (infinite-frame) baseline via density evolution.
//!
//! In the large-system limit at fixed offered traffic G, the peeling process
//! is governed by a scalar fixed point: x is the probability an edge from a
//! user remains unresolved, y the same for a slot. This module iterates the
//! standard recursion and reports Λ(y*) as the asymptotic loss probability.
//! It is an external baseline for comparison curves — the finite-frame
//! analysis elsewhere in this crate does not depend on it.

use crate::degree::DegreeDistribution;
use crate::{Error, Result};

/// Offered traffic and iteration controls for the fixed point.
#[derive(Clone, Copy, Debug)]
pub struct DeConfig {
    pub g: f64,
    pub max_iters: u64,
    pub tolerance: f64,
}

impl DeConfig {
    pub fn new(g: f64) -> Result<Self> {
        let cfg = DeConfig { g, max_iters: 10_000, tolerance: 1e-12 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::Config(format!("offered traffic must be positive, got {}", self.g)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Fixed-point result. Non-convergence is reported, not raised: the last
/// iterate is still the best available estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeOutcome {
    /// Λ(y*): asymptotic probability that a user stays unresolved.
    pub plr: f64,
    /// |x − λ(1 − exp(−G·Λ'(1)·x))| at the returned iterate.
    pub fixed_point_residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Iterate the density-evolution recursion from x₀ = 1:
/// y = 1 − exp(−G·Λ'(1)·x), x ← λ(y) = Λ'(y)/Λ'(1), until |Δx| < tolerance
/// or the iteration cap; return Λ(y) at the final iterate.
pub fn asymptotic_plr(dist: &DegreeDistribution, de: &DeConfig) -> Result<DeOutcome> {
    de.validate()?;
    let edges = dist.lambda_prime_f64(1.0);
    if !(edges > 0.0) {
        return Err(Error::Config("degree distribution has no edges".into()));
    }

    let mut x = 1.0f64;
    let mut y = 1.0 - (-de.g * edges * x).exp();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < de.max_iters {
        y = 1.0 - (-de.g * edges * x).exp();
        let next = dist.lambda_prime_f64(y) / edges;
        debug_assert!((0.0..=1.0).contains(&next));
        let delta = (next - x).abs();
        x = next;
        iterations += 1;
        if delta < de.tolerance {
            converged = true;
            break;
        }
    }

    let residual = (x - dist.lambda_prime_f64(1.0 - (-de.g * edges * x).exp()) / edges).abs();
    Ok(DeOutcome {
        plr: dist.lambda_f64(y),
        fixed_point_residual: residual,
        iterations,
        converged,
    })
}
