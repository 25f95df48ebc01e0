//! The packet-loss-rate engine.
//!
//! The frame-end residual count U depends on the collision matrix only
//! through its occupancy vector, and the occupancy probability is a ratio of
//! multinomial coefficients. The engine therefore walks the feasible reduced
//! vectors per degree multiset, peels each completed vector once, and
//! aggregates exact matrix counts per residual u — first over the occupancy
//! classes of one degree vector, then over degree vectors weighted by Λ.
//!
//! Three evaluators share the reporting type: the exact sum, the most-likely-
//! vectors (MLV) cut that skips improbable degree vectors, and a brute-force
//! oracle that enumerates raw matrices and never touches the occupancy walk.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::combin::binomial;
use crate::config::SystemConfig;
use crate::degree::{degree_classes, enumerate_degree_vectors, DegreeDistribution, DegreeVector};
use crate::exec::{run_indexed, Parallelism};
use crate::occupancy::{enumerate_dense, partition_count, EnumBudget, EnumStats, NodeBudget};
use crate::peel::{enumerate_matrices, peel_matrix, residual_dense, PeelPolicy};
use crate::rational::{to_f64, Rat};
use crate::{Error, Result};

/// Which evaluator produced a report.
#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    Exact,
    Mlv { threshold: Rat },
    Oracle,
    MonteCarlo { trials: u64, seed: u64 },
    Asymptotic,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Mlv { threshold } => {
                write!(f, "mlv(threshold={})", crate::rational::fraction_string(threshold))
            }
            Mode::Oracle => write!(f, "oracle"),
            Mode::MonteCarlo { trials, seed } => {
                write!(f, "montecarlo(trials={trials}, seed={seed})")
            }
            Mode::Asymptotic => write!(f, "asymptotic"),
        }
    }
}

/// Work counters for one engine call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub classes_evaluated: u64,
    pub classes_skipped: u64,
    pub enumeration_nodes: u64,
    pub feasible_vectors: u64,
    pub matrices_peeled: u64,
    pub wall_time_ms: u64,
}

/// Loss-rate results with exact arithmetic kept intact.
///
/// `pmf` maps each residual count u to its probability; `plr` is
/// Σ (u/k)·pmf(u). In MLV mode both cover only the evaluated degree vectors
/// (total mass `coverage`), making them lower bounds; the gap `1 − coverage`
/// is reported rather than redistributed.
#[derive(Clone, Debug)]
pub struct PlrReport {
    pub k: u32,
    pub t: u32,
    pub mode: Mode,
    pub pmf: BTreeMap<u32, Rat>,
    pub plr: Rat,
    pub coverage: Rat,
    pub warnings: Vec<String>,
    pub stats: EngineStats,
}

impl PlrReport {
    pub fn plr_f64(&self) -> f64 {
        to_f64(&self.plr)
    }

    pub fn pmf_f64(&self) -> BTreeMap<u32, f64> {
        self.pmf.iter().map(|(&u, p)| (u, to_f64(p))).collect()
    }

    /// Normalized throughput (1 − P_L) · k / t.
    pub fn throughput(&self) -> f64 {
        (1.0 - self.plr_f64()) * f64::from(self.k) / f64::from(self.t)
    }

    /// Probability mass of the degree vectors that were skipped (MLV only).
    pub fn uncovered(&self) -> Rat {
        Rat::one() - self.coverage.clone()
    }

    /// The loss rate conditioned on the evaluated vectors, P_L / coverage.
    /// `None` when nothing was skipped (it would equal `plr`) or nothing was
    /// evaluated at all.
    pub fn plr_renormalized(&self) -> Option<Rat> {
        if self.coverage == Rat::one() || self.coverage.is_zero() {
            None
        } else {
            Some(&self.plr / &self.coverage)
        }
    }
}

/// Degree-vector filter for the MLV approximation: only vectors whose prior
/// probability Π Λ_{d_i} reaches the threshold are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct MlvConfig {
    threshold: Rat,
}

impl MlvConfig {
    pub fn new(threshold: Rat) -> Result<Self> {
        if threshold < Rat::zero() || threshold > Rat::one() {
            return Err(Error::Config(format!(
                "MLV threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(MlvConfig { threshold })
    }

    pub fn threshold(&self) -> &Rat {
        &self.threshold
    }
}

impl Default for MlvConfig {
    fn default() -> Self {
        MlvConfig { threshold: Rat::new(BigInt::one(), BigInt::from(1000)) }
    }
}

/// Resource caps and execution mode for the evaluators.
#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub budget: EnumBudget,
    /// Exact and MLV modes refuse k beyond this; the state space grows too
    /// fast for an accidental large k to ever finish.
    pub exact_k_cap: u32,
    /// Upper bound on matrices the oracle may peel.
    pub oracle_matrix_budget: u64,
    pub parallelism: Parallelism,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            budget: EnumBudget::default(),
            exact_k_cap: 10,
            oracle_matrix_budget: 100_000_000,
            parallelism: Parallelism::default(),
        }
    }
}

/// Matrix counts per residual u for one degree vector (or one subtree of it).
struct ResidualCounts {
    per_u: Vec<BigUint>,
    stats: EnumStats,
}

/// Walk the feasible reduced vectors of `degrees`, peel each completed
/// occupancy once, and tally how many matrices land on each residual u.
fn residual_counts(
    degrees: &[u32],
    cfg: &SystemConfig,
    node_budget: &NodeBudget,
    zero_range: Option<(u32, u32)>,
) -> Result<ResidualCounts> {
    let k = cfg.k as usize;
    let mut per_u = vec![BigUint::zero(); k + 1];
    let mut scratch = vec![0u32; 1 << k];
    let full = (1usize << k) - 1;
    let stats = enumerate_dense(degrees, cfg.t, node_budget, zero_range, &mut |leaf| {
        scratch.copy_from_slice(leaf.reduced_counts);
        for (i, &f) in leaf.one_clear.iter().enumerate() {
            scratch[full ^ (1 << i)] = f as u32;
        }
        scratch[full] = leaf.all_ones as u32;
        let u = residual_dense(&mut scratch, cfg.k) as usize;
        debug_assert_ne!(u, 1);
        per_u[u] += leaf.matrices;
    })?;
    Ok(ResidualCounts { per_u, stats })
}

fn merge_counts(mut acc: ResidualCounts, part: ResidualCounts) -> ResidualCounts {
    for (a, b) in acc.per_u.iter_mut().zip(part.per_u) {
        *a += b;
    }
    acc.stats.nodes_visited += part.stats.nodes_visited;
    acc.stats.feasible_count += part.stats.feasible_count;
    acc
}

/// Number of matrices a degree vector admits, Π C(t, d_i).
fn matrix_space(degrees: &[u32], t: u32) -> BigUint {
    let mut total = BigUint::one();
    for &di in degrees {
        total *= binomial(u64::from(t), u64::from(di));
    }
    total
}

fn check_degrees_fit(d: &DegreeVector, cfg: &SystemConfig) -> Result<()> {
    if let Some(&bad) = d.degrees().iter().find(|&&di| di > cfg.t) {
        return Err(Error::Precondition(format!(
            "degree {bad} exceeds the {} slots of the frame",
            cfg.t
        )));
    }
    Ok(())
}

/// P(u | d): the residual-count pmf conditioned on one degree vector,
/// summing occupancy probabilities over the feasible reduced vectors.
/// Covers u = 0 and u = 2..k; the entries sum to 1 exactly.
pub fn conditional_pmf(
    d: &DegreeVector,
    cfg: &SystemConfig,
    options: &EngineOptions,
) -> Result<BTreeMap<u32, Rat>> {
    assert_eq!(d.k(), cfg.k, "degree vector is for a different k");
    check_degrees_fit(d, cfg)?;

    let node_budget = NodeBudget::new(options.budget.max_nodes);
    let parts = partition_count(d, cfg);
    let counts = if parts > 1 {
        let pieces = run_indexed(options.parallelism, parts as usize, |i| {
            residual_counts(d.degrees(), cfg, &node_budget, Some((i as u32, i as u32)))
        })?;
        pieces
            .into_iter()
            .reduce(merge_counts)
            .expect("at least one partition")
    } else {
        residual_counts(d.degrees(), cfg, &node_budget, None)?
    };

    let denom = matrix_space(d.degrees(), cfg.t);
    let tally: BigUint = counts.per_u.iter().sum();
    assert_eq!(tally, denom, "every matrix must land in exactly one residual class");

    let mut pmf = BTreeMap::new();
    for u in std::iter::once(0).chain(2..=cfg.k) {
        pmf.insert(
            u,
            Rat::new(BigInt::from(counts.per_u[u as usize].clone()), BigInt::from(denom.clone())),
        );
    }
    Ok(pmf)
}

fn plr_from_pmf(pmf_per_u: &[Rat], k: u32) -> Rat {
    let mut plr = Rat::zero();
    for (u, p) in pmf_per_u.iter().enumerate().skip(2) {
        plr += Rat::new(BigInt::from(u), BigInt::from(k)) * p;
    }
    plr
}

/// Shared core of the exact and MLV evaluators: evaluate every degree-vector
/// class whose prior probability passes `threshold` (all of them when `None`).
fn weighted_plr(
    dist: &DegreeDistribution,
    cfg: &SystemConfig,
    threshold: Option<&Rat>,
    options: &EngineOptions,
    mode: Mode,
) -> Result<PlrReport> {
    let start = Instant::now();
    dist.validate_for_slots(cfg.t)?;
    if cfg.k > options.exact_k_cap {
        return Err(Error::TooLarge(format!(
            "k = {} exceeds the exact-mode cap of {} (override via EngineOptions::exact_k_cap)",
            cfg.k, options.exact_k_cap
        )));
    }

    let classes = degree_classes(dist, cfg.k);
    let kept: Vec<_> = match threshold {
        Some(th) => classes.iter().filter(|c| c.vector_probability >= *th).collect(),
        None => classes.iter().collect(),
    };
    let skipped = classes.len() - kept.len();

    let node_budget = NodeBudget::new(options.budget.max_nodes);
    let evaluated = run_indexed(options.parallelism, kept.len(), |i| {
        let counts = residual_counts(&kept[i].degrees, cfg, &node_budget, None)?;
        let denom = matrix_space(&kept[i].degrees, cfg.t);
        let tally: BigUint = counts.per_u.iter().sum();
        assert_eq!(tally, denom, "every matrix must land in exactly one residual class");
        Ok((counts, denom))
    })?;

    let k = cfg.k as usize;
    let mut pmf_per_u = vec![Rat::zero(); k + 1];
    let mut coverage = Rat::zero();
    let mut stats = EngineStats {
        classes_evaluated: kept.len() as u64,
        classes_skipped: skipped as u64,
        ..EngineStats::default()
    };
    for (class, (counts, denom)) in kept.iter().zip(&evaluated) {
        let mass = class.mass();
        coverage += &mass;
        let denom = BigInt::from(denom.clone());
        for (u, count) in counts.per_u.iter().enumerate() {
            if !count.is_zero() {
                pmf_per_u[u] += &mass * Rat::new(BigInt::from(count.clone()), denom.clone());
            }
        }
        stats.enumeration_nodes += counts.stats.nodes_visited;
        stats.feasible_vectors += counts.stats.feasible_count;
    }
    if threshold.is_none() {
        assert!(coverage.is_one(), "degree-class masses must tile the distribution");
    }

    let plr = plr_from_pmf(&pmf_per_u, cfg.k);
    let pmf = if kept.is_empty() {
        BTreeMap::new()
    } else {
        std::iter::once(0u32)
            .chain(2..=cfg.k)
            .map(|u| (u, pmf_per_u[u as usize].clone()))
            .collect()
    };
    let mut warnings = Vec::new();
    if coverage < Rat::one() {
        warnings.push(format!(
            "evaluated {} of the degree-vector probability mass; pmf and plr are lower bounds over the covered vectors",
            to_f64(&coverage)
        ));
    }
    stats.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(PlrReport { k: cfg.k, t: cfg.t, mode, pmf, plr, coverage, warnings, stats })
}

/// Exact packet-loss rate: Σ over all degree vectors of Π Λ_{d_i} · P(u|d),
/// evaluated as one occupancy walk per degree multiset.
pub fn exact_plr(
    dist: &DegreeDistribution,
    cfg: &SystemConfig,
    options: &EngineOptions,
) -> Result<PlrReport> {
    weighted_plr(dist, cfg, None, options, Mode::Exact)
}

/// Most-likely-vectors approximation: as [`exact_plr`] but skipping degree
/// vectors with Π Λ_{d_i} below the threshold. The report's `coverage` says
/// how much mass was evaluated; pmf and plr are lower bounds and are not
/// rescaled (see [`PlrReport::plr_renormalized`] for the conditional view).
pub fn mlv_plr(
    dist: &DegreeDistribution,
    cfg: &SystemConfig,
    mlv: &MlvConfig,
    options: &EngineOptions,
) -> Result<PlrReport> {
    weighted_plr(
        dist,
        cfg,
        Some(&mlv.threshold),
        options,
        Mode::Mlv { threshold: mlv.threshold.clone() },
    )
}

/// Brute-force verifier: enumerate every degree vector, every collision
/// matrix for it, peel each matrix directly, and average. Shares nothing
/// with the occupancy walk, so agreement is strong evidence of correctness.
/// Feasible only for toy frames (the matrix count is Π C(t, d_i) per vector).
pub fn oracle_plr(
    dist: &DegreeDistribution,
    cfg: &SystemConfig,
    options: &EngineOptions,
) -> Result<PlrReport> {
    let start = Instant::now();
    dist.validate_for_slots(cfg.t)?;

    let vectors: Vec<_> = enumerate_degree_vectors(dist, cfg.k).collect();
    let peeled = std::sync::atomic::AtomicU64::new(0);
    let budget = options.oracle_matrix_budget;

    let per_vector = run_indexed(options.parallelism, vectors.len(), |i| {
        let (d, _) = &vectors[i];
        let mut counts = vec![0u64; cfg.k as usize + 1];
        let mut total = 0u64;
        for matrix in enumerate_matrices(d, cfg.t) {
            if peeled.fetch_add(1, std::sync::atomic::Ordering::Relaxed) >= budget {
                return Err(Error::BudgetExceeded {
                    visited: peeled.load(std::sync::atomic::Ordering::Relaxed),
                    budget,
                    feasible_found: 0,
                });
            }
            let u = peel_matrix(&matrix, PeelPolicy::default());
            debug_assert_ne!(u, 1);
            counts[u as usize] += 1;
            total += 1;
        }
        Ok((counts, total))
    })?;

    let k = cfg.k as usize;
    let mut pmf_per_u = vec![Rat::zero(); k + 1];
    let mut mass_seen = Rat::zero();
    for ((_, prob), (counts, total)) in vectors.iter().zip(&per_vector) {
        mass_seen += prob;
        for (u, &count) in counts.iter().enumerate() {
            if count > 0 {
                pmf_per_u[u] += prob * Rat::new(BigInt::from(count), BigInt::from(*total));
            }
        }
    }
    assert!(mass_seen.is_one(), "degree vectors must tile the distribution");

    let plr = plr_from_pmf(&pmf_per_u, cfg.k);
    let pmf = std::iter::once(0u32)
        .chain(2..=cfg.k)
        .map(|u| (u, pmf_per_u[u as usize].clone()))
        .collect();
    let stats = EngineStats {
        classes_evaluated: vectors.len() as u64,
        matrices_peeled: peeled.into_inner(),
        wall_time_ms: start.elapsed().as_millis() as u64,
        ..EngineStats::default()
    };
    Ok(PlrReport {
        k: cfg.k,
        t: cfg.t,
        mode: Mode::Oracle,
        pmf,
        plr,
        coverage: Rat::one(),
        warnings: Vec::new(),
        stats,
    })
}

/// Size of the two exact-mode state spaces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityEstimate {
    /// |D| = D^k, the number of degree vectors.
    pub num_degree_vectors: BigUint,
    /// Weak-composition bound C(|Ĉ| + t − 1, t) on reduced vectors, with
    /// |Ĉ| = Σ_{n ≤ k−2} C(k, n).
    pub occupancy_bound: BigUint,
}

pub fn complexity_estimate(dist: &DegreeDistribution, cfg: &SystemConfig) -> ComplexityEstimate {
    let support = dist.support().len() as u32;
    let num_degree_vectors = BigUint::from(support).pow(cfg.k);
    let mut universe = BigUint::zero();
    for n in 0..=cfg.k.saturating_sub(2) {
        universe += binomial(u64::from(cfg.k), u64::from(n));
    }
    let universe: u64 = universe.try_into().unwrap_or(u64::MAX);
    let occupancy_bound = binomial(universe + u64::from(cfg.t) - 1, u64::from(cfg.t));
    ComplexityEstimate { num_degree_vectors, occupancy_bound }
}
