//! Occupancy vectors and their constrained enumeration.
//!
//! A collision matrix is characterized, up to column order, by how many times
//! each column pattern appears. The counts of the k+1 heaviest patterns
//! (weight k-1 and k) are forced by linear constraints once the counts of the
//! lighter patterns are fixed: exactly t columns exist, and row i must carry
//! d_i ones. This module solves that completion in closed form, decides
//! feasibility, scores a class with its exact probability, and enumerates all
//! feasible reduced vectors with constraint-aware pruning.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;

use crate::combin::{FACT_U128, MAX_FACT_U128};
use crate::config::SystemConfig;
use crate::degree::DegreeVector;
use crate::pattern::ColumnPattern;
use crate::rational::Rat;
use crate::{Error, Result};

/// Pattern counts of a full collision-matrix column multiset (Σ counts = t).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyVector {
    counts: BTreeMap<ColumnPattern, u32>,
}

impl OccupancyVector {
    /// Zero-count entries are dropped so equal multisets compare equal.
    pub fn from_counts(counts: BTreeMap<ColumnPattern, u32>) -> Self {
        let counts = counts.into_iter().filter(|&(_, n)| n > 0).collect();
        OccupancyVector { counts }
    }

    pub fn get(&self, pattern: ColumnPattern) -> u32 {
        self.counts.get(&pattern).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<ColumnPattern, u32> {
        &self.counts
    }

    /// Total number of columns represented.
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&n| u64::from(n)).sum()
    }

    /// Row sum of the implied matrix: how many columns carry user i.
    pub fn row_sum(&self, user: u32) -> u64 {
        self.counts
            .iter()
            .filter(|(p, _)| p.contains(user))
            .map(|(_, &n)| u64::from(n))
            .sum()
    }
}

/// Pattern counts restricted to weights 0..=k-2 (the reduced universe Ĉ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedOccupancy {
    k: u32,
    counts: BTreeMap<ColumnPattern, u32>,
}

impl ReducedOccupancy {
    pub fn new(k: u32, counts: BTreeMap<ColumnPattern, u32>) -> Result<Self> {
        for (pattern, _) in counts.iter() {
            if pattern.mask() >> k != 0 {
                return Err(Error::Config(format!(
                    "pattern {} does not fit {k} users",
                    pattern.mask()
                )));
            }
            if pattern.weight() + 2 > k {
                return Err(Error::Config(format!(
                    "pattern {} has weight {} — reduced vectors only hold weights up to k-2 = {}",
                    pattern.bits_string(k),
                    pattern.weight(),
                    k.saturating_sub(2)
                )));
            }
        }
        let counts = counts.into_iter().filter(|&(_, n)| n > 0).collect();
        Ok(ReducedOccupancy { k, counts })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn get(&self, pattern: ColumnPattern) -> u32 {
        self.counts.get(&pattern).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<ColumnPattern, u32> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&n| u64::from(n)).sum()
    }
}

/// The forced counts of the k+1 heavy patterns, f(n̂, d).
///
/// `one_clear[i]` is the count of the weight-(k-1) pattern whose only clear
/// bit is user i; `all_ones` is the count of the full column. The values are
/// kept signed: a negative entry is exactly what makes a completion
/// infeasible, and seeing it helps debugging.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub one_clear: Vec<i64>,
    pub all_ones: i64,
    pub feasible: bool,
}

impl Completion {
    pub fn k(&self) -> u32 {
        self.one_clear.len() as u32
    }
}

/// Solve the k+1 linear constraints for the heavy-pattern counts.
///
/// With T̂ = Σ n̂, a_i = Σ over patterns containing i of n̂_c, A = Σ a_i and
/// S = Σ d_i, the unique solution is
///
/// ```text
/// f_all  = S − A − (k−1)(t − T̂)
/// f_i    = a_i + (t − T̂) − d_i
/// ```
///
/// (the weight-(k-1) patterns and the full column together fill the t − T̂
/// remaining slots). Feasible iff every count is non-negative; integrality is
/// automatic.
pub fn complete(reduced: &ReducedOccupancy, d: &DegreeVector, cfg: &SystemConfig) -> Completion {
    let k = cfg.k;
    assert_eq!(reduced.k(), k, "reduced vector is for a different k");
    assert_eq!(d.k(), k, "degree vector is for a different k");
    let t = i64::from(cfg.t);
    let t_hat = reduced.total() as i64;
    assert!(t_hat <= t, "reduced vector holds more than t columns");

    let s = d.total_replicas() as i64;
    let mut a = vec![0i64; k as usize];
    for (pattern, &count) in reduced.counts() {
        for i in 0..k {
            if pattern.contains(i) {
                a[i as usize] += i64::from(count);
            }
        }
    }
    let a_sum: i64 = a.iter().sum();

    let all_ones = s - a_sum - (i64::from(k) - 1) * (t - t_hat);
    let one_clear: Vec<i64> = (0..k as usize)
        .map(|i| a[i] + (t - t_hat) - i64::from(d.degrees()[i]))
        .collect();
    let feasible = all_ones >= 0 && one_clear.iter().all(|&f| f >= 0);
    Completion { one_clear, all_ones, feasible }
}

/// Merge a reduced vector with its completion into the full occupancy vector.
pub fn assemble(reduced: &ReducedOccupancy, comp: &Completion) -> Result<OccupancyVector> {
    if !comp.feasible {
        return Err(Error::Precondition(
            "cannot assemble an infeasible completion".into(),
        ));
    }
    let k = comp.k();
    assert_eq!(reduced.k(), k, "completion is for a different k");
    let full = (1u32 << k) - 1;
    let mut counts = reduced.counts().clone();
    for (i, &f) in comp.one_clear.iter().enumerate() {
        if f > 0 {
            *counts.entry(ColumnPattern::from_mask(full & !(1 << i))).or_insert(0) += f as u32;
        }
    }
    if comp.all_ones > 0 {
        *counts.entry(ColumnPattern::from_mask(full)).or_insert(0) += comp.all_ones as u32;
    }
    Ok(OccupancyVector::from_counts(counts))
}

/// P(n̂ | d): the fraction of the Π C(t, d_i) equally likely collision
/// matrices whose column multiset is [n̂, f]. Zero for infeasible input.
pub fn occupancy_probability(
    reduced: &ReducedOccupancy,
    comp: &Completion,
    d: &DegreeVector,
    cfg: &SystemConfig,
) -> Rat {
    if !comp.feasible {
        return Rat::new(0.into(), 1.into());
    }
    let mut class_size = crate::combin::factorial(u64::from(cfg.t));
    for &count in reduced.counts().values() {
        class_size /= crate::combin::factorial(u64::from(count));
    }
    for &f in &comp.one_clear {
        class_size /= crate::combin::factorial(f as u64);
    }
    class_size /= crate::combin::factorial(comp.all_ones as u64);

    let mut total = num_bigint::BigUint::from(1u32);
    for &di in d.degrees() {
        total *= crate::combin::binomial(u64::from(cfg.t), u64::from(di));
    }
    Rat::new(BigInt::from(class_size), BigInt::from(total))
}

/// Cap on DFS nodes, shared across workers when the engine splits work.
pub(crate) struct NodeBudget {
    limit: u64,
    used: AtomicU64,
}

impl NodeBudget {
    pub fn new(limit: u64) -> Self {
        NodeBudget { limit, used: AtomicU64::new(0) }
    }

    /// Account for one visited node; false once the budget is exhausted.
    fn consume(&self) -> bool {
        self.used.fetch_add(1, Ordering::Relaxed) < self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }
}

/// Enumeration resource cap. The default is high enough for every frame this
/// crate is meant for; oversized inputs abort predictably instead of hanging.
#[derive(Clone, Copy, Debug)]
pub struct EnumBudget {
    pub max_nodes: u64,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget { max_nodes: 1_000_000_000 }
    }
}

/// Progress counters for one enumeration call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub nodes_visited: u64,
    pub feasible_count: u64,
}

/// One feasible leaf in the dense walk, borrowed from walker scratch space.
pub(crate) struct DenseLeaf<'a> {
    /// Counts over all 2^k masks; only reduced patterns are non-zero.
    pub reduced_counts: &'a [u32],
    /// f_i values (all non-negative at a feasible leaf).
    pub one_clear: &'a [i64],
    pub all_ones: i64,
    /// Number of collision matrices in this class, t!/(Π n̂_c! Π f_i!).
    pub matrices: u128,
}

struct Walker<'a> {
    k: usize,
    t: i64,
    s: i64,
    d: Vec<i64>,
    /// Reduced patterns in canonical (ascending mask) order.
    reduced: Vec<u32>,
    bits: Vec<Vec<usize>>,
    cobits: Vec<Vec<usize>>,
    /// suffix_gain[q] = (k-1) - min weight among reduced[q..]; 0 at the end.
    /// Each column added from position q onward raises f_all by at most this.
    suffix_gain: Vec<i64>,
    counts: Vec<u32>,
    a: Vec<i64>,
    t_hat: i64,
    a_sum: i64,
    one_clear: Vec<i64>,
    budget: &'a NodeBudget,
    stats: EnumStats,
    zero_range: Option<(i64, i64)>,
}

impl<'a> Walker<'a> {
    fn budget_error(&self) -> Error {
        Error::BudgetExceeded {
            visited: self.budget.used(),
            budget: self.budget.limit(),
            feasible_found: self.stats.feasible_count,
        }
    }

    fn recurse(&mut self, q: usize, denom: u128, visit: &mut dyn FnMut(&DenseLeaf)) -> Result<()> {
        if !self.budget.consume() {
            return Err(self.budget_error());
        }
        self.stats.nodes_visited += 1;

        if q == self.reduced.len() {
            // Leaf: the completion must be non-negative in every entry.
            let g = self.s - self.a_sum - (self.k as i64 - 1) * (self.t - self.t_hat);
            if g < 0 {
                return Ok(());
            }
            let mut leaf_denom = denom * FACT_U128[g as usize];
            for i in 0..self.k {
                let h = self.a[i] + (self.t - self.t_hat) - self.d[i];
                if h < 0 {
                    return Ok(());
                }
                self.one_clear[i] = h;
                leaf_denom *= FACT_U128[h as usize];
            }
            let matrices = FACT_U128[self.t as usize] / leaf_denom;
            self.stats.feasible_count += 1;
            visit(&DenseLeaf {
                reduced_counts: &self.counts,
                one_clear: &self.one_clear,
                all_ones: g,
                matrices,
            });
            return Ok(());
        }

        let mask = self.reduced[q] as usize;
        let w = self.bits[q].len() as i64;

        // Largest count of this pattern that can still lead to a feasible
        // leaf. Each bound is a necessary condition because a_i only grows
        // and f_i = a_i + (t - T̂) - d_i only shrinks as columns are added.
        let mut hi = self.t - self.t_hat;
        for &i in &self.bits[q] {
            hi = hi.min(self.d[i] - self.a[i]);
        }
        for &i in &self.cobits[q] {
            hi = hi.min(self.a[i] + (self.t - self.t_hat) - self.d[i]);
        }
        if w > 0 {
            hi = hi.min((self.s - self.a_sum) / w);
        }
        let (lo, hi) = match (q, self.zero_range) {
            (0, Some((lo, cap))) => (lo, hi.min(cap)),
            _ => (0, hi),
        };

        let mut applied = 0i64;
        for x in 0..=hi {
            if x > 0 {
                self.t_hat += 1;
                for &i in &self.bits[q] {
                    self.a[i] += 1;
                }
                self.a_sum += w;
                self.counts[mask] += 1;
                applied = x;
            }
            if x < lo {
                continue;
            }
            // Even filling all remaining slots with the lightest remaining
            // pattern cannot push f_all above this; prune if it stays short.
            let g_now = self.s - self.a_sum - (self.k as i64 - 1) * (self.t - self.t_hat);
            if g_now + self.suffix_gain[q + 1] * (self.t - self.t_hat) >= 0 {
                self.recurse(q + 1, denom * FACT_U128[x as usize], visit)?;
            }
        }
        if applied > 0 {
            self.t_hat -= applied;
            for &i in &self.bits[q] {
                self.a[i] -= applied;
            }
            self.a_sum -= w * applied;
            self.counts[mask] = 0;
        }
        Ok(())
    }
}

/// Dense enumeration core shared by the public API and the loss-rate engine.
/// `zero_range` restricts the zero-column count for partitioned runs.
pub(crate) fn enumerate_dense(
    degrees: &[u32],
    t: u32,
    budget: &NodeBudget,
    zero_range: Option<(u32, u32)>,
    visit: &mut dyn FnMut(&DenseLeaf),
) -> Result<EnumStats> {
    let k = degrees.len();
    assert!(k >= 1, "need at least one user");
    if k > 20 {
        return Err(Error::TooLarge(format!("dense enumeration needs k <= 20, got {k}")));
    }
    if t as usize > MAX_FACT_U128 {
        return Err(Error::TooLarge(format!(
            "exact enumeration supports t <= {MAX_FACT_U128}, got {t}"
        )));
    }

    let reduced: Vec<u32> = (0..1u32 << k)
        .filter(|m| m.count_ones() as usize + 2 <= k)
        .collect();
    let bits: Vec<Vec<usize>> = reduced
        .iter()
        .map(|&m| (0..k).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    let cobits: Vec<Vec<usize>> = reduced
        .iter()
        .map(|&m| (0..k).filter(|&i| m >> i & 1 == 0).collect())
        .collect();
    let mut suffix_gain = vec![0i64; reduced.len() + 1];
    let mut min_weight = i64::MAX;
    for q in (0..reduced.len()).rev() {
        min_weight = min_weight.min(i64::from(reduced[q].count_ones()));
        suffix_gain[q] = (k as i64 - 1) - min_weight;
    }

    let mut walker = Walker {
        k,
        t: i64::from(t),
        s: degrees.iter().map(|&d| i64::from(d)).sum(),
        d: degrees.iter().map(|&d| i64::from(d)).collect(),
        reduced,
        bits,
        cobits,
        suffix_gain,
        counts: vec![0u32; 1 << k],
        a: vec![0i64; k],
        t_hat: 0,
        a_sum: 0,
        one_clear: vec![0i64; k],
        budget,
        stats: EnumStats::default(),
        zero_range: zero_range.map(|(lo, hi)| (i64::from(lo), i64::from(hi))),
    };
    walker.recurse(0, 1, visit)?;
    Ok(walker.stats)
}

fn leaf_to_sparse(k: u32, leaf: &DenseLeaf) -> (ReducedOccupancy, Completion) {
    let mut counts = BTreeMap::new();
    for (mask, &count) in leaf.reduced_counts.iter().enumerate() {
        if count > 0 {
            counts.insert(ColumnPattern::from_mask(mask as u32), count);
        }
    }
    let reduced = ReducedOccupancy::new(k, counts).expect("walker only sets reduced patterns");
    let comp = Completion {
        one_clear: leaf.one_clear.to_vec(),
        all_ones: leaf.all_ones,
        feasible: true,
    };
    (reduced, comp)
}

/// Stream every feasible reduced occupancy vector for (d, cfg), i.e. every
/// n̂ whose completion is non-negative, exactly once. A degree vector with
/// some d_i > t simply yields nothing.
pub fn enumerate_feasible<F>(
    d: &DegreeVector,
    cfg: &SystemConfig,
    budget: &EnumBudget,
    mut visit: F,
) -> Result<EnumStats>
where
    F: FnMut(&ReducedOccupancy, &Completion),
{
    assert_eq!(d.k(), cfg.k, "degree vector is for a different k");
    let node_budget = NodeBudget::new(budget.max_nodes);
    enumerate_dense(d.degrees(), cfg.t, &node_budget, None, &mut |leaf| {
        let (reduced, comp) = leaf_to_sparse(cfg.k, leaf);
        visit(&reduced, &comp);
    })
}

/// Collect instead of streaming; convenient for tests and small frames.
pub fn collect_feasible(
    d: &DegreeVector,
    cfg: &SystemConfig,
    budget: &EnumBudget,
) -> Result<Vec<(ReducedOccupancy, Completion)>> {
    let mut out = Vec::new();
    enumerate_feasible(d, cfg, budget, |r, c| out.push((r.clone(), c.clone())))?;
    Ok(out)
}

/// Number of disjoint subtrees [`enumerate_feasible_partition`] accepts:
/// one per possible zero-column count (a single trivial partition when the
/// reduced universe is empty, i.e. k ≤ 1).
pub fn partition_count(d: &DegreeVector, cfg: &SystemConfig) -> u32 {
    assert_eq!(d.k(), cfg.k, "degree vector is for a different k");
    if cfg.k <= 1 {
        return 1;
    }
    let max_degree = d.degrees().iter().copied().max().unwrap_or(0);
    if max_degree > cfg.t {
        return 0;
    }
    // The zero column can appear at most t - max(d_i) times: every empty slot
    // leaves the busiest user's replicas to fit in the remaining columns.
    cfg.t - max_degree + 1
}

/// Enumerate the subtree in which the zero column appears exactly `index`
/// times. The union over `0..partition_count` equals [`enumerate_feasible`],
/// with pairwise-disjoint outputs, so workers can split the walk.
pub fn enumerate_feasible_partition<F>(
    d: &DegreeVector,
    cfg: &SystemConfig,
    budget: &EnumBudget,
    index: u32,
    mut visit: F,
) -> Result<EnumStats>
where
    F: FnMut(&ReducedOccupancy, &Completion),
{
    assert_eq!(d.k(), cfg.k, "degree vector is for a different k");
    let node_budget = NodeBudget::new(budget.max_nodes);
    let range = if cfg.k <= 1 { None } else { Some((index, index)) };
    enumerate_dense(d.degrees(), cfg.t, &node_budget, range, &mut |leaf| {
        let (reduced, comp) = leaf_to_sparse(cfg.k, leaf);
        visit(&reduced, &comp);
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;
    use num_traits::{One, Zero};

    fn cfg(k: u32, t: u32) -> SystemConfig {
        SystemConfig::new(k, t).unwrap()
    }

    fn dv(degrees: &[u32]) -> DegreeVector {
        DegreeVector::new(degrees.to_vec()).unwrap()
    }

    fn reduced(k: u32, entries: &[(u32, u32)]) -> ReducedOccupancy {
        let counts = entries
            .iter()
            .map(|&(mask, n)| (ColumnPattern::from_mask(mask), n))
            .collect();
        ReducedOccupancy::new(k, counts).unwrap()
    }

    fn rat(s: &str) -> Rat {
        parse_rational(s).unwrap()
    }

    #[test]
    fn completion_of_the_worked_three_user_matrix() {
        // k=3, t=4, d=[2,2,3], n̂ = {[1 0 0]: 1}: the remaining columns are
        // forced to two [0 1 1], one [1 0 1], no [1 1 0], no [1 1 1].
        let comp = complete(&reduced(3, &[(0b001, 1)]), &dv(&[2, 2, 3]), &cfg(3, 4));
        assert!(comp.feasible);
        assert_eq!(comp.one_clear, vec![2, 1, 0]);
        assert_eq!(comp.all_ones, 0);
    }

    #[test]
    fn completion_forced_full_frame() {
        // k=2, t=2, d=[2,2]: both users in both slots.
        let comp = complete(&reduced(2, &[]), &dv(&[2, 2]), &cfg(2, 2));
        assert!(comp.feasible);
        assert_eq!(comp.one_clear, vec![0, 0]);
        assert_eq!(comp.all_ones, 2);
    }

    #[test]
    fn completion_detects_infeasibility() {
        // k=3, t=4, d=[1,1,1]: three lone replicas cannot fill four heavy columns.
        let comp = complete(&reduced(3, &[]), &dv(&[1, 1, 1]), &cfg(3, 4));
        assert!(!comp.feasible);
        assert_eq!(comp.all_ones, -5);
    }

    #[test]
    fn enumeration_two_user_classes() {
        // k=2, t=2, d=[1,1]: either the two singletons, or a collision plus
        // an empty slot.
        let classes = collect_feasible(&dv(&[1, 1]), &cfg(2, 2), &EnumBudget::default()).unwrap();
        assert_eq!(classes.len(), 2);
        let collide = &classes[1];
        assert_eq!(collide.0.get(ColumnPattern::ZERO), 1);
        assert_eq!(collide.1.all_ones, 1);
        let separate = &classes[0];
        assert_eq!(separate.0.total(), 0);
        assert_eq!(separate.1.one_clear, vec![1, 1]);
        assert_eq!(separate.1.all_ones, 0);
    }

    #[test]
    fn enumeration_counts_overlap_classes() {
        // k=2, t=3, d=[2,2]: the two slot choices overlap in 1 or 2 slots.
        let classes = collect_feasible(&dv(&[2, 2]), &cfg(2, 3), &EnumBudget::default()).unwrap();
        assert_eq!(classes.len(), 2);
    }

    #[test]
    fn enumeration_is_empty_when_a_degree_exceeds_the_frame() {
        let classes = collect_feasible(&dv(&[3, 1]), &cfg(2, 2), &EnumBudget::default()).unwrap();
        assert!(classes.is_empty());
        assert_eq!(partition_count(&dv(&[3, 1]), &cfg(2, 2)), 0);
    }

    #[test]
    fn probability_of_the_worked_matrix_class() {
        let d = dv(&[2, 2, 3]);
        let system = cfg(3, 4);
        let n_hat = reduced(3, &[(0b001, 1)]);
        let comp = complete(&n_hat, &d, &system);
        // 12 of the C(4,2)C(4,2)C(4,3) = 144 matrices share the class.
        assert_eq!(occupancy_probability(&n_hat, &comp, &d, &system), rat("1/12"));
    }

    #[test]
    fn probability_of_forced_and_even_classes() {
        let system = cfg(2, 2);
        let both = dv(&[2, 2]);
        let comp = complete(&reduced(2, &[]), &both, &system);
        assert_eq!(occupancy_probability(&reduced(2, &[]), &comp, &both, &system), Rat::one());

        let singles = dv(&[1, 1]);
        let comp = complete(&reduced(2, &[]), &singles, &system);
        assert_eq!(
            occupancy_probability(&reduced(2, &[]), &comp, &singles, &system),
            rat("1/2")
        );
    }

    #[test]
    fn infeasible_class_has_probability_zero() {
        let d = dv(&[1, 1, 1]);
        let system = cfg(3, 4);
        let n_hat = reduced(3, &[]);
        let comp = complete(&n_hat, &d, &system);
        assert_eq!(occupancy_probability(&n_hat, &comp, &d, &system), Rat::zero());
        assert!(assemble(&n_hat, &comp).is_err());
    }

    #[test]
    fn assemble_reproduces_the_worked_occupancy() {
        let d = dv(&[2, 2, 3]);
        let system = cfg(3, 4);
        let n_hat = reduced(3, &[(0b001, 1)]);
        let comp = complete(&n_hat, &d, &system);
        let full = assemble(&n_hat, &comp).unwrap();
        assert_eq!(full.get(ColumnPattern::from_mask(0b001)), 1);
        assert_eq!(full.get(ColumnPattern::from_mask(0b110)), 2);
        assert_eq!(full.get(ColumnPattern::from_mask(0b101)), 1);
        assert_eq!(full.total(), 4);
        // Row sums must reproduce the degrees.
        for (i, &di) in d.degrees().iter().enumerate() {
            assert_eq!(full.row_sum(i as u32), u64::from(di));
        }
    }

    #[test]
    fn assemble_small_forced_cases() {
        let system = cfg(2, 2);
        let both = dv(&[2, 2]);
        let comp = complete(&reduced(2, &[]), &both, &system);
        let full = assemble(&reduced(2, &[]), &comp).unwrap();
        assert_eq!(full.get(ColumnPattern::from_mask(0b11)), 2);

        let singles = dv(&[1, 1]);
        let comp = complete(&reduced(2, &[]), &singles, &system);
        let full = assemble(&reduced(2, &[]), &comp).unwrap();
        assert_eq!(full.get(ColumnPattern::from_mask(0b01)), 1);
        assert_eq!(full.get(ColumnPattern::from_mask(0b10)), 1);
    }

    #[test]
    fn partition_of_unity_on_small_frames() {
        // Σ P(n̂|d) over the feasible set is exactly 1 whenever any matrix
        // exists at all (d_i ≤ t).
        for k in 1..=4u32 {
            for t in 1..=4u32 {
                let system = cfg(k, t);
                let mut degrees = vec![1u32; k as usize];
                loop {
                    let d = dv(&degrees);
                    let mut sum = Rat::zero();
                    enumerate_feasible(&d, &system, &EnumBudget::default(), |r, c| {
                        sum += occupancy_probability(r, c, &d, &system);
                    })
                    .unwrap();
                    assert_eq!(sum, Rat::one(), "k={k} t={t} d={degrees:?}");

                    let mut pos = 0;
                    loop {
                        if pos == degrees.len() {
                            break;
                        }
                        degrees[pos] += 1;
                        if degrees[pos] <= t {
                            break;
                        }
                        degrees[pos] = 1;
                        pos += 1;
                    }
                    if pos == degrees.len() {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn assembled_vectors_have_correct_row_sums() {
        let system = cfg(4, 5);
        for degrees in [[1, 2, 2, 3], [2, 2, 2, 2], [1, 1, 3, 3], [3, 3, 3, 3]] {
            let d = dv(&degrees);
            enumerate_feasible(&d, &system, &EnumBudget::default(), |r, c| {
                let full = assemble(r, c).unwrap();
                assert_eq!(full.total(), 5);
                for (i, &di) in d.degrees().iter().enumerate() {
                    assert_eq!(full.row_sum(i as u32), u64::from(di));
                }
            })
            .unwrap();
        }
    }

    #[test]
    fn completion_is_permutation_invariant() {
        // Permuting users in d and in the pattern bits permutes f the same way.
        let system = cfg(4, 6);
        let d = dv(&[1, 2, 2, 3]);
        let perm = [2usize, 0, 3, 1]; // new index of each old user
        let permuted_d = {
            let mut out = vec![0u32; 4];
            for (old, &new) in perm.iter().enumerate() {
                out[new] = d.degrees()[old];
            }
            dv(&out)
        };
        let permute_mask = |mask: u32| -> u32 {
            let mut out = 0;
            for (old, &new) in perm.iter().enumerate() {
                if mask >> old & 1 == 1 {
                    out |= 1 << new;
                }
            }
            out
        };
        enumerate_feasible(&d, &system, &EnumBudget::default(), |r, c| {
            let permuted_counts = r
                .counts()
                .iter()
                .map(|(p, &n)| (ColumnPattern::from_mask(permute_mask(p.mask())), n))
                .collect();
            let permuted_r = ReducedOccupancy::new(4, permuted_counts).unwrap();
            let permuted_c = complete(&permuted_r, &permuted_d, &system);
            assert_eq!(permuted_c.feasible, c.feasible);
            assert_eq!(permuted_c.all_ones, c.all_ones);
            for (old, &new) in perm.iter().enumerate() {
                assert_eq!(permuted_c.one_clear[new], c.one_clear[old]);
            }
        })
        .unwrap();
    }

    #[test]
    fn partitions_cover_the_enumeration_exactly_once() {
        let system = cfg(4, 6);
        let budget = EnumBudget::default();
        for degrees in [[2u32, 2, 3, 3], [1, 1, 2, 4], [2, 3, 3, 3]] {
            let d = dv(&degrees);
            let full = collect_feasible(&d, &system, &budget).unwrap();
            let mut merged = Vec::new();
            for index in 0..partition_count(&d, &system) {
                enumerate_feasible_partition(&d, &system, &budget, index, |r, c| {
                    merged.push((r.clone(), c.clone()));
                })
                .unwrap();
            }
            merged.sort_by(|a, b| a.0.counts().cmp(b.0.counts()));
            let mut want = full.clone();
            want.sort_by(|a, b| a.0.counts().cmp(b.0.counts()));
            assert_eq!(merged.len(), full.len());
            assert_eq!(merged, want);
        }
        // k=1 has a single trivial partition.
        let one = dv(&[2]);
        let sys1 = cfg(1, 3);
        assert_eq!(partition_count(&one, &sys1), 1);
        let mut seen = 0;
        enumerate_feasible_partition(&one, &sys1, &budget, 0, |_, _| seen += 1).unwrap();
        assert_eq!(seen, 1);
    }

    #[test]
    fn budget_exhaustion_aborts_with_diagnostics() {
        let err = collect_feasible(&dv(&[2, 2, 3, 3]), &cfg(4, 6), &EnumBudget { max_nodes: 10 })
            .unwrap_err();
        match err {
            Error::BudgetExceeded { visited, budget, .. } => {
                assert!(visited >= 10);
                assert_eq!(budget, 10);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn reduced_vectors_reject_heavy_patterns() {
        let heavy = [(0b011u32, 1u32)];
        assert!(ReducedOccupancy::new(2, heavy.iter().map(|&(m, n)| (ColumnPattern::from_mask(m), n)).collect()).is_err());
        assert!(ReducedOccupancy::new(3, [(ColumnPattern::from_mask(0b111), 1)].into_iter().collect()).is_err());
        assert!(ReducedOccupancy::new(2, [(ColumnPattern::from_mask(0b100), 1)].into_iter().collect()).is_err());
    }

    #[test]
    fn enumeration_count_stays_under_stars_and_bars_bound() {
        // k=4, t=6: |Ĉ| = 11, so the raw weak-composition bound is C(16,6).
        let d = dv(&[2, 2, 3, 3]);
        let stats = enumerate_feasible(&d, &cfg(4, 6), &EnumBudget::default(), |_, _| {}).unwrap();
        assert!(stats.feasible_count > 0);
        assert!(stats.feasible_count <= 8008);
    }
}
