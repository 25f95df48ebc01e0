//! Successive interference cancellation as iterative peeling.
//!
//! A user is decodable once some slot carries only that user. Subtracting a
//! decoded user's replicas removes its bit from every column, which may expose
//! new singletons. Peeling to a fixpoint leaves a stopping set; its size u is
//! the number of unresolved users and does not depend on the peel order. The
//! same process is implemented on occupancy vectors (merging pattern counts)
//! and directly on matrices, so each can check the other.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::degree::DegreeVector;
use crate::occupancy::OccupancyVector;
use crate::pattern::ColumnPattern;
use crate::{Error, Result};

/// Tie-break rule when several users are simultaneously peelable. The final
/// residual is policy-independent; the rule only shapes the trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PeelPolicy {
    #[default]
    SmallestIndex,
    LargestIndex,
    Random {
        seed: u64,
    },
}

/// Occupancy vector plus the set of already-decoded users.
#[derive(Clone, Debug)]
pub struct PeelState {
    k: u32,
    counts: BTreeMap<ColumnPattern, u32>,
    decoded: u32,
}

impl PeelState {
    pub fn new(occupancy: &OccupancyVector, k: u32) -> Result<Self> {
        if k == 0 || k > 20 {
            return Err(Error::Config(format!("peeling needs 1 <= k <= 20, got {k}")));
        }
        for (pattern, _) in occupancy.counts() {
            if pattern.mask() >> k != 0 {
                return Err(Error::Config(format!(
                    "pattern {} does not fit {k} users",
                    pattern.mask()
                )));
            }
        }
        Ok(PeelState { k, counts: occupancy.counts().clone(), decoded: 0 })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn occupancy(&self) -> OccupancyVector {
        OccupancyVector::from_counts(self.counts.clone())
    }

    pub fn is_decoded(&self, user: u32) -> bool {
        user < self.k && self.decoded >> user & 1 == 1
    }

    pub fn undecoded_count(&self) -> u32 {
        self.k - self.decoded.count_ones()
    }

    /// Undecoded users that currently own a singleton column, ascending.
    pub fn peelable_users(&self) -> Vec<u32> {
        (0..self.k)
            .filter(|&m| {
                self.decoded >> m & 1 == 0
                    && self.counts.get(&ColumnPattern::from_mask(1 << m)).copied().unwrap_or(0) > 0
            })
            .collect()
    }
}

/// Decode `user` and cancel its replicas: every pattern containing the user
/// loses that bit, merging into the lighter pattern. Requires a singleton
/// column for the user.
pub fn peel_step(state: &mut PeelState, user: u32) -> Result<()> {
    if user >= state.k {
        return Err(Error::Precondition(format!(
            "user {user} out of range for k = {}",
            state.k
        )));
    }
    if state.is_decoded(user) {
        return Err(Error::Precondition(format!("user {user} is already decoded")));
    }
    let singleton = ColumnPattern::from_mask(1 << user);
    if state.counts.get(&singleton).copied().unwrap_or(0) == 0 {
        return Err(Error::Precondition(format!(
            "user {user} has no singleton column to decode from"
        )));
    }

    let bit = 1u32 << user;
    let mut merged = BTreeMap::new();
    for (pattern, &count) in &state.counts {
        let mask = pattern.mask() & !bit;
        *merged.entry(ColumnPattern::from_mask(mask)).or_insert(0) += count;
    }
    merged.retain(|_, count| *count > 0);
    state.counts = merged;
    state.decoded |= bit;
    Ok(())
}

/// Result of peeling to a fixpoint: u unresolved users, optionally the peel
/// order that was taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualOutcome {
    pub u: u32,
    pub trace: Option<Vec<u32>>,
}

fn pick(peelable: &[u32], policy: PeelPolicy, rng: &mut Option<ChaCha8Rng>) -> u32 {
    match policy {
        PeelPolicy::SmallestIndex => peelable[0],
        PeelPolicy::LargestIndex => *peelable.last().unwrap(),
        PeelPolicy::Random { .. } => {
            let rng = rng.as_mut().unwrap();
            peelable[rng.random_range(0..peelable.len())]
        }
    }
}

fn run_residual(
    occupancy: &OccupancyVector,
    k: u32,
    policy: PeelPolicy,
    want_trace: bool,
) -> Result<ResidualOutcome> {
    let mut state = PeelState::new(occupancy, k)?;
    let mut rng = match policy {
        PeelPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut trace = Vec::new();
    loop {
        let peelable = state.peelable_users();
        if peelable.is_empty() {
            break;
        }
        let user = pick(&peelable, policy, &mut rng);
        peel_step(&mut state, user).expect("peelable user must accept a peel step");
        if want_trace {
            trace.push(user);
        }
    }
    Ok(ResidualOutcome { u: state.undecoded_count(), trace: want_trace.then_some(trace) })
}

/// Peel an occupancy vector to its stopping set and count unresolved users.
pub fn residual(occupancy: &OccupancyVector, k: u32, policy: PeelPolicy) -> Result<ResidualOutcome> {
    run_residual(occupancy, k, policy, false)
}

/// Same as [`residual`] but records the peel order (costs allocations).
pub fn residual_with_trace(
    occupancy: &OccupancyVector,
    k: u32,
    policy: PeelPolicy,
) -> Result<ResidualOutcome> {
    run_residual(occupancy, k, policy, true)
}

/// Residual on a dense count table indexed by pattern mask (length 2^k).
/// Used in inner loops where building maps per matrix would dominate.
pub(crate) fn residual_dense(counts: &mut [u32], k: u32) -> u32 {
    debug_assert_eq!(counts.len(), 1 << k);
    let mut undecoded = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
    loop {
        let mut progressed = false;
        for m in 0..k {
            let bit = 1u32 << m;
            if undecoded & bit != 0 && counts[bit as usize] > 0 {
                for mask in 0..counts.len() {
                    if mask & bit as usize != 0 && counts[mask] > 0 {
                        counts[mask & !(bit as usize)] += counts[mask];
                        counts[mask] = 0;
                    }
                }
                undecoded &= !bit;
                progressed = true;
            }
        }
        if !progressed {
            return undecoded.count_ones();
        }
    }
}

/// A k × t collision matrix stored column-wise; each column is a user bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionMatrix {
    k: u32,
    cols: Vec<u32>,
}

impl CollisionMatrix {
    pub fn new(k: u32, cols: Vec<u32>) -> Result<Self> {
        if k == 0 || k > 20 {
            return Err(Error::Config(format!("matrix needs 1 <= k <= 20, got {k}")));
        }
        for &col in &cols {
            if col >> k != 0 {
                return Err(Error::Config(format!("column {col:#b} does not fit {k} users")));
            }
        }
        Ok(CollisionMatrix { k, cols })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn t(&self) -> u32 {
        self.cols.len() as u32
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    /// Replicas per user (row sums).
    pub fn row_degrees(&self) -> Vec<u32> {
        (0..self.k)
            .map(|i| self.cols.iter().filter(|&&c| c >> i & 1 == 1).count() as u32)
            .collect()
    }

    /// Forget column order: how often does each pattern occur.
    pub fn occupancy(&self) -> OccupancyVector {
        let mut counts = BTreeMap::new();
        for &col in &self.cols {
            *counts.entry(ColumnPattern::from_mask(col)).or_insert(0) += 1;
        }
        OccupancyVector::from_counts(counts)
    }
}

/// Run SIC on the matrix itself: find a weight-one column, erase that user's
/// row, repeat. Returns the number of unresolved users.
pub fn peel_matrix(matrix: &CollisionMatrix, policy: PeelPolicy) -> u32 {
    let k = matrix.k;
    let mut cols = matrix.cols.clone();
    let mut rng = match policy {
        PeelPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut undecoded = (1u32 << k) - 1;
    loop {
        let mut peelable: Vec<u32> = cols
            .iter()
            .filter(|&&c| c.count_ones() == 1)
            .map(|&c| c.trailing_zeros())
            .collect();
        peelable.sort_unstable();
        peelable.dedup();
        if peelable.is_empty() {
            return undecoded.count_ones();
        }
        let user = pick(&peelable, policy, &mut rng);
        let bit = 1u32 << user;
        for col in &mut cols {
            *col &= !bit;
        }
        undecoded &= !bit;
    }
}

/// All matrices with row sums d over t slots, i.e. every way each user can
/// choose d_i of the t slots: Π C(t, d_i) items, empty if some d_i > t.
pub fn enumerate_matrices(d: &DegreeVector, t: u32) -> MatrixIter {
    let exhausted = d.degrees().iter().any(|&di| di > t);
    let subsets = d
        .degrees()
        .iter()
        .map(|&di| (0..di.min(t)).collect())
        .collect();
    MatrixIter { k: d.k(), t, degrees: d.degrees().to_vec(), subsets, exhausted }
}

pub struct MatrixIter {
    k: u32,
    t: u32,
    degrees: Vec<u32>,
    /// Current slot choice per row, each ascending.
    subsets: Vec<Vec<u32>>,
    exhausted: bool,
}

impl MatrixIter {
    fn build(&self) -> CollisionMatrix {
        let mut cols = vec![0u32; self.t as usize];
        for (i, subset) in self.subsets.iter().enumerate() {
            for &slot in subset {
                cols[slot as usize] |= 1 << i;
            }
        }
        CollisionMatrix { k: self.k, cols }
    }

    /// Advance one row's combination in lexicographic order.
    fn advance_row(&mut self, row: usize) -> bool {
        let subset = &mut self.subsets[row];
        let d = subset.len();
        for i in (0..d).rev() {
            if subset[i] < self.t - (d - i) as u32 {
                subset[i] += 1;
                for j in i + 1..d {
                    subset[j] = subset[j - 1] + 1;
                }
                return true;
            }
        }
        // Wrapped: reset to the first combination.
        for (j, slot) in subset.iter_mut().enumerate() {
            *slot = j as u32;
        }
        false
    }
}

impl Iterator for MatrixIter {
    type Item = CollisionMatrix;

    fn next(&mut self) -> Option<CollisionMatrix> {
        if self.exhausted {
            return None;
        }
        let matrix = self.build();
        self.exhausted = true;
        for row in (0..self.degrees.len()).rev() {
            if self.advance_row(row) {
                self.exhausted = false;
                break;
            }
        }
        Some(matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(k: u32, entries: &[(u32, u32)]) -> OccupancyVector {
        let counts = entries
            .iter()
            .map(|&(mask, n)| (ColumnPattern::from_mask(mask), n))
            .collect();
        let _ = k;
        OccupancyVector::from_counts(counts)
    }

    /// The worked 3 × 4 matrix: user 0 alone in slot 0, users 1 and 2 in
    /// slots 1 and 2, users 0 and 2 in slot 3.
    fn worked_matrix() -> CollisionMatrix {
        CollisionMatrix::new(3, vec![0b001, 0b110, 0b110, 0b101]).unwrap()
    }

    #[test]
    fn peel_step_cancels_one_user() {
        let mut state = PeelState::new(&worked_matrix().occupancy(), 3).unwrap();
        peel_step(&mut state, 0).unwrap();
        let after = state.occupancy();
        assert_eq!(after.get(ColumnPattern::from_mask(0b000)), 1);
        assert_eq!(after.get(ColumnPattern::from_mask(0b110)), 2);
        assert_eq!(after.get(ColumnPattern::from_mask(0b100)), 1);
        assert_eq!(after.total(), 4);
        assert!(state.is_decoded(0));
        assert_eq!(state.peelable_users(), vec![2]);
    }

    #[test]
    fn peel_step_merges_into_existing_patterns() {
        let mut state = PeelState::new(&occ(2, &[(0b01, 1), (0b10, 1)]), 2).unwrap();
        peel_step(&mut state, 0).unwrap();
        let after = state.occupancy();
        assert_eq!(after.get(ColumnPattern::from_mask(0b00)), 1);
        assert_eq!(after.get(ColumnPattern::from_mask(0b10)), 1);
    }

    #[test]
    fn peel_step_rejects_bad_requests() {
        let base = occ(2, &[(0b11, 2)]);
        let mut state = PeelState::new(&base, 2).unwrap();
        // No singleton column for user 0.
        assert!(peel_step(&mut state, 0).is_err());
        // Out of range.
        assert!(peel_step(&mut state, 2).is_err());

        let mut state = PeelState::new(&occ(2, &[(0b01, 1), (0b10, 1)]), 2).unwrap();
        peel_step(&mut state, 0).unwrap();
        // Already decoded.
        assert!(peel_step(&mut state, 0).is_err());
    }

    #[test]
    fn worked_matrix_resolves_completely() {
        let outcome =
            residual_with_trace(&worked_matrix().occupancy(), 3, PeelPolicy::SmallestIndex)
                .unwrap();
        assert_eq!(outcome.u, 0);
        assert_eq!(outcome.trace.unwrap().len(), 3);
        assert_eq!(peel_matrix(&worked_matrix(), PeelPolicy::default()), 0);
    }

    #[test]
    fn twin_collision_is_a_stopping_set() {
        let outcome = residual(&occ(2, &[(0b11, 2)]), 2, PeelPolicy::SmallestIndex).unwrap();
        assert_eq!(outcome.u, 2);
        assert_eq!(outcome.trace, None);

        let all_ones = CollisionMatrix::new(2, vec![0b11, 0b11]).unwrap();
        assert_eq!(peel_matrix(&all_ones, PeelPolicy::default()), 2);
    }

    #[test]
    fn disjoint_stopping_sets_add_up() {
        // Users 0,1 collide twice; users 2,3 collide three times; one idle slot.
        let occupancy = occ(4, &[(0b0011, 2), (0b1100, 3), (0b0000, 1)]);
        assert_eq!(residual(&occupancy, 4, PeelPolicy::default()).unwrap().u, 4);
    }

    #[test]
    fn partially_peelable_matrix_stops_at_two() {
        // Users 0 and 1 share slot 0; user 2 repeats in slots 1 and 2.
        let matrix = CollisionMatrix::new(3, vec![0b011, 0b100, 0b100]).unwrap();
        assert_eq!(peel_matrix(&matrix, PeelPolicy::default()), 2);
    }

    #[test]
    fn matrix_enumeration_covers_every_choice() {
        let d = DegreeVector::new(vec![2, 2, 3]).unwrap();
        let matrices: Vec<_> = enumerate_matrices(&d, 4).collect();
        // C(4,2) * C(4,2) * C(4,3) = 144 distinct matrices.
        assert_eq!(matrices.len(), 144);
        let mut seen: Vec<Vec<u32>> = matrices.iter().map(|m| m.cols().to_vec()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 144);
        for matrix in &matrices {
            assert_eq!(matrix.row_degrees(), vec![2, 2, 3]);
            assert_eq!(matrix.t(), 4);
        }
    }

    #[test]
    fn matrix_enumeration_is_empty_when_degrees_do_not_fit() {
        let d = DegreeVector::new(vec![3, 1]).unwrap();
        assert_eq!(enumerate_matrices(&d, 2).count(), 0);
    }

    #[test]
    fn residual_never_leaves_exactly_one_user() {
        let d = DegreeVector::new(vec![1, 2, 2]).unwrap();
        for matrix in enumerate_matrices(&d, 3) {
            let u = peel_matrix(&matrix, PeelPolicy::default());
            assert_ne!(u, 1, "matrix {:?}", matrix.cols());
        }
    }

    fn random_matrix(rng: &mut ChaCha8Rng) -> CollisionMatrix {
        let k = rng.random_range(1..=6);
        let t = rng.random_range(1..=8u32);
        let mut cols = vec![0u32; t as usize];
        for user in 0..k {
            let degree = rng.random_range(1..=t);
            let mut slots: Vec<u32> = (0..t).collect();
            for j in 0..degree as usize {
                let swap = rng.random_range(j..t as usize);
                slots.swap(j, swap);
            }
            for &slot in &slots[..degree as usize] {
                cols[slot as usize] |= 1 << user;
            }
        }
        CollisionMatrix::new(k, cols).unwrap()
    }

    #[test]
    fn residual_is_policy_independent_and_matches_the_matrix_peeler() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b9);
        for trial in 0..1000u64 {
            let matrix = random_matrix(&mut rng);
            let k = matrix.k();
            let occupancy = matrix.occupancy();
            let policies = [
                PeelPolicy::SmallestIndex,
                PeelPolicy::LargestIndex,
                PeelPolicy::Random { seed: trial },
            ];
            let reference = residual(&occupancy, k, policies[0]).unwrap().u;
            for policy in policies {
                assert_eq!(residual(&occupancy, k, policy).unwrap().u, reference);
                assert_eq!(peel_matrix(&matrix, policy), reference);
            }
            assert_ne!(reference, 1);

            // Dense fast path agrees.
            let mut dense = vec![0u32; 1 << k];
            for &col in matrix.cols() {
                dense[col as usize] += 1;
            }
            assert_eq!(residual_dense(&mut dense, k), reference);
        }
    }

    #[test]
    fn stopping_sets_conserve_replicas() {
        // At the fixpoint, the surviving columns hold exactly the replicas of
        // the unresolved users.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..300 {
            let matrix = random_matrix(&mut rng);
            let degrees = matrix.row_degrees();
            let mut state = PeelState::new(&matrix.occupancy(), matrix.k()).unwrap();
            loop {
                let peelable = state.peelable_users();
                let Some(&user) = peelable.first() else { break };
                peel_step(&mut state, user).unwrap();
            }
            let survivors: u64 = state
                .occupancy()
                .counts()
                .iter()
                .map(|(p, &n)| u64::from(p.weight()) * u64::from(n))
                .sum();
            let unresolved: u64 = (0..matrix.k())
                .filter(|&i| !state.is_decoded(i))
                .map(|i| u64::from(degrees[i as usize]))
                .sum();
            assert_eq!(survivors, unresolved);
        }
    }
}
