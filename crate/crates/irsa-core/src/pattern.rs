//! Column patterns: the per-slot signature saying which users transmitted in
//! that slot. A pattern is a length-k bit vector stored as a mask, with bit i
//! standing for user i (0-based).

use crate::{Error, Result};

/// One column of a collision matrix, as a bit mask over users.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnPattern(u32);

impl ColumnPattern {
    pub const ZERO: ColumnPattern = ColumnPattern(0);

    pub fn from_mask(mask: u32) -> Self {
        ColumnPattern(mask)
    }

    /// Build from explicit bits, `bits[i]` = user i transmitted.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mask = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u32, |m, (i, _)| m | (1 << i));
        ColumnPattern(mask)
    }

    pub fn mask(&self) -> u32 {
        self.0
    }

    /// Number of users transmitting in this slot.
    pub fn weight(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(&self, user: u32) -> bool {
        self.0 & (1 << user) != 0
    }

    /// The same pattern with `user`'s bit cleared: the column after that
    /// user's replica has been cancelled. The bit must be set.
    pub fn complement_in(&self, user: u32) -> Result<ColumnPattern> {
        if !self.contains(user) {
            return Err(Error::Precondition(format!(
                "complement_in: user {user} does not appear in pattern {}",
                self.0
            )));
        }
        Ok(ColumnPattern(self.0 & !(1 << user)))
    }

    /// Render as `[1 0 0 1]` with user 0 first.
    pub fn bits_string(&self, k: u32) -> String {
        let inner: Vec<&str> = (0..k).map(|i| if self.contains(i) { "1" } else { "0" }).collect();
        format!("[{}]", inner.join(" "))
    }
}

/// All 2^k column patterns for a k-user frame, in canonical (integer) order,
/// with the weight classes precomputed.
#[derive(Clone, Debug)]
pub struct ColumnUniverse {
    k: u32,
    patterns: Vec<ColumnPattern>,
    by_weight: Vec<Vec<ColumnPattern>>,
    reduced: Vec<ColumnPattern>,
}

impl ColumnUniverse {
    /// The universe grows as 2^k; above this the dense representation used by
    /// the exact engine stops being sensible.
    pub const MAX_K: u32 = 20;

    pub fn new(k: u32) -> Result<Self> {
        if k == 0 || k > Self::MAX_K {
            return Err(Error::Config(format!(
                "column universe needs 1 <= k <= {}, got {k}",
                Self::MAX_K
            )));
        }
        let patterns: Vec<ColumnPattern> = (0..1u32 << k).map(ColumnPattern::from_mask).collect();
        let mut by_weight = vec![Vec::new(); k as usize + 1];
        for &p in &patterns {
            by_weight[p.weight() as usize].push(p);
        }
        // Reduced universe: every pattern of weight at most k-2, i.e. the
        // column set with the k weight-(k-1) patterns and the all-ones
        // pattern removed. Those k+1 counts are forced by the row sums.
        let reduced = patterns
            .iter()
            .copied()
            .filter(|p| p.weight() + 2 <= k)
            .collect();
        Ok(ColumnUniverse { k, patterns, by_weight, reduced })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Every pattern, ordered by integer value.
    pub fn patterns(&self) -> &[ColumnPattern] {
        &self.patterns
    }

    /// C_l: patterns of weight l.
    pub fn weight_class(&self, l: u32) -> &[ColumnPattern] {
        &self.by_weight[l as usize]
    }

    /// C_{l,i}: patterns of weight l with user i's bit clear.
    pub fn weight_class_without(&self, l: u32, user: u32) -> Vec<ColumnPattern> {
        self.by_weight[l as usize]
            .iter()
            .copied()
            .filter(|p| !p.contains(user))
            .collect()
    }

    /// The reduced universe Ĉ (weights 0..=k-2), in canonical order.
    pub fn reduced(&self) -> &[ColumnPattern] {
        &self.reduced
    }

    /// |Ĉ| = sum of binomial(k, l) for l = 0..=k-2.
    pub fn reduced_len(&self) -> usize {
        self.reduced.len()
    }

    /// The all-ones pattern (every user in the slot).
    pub fn full(&self) -> ColumnPattern {
        ColumnPattern::from_mask((1u32 << self.k) - 1)
    }
}
