//! Small combinatorial helpers shared by the occupancy and loss-rate modules.

use num_bigint::BigUint;

use crate::{Error, Result};

/// Factorials up to 34! fit in a u128; the exact engine uses this table for
/// its per-class multinomial weights. 35! overflows, so frames longer than
/// [`MAX_FACT_U128`] slots are rejected before enumeration starts.
pub(crate) const MAX_FACT_U128: usize = 34;

pub(crate) const FACT_U128: [u128; MAX_FACT_U128 + 1] = {
    let mut table = [1u128; MAX_FACT_U128 + 1];
    let mut i = 1;
    while i <= MAX_FACT_U128 {
        table[i] = table[i - 1] * i as u128;
        i += 1;
    }
    table
};

/// n! as an arbitrary-precision integer.
pub fn factorial(n: u64) -> BigUint {
    (1..=n).map(BigUint::from).product()
}

/// Binomial coefficient C(n, k); zero when k > n.
pub fn binomial(n: u64, k: u64) -> BigUint {
    num_integer::binomial(BigUint::from(n), BigUint::from(k))
}

/// Multinomial coefficient `total! / (parts[0]! * parts[1]! * ...)`.
/// The parts must sum to `total`.
pub fn multinomial(total: u64, parts: &[u64]) -> Result<BigUint> {
    let sum: u64 = parts.iter().sum();
    if sum != total {
        return Err(Error::Precondition(format!(
            "multinomial parts sum to {sum}, expected {total}"
        )));
    }
    Ok(num_integer::multinomial(
        &parts.iter().copied().map(BigUint::from).collect::<Vec<_>>(),
    ))
}
