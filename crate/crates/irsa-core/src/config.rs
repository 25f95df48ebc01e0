//! System-level frame geometry.

use crate::rational::Rat;
use crate::{Error, Result};

/// A slotted random-access frame: `k` users contending for `t` slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemConfig {
    pub k: u32,
    pub t: u32,
}

impl SystemConfig {
    pub fn new(k: u32, t: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if t == 0 {
            return Err(Error::Config("t must be at least 1".into()));
        }
        Ok(SystemConfig { k, t })
    }

    /// Offered load G = k/t.
    pub fn load(&self) -> f64 {
        f64::from(self.k) / f64::from(self.t)
    }

    /// Offered load as an exact rational.
    pub fn load_rational(&self) -> Rat {
        Rat::new(self.k.into(), self.t.into())
    }
}
