//! Execution-mode selection for the engine's data-parallel loops.
//!
//! Every parallel loop in this crate reduces with exact rational arithmetic,
//! so the two modes return identical results; the switch only trades wall
//! time against the rayon dependency and thread startup.

use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

/// Map `f` over `0..n`, in index order or fanned out across threads.
/// The output is collected in index order either way, so callers that fold
/// the results sequentially are deterministic under both modes.
pub(crate) fn run_indexed<T, F>(parallelism: Parallelism, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match parallelism {
        Parallelism::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexed_runs_preserve_order() {
        let seq = run_indexed(Parallelism::Sequential, 100, |i| Ok(i * i)).unwrap();
        assert_eq!(seq.len(), 100);
        assert_eq!(seq[7], 49);
        #[cfg(feature = "parallel")]
        {
            let par = run_indexed(Parallelism::Rayon, 100, |i| Ok(i * i)).unwrap();
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn indexed_runs_propagate_errors() {
        let out: Result<Vec<u32>> = run_indexed(Parallelism::Sequential, 10, |i| {
            if i == 5 {
                Err(crate::Error::Config("boom".into()))
            } else {
                Ok(0)
            }
        });
        assert!(out.is_err());
    }
}
