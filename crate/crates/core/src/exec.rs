//! Execution knobs and the deterministic parallel map used by every
//! exhaustive or sampled reduction.
//!
//! Work is always split into chunks whose boundaries do not depend on the
//! shard count; shards only decide which thread computes which chunk, and
//! partial results are merged in chunk order. Outputs are therefore
//! bit-identical for any shard count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on word evaluations for exhaustive sums (2^26).
pub const DEFAULT_BUDGET: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOptions {
    pub budget: u64,
    pub shards: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            budget: DEFAULT_BUDGET,
            shards: 1,
        }
    }
}

impl ExecOptions {
    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn check_budget(&self, needed: u128) -> Result<()> {
        if needed > self.budget as u128 {
            Err(Error::Infeasible {
                needed,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }
}

/// Maps `f` over `items` on `shards` threads, returning results in input order.
pub fn ordered_map<T, R, F>(items: &[T], shards: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if shards <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(shards).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("falling back to serial evaluation: {e}");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let serial = ordered_map(&xs, 1, |x| x * x);
        let parallel = ordered_map(&xs, 8, |x| x * x);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn budget_check() {
        let opts = ExecOptions::default().with_budget(10);
        assert!(opts.check_budget(10).is_ok());
        assert!(opts.check_budget(11).unwrap_err().is_infeasible());
    }
}
