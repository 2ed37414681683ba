//! Enumeration budgets.
//!
//! Exact enumerations predict their cost up front and refuse to start past
//! the budget; backtracking searches count node expansions as they go and
//! surface exhaustion as a first-class verdict, never as a silent truncation.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// A fixed limit on elementary enumeration steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    limit: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        assert!(limit > 0, "budget must be positive");
        Budget { limit }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Up-front check for enumerations whose cost is known in advance.
    pub fn admit(&self, needed: u128) -> Result<()> {
        if needed > self.limit as u128 {
            Err(Error::BudgetExceeded {
                needed,
                budget: self.limit,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_BUDGET)
    }
}

/// Shared countdown for search trees explored across threads.
#[derive(Debug)]
pub struct BudgetCounter {
    limit: u64,
    used: AtomicU64,
}

impl BudgetCounter {
    pub fn new(budget: Budget) -> Self {
        BudgetCounter {
            limit: budget.limit,
            used: AtomicU64::new(0),
        }
    }

    /// Record `n` expansions; returns false once the budget is exhausted.
    #[inline]
    pub fn consume(&self, n: u64) -> bool {
        self.used.fetch_add(n, Ordering::Relaxed) + n <= self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    pub fn exhausted(&self) -> bool {
        self.used() > self.limit
    }
}
