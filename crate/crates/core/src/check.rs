//! Zero tests: structural first, then sampling.

use crate::error::Result;
use crate::expr::{numeric_equiv, numeric_zero, Expr, SampleSpace};

/// Seed used by every randomized check unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 1729;

/// Sampling settings for the numeric fallback of symbolic zero tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for Check {
    fn default() -> Self {
        Check { samples: 50, tol: 1e-9, seed: DEFAULT_SEED }
    }
}

impl Check {
    pub fn with_seed(seed: u64) -> Self {
        Check { seed, ..Check::default() }
    }

    /// Whether `e` vanishes identically on `space`.
    pub fn vanishes(&self, e: &Expr, space: &SampleSpace) -> Result<bool> {
        let s = e.simplify();
        if s.is_zero() {
            return Ok(true);
        }
        Ok(numeric_zero(&s, space, self.samples, self.tol, self.seed)?)
    }

    pub fn equivalent(&self, a: &Expr, b: &Expr, space: &SampleSpace) -> Result<bool> {
        if a.simplify() == b.simplify() {
            return Ok(true);
        }
        let d = (a - b).simplify();
        if d.is_zero() {
            return Ok(true);
        }
        // Large cancelling summands in `a - b` leave rounding noise far above
        // `tol * |a|`; judge that noise against the summands, as `vanishes` does.
        Ok(numeric_equiv(a, b, space, self.samples, self.tol, self.seed)?
            || numeric_zero(&d, space, self.samples, self.tol, self.seed)?)
    }
}
