//! Numeric weight abstraction shared by the combinatorial solvers.
//!
//! Instances carry nonnegative integer weights, but column-generation pricing
//! re-runs the same greedy and search machinery on fractional (possibly
//! negative) reduced weights. Everything below the instance layer is generic
//! over [`Weight`] so both paths share one implementation.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Sub};

/// Relative slack used when comparing floating-point objectives.
pub const FLOAT_IMPROVEMENT_EPS: f64 = 1e-9;

pub trait Weight:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Debug + Send + Sync + 'static
{
    const ZERO: Self;

    fn total_cmp(&self, other: &Self) -> Ordering;

    fn to_f64(self) -> f64;

    /// True when `self` is strictly better (smaller) than `incumbent` by more
    /// than numerical noise.
    fn improves_on(self, incumbent: Self) -> bool;

    /// Smallest value the maximum of `parts` numbers summing to `self` can take.
    fn average_bound(self, parts: usize) -> Self;

    fn max_of(self, other: Self) -> Self {
        if other.total_cmp(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other.total_cmp(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl Weight for i64 {
    const ZERO: Self = 0;

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn improves_on(self, incumbent: Self) -> bool {
        self < incumbent
    }

    fn average_bound(self, parts: usize) -> Self {
        let parts = parts.max(1) as i64;
        // ceiling division that also rounds correctly for negative sums
        -((-self).div_euclid(parts))
    }
}

impl Weight for f64 {
    const ZERO: Self = 0.0;

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn improves_on(self, incumbent: Self) -> bool {
        self < incumbent - FLOAT_IMPROVEMENT_EPS * incumbent.abs().max(1.0)
    }

    fn average_bound(self, parts: usize) -> Self {
        self / parts.max(1) as f64
    }
}

/// Maximum of a non-empty sequence; `None` when empty.
pub fn max_weight<T: Weight>(values: impl IntoIterator<Item = T>) -> Option<T> {
    values.into_iter().reduce(Weight::max_of)
}
