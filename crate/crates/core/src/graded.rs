//! Truncated power series in `alpha` around `alpha = 0`.
//!
//! A [`GradedValue`] stands for `alpha^lead * (c0 + c1 alpha + O(alpha^2))`.
//! Running the cyclic recursions over this type instead of `f64` yields their
//! `alpha -> 0+` limits without ever dividing a vanishing quantity by another.

use std::fmt;
use std::ops::{Add, Mul};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedValue {
    pub lead: i32,
    pub c0: f64,
    pub c1: f64,
}

impl GradedValue {
    pub const ZERO: GradedValue = GradedValue {
        lead: 0,
        c0: 0.0,
        c1: 0.0,
    };

    pub fn constant(v: f64) -> Self {
        GradedValue {
            lead: 0,
            c0: v,
            c1: 0.0,
        }
        .normalized()
    }

    /// The series variable itself.
    pub fn alpha() -> Self {
        GradedValue {
            lead: 1,
            c0: 1.0,
            c1: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0.0 && self.c1 == 0.0
    }

    // keep c0 != 0 for nonzero values; a vanished c0 shifts the lead and drops
    // the (untracked) next coefficient
    fn normalized(self) -> Self {
        if self.c0 == 0.0 {
            if self.c1 == 0.0 {
                GradedValue::ZERO
            } else {
                GradedValue {
                    lead: self.lead + 1,
                    c0: self.c1,
                    c1: 0.0,
                }
            }
        } else {
            self
        }
    }

    /// `self / rhs`, or `None` when `rhs` is identically zero.
    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(GradedValue::ZERO);
        }
        let c0 = self.c0 / rhs.c0;
        let c1 = (self.c1 - c0 * rhs.c1) / rhs.c0;
        Some(
            GradedValue {
                lead: self.lead - rhs.lead,
                c0,
                c1,
            }
            .normalized(),
        )
    }

    /// Value at `alpha = 0+`: `Some(0)` for positive lead, `c0` for lead 0,
    /// `None` when the series diverges.
    pub fn limit(&self) -> Option<f64> {
        if self.is_zero() || self.lead > 0 {
            Some(0.0)
        } else if self.lead == 0 {
            Some(self.c0)
        } else {
            None
        }
    }

    /// Evaluate the truncated series at a given `alpha`.
    pub fn eval(&self, alpha: f64) -> f64 {
        alpha.powi(self.lead) * (self.c0 + self.c1 * alpha)
    }
}

impl Add for GradedValue {
    type Output = GradedValue;

    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (lo, hi) = if self.lead <= rhs.lead {
            (self, rhs)
        } else {
            (rhs, self)
        };
        match hi.lead - lo.lead {
            0 => GradedValue {
                lead: lo.lead,
                c0: lo.c0 + hi.c0,
                c1: lo.c1 + hi.c1,
            }
            .normalized(),
            1 => GradedValue {
                lead: lo.lead,
                c0: lo.c0,
                c1: lo.c1 + hi.c0,
            },
            _ => lo,
        }
    }
}

impl Mul for GradedValue {
    type Output = GradedValue;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return GradedValue::ZERO;
        }
        GradedValue {
            lead: self.lead + rhs.lead,
            c0: self.c0 * rhs.c0,
            c1: self.c0 * rhs.c1 + self.c1 * rhs.c0,
        }
        .normalized()
    }
}

impl fmt::Display for GradedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a^{} ({} + {} a)", self.lead, self.c0, self.c1)
    }
}
