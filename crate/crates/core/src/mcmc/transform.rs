//! Bijections between constrained parameters and the real line.

use serde::Serialize;

use super::McmcError;
use crate::model::{inv_logit, ln_inv_logit};

/// Support of one sampled coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Support {
    Real,
    /// Open interval `(lo, hi)`, mapped with a scaled logit.
    Interval {
        lo: f64,
        hi: f64,
    },
}

impl Support {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, McmcError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(McmcError::InvalidSupport(format!("[{lo}, {hi}]")));
        }
        Ok(Support::Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Support::Real => x.is_finite(),
            Support::Interval { lo, hi } => x > lo && x < hi,
        }
    }

    /// Closed-interval membership; draws that round onto an endpoint pass.
    pub fn contains_closed(&self, x: f64) -> bool {
        match *self {
            Support::Real => x.is_finite(),
            Support::Interval { lo, hi } => x >= lo && x <= hi,
        }
    }

    pub fn midpoint(&self) -> f64 {
        match *self {
            Support::Real => 0.0,
            Support::Interval { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn to_unconstrained(&self, x: f64) -> Result<f64, McmcError> {
        if !self.contains(x) {
            return Err(McmcError::OutOfSupport { value: x });
        }
        Ok(match *self {
            Support::Real => x,
            Support::Interval { lo, hi } => {
                let r = (x - lo) / (hi - lo);
                (r / (1.0 - r)).ln()
            }
        })
    }

    pub fn to_constrained(&self, u: f64) -> f64 {
        match *self {
            Support::Real => u,
            Support::Interval { lo, hi } => lo + (hi - lo) * inv_logit(u),
        }
    }

    /// `ln |dx/du|` at `u`.
    pub fn ln_jacobian(&self, u: f64) -> f64 {
        match *self {
            Support::Real => 0.0,
            Support::Interval { lo, hi } => (hi - lo).ln() + ln_inv_logit(u) + ln_inv_logit(-u),
        }
    }
}

/// Maps a constrained vector to the unconstrained scale.
pub fn transform_to_unconstrained(
    params: &[f64],
    supports: &[Support],
) -> Result<Vec<f64>, McmcError> {
    if params.len() != supports.len() {
        return Err(McmcError::Dimension {
            expected: supports.len(),
            got: params.len(),
        });
    }
    params
        .iter()
        .zip(supports)
        .map(|(&x, s)| s.to_unconstrained(x))
        .collect()
}

/// Maps back to the constrained scale and returns the summed log-Jacobian
/// of the inverse map.
pub fn transform_back(u: &[f64], supports: &[Support]) -> (Vec<f64>, f64) {
    let mut jac = 0.0;
    let x = u
        .iter()
        .zip(supports)
        .map(|(&v, s)| {
            jac += s.ln_jacobian(v);
            s.to_constrained(v)
        })
        .collect();
    (x, jac)
}
