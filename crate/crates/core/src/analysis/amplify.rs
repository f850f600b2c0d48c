//! Periods needed to push a per-node success probability to all nodes.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("p must lie in (0, 1], got {0}")]
    Probability(f64),
    #[error("c must be at least 1, got {0}")]
    Spacing(f64),
    #[error("q must be nonnegative, got {0}")]
    Exponent(f64),
    #[error("n must be at least 2, got {0}")]
    Size(f64),
}

/// `c·(q + 1)/p · ln n`: if a bad node turns good with probability `p` every
/// `c` periods, all `n` nodes are good after this many periods with
/// probability at least `1 - n^-q`.
pub fn amplification_rounds(c: f64, p: f64, q: f64, n: f64) -> Result<f64, DomainError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DomainError::Probability(p));
    }
    if !(c >= 1.0) || !c.is_finite() {
        return Err(DomainError::Spacing(c));
    }
    if !(q >= 0.0) || !q.is_finite() {
        return Err(DomainError::Exponent(q));
    }
    if !(n >= 2.0) || !n.is_finite() {
        return Err(DomainError::Size(n));
    }
    Ok(c * (q + 1.0) / p * n.ln())
}

/// Per-two-period success probability of a bad JitterAndJump node:
/// `½·exp(-16η / (1 - 3η))`.
pub fn jitterjump_success_probability(eta: f64) -> f64 {
    0.5 * (-16.0 * eta / (1.0 - 3.0 * eta)).exp()
}

/// Concrete round bound for JitterAndJump with `c = 2`.
pub fn jitterjump_round_bound(eta: f64, q: f64, n: f64) -> Result<f64, DomainError> {
    amplification_rounds(2.0, jitterjump_success_probability(eta), q, n)
}
