//! The weight family ξₙ of 2-isometric unilateral weighted shifts.
//!
//! ξₙ(x) = sqrt((1 + (n+1)(x²−1)) / (1 + n(x²−1))) maps `[1, ∞)` into itself.
//! Every 2-isometric unilateral weighted shift with positive weights has
//! weights `{ξₙ(x)}` for a unique `x = ‖S e₀‖ ≥ 1`.

use crate::error::{Error, Result};

/// Inputs in `[1 - BOUNDARY_SLACK, 1)` are treated as exactly 1.
pub const BOUNDARY_SLACK: f64 = 1e-12;

fn check_domain(x: f64) -> Result<f64> {
    if x.is_nan() || x < 1.0 - BOUNDARY_SLACK {
        return Err(Error::Domain(format!("argument {x} lies outside [1, inf)")));
    }
    Ok(x.max(1.0))
}

/// ξₙ(x), evaluated from the closed form.
pub fn xi_eval(n: usize, x: f64) -> Result<f64> {
    let x = check_domain(x)?;
    let d = x * x - 1.0;
    let n = n as f64;
    Ok(((1.0 + (n + 1.0) * d) / (1.0 + n * d)).sqrt())
}

/// One step of the recurrence β ↦ sqrt((2β² − 1)/β²); iterating from x yields ξₙ(x).
pub fn xi_next(beta: f64) -> Result<f64> {
    let b = check_domain(beta)?;
    let b2 = b * b;
    Ok(((2.0 * b2 - 1.0) / b2).sqrt())
}

/// ∏_{k<n} ξₖ(x) = sqrt(1 + n(x² − 1)), the norm of Sⁿe₀ for the shift S_[x].
pub fn xi_cumulative(n: usize, x: f64) -> Result<f64> {
    let x = check_domain(x)?;
    Ok((1.0 + n as f64 * (x * x - 1.0)).sqrt())
}

/// The first `len` weights ξ₀(x), …, ξ_{len−1}(x).
pub fn xi_sequence(x: f64, len: usize) -> Result<Vec<f64>> {
    (0..len).map(|n| xi_eval(n, x)).collect()
}
