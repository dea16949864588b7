//! Logistic loss for binary boosting on ±1 labels.

use super::GbdtError;

/// Numerically stable logistic function, computed via the sign-split
/// formulation so neither branch exponentiates a positive argument.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(t)) without overflow.
fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Loss of a raw score `f` against label `y` in {+1, -1}:
/// `L(y, f) = ln(1 + exp(-y * f))`.
pub(crate) fn logistic_loss(label: f64, score: f64) -> f64 {
    log1p_exp(-label * score)
}

pub(crate) fn grad_hess(label: f64, score: f64) -> (f64, f64) {
    let s = sigmoid(-label * score);
    (-label * s, s * (1.0 - s))
}

/// First and second derivative of the logistic loss with respect to the raw
/// score, for `label` in {+1, -1}. Stable for |score| up to 500 and beyond.
pub fn logistic_grad_hess(label: f64, score: f64) -> Result<(f64, f64), GbdtError> {
    if !score.is_finite() {
        return Err(GbdtError::NonFiniteScore(score));
    }
    debug_assert!(label == 1.0 || label == -1.0, "label must be +1 or -1");
    Ok(grad_hess(label, score))
}
