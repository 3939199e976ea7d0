//! Binomial tails and binary KL divergence for the two-hypothesis CVaR example.

use crate::error::{Result, RiskError};

/// Binary KL divergence `p log(p/q) + (1-p) log((1-p)/(1-q))` on `(0, 1)^2`.
pub fn bkl(p: f64, q: f64) -> Result<f64> {
    let open = |x: f64| x > 0.0 && x < 1.0;
    if !open(p) || !open(q) {
        return Err(RiskError::InvalidParameter(format!(
            "binary KL needs p, q in (0, 1), got {p}, {q}"
        )));
    }
    Ok(p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln())
}

/// Largest `n` accepted by [`binomial_tail_exact`].
pub const MAX_TAIL_TRIALS: u64 = 1_000_000;

/// `Pr[Bin(n, p) <= k]`, summing the terms with index `<= floor(k)` in log
/// space.
pub fn binomial_tail_exact(n: u64, p: f64, k: f64) -> Result<f64> {
    if n == 0 || n > MAX_TAIL_TRIALS {
        return Err(RiskError::InvalidParameter(format!(
            "n must lie in 1..={MAX_TAIL_TRIALS}, got {n}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(RiskError::InvalidParameter(format!(
            "p must lie in (0, 1), got {p}"
        )));
    }
    if k.is_nan() {
        return Err(RiskError::InvalidParameter("k is NaN".into()));
    }
    if k < 0.0 {
        return Ok(0.0);
    }
    if k >= n as f64 {
        return Ok(1.0);
    }
    let top = k.floor() as u64;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let nf = n as f64;
    let mut log_choose = 0.0;
    let mut logs = Vec::with_capacity(top as usize + 1);
    for i in 0..=top {
        if i > 0 {
            log_choose += ((nf - (i - 1) as f64) / i as f64).ln();
        }
        logs.push(log_choose + i as f64 * lp + (nf - i as f64) * lq);
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    Ok((max + sum.ln()).exp().min(1.0))
}

/// Lower constant used in [`cvar_excess_risk_bracket`]: the guaranteed
/// floor `sqrt(2)/3` on the absolute constant.
pub const BRACKET_LOWER_CONSTANT: f64 = std::f64::consts::SQRT_2 / 3.0;

/// Probability that empirical CVaR minimization picks the worse of the two
/// hypotheses `f1 = 1/2` and `f2 ~ Bernoulli((1+eps)/2)`, with the analytic
/// lower and upper bounds around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessRiskBracket {
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
}

pub fn cvar_excess_risk_bracket(n: u64, epsilon: f64, alpha: f64) -> Result<ExcessRiskBracket> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(RiskError::InvalidParameter(format!(
            "epsilon must lie in (0, 0.5), got {epsilon}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(RiskError::InvalidParameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let nf = n as f64;
    let gap = epsilon + (1.0 - alpha);
    let upper = (-nf * gap * gap / 2.0).exp();
    let lower = BRACKET_LOWER_CONSTANT
        * (-4.0 * nf * gap * gap - (nf * alpha).sqrt().ln() - 16.0 / nf).exp();
    let exact = binomial_tail_exact(n, (1.0 + epsilon) / 2.0, half_count_threshold(n, alpha))?;
    Ok(ExcessRiskBracket {
        lower,
        exact,
        upper,
    })
}

/// `n * alpha / 2`, snapped to the nearest integer when within rounding
/// error of it so that the tail's floor is taken on the intended value.
pub fn half_count_threshold(n: u64, alpha: f64) -> f64 {
    let t = n as f64 * alpha / 2.0;
    let r = t.round();
    if (t - r).abs() <= 1e-9 * t.max(1.0) {
        r
    } else {
        t
    }
}
