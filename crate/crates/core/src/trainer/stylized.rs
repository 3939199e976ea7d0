//! Empirical CVaR minimization over two hypotheses: the constant loss
//! `f1 = 1/2` and `f2 ~ Bernoulli((1 + eps) / 2)`. For `alpha > 1/2` the
//! population CVaR of `f2` is the larger one, yet on a small sample it can
//! look better.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disutility::Disutility;
use crate::error::{Result, RiskError};
use crate::risk::{oce_empirical, LossVector};
use crate::seed::derive_seed;

/// Slack when comparing the two empirical risks.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StylizedTrial {
    /// Number of unit losses drawn for `f2`.
    pub ones: usize,
    pub risk_f2: f64,
    pub risk_f1: f64,
}

impl StylizedTrial {
    /// Whether the empirical minimizer is (or ties with) the worse hypothesis.
    pub fn picks_f2(&self) -> bool {
        self.risk_f2 <= self.risk_f1 + TIE_TOLERANCE
    }
}

fn check(n: usize, epsilon: f64, alpha: f64) -> Result<()> {
    if n == 0 {
        return Err(RiskError::InvalidParameter("n must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(RiskError::InvalidParameter(format!(
            "epsilon must lie in (0, 0.5), got {epsilon}"
        )));
    }
    Disutility::cvar(alpha).map(|_| ())
}

/// One sample of size `n` drawn with `rng`.
pub fn stylized_trial(
    n: usize,
    epsilon: f64,
    alpha: f64,
    rng: &mut impl Rng,
) -> Result<StylizedTrial> {
    check(n, epsilon, alpha)?;
    let spec = Disutility::CVaR { alpha };
    let p = (1.0 + epsilon) / 2.0;
    let f2: Vec<f64> = (0..n)
        .map(|_| if rng.gen::<f64>() < p { 1.0 } else { 0.0 })
        .collect();
    let ones = f2.iter().filter(|&&v| v == 1.0).count();
    let risk_f2 = oce_empirical(&LossVector::new(f2, 1.0)?, &spec)?.value;
    let risk_f1 = oce_empirical(&LossVector::new(vec![0.5; n], 1.0)?, &spec)?.value;
    Ok(StylizedTrial {
        ones,
        risk_f2,
        risk_f1,
    })
}

/// Fraction of `trials` independent samples on which empirical CVaR
/// minimization selects `f2`. Trial `i` uses the seed `derive_seed(seed, i)`.
pub fn stylized_experiment(
    n: usize,
    epsilon: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check(n, epsilon, alpha)?;
    if trials == 0 {
        return Err(RiskError::InvalidParameter(
            "trials must be positive".into(),
        ));
    }
    let mut hits = 0usize;
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        if stylized_trial(n, epsilon, alpha, &mut rng)?.picks_f2() {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f2_risk_is_capped_tail_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(n, alpha) in &[(20usize, 0.9), (37, 0.6), (50, 0.3)] {
            for _ in 0..50 {
                let t = stylized_trial(n, 0.1, alpha, &mut rng).unwrap();
                let want = (t.ones as f64 / (n as f64 * alpha)).min(1.0);
                assert!((t.risk_f2 - want).abs() < 1e-9, "{t:?} vs {want}");
                assert!((t.risk_f1 - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_and_in_unit_interval() {
        let a = stylized_experiment(40, 0.1, 0.9, 200, 7).unwrap();
        assert_eq!(a, stylized_experiment(40, 0.1, 0.9, 200, 7).unwrap());
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn invalid_inputs() {
        assert!(stylized_experiment(0, 0.1, 0.9, 10, 1).is_err());
        assert!(stylized_experiment(10, 0.5, 0.9, 10, 1).is_err());
        assert!(stylized_experiment(10, 0.1, 0.0, 10, 1).is_err());
        assert!(stylized_experiment(10, 0.1, 0.9, 0, 1).is_err());
    }
}
