//! Empirical OCE and inverted-OCE risks of a loss sample.
//!
//! Both risks are one-dimensional convex problems in the anchor `lambda`:
//!
//! ```text
//! OCE_n  = min_{lambda in [0, M]} lambda + mean_i phi(f_i - lambda)
//! ROCE_n = max_{lambda in [0, M]} lambda - mean_i phi(lambda - f_i)
//! ```
//!
//! The restriction to `[0, M]` loses nothing when every loss lies in `[0, M]`.
//! Closed forms are used where they exist; everything else goes through a
//! ternary search on the convex objective.

use serde::Serialize;

use crate::disutility::Disutility;
use crate::error::{Result, RiskError};

/// Nonnegative samplewise losses with a declared upper bound `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    values: Vec<f64>,
    bound_m: f64,
}

impl LossVector {
    pub fn new(values: Vec<f64>, bound_m: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(RiskError::Empty);
        }
        if !(bound_m > 0.0 && bound_m.is_finite()) {
            return Err(RiskError::InvalidParameter(format!(
                "bound M must be positive and finite, got {bound_m}"
            )));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && **v <= bound_m))
        {
            return Err(RiskError::LossOutOfRange {
                index,
                value,
                bound: bound_m,
            });
        }
        Ok(LossVector { values, bound_m })
    }

    /// Uses the largest observed loss as the bound (or 1 if every loss is 0).
    pub fn with_observed_bound(values: Vec<f64>) -> Result<Self> {
        let max = values.iter().copied().fold(0.0, f64::max);
        let bound = if max > 0.0 { max } else { 1.0 };
        Self::new(values, bound)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How an [`OceResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    ClosedForm,
    TernarySearch,
}

/// Whether closed forms may be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverPolicy {
    #[default]
    Auto,
    /// Always run the ternary search, even where a closed form exists.
    Ternary,
}

/// A risk value together with the anchor attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OceResult {
    pub value: f64,
    pub lambda_star: f64,
    pub solver: Solver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// Risk-averse OCE, a minimization over the anchor.
    Averse,
    /// Inverted OCE, a maximization over the anchor.
    Inverted,
}

/// Which end of the sorted sample [`k_slice_average`] averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slice {
    Bottom,
    Top,
}

/// Mean and standard deviation of the losses, with divisor `n`.
pub fn loss_moments(losses: &LossVector) -> (f64, f64) {
    let m = mean(losses.values());
    let var = losses
        .values()
        .iter()
        .map(|v| (v - m) * (v - m))
        .sum::<f64>()
        / losses.len() as f64;
    (m, var.sqrt())
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Empirical OCE risk `min_lambda lambda + mean phi(f_i - lambda)`.
pub fn oce_empirical(losses: &LossVector, spec: &Disutility) -> Result<OceResult> {
    oce_empirical_with(losses, spec, SolverPolicy::Auto)
}

pub fn oce_empirical_with(
    losses: &LossVector,
    spec: &Disutility,
    policy: SolverPolicy,
) -> Result<OceResult> {
    spec.check()?;
    Ok(Sample::uniform(losses).solve(spec, Direction::Averse, policy))
}

/// Empirical inverted OCE risk `max_lambda lambda - mean phi(lambda - f_i)`.
pub fn inverted_oce_empirical(losses: &LossVector, spec: &Disutility) -> Result<OceResult> {
    inverted_oce_empirical_with(losses, spec, SolverPolicy::Auto)
}

pub fn inverted_oce_empirical_with(
    losses: &LossVector,
    spec: &Disutility,
    policy: SolverPolicy,
) -> Result<OceResult> {
    spec.check()?;
    Ok(Sample::uniform(losses).solve(spec, Direction::Inverted, policy))
}

/// Average of the `k` smallest or `k` largest losses.
pub fn k_slice_average(losses: &LossVector, k: usize, which: Slice) -> Result<f64> {
    let n = losses.len();
    if k == 0 || k > n {
        return Err(RiskError::KOutOfRange { k, n });
    }
    let sorted = sorted_copy(losses.values());
    let slice = match which {
        Slice::Bottom => &sorted[..k],
        Slice::Top => &sorted[n - k..],
    };
    Ok(slice.iter().sum::<f64>() / k as f64)
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

/// A discrete distribution on `[0, bound]`: uniform weights unless given.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample<'a> {
    values: &'a [f64],
    weights: Option<&'a [f64]>,
    bound: f64,
}

impl<'a> Sample<'a> {
    pub(crate) fn uniform(losses: &'a LossVector) -> Self {
        Sample {
            values: losses.values(),
            weights: None,
            bound: losses.bound_m(),
        }
    }

    /// Weights must be nonnegative and sum to one.
    pub(crate) fn weighted(values: &'a [f64], weights: &'a [f64], bound: f64) -> Self {
        debug_assert_eq!(values.len(), weights.len());
        Sample {
            values,
            weights: Some(weights),
            bound,
        }
    }

    fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        match self.weights {
            None => self.values.iter().map(|&v| g(v)).sum::<f64>() / self.values.len() as f64,
            Some(w) => self.values.iter().zip(w).map(|(&v, &p)| p * g(v)).sum(),
        }
    }

    fn mean(&self) -> f64 {
        match self.weights {
            None => mean(self.values),
            Some(_) => self.expect(|v| v),
        }
    }

    /// Anchors for which every argument of `phi` stays in its validity domain.
    fn anchor_range(&self, spec: &Disutility, dir: Direction) -> (f64, f64) {
        let lower = spec.validity_lower();
        if lower == f64::NEG_INFINITY {
            return (0.0, self.bound);
        }
        match dir {
            Direction::Averse => {
                let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
                (0.0, (min - lower).min(self.bound))
            }
            Direction::Inverted => {
                let max = self.values.iter().copied().fold(0.0, f64::max);
                ((max + lower).max(0.0), self.bound)
            }
        }
    }

    /// The function minimized over the anchor: `zeta` for the OCE and the
    /// negated objective for the inverted OCE.
    fn cost(&self, spec: &Disutility, dir: Direction, lambda: f64) -> f64 {
        match dir {
            Direction::Averse => lambda + self.expect(|v| spec.value(v - lambda)),
            Direction::Inverted => -lambda + self.expect(|v| spec.value(lambda - v)),
        }
    }

    pub(crate) fn solve(
        &self,
        spec: &Disutility,
        dir: Direction,
        policy: SolverPolicy,
    ) -> OceResult {
        let (lo, hi) = self.anchor_range(spec, dir);
        if policy == SolverPolicy::Auto {
            if let Some(r) = self.closed_form(spec, dir, lo, hi) {
                return r;
            }
        }
        self.ternary(spec, dir, lo, hi)
    }

    fn closed_form(
        &self,
        spec: &Disutility,
        dir: Direction,
        lo: f64,
        hi: f64,
    ) -> Option<OceResult> {
        let sign = match dir {
            Direction::Averse => 1.0,
            Direction::Inverted => -1.0,
        };
        let closed = |value: f64, lambda_star: f64| OceResult {
            value,
            lambda_star,
            solver: Solver::ClosedForm,
        };
        match *spec {
            Disutility::Identity => Some(closed(self.mean(), 0.0)),
            Disutility::Entropic { gamma } => {
                let value = sign * log_mean_exp(self, sign * gamma) / gamma;
                Some(closed(value, value.clamp(0.0, self.bound)))
            }
            Disutility::MeanVariance { c } => {
                let m = self.mean();
                if m < lo || m > hi {
                    return None;
                }
                let var = self.expect(|v| (v - m) * (v - m));
                Some(closed(m + sign * c * var, m))
            }
            Disutility::CVaR { alpha } => {
                if self.weights.is_some() {
                    return None;
                }
                let n = self.values.len();
                let k = (n as f64 * alpha).round();
                if k < 1.0 || (n as f64 * alpha - k).abs() > 1e-9 {
                    return None;
                }
                let k = k as usize;
                let sorted = sorted_copy(self.values);
                let r = match dir {
                    Direction::Averse => closed(
                        sorted[n - k..].iter().sum::<f64>() / k as f64,
                        sorted[n - k],
                    ),
                    Direction::Inverted => {
                        closed(sorted[..k].iter().sum::<f64>() / k as f64, sorted[k - 1])
                    }
                };
                Some(r)
            }
            Disutility::SoftCVaR { .. } => None,
        }
    }

    /// Ternary search on `[lo, hi]`; ties move the bracket left so flat
    /// stretches report their smallest minimizer.
    fn ternary(&self, spec: &Disutility, dir: Direction, lo: f64, hi: f64) -> OceResult {
        let cost = |l: f64| self.cost(spec, dir, l);
        let tol = 1e-12 * (1.0 + self.bound);
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            if b - a < tol {
                break;
            }
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if cost(m1) <= cost(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let (fa, fb) = (cost(a), cost(b));
        let (lambda_star, best) = if fa <= fb { (a, fa) } else { (b, fb) };
        let value = match dir {
            Direction::Averse => best,
            Direction::Inverted => -best,
        };
        OceResult {
            value,
            lambda_star,
            solver: Solver::TernarySearch,
        }
    }
}

/// `log E[exp(scale * f)]`, shifted by the maximum exponent.
fn log_mean_exp(sample: &Sample<'_>, scale: f64) -> f64 {
    let shift = sample
        .values
        .iter()
        .map(|&v| scale * v)
        .fold(f64::NEG_INFINITY, f64::max);
    shift + sample.expect(|v| (scale * v - shift).exp()).ln()
}
