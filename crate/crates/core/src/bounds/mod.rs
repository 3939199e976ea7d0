//! Generalization bounds for empirical (inverted) OCE minimization.
//!
//! Every bound is a closed-form expression in a handful of scalars: the
//! Lipschitz constant of the disutility, an estimate of the expected
//! Rademacher average, the loss bound `M`, the sample size `n` and the
//! confidence `delta`. The Rademacher average itself is estimated for finite
//! hypothesis classes in [`rademacher`].

pub mod rademacher;
pub mod tail;

use serde::Serialize;

use crate::error::{Result, RiskError};

pub use rademacher::{rademacher_exact, rademacher_mc, FiniteClassLosses, RademacherEstimate};
pub use tail::{binomial_tail_exact, bkl, cvar_excess_risk_bracket, ExcessRiskBracket};

/// Scalars entering the bounds.
///
/// `r_avg` and `sigma_avg` are the expected loss and loss deviation of the
/// expected-loss minimizer (or any fixed comparator); `sigma_n_eim` is the
/// empirical loss deviation of the inverted-OCE minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub lip: f64,
    pub rad: f64,
    pub bound_m: f64,
    pub n: u64,
    pub delta: f64,
    pub r_avg: Option<f64>,
    pub sigma_avg: Option<f64>,
    pub sigma_n_eim: Option<f64>,
}

impl BoundInputs {
    pub fn new(lip: f64, rad: f64, bound_m: f64, n: u64, delta: f64) -> Result<Self> {
        let b = BoundInputs {
            lip,
            rad,
            bound_m,
            n,
            delta,
            r_avg: None,
            sigma_avg: None,
            sigma_n_eim: None,
        };
        b.check()?;
        Ok(b)
    }

    pub fn with_comparator(mut self, r_avg: f64, sigma_avg: f64) -> Self {
        self.r_avg = Some(r_avg);
        self.sigma_avg = Some(sigma_avg);
        self
    }

    pub fn with_eim_deviation(mut self, sigma_n_eim: f64) -> Self {
        self.sigma_n_eim = Some(sigma_n_eim);
        self
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(RiskError::InvalidParameter(m));
        if !(self.lip >= 1.0 && self.lip.is_finite()) {
            return bad(format!("lip must be >= 1, got {}", self.lip));
        }
        if !(self.rad >= 0.0 && self.rad.is_finite()) {
            return bad(format!("rad must be >= 0, got {}", self.rad));
        }
        if !(self.bound_m > 0.0 && self.bound_m.is_finite()) {
            return bad(format!("M must be positive, got {}", self.bound_m));
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        for (name, v) in [
            ("r_avg", self.r_avg),
            ("sigma_avg", self.sigma_avg),
            ("sigma_n_eim", self.sigma_n_eim),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be >= 0, got {v}"));
                }
            }
        }
        Ok(())
    }

    fn root_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    /// `M (2 + sqrt(log(2/delta))) / sqrt(n)`.
    fn deviation_term(&self) -> f64 {
        self.bound_m * (2.0 + (2.0 / self.delta).ln().sqrt()) / self.root_n()
    }
}

/// Uniform deviation `sup_f |OCE(f) - OCE_n(f)|`, holding with probability
/// `1 - delta`: `Lip * (2 Rad + M (2 + sqrt(log(2/delta))) / sqrt(n))`.
/// The same bound holds for inverted OCEs.
pub fn uniform_convergence_bound(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    Ok(b.lip * (2.0 * b.rad + b.deviation_term()))
}

/// Excess OCE of the empirical OCE minimizer over the population OCE
/// minimizer; twice the uniform deviation.
pub fn excess_oce_bound(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    Ok(b.lip * (4.0 * b.rad + 2.0 * b.deviation_term()))
}

/// Expected-loss guarantees for the empirical OCE and inverted-OCE minimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedLossBounds {
    /// Lipschitz-scaled bound through the mean-based characterization.
    pub naive: f64,
    /// Variance-based bound for the OCE minimizer.
    pub eom: f64,
    /// Variance-based bound for the inverted-OCE minimizer.
    pub eim: f64,
}

pub fn naive_expected_loss_bound(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    let r_avg = b.r_avg.ok_or(RiskError::MissingBoundInput("r_avg"))?;
    Ok(b.lip * (r_avg + 4.0 * b.rad + 2.0 * b.deviation_term()))
}

pub fn eom_expected_loss_bound(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    let r_avg = b.r_avg.ok_or(RiskError::MissingBoundInput("r_avg"))?;
    let sigma = b
        .sigma_avg
        .ok_or(RiskError::MissingBoundInput("sigma_avg"))?;
    Ok(r_avg
        + 0.5 * b.lip * sigma
        + 4.0 * b.rad
        + 4.0 * b.bound_m * (3.0 / b.delta).ln().sqrt() / b.root_n())
}

pub fn eim_expected_loss_bound(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    let r_avg = b.r_avg.ok_or(RiskError::MissingBoundInput("r_avg"))?;
    let sigma_n = b
        .sigma_n_eim
        .ok_or(RiskError::MissingBoundInput("sigma_n_eim"))?;
    Ok(r_avg
        + 4.0 * b.rad
        + 4.0 * b.bound_m * (2.0 / b.delta).ln().sqrt() / b.root_n()
        + 0.5 * b.lip * sigma_n)
}

pub fn expected_loss_bounds(b: &BoundInputs) -> Result<ExpectedLossBounds> {
    Ok(ExpectedLossBounds {
        naive: naive_expected_loss_bound(b)?,
        eom: eom_expected_loss_bound(b)?,
        eim: eim_expected_loss_bound(b)?,
    })
}

/// All bounds evaluated at one set of inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub uniform_conv: f64,
    pub excess_oce: f64,
    pub naive_expected_loss: f64,
    pub eom_expected_loss: f64,
    pub eim_expected_loss: f64,
}

impl BoundReport {
    pub fn evaluate(b: &BoundInputs) -> Result<Self> {
        let e = expected_loss_bounds(b)?;
        Ok(BoundReport {
            uniform_conv: uniform_convergence_bound(b)?,
            excess_oce: excess_oce_bound(b)?,
            naive_expected_loss: e.naive,
            eom_expected_loss: e.eom,
            eim_expected_loss: e.eim,
        })
    }
}
