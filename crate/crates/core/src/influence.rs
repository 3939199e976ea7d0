//! Influence functions of inverted OCE risks.
//!
//! The influence of a point `z*` on a statistic `rho` is the right derivative
//! of `eps -> rho((1 - eps) P + eps * delta_{z*})` at zero. Here `P` is an
//! empirical loss distribution and only the loss value `f(z*)` matters.

use crate::disutility::Disutility;
use crate::error::{Result, RiskError};
use crate::risk::{Direction, LossVector, Sample, SolverPolicy};

/// Default contamination mass for [`empirical_influence`].
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Contaminating point and mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationQuery {
    pub z_loss: f64,
    pub epsilon: f64,
}

impl ContaminationQuery {
    pub fn new(z_loss: f64, epsilon: f64) -> Result<Self> {
        if !(z_loss >= 0.0 && z_loss.is_finite()) {
            return Err(RiskError::InvalidParameter(format!(
                "z_loss must be a finite nonnegative loss, got {z_loss}"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(RiskError::InvalidParameter(format!(
                "epsilon must lie in (0, 0.5), got {epsilon}"
            )));
        }
        Ok(ContaminationQuery { z_loss, epsilon })
    }
}

/// Difference quotient `[ROCE((1-eps) P_n + eps delta_z) - ROCE(P_n)] / eps`.
///
/// The contaminated distribution is bounded by `max(M, z_loss)`, and both
/// risks are evaluated by the same weighted solver.
pub fn empirical_influence(
    losses: &LossVector,
    spec: &Disutility,
    query: &ContaminationQuery,
) -> Result<f64> {
    spec.check()?;
    let ContaminationQuery { z_loss, epsilon } =
        ContaminationQuery::new(query.z_loss, query.epsilon)?;
    let n = losses.len();
    let bound = losses.bound_m().max(z_loss);

    let base_weights = vec![1.0 / n as f64; n];
    let base = Sample::weighted(losses.values(), &base_weights, bound).solve(
        spec,
        Direction::Inverted,
        SolverPolicy::Auto,
    );

    let mut values = losses.values().to_vec();
    values.push(z_loss);
    let mut weights = vec![(1.0 - epsilon) / n as f64; n];
    weights.push(epsilon);
    let mixed = Sample::weighted(&values, &weights, bound).solve(
        spec,
        Direction::Inverted,
        SolverPolicy::Auto,
    );

    Ok((mixed.value - base.value) / epsilon)
}

/// The moments a closed-form influence function or its bound needs.
///
/// `neg_exp_moment` is `E[exp(-gamma f)]` at the entropic `gamma` in use;
/// `quantile` is the lower `alpha`-quantile `q` and `shortfall` is
/// `E[q - f]_+`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DistSummary {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub neg_exp_moment: Option<f64>,
    pub quantile: Option<f64>,
    pub shortfall: Option<f64>,
    /// Whether the loss distribution has a continuous density.
    pub continuous: bool,
}

impl DistSummary {
    /// Summary of the empirical distribution of `losses`, with the
    /// spec-dependent fields filled in for `spec`.
    pub fn from_losses(losses: &LossVector, spec: &Disutility) -> Self {
        let v = losses.values();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let variance = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let mut s = DistSummary {
            mean: Some(mean),
            variance: Some(variance),
            continuous: false,
            ..Default::default()
        };
        match *spec {
            Disutility::Entropic { gamma } => {
                s.neg_exp_moment = Some(v.iter().map(|x| (-gamma * x).exp()).sum::<f64>() / n);
            }
            Disutility::CVaR { alpha } => {
                let mut sorted = v.to_vec();
                sorted.sort_by(f64::total_cmp);
                let idx = ((n * alpha - 1e-9).ceil() as usize).clamp(1, sorted.len()) - 1;
                let q = sorted[idx];
                s.quantile = Some(q);
                s.shortfall = Some(v.iter().map(|x| (q - x).max(0.0)).sum::<f64>() / n);
            }
            _ => {}
        }
        s
    }

    /// Summary of `Uniform[lo, hi]` losses.
    pub fn uniform(lo: f64, hi: f64, spec: &Disutility) -> Self {
        let width = hi - lo;
        let mut s = DistSummary {
            mean: Some(0.5 * (lo + hi)),
            variance: Some(width * width / 12.0),
            continuous: true,
            ..Default::default()
        };
        match *spec {
            Disutility::Entropic { gamma } => {
                s.neg_exp_moment =
                    Some(((-gamma * lo).exp() - (-gamma * hi).exp()) / (gamma * width));
            }
            Disutility::CVaR { alpha } => {
                let q = lo + alpha * width;
                s.quantile = Some(q);
                s.shortfall = Some(alpha * alpha * width / 2.0);
            }
            _ => {}
        }
        s
    }
}

fn need(field: Option<f64>, name: &'static str) -> Result<f64> {
    field.ok_or(RiskError::MissingSummary(name))
}

/// Closed-form influence function of the inverted risk at `z_loss`.
///
/// For the identity disutility this is the influence of the mean,
/// `z_loss - R`. The CVaR form is only valid for continuous distributions.
pub fn closed_form_influence(spec: &Disutility, dist: &DistSummary, z_loss: f64) -> Result<f64> {
    spec.check()?;
    match *spec {
        Disutility::Identity => Ok(z_loss - need(dist.mean, "mean")?),
        Disutility::Entropic { gamma } => {
            let moment = need(dist.neg_exp_moment, "neg_exp_moment")?;
            Ok((1.0 - (-gamma * z_loss).exp() / moment) / gamma)
        }
        Disutility::MeanVariance { c } => {
            let dev = z_loss - need(dist.mean, "mean")?;
            Ok(dev + c * (need(dist.variance, "variance")? - dev * dev))
        }
        Disutility::CVaR { alpha } => {
            if !dist.continuous {
                return Err(RiskError::ContinuityRequired);
            }
            let q = need(dist.quantile, "quantile")?;
            let shortfall = need(dist.shortfall, "shortfall")?;
            Ok((shortfall - (q - z_loss).max(0.0)) / alpha)
        }
        Disutility::SoftCVaR { .. } => Err(RiskError::Unsupported("closed-form influence")),
    }
}

/// Supremum over `z_loss` of the inverted-risk influence function.
pub fn influence_bound(spec: &Disutility, dist: &DistSummary) -> Result<f64> {
    spec.check()?;
    match *spec {
        Disutility::Entropic { gamma } => Ok(1.0 / gamma),
        Disutility::MeanVariance { c } => Ok(0.75 / c + c * need(dist.variance, "variance")?),
        Disutility::CVaR { alpha } => Ok(need(dist.shortfall, "shortfall")? / alpha),
        Disutility::Identity => Err(RiskError::Unsupported("a finite influence bound")),
        Disutility::SoftCVaR { .. } => Err(RiskError::Unsupported("an influence bound")),
    }
}
