//! Per-batch risk objectives for a logistic model and their gradients.
//!
//! The model scores `s = w . x + b` and incurs the clipped cross-entropy
//! `min(log(1 + exp(-y s)), M)`. Gradients of the OCE-type objectives use the
//! envelope rule: solve for the optimal anchor on the batch, then weight each
//! sample's loss gradient by the disutility slope at its deviation from the
//! anchor.

use serde::{Deserialize, Serialize};

use crate::disutility::Disutility;
use crate::error::{Result, RiskError};
use crate::risk::{inverted_oce_empirical, loss_moments, mean, oce_empirical, LossVector};

use super::data::Dataset;

/// Floor on the batch standard deviation in the variance-penalty gradient.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// Mean loss.
    Erm,
    /// Empirical OCE of the batch losses.
    Eom { spec: Disutility },
    /// Empirical inverted OCE of the batch losses.
    Eim { spec: Disutility },
    /// Mean plus `penalty_lambda` times the standard deviation.
    Svp { penalty_lambda: f64 },
}

impl Objective {
    pub fn check(&self) -> Result<()> {
        match self {
            Objective::Erm => Ok(()),
            Objective::Eom { spec } | Objective::Eim { spec } => spec.check(),
            Objective::Svp { penalty_lambda } => {
                if *penalty_lambda >= 0.0 && penalty_lambda.is_finite() {
                    Ok(())
                } else {
                    Err(RiskError::InvalidParameter(format!(
                        "penalty_lambda must be nonnegative, got {penalty_lambda}"
                    )))
                }
            }
        }
    }

    /// CVaR level used when reporting tail losses for this objective.
    pub fn evaluation_alpha(&self) -> f64 {
        match self {
            Objective::Eom { spec } | Objective::Eim { spec } => {
                spec.quantile_fraction().unwrap_or(DEFAULT_EVAL_ALPHA)
            }
            _ => DEFAULT_EVAL_ALPHA,
        }
    }
}

/// CVaR level reported for objectives without their own.
pub const DEFAULT_EVAL_ALPHA: f64 = 0.2;

/// Logistic model parameters: `dimension` weights followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub params: Vec<f64>,
}

impl LogisticModel {
    pub fn zeros(dimension: usize) -> Self {
        LogisticModel {
            params: vec![0.0; dimension + 1],
        }
    }

    pub fn dimension(&self) -> usize {
        self.params.len() - 1
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let d = self.dimension();
        self.params[..d]
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.params[d]
    }

    /// Clipped cross-entropy and its derivative with respect to the score.
    /// The derivative is zero on the clipped branch.
    pub fn sample_loss(&self, x: &[f64], y: f64, clip_m: f64) -> (f64, f64) {
        let margin = y * self.score(x);
        // log(1 + e^{-m}) computed without overflow.
        let ce = (-margin).max(0.0) + (-margin.abs()).exp().ln_1p();
        if ce >= clip_m {
            (clip_m, 0.0)
        } else {
            // d/ds log(1 + e^{-ys}) = -y * sigmoid(-ys)
            (ce, -y * sigmoid(-margin))
        }
    }

    /// Clipped losses of the given rows.
    pub fn losses(
        &self,
        data: &Dataset,
        rows: impl IntoIterator<Item = usize>,
        clip_m: f64,
    ) -> Vec<f64> {
        rows.into_iter()
            .map(|i| self.sample_loss(data.row(i), data.label(i), clip_m).0)
            .collect()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Value of the objective on a batch and its gradient in parameter space.
pub fn batch_objective(
    model: &LogisticModel,
    data: &Dataset,
    batch: &[usize],
    objective: &Objective,
    clip_m: f64,
) -> Result<(f64, Vec<f64>)> {
    evaluate(model, data, batch, objective, clip_m, true)
}

/// Value of the objective on a batch.
pub fn batch_value(
    model: &LogisticModel,
    data: &Dataset,
    batch: &[usize],
    objective: &Objective,
    clip_m: f64,
) -> Result<f64> {
    evaluate(model, data, batch, objective, clip_m, false).map(|(v, _)| v)
}

fn evaluate(
    model: &LogisticModel,
    data: &Dataset,
    batch: &[usize],
    objective: &Objective,
    clip_m: f64,
    want_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(RiskError::Empty);
    }
    let n = batch.len() as f64;
    let (losses, slopes): (Vec<f64>, Vec<f64>) = batch
        .iter()
        .map(|&i| model.sample_loss(data.row(i), data.label(i), clip_m))
        .unzip();
    if let Some(bad) = losses.iter().find(|l| !l.is_finite()) {
        return Ok((*bad, vec![f64::NAN; model.params.len()]));
    }

    let (value, weights) = match objective {
        Objective::Erm => (mean(&losses), vec![1.0 / n; losses.len()]),
        Objective::Svp { penalty_lambda } => {
            let lv = LossVector::new(losses.clone(), clip_m)?;
            let (m, sigma) = loss_moments(&lv);
            let scale = penalty_lambda / sigma.max(SIGMA_FLOOR);
            let w = losses.iter().map(|l| (1.0 + scale * (l - m)) / n).collect();
            (m + penalty_lambda * sigma, w)
        }
        Objective::Eom { spec } => {
            let lv = LossVector::new(losses.clone(), clip_m)?;
            let r = oce_empirical(&lv, spec)?;
            let w = anchor_weights(spec, &losses, clip_m, |l| l - r.lambda_star);
            (r.value, w)
        }
        Objective::Eim { spec } => {
            let lv = LossVector::new(losses.clone(), clip_m)?;
            let r = inverted_oce_empirical(&lv, spec)?;
            let w = anchor_weights(spec, &losses, clip_m, |l| r.lambda_star - l);
            (r.value, w)
        }
    };

    if !want_grad {
        return Ok((value, Vec::new()));
    }
    let d = model.dimension();
    let mut grad = vec![0.0; d + 1];
    for ((&i, &w), &slope) in batch.iter().zip(&weights).zip(&slopes) {
        let coef = w * slope;
        if coef == 0.0 {
            continue;
        }
        for (g, x) in grad[..d].iter_mut().zip(data.row(i)) {
            *g += coef * x;
        }
        grad[d] += coef;
    }
    Ok((value, grad))
}

/// Sample weights `phi'(t_i) / n` where `t_i` is the signed deviation from the
/// anchor. For kinked disutilities the samples sitting on the anchor share
/// whatever mass makes the weights sum to one (the first-order condition of
/// the anchor), clamped to the subdifferential at the kink.
fn anchor_weights(
    spec: &Disutility,
    losses: &[f64],
    clip_m: f64,
    deviation: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let n = losses.len() as f64;
    let mut weights: Vec<f64> = losses
        .iter()
        .map(|&l| spec.right_derivative(deviation(l)) / n)
        .collect();
    if !spec.is_piecewise_linear() {
        return weights;
    }
    let tol = 1e-9 * (1.0 + clip_m);
    let on_anchor: Vec<usize> = losses
        .iter()
        .enumerate()
        .filter(|(_, &l)| deviation(l).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    if on_anchor.is_empty() {
        return weights;
    }
    let rest: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| !on_anchor.contains(i))
        .map(|(_, w)| w)
        .sum();
    let share = ((1.0 - rest) / on_anchor.len() as f64).clamp(
        spec.left_derivative(0.0) / n,
        spec.right_derivative(0.0) / n,
    );
    for i in on_anchor {
        weights[i] = share;
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> Dataset {
        Dataset::new(
            2,
            vec![1.0, 0.5, -0.3, 2.0, 0.8, -1.2, -1.5, 0.1, 0.0, 0.0],
            vec![1.0, -1.0, 1.0, -1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn sample_loss_at_zero_score() {
        let m = LogisticModel::zeros(2);
        let (l, g) = m.sample_loss(&[1.0, 1.0], 1.0, 20.0);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert!((g + 0.5).abs() < 1e-15);
    }

    #[test]
    fn clipping_zeroes_gradient() {
        let m = LogisticModel {
            params: vec![100.0, 0.0, 0.0],
        };
        let (l, g) = m.sample_loss(&[1.0, 0.0], -1.0, 5.0);
        assert_eq!((l, g), (5.0, 0.0));
        let (l, _) = m.sample_loss(&[1.0, 0.0], 1.0, 5.0);
        assert!(l < 1e-40);
    }

    #[test]
    fn erm_is_batch_mean() {
        let m = LogisticModel {
            params: vec![0.3, -0.7, 0.1],
        };
        let data = toy();
        let batch = [0, 1, 2, 3, 4];
        let (v, _) = batch_objective(&m, &data, &batch, &Objective::Erm, 20.0).unwrap();
        let losses = m.losses(&data, batch, 20.0);
        assert_eq!(v, losses.iter().sum::<f64>() / 5.0);
    }

    #[test]
    fn svp_zero_penalty_is_erm() {
        let m = LogisticModel {
            params: vec![0.3, -0.7, 0.1],
        };
        let data = toy();
        let batch = [4, 2, 0, 1];
        let a = batch_objective(&m, &data, &batch, &Objective::Erm, 20.0).unwrap();
        let b = batch_objective(
            &m,
            &data,
            &batch,
            &Objective::Svp {
                penalty_lambda: 0.0,
            },
            20.0,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eom_identity_is_erm() {
        let m = LogisticModel {
            params: vec![0.3, -0.7, 0.1],
        };
        let data = toy();
        let batch = [4, 2, 0, 1, 3];
        let a = batch_objective(&m, &data, &batch, &Objective::Erm, 20.0).unwrap();
        let b = batch_objective(
            &m,
            &data,
            &batch,
            &Objective::Eom {
                spec: Disutility::Identity,
            },
            20.0,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eom_value_is_oce() {
        let m = LogisticModel {
            params: vec![0.9, -0.2, 0.4],
        };
        let data = toy();
        let batch = [0, 1, 2, 3, 4];
        let spec = Disutility::CVaR { alpha: 0.4 };
        let (v, _) = batch_objective(&m, &data, &batch, &Objective::Eom { spec }, 20.0).unwrap();
        let lv = LossVector::new(m.losses(&data, batch, 20.0), 20.0).unwrap();
        assert_eq!(v, oce_empirical(&lv, &spec).unwrap().value);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let m = LogisticModel::zeros(2);
        assert_eq!(
            batch_objective(&m, &toy(), &[], &Objective::Erm, 20.0),
            Err(RiskError::Empty)
        );
    }

    #[test]
    fn cvar_weights_sum_to_one_for_fractional_levels() {
        // n * alpha = 1.5: the anchor sample carries half a share.
        let spec = Disutility::CVaR { alpha: 0.5 };
        let losses = [1.0, 2.0, 3.0];
        let w = anchor_weights(&spec, &losses, 20.0, |l| l - 2.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = toy();
        let batch = [0, 1, 2, 3, 4];
        for obj in [
            Objective::Erm,
            Objective::Svp {
                penalty_lambda: 0.7,
            },
            Objective::Eom {
                spec: Disutility::Entropic { gamma: 0.8 },
            },
            Objective::Eim {
                spec: Disutility::Entropic { gamma: 0.8 },
            },
        ] {
            let m = LogisticModel {
                params: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let (_, g) = batch_objective(&m, &data, &batch, &obj, 20.0).unwrap();
            for (j, &gj) in g.iter().enumerate() {
                let h = 1e-5;
                let mut up = m.clone();
                up.params[j] += h;
                let mut dn = m.clone();
                dn.params[j] -= h;
                let fd = (batch_value(&up, &data, &batch, &obj, 20.0).unwrap()
                    - batch_value(&dn, &data, &batch, &obj, 20.0).unwrap())
                    / (2.0 * h);
                assert!(
                    (fd - gj).abs() < 1e-6 * (1.0 + gj.abs()),
                    "{obj:?} {j}: {fd} vs {gj}"
                );
            }
        }
    }

    #[test]
    fn objective_json() {
        let o: Objective = serde_json::from_str(r#"{"kind":"eom","spec":"cvar:0.2"}"#).unwrap();
        assert_eq!(
            o,
            Objective::Eom {
                spec: Disutility::CVaR { alpha: 0.2 }
            }
        );
        let o: Objective = serde_json::from_str(r#"{"kind":"svp","penalty_lambda":0.5}"#).unwrap();
        assert_eq!(
            o,
            Objective::Svp {
                penalty_lambda: 0.5
            }
        );
        assert!(
            serde_json::from_str::<Objective>(r#"{"kind":"eom","spec":"cvar:0.2","x":1}"#).is_err()
        );
        assert!(serde_json::from_str::<Objective>(r#"{"kind":"sgd"}"#).is_err());
        assert_eq!(o.evaluation_alpha(), 0.2);
        let soft = Objective::Eim {
            spec: Disutility::SoftCVaR {
                gamma1: 3.0,
                gamma2: 0.5,
            },
        };
        assert!((soft.evaluation_alpha() - 0.2).abs() < 1e-15);
    }
}
