use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disutility::Disutility;
use crate::error::{Result, RiskError};
use crate::risk::{loss_moments, oce_empirical, LossVector};
use crate::seed::derive_seed;

use super::data::{make_synthetic, Dataset, SyntheticData, SyntheticTask};
use super::objective::{batch_objective, batch_value, LogisticModel, Objective};

fn default_clip() -> f64 {
    20.0
}

/// Optimization settings for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub objective: Objective,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(default = "default_clip", alias = "loss_clip_M")]
    pub loss_clip_m: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn check(&self, n_train: usize) -> Result<()> {
        let bad = |m: String| Err(RiskError::InvalidParameter(m));
        self.objective.check()?;
        if self.batch_size == 0 || self.batch_size > n_train {
            return bad(format!(
                "batch_size must lie in 1..={n_train}, got {}",
                self.batch_size
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.loss_clip_m > 0.0 && self.loss_clip_m.is_finite()) {
            return bad(format!(
                "loss_clip_m must be positive, got {}",
                self.loss_clip_m
            ));
        }
        if let Objective::Eom { spec } | Objective::Eim { spec } = self.objective {
            if -self.loss_clip_m < spec.validity_lower() {
                return bad(format!(
                    "{spec} is only a disutility on [{}, inf); loss_clip_m must not exceed {}",
                    spec.validity_lower(),
                    -spec.validity_lower()
                ));
            }
        }
        Ok(())
    }
}

/// A task together with the run settings; the JSON config format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: SyntheticTask,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub epoch: usize,
    pub train_mean: f64,
    pub test_mean: f64,
    pub train_cvar: f64,
    pub test_cvar: f64,
    pub train_std: f64,
    pub objective_value: f64,
}

/// Per-epoch metrics; row 0 is the initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    /// CVaR level of the `*_cvar` columns.
    pub eval_alpha: f64,
}

pub const TRAJECTORY_HEADER: &str =
    "epoch,train_mean,test_mean,train_cvar,test_cvar,train_std,objective_value";

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.epoch,
                format_sig9(r.train_mean),
                format_sig9(r.test_mean),
                format_sig9(r.train_cvar),
                format_sig9(r.test_cvar),
                format_sig9(r.train_std),
                format_sig9(r.objective_value),
            );
        }
        out
    }
}

/// Formats like C's `%.9g`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{v:.*}", (8 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// PyTorch-style linear-layer initialization `U(-1/sqrt(d), 1/sqrt(d))`.
fn init_model(dimension: usize, rng: &mut ChaCha8Rng) -> LogisticModel {
    let bound = 1.0 / (dimension as f64).sqrt();
    LogisticModel {
        params: (0..=dimension)
            .map(|_| rng.gen_range(-bound..bound))
            .collect(),
    }
}

fn cvar_of(losses: Vec<f64>, clip_m: f64, alpha: f64) -> Result<f64> {
    let lv = LossVector::new(losses, clip_m)?;
    Ok(oce_empirical(&lv, &Disutility::CVaR { alpha })?.value)
}

fn record(
    epoch: usize,
    model: &LogisticModel,
    data: &SyntheticData,
    cfg: &TrainConfig,
    alpha: f64,
    all_train: &[usize],
) -> Result<TrajectoryRow> {
    let m = cfg.loss_clip_m;
    let objective_value = batch_value(model, &data.train, all_train, &cfg.objective, m)?;
    if !objective_value.is_finite() {
        return Err(RiskError::Diverged {
            epoch,
            value: objective_value,
        });
    }
    let train_losses = model.losses(&data.train, 0..data.train.len(), m);
    let test_losses = model.losses(&data.test, 0..data.test.len(), m);
    let (train_mean, train_std) = loss_moments(&LossVector::new(train_losses.clone(), m)?);
    let (test_mean, _) = loss_moments(&LossVector::new(test_losses.clone(), m)?);
    Ok(TrajectoryRow {
        epoch,
        train_mean,
        test_mean,
        train_cvar: cvar_of(train_losses, m, alpha)?,
        test_cvar: cvar_of(test_losses, m, alpha)?,
        train_std,
        objective_value,
    })
}

/// Mini-batch subgradient descent with a fresh without-replacement shuffle
/// every epoch. Deterministic in `(task.seed, cfg.seed)`.
pub fn train(task: &SyntheticTask, cfg: &TrainConfig) -> Result<Trajectory> {
    let data = make_synthetic(task)?;
    train_on(&data, cfg)
}

pub fn train_on(data: &SyntheticData, cfg: &TrainConfig) -> Result<Trajectory> {
    let n = data.train.len();
    cfg.check(n)?;
    let alpha = cfg.objective.evaluation_alpha();
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut model = init_model(data.train.dimension(), &mut init_rng);
    let all: Vec<usize> = (0..n).collect();

    let mut rows = vec![record(0, &model, data, cfg, alpha, &all)?];
    let mut order = all.clone();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let (value, grad) = step_inputs(&model, &data.train, batch, cfg)?;
            if !value.is_finite() {
                return Err(RiskError::Diverged { epoch, value });
            }
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
        }
        rows.push(record(epoch, &model, data, cfg, alpha, &all)?);
    }
    Ok(Trajectory {
        rows,
        eval_alpha: alpha,
    })
}

fn step_inputs(
    model: &LogisticModel,
    data: &Dataset,
    batch: &[usize],
    cfg: &TrainConfig,
) -> Result<(f64, Vec<f64>)> {
    batch_objective(model, data, batch, &cfg.objective, cfg.loss_clip_m)
}
