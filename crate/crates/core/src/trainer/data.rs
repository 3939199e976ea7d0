use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};

/// Two Gaussian clusters with label noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTask {
    pub n_train: usize,
    pub n_test: usize,
    pub dimension: usize,
    pub class_separation: f64,
    pub label_noise_rate: f64,
    pub seed: u64,
}

impl SyntheticTask {
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(RiskError::InvalidParameter(m));
        if self.n_train == 0 || self.n_test == 0 || self.dimension == 0 {
            return bad("n_train, n_test and dimension must be positive".into());
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return bad(format!(
                "class_separation must be positive, got {}",
                self.class_separation
            ));
        }
        if !(0.0..0.5).contains(&self.label_noise_rate) {
            return bad(format!(
                "label_noise_rate must lie in [0, 0.5), got {}",
                self.label_noise_rate
            ));
        }
        Ok(())
    }
}

/// Feature rows stored contiguously, labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dimension: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(dimension: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if dimension == 0 || features.len() != dimension * labels.len() {
            return Err(RiskError::InvalidParameter(format!(
                "{} features do not form {} rows of dimension {dimension}",
                features.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(RiskError::InvalidParameter(
                "labels must be +1 or -1".into(),
            ));
        }
        Ok(Dataset {
            dimension,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Dataset,
    pub test: Dataset,
    /// Unit vector along which the cluster means are separated.
    pub direction: Vec<f64>,
}

/// Cluster means sit at `+-(class_separation / 2) * u` for a random unit
/// vector `u`, with identity covariance. Each label is then flipped with
/// probability `label_noise_rate`. The same task always yields the same data.
pub fn make_synthetic(task: &SyntheticTask) -> Result<SyntheticData> {
    task.check()?;
    let d = task.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let mut direction: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        direction.iter_mut().for_each(|v| *v /= norm);
    } else {
        direction[0] = 1.0;
    }
    let half = task.class_separation / 2.0;

    let mut draw = |count: usize| -> Dataset {
        let mut features = Vec::with_capacity(count * d);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let y: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            for u in &direction {
                let noise: f64 = rng.sample(StandardNormal);
                features.push(y * half * u + noise);
            }
            let flip = rng.gen::<f64>() < task.label_noise_rate;
            labels.push(if flip { -y } else { y });
        }
        Dataset {
            dimension: d,
            features,
            labels,
        }
    };
    let train = draw(task.n_train);
    let test = draw(task.n_test);
    Ok(SyntheticData {
        train,
        test,
        direction,
    })
}
