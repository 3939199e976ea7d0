#![allow(dead_code)]

use oce_core::{Disutility, LossVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random losses with `1 <= n <= max_n` and a bound in `[0.5, 10]`. About a
/// fifth of the draws are rounded to a coarse lattice so that ties occur.
pub fn random_losses(rng: &mut ChaCha8Rng, max_n: usize) -> LossVector {
    let n = rng.gen_range(1..=max_n);
    let m: f64 = rng.gen_range(0.5..10.0);
    let coarse = rng.gen_bool(0.2);
    let values = (0..n)
        .map(|_| {
            let v = rng.gen_range(0.0..=m);
            if coarse {
                (v * 4.0 / m).round() * m / 4.0
            } else {
                v
            }
        })
        .collect();
    LossVector::new(values, m).unwrap()
}

/// One disutility of every built-in kind, with random parameters that keep
/// the mean-variance spec valid on `[-m, m]`.
pub fn all_specs(rng: &mut ChaCha8Rng, m: f64) -> Vec<Disutility> {
    vec![
        Disutility::Identity,
        Disutility::Entropic {
            gamma: rng.gen_range(0.05..2.0),
        },
        Disutility::MeanVariance {
            c: rng.gen_range(0.01..=1.0) / (2.0 * m),
        },
        Disutility::CVaR {
            alpha: rng.gen_range(0.01..=1.0),
        },
        Disutility::SoftCVaR {
            gamma1: rng.gen_range(1.0..5.0),
            gamma2: rng.gen_range(0.0..1.0),
        },
    ]
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Direct evaluation of `phi`, independent of the library.
pub fn phi(spec: &Disutility, t: f64) -> f64 {
    match *spec {
        Disutility::Identity => t,
        Disutility::Entropic { gamma } => (gamma * t).exp_m1() / gamma,
        Disutility::MeanVariance { c } => t + c * t * t,
        Disutility::CVaR { alpha } => t.max(0.0) / alpha,
        Disutility::SoftCVaR { gamma1, gamma2 } => gamma1 * t.max(0.0) + gamma2 * t.min(0.0),
    }
}

pub fn oce_objective(spec: &Disutility, values: &[f64], lambda: f64) -> f64 {
    let n = values.len() as f64;
    lambda + values.iter().map(|f| phi(spec, f - lambda)).sum::<f64>() / n
}

pub fn roce_objective(spec: &Disutility, values: &[f64], lambda: f64) -> f64 {
    let n = values.len() as f64;
    lambda - values.iter().map(|f| phi(spec, lambda - f)).sum::<f64>() / n
}

/// Objectives on a dense grid over `[0, m]`, evaluated in `O(1)` per point
/// from prefix sums over the sorted losses.
pub struct GridOracle {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
    exp_sum: f64,
    neg_exp_sum: f64,
    spec: Disutility,
}

impl GridOracle {
    pub fn new(spec: Disutility, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = vec![0.0];
        let mut prefix_sq = vec![0.0];
        for v in &sorted {
            prefix.push(prefix.last().unwrap() + v);
            prefix_sq.push(prefix_sq.last().unwrap() + v * v);
        }
        let (exp_sum, neg_exp_sum) = match spec {
            Disutility::Entropic { gamma } => (
                sorted.iter().map(|f| (gamma * f).exp()).sum(),
                sorted.iter().map(|f| (-gamma * f).exp()).sum(),
            ),
            _ => (0.0, 0.0),
        };
        GridOracle {
            sorted,
            prefix,
            prefix_sq,
            exp_sum,
            neg_exp_sum,
            spec,
        }
    }

    /// Sum of `phi(s * (f_i - lambda))` for `s = +1` (OCE) or `-1` (inverted).
    /// `below` is the number of losses `< lambda`.
    fn phi_sum(&self, lambda: f64, s: f64, below: usize) -> f64 {
        let n = self.sorted.len();
        let total = self.prefix[n];
        let lo_sum = self.prefix[below] - below as f64 * lambda;
        let hi_sum = (total - self.prefix[below]) - (n - below) as f64 * lambda;
        let dev_sum = total - n as f64 * lambda;
        match self.spec {
            Disutility::Identity => s * dev_sum,
            Disutility::Entropic { gamma } => {
                let e = if s > 0.0 {
                    (-gamma * lambda).exp() * self.exp_sum
                } else {
                    (gamma * lambda).exp() * self.neg_exp_sum
                };
                (e - n as f64) / gamma
            }
            Disutility::MeanVariance { c } => {
                let sq = self.prefix_sq[n] - 2.0 * lambda * total + n as f64 * lambda * lambda;
                s * dev_sum + c * sq
            }
            Disutility::CVaR { alpha } => {
                let pos = if s > 0.0 { hi_sum } else { -lo_sum };
                pos / alpha
            }
            Disutility::SoftCVaR { gamma1, gamma2 } => {
                let (pos, neg) = if s > 0.0 {
                    (hi_sum, lo_sum)
                } else {
                    (-lo_sum, -hi_sum)
                };
                gamma1 * pos + gamma2 * neg
            }
        }
    }

    /// `(best OCE, best inverted OCE)` over `points + 1` equally spaced
    /// anchors in `[0, m]` plus every loss value.
    pub fn search(&self, m: f64, points: usize) -> (f64, f64) {
        let n = self.sorted.len() as f64;
        let mut oce = f64::INFINITY;
        let mut roce = f64::NEG_INFINITY;
        let mut below = 0;
        let mut visit = |lambda: f64, below: usize| {
            oce = oce.min(lambda + self.phi_sum(lambda, 1.0, below) / n);
            roce = roce.max(lambda - self.phi_sum(lambda, -1.0, below) / n);
        };
        for i in 0..=points {
            let lambda = m * i as f64 / points as f64;
            while below < self.sorted.len() && self.sorted[below] < lambda {
                below += 1;
            }
            visit(lambda, below);
        }
        for (i, &f) in self.sorted.iter().enumerate() {
            visit(f, i);
        }
        (oce, roce)
    }
}
