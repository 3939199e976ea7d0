use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, RiskError};
use crate::seed::derive_seed;

/// Losses of a finite hypothesis class on a fixed sample: one row per
/// hypothesis, one column per sample point, entries in `[0, M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteClassLosses {
    rows: Vec<Vec<f64>>,
    bound_m: f64,
}

impl FiniteClassLosses {
    pub fn new(rows: Vec<Vec<f64>>, bound_m: f64) -> Result<Self> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || n == 0 {
            return Err(RiskError::Empty);
        }
        if !(bound_m > 0.0 && bound_m.is_finite()) {
            return Err(RiskError::InvalidParameter(format!(
                "bound M must be positive and finite, got {bound_m}"
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(RiskError::InvalidParameter(format!(
                    "row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some((index, &value)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v >= 0.0 && **v <= bound_m))
            {
                return Err(RiskError::LossOutOfRange {
                    index: r * n + index,
                    value,
                    bound: bound_m,
                });
            }
        }
        Ok(FiniteClassLosses { rows, bound_m })
    }

    /// Bound taken as the largest entry (or 1 if all entries are 0).
    pub fn with_observed_bound(rows: Vec<Vec<f64>>) -> Result<Self> {
        let max = rows.iter().flatten().copied().fold(0.0, f64::max);
        Self::new(rows, if max > 0.0 { max } else { 1.0 })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn hypotheses(&self) -> usize {
        self.rows.len()
    }

    pub fn samples(&self) -> usize {
        self.rows[0].len()
    }

    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        let mut rows = self.rows.clone();
        rows.push(row);
        *self = Self::new(rows, self.bound_m)?;
        Ok(())
    }

    /// `sup_f (1/n) sum_i sign_i f(Z_i)` over the rows.
    fn sup_correlation(&self, signs: &[f64]) -> f64 {
        let n = signs.len() as f64;
        self.rows
            .iter()
            .map(|row| row.iter().zip(signs).map(|(f, s)| f * s).sum::<f64>() / n)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Monte-Carlo estimate of the empirical Rademacher average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherEstimate {
    pub estimate: f64,
    pub mc_std_error: f64,
}

/// Averages the exact supremum over `num_draws` sign vectors. Draw `j` uses
/// its own generator seeded from `(seed, j)`, so the result does not depend
/// on how rayon splits the draws.
pub fn rademacher_mc(
    losses: &FiniteClassLosses,
    num_draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    if num_draws == 0 {
        return Err(RiskError::InvalidParameter(
            "num_draws must be at least 1".into(),
        ));
    }
    let n = losses.samples();
    let sups: Vec<f64> = (0..num_draws as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j));
            let signs: Vec<f64> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            losses.sup_correlation(&signs)
        })
        .collect();
    let k = num_draws as f64;
    let estimate = sups.iter().sum::<f64>() / k;
    let mc_std_error = if num_draws > 1 {
        let var = sups
            .iter()
            .map(|s| (s - estimate) * (s - estimate))
            .sum::<f64>()
            / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(RademacherEstimate {
        estimate,
        mc_std_error,
    })
}

/// Largest sample size accepted by [`rademacher_exact`].
pub const MAX_EXACT_SAMPLES: usize = 24;

/// Exact Rademacher average by enumerating all `2^n` sign vectors.
pub fn rademacher_exact(losses: &FiniteClassLosses) -> Result<f64> {
    let n = losses.samples();
    if n > MAX_EXACT_SAMPLES {
        return Err(RiskError::InvalidParameter(format!(
            "exact enumeration needs n <= {MAX_EXACT_SAMPLES}, got {n}"
        )));
    }
    let total: f64 = (0u64..1 << n)
        .into_par_iter()
        .map(|mask| {
            let signs: Vec<f64> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            losses.sup_correlation(&signs)
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total / (1u64 << n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_hypotheses_one_sample() {
        let c = FiniteClassLosses::new(vec![vec![0.0], vec![2.0]], 2.0).unwrap();
        assert_eq!(rademacher_exact(&c).unwrap(), 1.0);
        let c = FiniteClassLosses::new(vec![vec![1.0], vec![2.0]], 2.0).unwrap();
        assert_eq!(rademacher_exact(&c).unwrap(), 0.5);
    }

    #[test]
    fn single_hypothesis_is_zero() {
        let c = FiniteClassLosses::new(vec![vec![0.3, 0.9, 0.1, 0.5]], 1.0).unwrap();
        assert!(rademacher_exact(&c).unwrap().abs() < 1e-15);
        let mc = rademacher_mc(&c, 20_000, 3).unwrap();
        assert!(mc.estimate.abs() < 4.0 * mc.mc_std_error);
    }

    #[test]
    fn deterministic_given_seed() {
        let c = FiniteClassLosses::new(vec![vec![0.3, 0.9], vec![0.8, 0.2]], 1.0).unwrap();
        assert_eq!(
            rademacher_mc(&c, 500, 11).unwrap(),
            rademacher_mc(&c, 500, 11).unwrap()
        );
        assert_ne!(
            rademacher_mc(&c, 500, 11).unwrap(),
            rademacher_mc(&c, 500, 12).unwrap()
        );
    }

    #[test]
    fn single_draw_has_zero_error() {
        let c = FiniteClassLosses::new(vec![vec![0.3]], 1.0).unwrap();
        assert_eq!(rademacher_mc(&c, 1, 0).unwrap().mc_std_error, 0.0);
        assert!(rademacher_mc(&c, 0, 0).is_err());
    }

    #[test]
    fn rejects_ragged_or_out_of_range() {
        assert!(FiniteClassLosses::new(vec![vec![0.1, 0.2], vec![0.3]], 1.0).is_err());
        assert!(FiniteClassLosses::new(vec![vec![1.5]], 1.0).is_err());
        assert!(FiniteClassLosses::new(vec![], 1.0).is_err());
        assert!(FiniteClassLosses::new(vec![vec![]], 1.0).is_err());
        let mut c = FiniteClassLosses::new(vec![vec![0.1]], 1.0).unwrap();
        assert!(c.push_row(vec![2.0]).is_err());
        assert_eq!(c.hypotheses(), 1);
    }

    #[test]
    fn exact_rejects_large_samples() {
        let c = FiniteClassLosses::new(vec![vec![0.5; 30]], 1.0).unwrap();
        assert!(rademacher_exact(&c).is_err());
    }
}
