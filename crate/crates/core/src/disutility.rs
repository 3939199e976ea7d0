//! Disutility functions and the scalar constants derived from them.
//!
//! A disutility `phi` is nondecreasing, convex, satisfies `phi(0) = 0` and has
//! `1` in its subdifferential at the origin. Every risk in this crate is built
//! from one of the variants of [`Disutility`], and the generalization bounds
//! consume two constants of it: the Lipschitz constant on `[-M, M]` and the
//! curvature constant `C = inf_{0<|t|<=M} (phi(t) - t) / t^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};

/// A built-in disutility function.
///
/// String form (used by the CLI and JSON configs): `identity`, `entropic:GAMMA`,
/// `meanvar:C`, `cvar:ALPHA`, `softcvar:G1,G2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Disutility {
    /// `phi(t) = t`; the OCE is the expected loss.
    Identity,
    /// `phi(t) = (e^{gamma t} - 1) / gamma`; the entropic risk.
    Entropic { gamma: f64 },
    /// `phi(t) = t + c t^2`, valid on `[-1/(2c), inf)`.
    MeanVariance { c: f64 },
    /// `phi(t) = [t]_+ / alpha`.
    CVaR { alpha: f64 },
    /// `phi(t) = gamma1 [t]_+ - gamma2 [t]_-`.
    SoftCVaR { gamma1: f64, gamma2: f64 },
}

impl Disutility {
    pub fn entropic(gamma: f64) -> Result<Self> {
        let d = Disutility::Entropic { gamma };
        d.check()?;
        Ok(d)
    }

    pub fn mean_variance(c: f64) -> Result<Self> {
        let d = Disutility::MeanVariance { c };
        d.check()?;
        Ok(d)
    }

    pub fn cvar(alpha: f64) -> Result<Self> {
        let d = Disutility::CVaR { alpha };
        d.check()?;
        Ok(d)
    }

    pub fn soft_cvar(gamma1: f64, gamma2: f64) -> Result<Self> {
        let d = Disutility::SoftCVaR { gamma1, gamma2 };
        d.check()?;
        Ok(d)
    }

    /// Verifies the parameter ranges of the variant.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(RiskError::InvalidParameter(msg));
        match *self {
            Disutility::Identity => Ok(()),
            Disutility::Entropic { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("entropic gamma must be positive, got {gamma}"))
            }
            Disutility::MeanVariance { c } if !(c > 0.0 && c.is_finite()) => {
                bad(format!("mean-variance c must be positive, got {c}"))
            }
            Disutility::CVaR { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                bad(format!("cvar alpha must lie in (0, 1], got {alpha}"))
            }
            Disutility::SoftCVaR { gamma1, gamma2 }
                if !(gamma1 > 1.0 && gamma1.is_finite() && (0.0..1.0).contains(&gamma2)) =>
            {
                bad(format!(
                    "softcvar needs gamma1 > 1 and gamma2 in [0, 1), got {gamma1}, {gamma2}"
                ))
            }
            _ => Ok(()),
        }
    }

    /// Lower end of the interval on which the function satisfies the
    /// disutility axioms. `-inf` for every variant except mean-variance.
    pub fn validity_lower(&self) -> f64 {
        match *self {
            Disutility::MeanVariance { c } => -1.0 / (2.0 * c),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Quantile fraction induced by the CVaR-type variants.
    ///
    /// For the soft variant this is `(1 - gamma2) / (gamma1 - gamma2)`.
    pub fn quantile_fraction(&self) -> Option<f64> {
        match *self {
            Disutility::CVaR { alpha } => Some(alpha),
            Disutility::SoftCVaR { gamma1, gamma2 } => Some((1.0 - gamma2) / (gamma1 - gamma2)),
            _ => None,
        }
    }

    /// Whether the function has a kink at the origin.
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self, Disutility::CVaR { .. } | Disutility::SoftCVaR { .. })
    }

    /// Evaluates `phi(t)` together with its right derivative at `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let lower = self.validity_lower();
        if t < lower {
            return Err(RiskError::Domain {
                spec: self.to_string(),
                t,
                lower,
            });
        }
        Ok((self.value(t), self.right_derivative(t)))
    }

    /// `phi(t)` without the domain check.
    #[inline]
    pub(crate) fn value(&self, t: f64) -> f64 {
        match *self {
            Disutility::Identity => t,
            Disutility::Entropic { gamma } => (gamma * t).exp_m1() / gamma,
            Disutility::MeanVariance { c } => t + c * t * t,
            Disutility::CVaR { alpha } => {
                if t > 0.0 {
                    t / alpha
                } else {
                    0.0
                }
            }
            Disutility::SoftCVaR { gamma1, gamma2 } => {
                if t >= 0.0 {
                    gamma1 * t
                } else {
                    gamma2 * t
                }
            }
        }
    }

    #[inline]
    pub(crate) fn right_derivative(&self, t: f64) -> f64 {
        match *self {
            Disutility::Identity => 1.0,
            Disutility::Entropic { gamma } => (gamma * t).exp(),
            Disutility::MeanVariance { c } => 1.0 + 2.0 * c * t,
            Disutility::CVaR { alpha } => {
                if t >= 0.0 {
                    1.0 / alpha
                } else {
                    0.0
                }
            }
            Disutility::SoftCVaR { gamma1, gamma2 } => {
                if t >= 0.0 {
                    gamma1
                } else {
                    gamma2
                }
            }
        }
    }

    #[inline]
    pub(crate) fn left_derivative(&self, t: f64) -> f64 {
        match *self {
            Disutility::CVaR { alpha } => {
                if t > 0.0 {
                    1.0 / alpha
                } else {
                    0.0
                }
            }
            Disutility::SoftCVaR { gamma1, gamma2 } => {
                if t > 0.0 {
                    gamma1
                } else {
                    gamma2
                }
            }
            _ => self.right_derivative(t),
        }
    }

    fn check_window(&self, bound_m: f64) -> Result<()> {
        self.check()?;
        if !(bound_m > 0.0 && bound_m.is_finite()) {
            return Err(RiskError::InvalidParameter(format!(
                "bound M must be positive and finite, got {bound_m}"
            )));
        }
        let lower = self.validity_lower();
        if -bound_m < lower {
            return Err(RiskError::Domain {
                spec: self.to_string(),
                t: -bound_m,
                lower,
            });
        }
        Ok(())
    }

    /// Lipschitz constant of `phi` on `[-M, M]`: the right derivative at `M`.
    pub fn lipschitz_on(&self, bound_m: f64) -> Result<f64> {
        self.check_window(bound_m)?;
        Ok(match *self {
            Disutility::Identity => 1.0,
            Disutility::Entropic { gamma } => (gamma * bound_m).exp(),
            Disutility::MeanVariance { c } => 1.0 + 2.0 * c * bound_m,
            Disutility::CVaR { alpha } => 1.0 / alpha,
            Disutility::SoftCVaR { gamma1, .. } => gamma1,
        })
    }

    /// Curvature constant `inf_{0<|t|<=M} (phi(t) - t) / t^2`, closed form.
    pub fn curvature_constant(&self, bound_m: f64) -> Result<f64> {
        self.check_window(bound_m)?;
        Ok(match *self {
            Disutility::Identity => 0.0,
            Disutility::MeanVariance { c } => c,
            // (e^x - 1 - x) / x^2 increases in x, so the infimum sits at t = -M.
            Disutility::Entropic { gamma } => {
                let x = gamma * bound_m;
                ((-x).exp_m1() + x) / (gamma * bound_m * bound_m)
            }
            Disutility::CVaR { alpha } => ((1.0 - alpha) / alpha).min(1.0) / bound_m,
            Disutility::SoftCVaR { gamma1, gamma2 } => (gamma1 - 1.0).min(1.0 - gamma2) / bound_m,
        })
    }

    /// Curvature constant by direct minimization: a 10,001-point log-spaced
    /// grid on `(0, M]` mirrored to the negatives, then golden-section search
    /// between the neighbours of the grid argmin.
    pub fn curvature_constant_numeric(&self, bound_m: f64) -> Result<f64> {
        self.check_window(bound_m)?;
        let ratio = |t: f64| (self.value(t) - t) / (t * t);

        const HALF: usize = 10_001;
        let mut grid = Vec::with_capacity(2 * HALF);
        for j in (0..HALF).rev() {
            grid.push(-log_point(bound_m, j, HALF));
        }
        for j in 0..HALF {
            grid.push(log_point(bound_m, j, HALF));
        }

        let (best_idx, mut best) =
            grid.iter()
                .map(|&t| ratio(t))
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
                );

        // Never let the bracket straddle the origin.
        let t_best = grid[best_idx];
        let (mut a, mut b) = if t_best < 0.0 {
            (
                grid[best_idx.saturating_sub(1)],
                grid[(best_idx + 1).min(HALF - 1)],
            )
        } else {
            (
                grid[(best_idx - 1).max(HALF)],
                grid[(best_idx + 1).min(2 * HALF - 1)],
            )
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let (mut f1, mut f2) = (ratio(x1), ratio(x2));
        for _ in 0..200 {
            if b - a <= 1e-14 * bound_m {
                break;
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = ratio(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = ratio(x2);
            }
        }
        best = best.min(f1).min(f2);
        Ok(best.max(0.0))
    }
}

fn log_point(bound_m: f64, j: usize, count: usize) -> f64 {
    if j == count - 1 {
        return bound_m;
    }
    let exponent = -6.0 + 6.0 * j as f64 / (count - 1) as f64;
    bound_m * 10f64.powf(exponent)
}

impl fmt::Display for Disutility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Disutility::Identity => write!(f, "identity"),
            Disutility::Entropic { gamma } => write!(f, "entropic:{gamma}"),
            Disutility::MeanVariance { c } => write!(f, "meanvar:{c}"),
            Disutility::CVaR { alpha } => write!(f, "cvar:{alpha}"),
            Disutility::SoftCVaR { gamma1, gamma2 } => write!(f, "softcvar:{gamma1},{gamma2}"),
        }
    }
}

impl FromStr for Disutility {
    type Err = RiskError;

    fn from_str(input: &str) -> Result<Self> {
        let fail = |reason: &str| RiskError::ParseSpec {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = input.trim();
        let (kind, args) = match trimmed.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (trimmed, None),
        };
        let number = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| fail(&format!("`{}` is not a number", s.trim())))
        };
        let one = |args: Option<&str>| -> Result<f64> {
            match args {
                Some(a) if !a.contains(',') => number(a),
                _ => Err(fail("expected exactly one parameter")),
            }
        };
        let spec = match kind.to_ascii_lowercase().as_str() {
            "identity" => match args {
                None => Disutility::Identity,
                Some(_) => return Err(fail("identity takes no parameter")),
            },
            "entropic" => Disutility::Entropic { gamma: one(args)? },
            "meanvar" => Disutility::MeanVariance { c: one(args)? },
            "cvar" => Disutility::CVaR { alpha: one(args)? },
            "softcvar" => {
                let a = args.ok_or_else(|| fail("expected two parameters G1,G2"))?;
                let mut parts = a.split(',');
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(g1), Some(g2), None) => Disutility::SoftCVaR {
                        gamma1: number(g1)?,
                        gamma2: number(g2)?,
                    },
                    _ => return Err(fail("expected two parameters G1,G2")),
                }
            }
            _ => {
                return Err(fail(
                    "unknown kind; expected identity, entropic, meanvar, cvar or softcvar",
                ))
            }
        };
        spec.check().map_err(|e| fail(&e.to_string()))?;
        Ok(spec)
    }
}

impl TryFrom<String> for Disutility {
    type Error = RiskError;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<Disutility> for String {
    fn from(value: Disutility) -> Self {
        value.to_string()
    }
}

/// A disutility axiom checked by [`validate_tabulated`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    ZeroAtOrigin,
    UnitSubgradient,
    Monotone,
    Convex,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::ZeroAtOrigin => "φ(0)=0",
            Axiom::UnitSubgradient => "1∈∂φ(0)",
            Axiom::Monotone => "monotone",
            Axiom::Convex => "convex",
        })
    }
}

/// Outcome of checking tabulated function values against the axioms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub failures: Vec<Axiom>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn first_failure(&self) -> Option<Axiom> {
        self.failures.first().copied()
    }
}

/// Checks tabulated values `(t_j, phi(t_j))` on a symmetric grid containing
/// zero against the four disutility axioms. Points may come in any order.
pub fn validate_tabulated(points: &[(f64, f64)]) -> Result<Verdict> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let zero = pts
        .iter()
        .find(|p| p.0 == 0.0)
        .ok_or_else(|| RiskError::InvalidParameter("grid must contain t = 0".into()))?;
    let span = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let symmetric = pts.iter().all(|p| {
        pts.iter()
            .any(|q| (q.0 + p.0).abs() <= 1e-12 * span.max(1.0))
    });
    if !symmetric {
        return Err(RiskError::InvalidParameter(
            "grid must be symmetric about 0".into(),
        ));
    }

    let scale = pts.iter().map(|p| p.1.abs()).fold(span, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    let mut failures = Vec::new();
    if zero.1.abs() > tol {
        failures.push(Axiom::ZeroAtOrigin);
    }
    if pts.iter().any(|&(t, v)| v < t - tol) {
        failures.push(Axiom::UnitSubgradient);
    }
    if pts.windows(2).any(|w| w[1].1 < w[0].1 - tol) {
        failures.push(Axiom::Monotone);
    }
    let slopes: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let slope_tol = tol
        / pts
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(f64::INFINITY, f64::min);
    if slopes.windows(2).any(|s| s[1] < s[0] - slope_tol) {
        failures.push(Axiom::Convex);
    }
    Ok(Verdict { failures })
}
