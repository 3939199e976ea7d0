//! Optimized certainty equivalent (OCE) risks and the learning-theoretic
//! machinery around them.
//!
//! * [`disutility`]: the disutility family and its Lipschitz and curvature constants.
//! * [`risk`]: empirical OCE / inverted-OCE risks, loss moments and top/bottom-k averages.
//! * [`influence`]: influence functions of inverted OCE risks.
//! * [`bounds`]: Rademacher averages, generalization bounds and binomial tails.
//! * [`trainer`]: risk-sensitive logistic regression on synthetic data.

pub mod bounds;
pub mod disutility;
pub mod error;
pub mod influence;
pub mod risk;
pub mod seed;
pub mod trainer;

pub use disutility::{validate_tabulated, Axiom, Disutility, Verdict};
pub use error::{Result, RiskError};
pub use risk::{
    inverted_oce_empirical, inverted_oce_empirical_with, k_slice_average, loss_moments,
    oce_empirical, oce_empirical_with, LossVector, OceResult, Slice, Solver, SolverPolicy,
};
