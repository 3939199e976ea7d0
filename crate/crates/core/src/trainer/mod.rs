//! Risk-sensitive training of a logistic model on synthetic data, and the
//! two-hypothesis CVaR experiment.

pub mod data;
pub mod objective;
pub mod run;
pub mod stylized;

pub use data::{make_synthetic, Dataset, SyntheticData, SyntheticTask};
pub use objective::{batch_objective, batch_value, LogisticModel, Objective};
pub use run::{
    format_sig9, train, train_on, ExperimentConfig, TrainConfig, Trajectory, TrajectoryRow,
    TRAJECTORY_HEADER,
};
pub use stylized::{stylized_experiment, stylized_trial, StylizedTrial};
