//! Stochastic fatigue crack-growth ensembles and sparse variational Gaussian
//! process surrogates that turn them into Gaussian priors over crack length.
//!
//! The pipeline runs in five stages, one module each:
//!
//! * [`sim`] integrates the Paris-Erdogan law over random sea-state sequences
//!   with random material parameters and initial crack length.
//! * [`dataset`] subsamples trajectories onto a bimonthly grid, summarizes the
//!   ensemble, splits it by trajectory and flattens it into regression rows.
//! * [`gp`] holds the Matérn 3/2 kernel and dense (exact) GP regression.
//! * [`svgp`] trains sparse variational GPs with minibatch ELBO ascent.
//! * [`tasks`] wires the three monitoring parametrizations together and
//!   evaluates them.
//!
//! File formats live in [`io`].

pub mod dataset;
pub mod error;
pub mod gp;
pub mod io;
pub mod points;
pub mod sim;
pub mod stats;
pub mod svgp;
pub mod tasks;

pub use dataset::{
    build_dataset, empirical_stats, holdout_split, subsample, ProcessStats, RegressionDataset,
    SubsampledTrajectory, Task,
};
pub use error::{Error, Result};
pub use gp::{GaussianPrediction, JitterPolicy, KernelParams, NoiseParams};
pub use points::Points;
pub use sim::{generate_ensemble, MaterialSample, SimConfig, Termination, Trajectory};
pub use svgp::{SvgpModel, TrainConfig, TrainOutcome};
pub use tasks::{Conditioning, EvalReport, GaussianPrior};
