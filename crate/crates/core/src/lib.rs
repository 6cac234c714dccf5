//! Calibration workbench for a stochastic demographic and labor-market
//! micro-simulation.
//!
//! The crate is organised around five layers:
//!
//! * [`param_space`]: the bounded, typed parameter space and chromosomes.
//! * [`microsim`]: a seeded yearly micro-simulation producing indicator series.
//! * [`fitness`]: observed-data ingestion, the relative squared-error score,
//!   replication averaging and a memoization cache.
//! * [`ga`]: a truncation-selection genetic algorithm with plateau stopping.
//! * [`stats`]: uniform sampling, Pearson correlation and an OLS meta-model.
//!
//! [`cli`] ties them together behind the `microcal` binary.

pub mod cli;
pub mod error;
pub mod fitness;
pub mod ga;
pub mod microsim;
pub mod param_space;
pub mod stats;

pub use error::{Error, Result};
pub use fitness::{FitnessCache, FitnessValue, IndicatorSeries, Objective};
pub use ga::{run_ga, CalibrationResult, GaConfig, StopReason};
pub use microsim::SimConfig;
pub use param_space::{Chromosome, ParameterSpace};
