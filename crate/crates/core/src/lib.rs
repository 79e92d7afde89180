//! Testing whether pairwise comparison data is consistent with a
//! Bradley-Terry-Luce model.
//!
//! The crate covers observation graphs, pairwise comparison models, the
//! canonical Markov chain and its spectral quantities, the separation test
//! statistic with analytic and data-driven thresholds, a Monte-Carlo
//! experiment harness, and CSV ingestion.

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod inference;
pub mod io;
pub mod matrix;
pub mod model;
pub mod projection;
pub mod scalar;
pub mod seed;
pub mod spectral;

pub use dataset::{sample_dataset, ComparisonDataset, TrialCounts};
pub use error::{Error, Result};
pub use graph::{DegreeStats, ObservationGraph};
pub use inference::{Hypothesis, TestConfig, TestReport, ThresholdKind};
pub use model::PairwiseModel;
pub use scalar::{Real, Scalar};
pub use spectral::{Decomposition, MarkovChain, StationaryDistribution};

/// Exact rational scalar used for identity checks.
pub type Rational = num_rational::Ratio<i64>;

pub type Model = PairwiseModel<f64>;
pub type Model32 = PairwiseModel<f32>;
pub type ExactModel = PairwiseModel<Rational>;
pub type Chain = MarkovChain<f64>;
pub type ExactChain = MarkovChain<Rational>;
pub type Stationary = StationaryDistribution<f64>;
