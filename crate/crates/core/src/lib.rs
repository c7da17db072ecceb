//! Sparse canonical correlation analysis with stochastic ℓ0 gates: linear,
//! deep and multi-view variants, synthetic benchmarks and evaluation helpers.

pub mod config;
pub mod data;
pub mod deep;
pub mod error;
pub mod eval;
pub mod gates;
pub mod linear;
pub mod mlp;
pub mod multiview;
pub mod numerics;
mod optim;
pub mod synth;

pub use config::{GateInit, Optimizer, Penalty, TrainConfig};
pub use data::DataMatrix;
pub use deep::{DeepArch, DeepCcaModel, EmbeddingPair};
pub use error::{Error, Result};
pub use eval::{ClusterResult, EvalReport};
pub use gates::{GateSample, GateVector, Selection};
pub use linear::{LinearCcaModel, PathRecord};
pub use mlp::{Activation, MlpParams};
pub use multiview::{FrobeniusForm, GccaState, MultiviewArch};
pub use numerics::{DenseMatrix, SeededRng};
pub use synth::{CovarianceModel, GroundTruth, SyntheticSpec};
