//! Shared fixtures for the benchmarks.

use l0cca::synth::generate;
use l0cca::{CovarianceModel, DataMatrix, DenseMatrix, GroundTruth, SeededRng, SyntheticSpec};

/// Model I data of the given size.
pub fn model_one(n: usize, d: usize, seed: u64) -> (DataMatrix, DataMatrix, GroundTruth) {
    generate(&SyntheticSpec::new(CovarianceModel::Identity, n, d, seed)).expect("model I is always valid")
}

/// `rows×cols` matrix of standard normals.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = SeededRng::new(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}
