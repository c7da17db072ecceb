use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::Selection;

/// How gate means are initialised before training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum GateInit {
    Uniform { mu0: f64 },
    /// Thresholded cross-covariance; `percentile` of entries are zeroed.
    Covariance { percentile: f64 },
}

impl Default for GateInit {
    fn default() -> Self {
        GateInit::Uniform { mu0: 0.5 }
    }
}

/// Update rule for the deep and multi-view trainers. The linear trainer
/// always uses plain gradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Gd,
    Adam,
}

/// Scale of the expected-ℓ0 penalty.
///
/// `Mean` divides the expected open-gate count by the number of gates in the
/// view, so λ is a per-view weight independent of dimension. `Sum` uses the raw count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    Sum,
    #[default]
    Mean,
}

impl Penalty {
    /// Multiplier applied to `λ·E‖z‖₀` for a view with `dim` gates.
    pub fn scale(self, dim: usize) -> f64 {
        match self {
            Penalty::Sum => 1.0,
            Penalty::Mean => 1.0 / dim as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub lr: f64,
    pub epochs: usize,
    pub sigma: f64,
    /// Ridge added to covariance estimates.
    pub gamma: f64,
    pub seed: u64,
    pub init: GateInit,
    pub denom_eps: f64,
    pub penalty: Penalty,
    pub selection: Selection,
    pub optimizer: Optimizer,
    /// Mini-batch size for the deep trainer; `None` means full batch.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_x: 1.0,
            lambda_y: 1.0,
            lr: 0.005,
            epochs: 1000,
            sigma: 0.25,
            gamma: 1e-4,
            seed: 0,
            init: GateInit::default(),
            denom_eps: 1e-12,
            penalty: Penalty::Mean,
            selection: Selection::Threshold,
            optimizer: Optimizer::Gd,
            batch_size: None,
        }
    }
}

impl TrainConfig {
    /// Linear preset used for the synthetic benchmarks: λ = 30 (mean penalty),
    /// lr = 0.005, 10 000 epochs, σ = 0.25, gates initialised from the
    /// cross-covariance with 99% of entries thresholded away.
    pub fn linear_preset() -> Self {
        Self {
            lambda_x: 30.0,
            lambda_y: 30.0,
            lr: 0.005,
            epochs: 10_000,
            sigma: 0.25,
            init: GateInit::Covariance { percentile: 99.0 },
            penalty: Penalty::Mean,
            ..Self::default()
        }
    }

    /// Defaults for the deep trainer: σ = 0.5 and γ = 1e-4.
    pub fn deep_default() -> Self {
        Self {
            sigma: 0.5,
            gamma: 1e-4,
            lr: 0.01,
            ..Self::default()
        }
    }

    /// Effective per-gate weights `(λx·scale, λy·scale)` for the given view sizes.
    pub fn penalty_weights(&self, dim_x: usize, dim_y: usize) -> (f64, f64) {
        (
            self.lambda_x * self.penalty.scale(dim_x),
            self.lambda_y * self.penalty.scale(dim_y),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda_x >= 0.0 && self.lambda_y >= 0.0) {
            return bad(format!("lambdas must be >= 0 ({}, {})", self.lambda_x, self.lambda_y));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be > 0, got {}", self.lr));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be > 0, got {}", self.sigma));
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if !(self.denom_eps > 0.0) {
            return bad(format!("denom_eps must be > 0, got {}", self.denom_eps));
        }
        if let GateInit::Covariance { percentile } = self.init {
            if !(percentile > 0.0 && percentile < 100.0) {
                return bad(format!("percentile must be in (0, 100), got {percentile}"));
            }
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be positive".into());
        }
        Ok(())
    }
}
