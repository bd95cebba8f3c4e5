//! Variability metrics over repeated stochastic executions.

mod dice;
mod hypothesis;
mod significant;
pub mod special;

pub use dice::{dice_score, min_pairwise_dice, min_pairwise_dice_all, DiceSummary, LabelMap, MultiLabelDice};
pub use hypothesis::{levene_test, pairwise_f_test, TestResult};
pub use significant::{significant_digits, VariabilityReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpcore::FormatName;

/// Outputs of `N` repetitions of one stochastic execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub format: FormatName,
    pub label: String,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, format: FormatName, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("sample set"));
        }
        Ok(SampleSet { values, format, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// A set holding infinities or NaNs.
    pub fn is_degenerate(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Sample variance (ddof = 1); zero for a single sample.
    pub fn variance(&self) -> f64 {
        variance(&self.values)
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// True when every sample has the same bit pattern.
    pub fn is_bitwise_constant(&self) -> bool {
        let first = self.values[0].to_bits();
        self.values.iter().all(|v| v.to_bits() == first)
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(values: &[f64]) -> f64 {
    let m = mean(values);
    let denom: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = values.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / denom
}
