use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::error::Result;

/// Mean, spread and significant digits of a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariabilityReport {
    pub mean: f64,
    /// Sample standard deviation, ddof = 1.
    pub std: f64,
    /// Decimal significant digits, clamped to `[0, cap]`.
    pub sig_digits_decimal: f64,
    pub n: usize,
    /// `p * log10(2)` of the sample format.
    pub cap: f64,
    /// The mean was zero, so digits measure absolute spread.
    pub absolute_mode: bool,
    /// The set held non-finite values.
    pub degenerate: bool,
}

impl VariabilityReport {
    pub fn sig_bits(&self) -> f64 {
        self.sig_digits_decimal * std::f64::consts::LOG2_10
    }
}

/// `-log10(sigma / |mu|)` over the samples.
///
/// A zero spread gives the format cap; a relative spread of one or more
/// gives zero. With `mu = 0` and a non-zero spread the digits are taken from
/// the absolute spread, `-log10(sigma)`, and the report is flagged.
pub fn significant_digits(set: &SampleSet) -> Result<VariabilityReport> {
    let cap = set.format.format().decimal_digits_cap();
    let n = set.len();
    if set.is_degenerate() {
        return Ok(VariabilityReport {
            mean: f64::NAN,
            std: f64::NAN,
            sig_digits_decimal: 0.0,
            n,
            cap,
            absolute_mode: false,
            degenerate: true,
        });
    }

    let mean = set.mean();
    let std = set.std();
    let mut absolute_mode = false;
    let raw = if std == 0.0 {
        cap
    } else if mean == 0.0 {
        absolute_mode = true;
        -std.log10()
    } else {
        -(std / mean.abs()).log10()
    };

    Ok(VariabilityReport {
        mean,
        std,
        sig_digits_decimal: raw.clamp(0.0, cap),
        n,
        cap,
        absolute_mode,
        degenerate: false,
    })
}
