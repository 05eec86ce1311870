//! Relative fidelity: how closely observed per-qubit counts track a control
//! expectation. 1 means identical counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::CountSummary;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FidelityError {
    #[error("observed has {observed} qubits, expected has {expected}")]
    LengthMismatch { observed: usize, expected: usize },
    #[error("observed summary has no shots")]
    NoShots,
}

/// How each qubit's absolute count deviation is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// `|c_k − e_k| / S`
    #[default]
    ShotNormalized,
    /// `|c_k − e_k| / max(e_k, 1)`
    ExpectationNormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub expected: Vec<f64>,
    pub observed: Vec<u64>,
    pub shots: u64,
    pub rf: f64,
    pub mode: NormalizationMode,
}

/// `rf = 1 − mean_k(normalized |c_k − e_k|)`, clamped to `[0, 1]`.
pub fn relative_fidelity(
    observed: &CountSummary,
    expected: &[f64],
    mode: NormalizationMode,
) -> Result<FidelityReport, FidelityError> {
    if observed.counts.len() != expected.len() {
        return Err(FidelityError::LengthMismatch {
            observed: observed.counts.len(),
            expected: expected.len(),
        });
    }
    if observed.shots == 0 {
        return Err(FidelityError::NoShots);
    }
    let shots = observed.shots as f64;
    let total: f64 = observed
        .counts
        .iter()
        .zip(expected)
        .map(|(&c, &e)| {
            let dev = (c as f64 - e).abs();
            match mode {
                NormalizationMode::ShotNormalized => dev / shots,
                NormalizationMode::ExpectationNormalized => dev / e.max(1.0),
            }
        })
        .sum();
    let rf = (1.0 - total / expected.len() as f64).clamp(0.0, 1.0);
    Ok(FidelityReport {
        expected: expected.to_vec(),
        observed: observed.counts.clone(),
        shots: observed.shots,
        rf,
        mode,
    })
}
