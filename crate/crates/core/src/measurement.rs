//! Shot sampling and per-qubit Rydberg counts.
//!
//! A qubit's "count" is the number of shots in which it was found in the
//! Rydberg state `r`. Hardware that reports trap loss inverts this
//! convention; here a detuned (unexcited) qubit has a count near zero.

use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{child_seed, rng_from_seed};
use crate::scalar::Real;
use crate::state::QuantumState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("at least one shot is required")]
    NoShots,
    #[error("detection error probabilities must lie in [0, 0.5)")]
    InvalidDetection,
}

/// Readout error rates: `eps_g` flips g→r, `eps_r` flips r→g.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionError {
    pub eps_g: f64,
    pub eps_r: f64,
}

impl DetectionError {
    pub fn new(eps_g: f64, eps_r: f64) -> Result<Self, MeasurementError> {
        let ok = |e: f64| (0.0..0.5).contains(&e);
        if !(ok(eps_g) && ok(eps_r)) {
            return Err(MeasurementError::InvalidDetection);
        }
        Ok(Self { eps_g, eps_r })
    }

    pub fn is_zero(&self) -> bool {
        self.eps_g == 0.0 && self.eps_r == 0.0
    }
}

/// `S` sampled bitstrings; bit `k` of each row is qubit `k` (1 = Rydberg).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotBatch {
    atoms: usize,
    rows: Vec<u64>,
    seed: u64,
}

impl ShotBatch {
    pub fn from_rows(atoms: usize, rows: Vec<u64>, seed: u64) -> Self {
        Self { atoms, rows, seed }
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn shots(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bit(&self, shot: usize, qubit: usize) -> bool {
        self.rows[shot] >> qubit & 1 == 1
    }

    /// CSV with header `shot,q0,q1,...` and one 0/1 row per shot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shot");
        for k in 0..self.atoms {
            write!(out, ",q{k}").unwrap();
        }
        out.push('\n');
        for (i, &row) in self.rows.iter().enumerate() {
            write!(out, "{i}").unwrap();
            for k in 0..self.atoms {
                write!(out, ",{}", row >> k & 1).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Per-qubit Rydberg counts over `shots` shots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSummary {
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl CountSummary {
    pub fn zeros(atoms: usize) -> Self {
        Self {
            counts: vec![0; atoms],
            shots: 0,
        }
    }

    pub fn atoms(&self) -> usize {
        self.counts.len()
    }

    /// Adds another summary over the same qubits.
    pub fn accumulate(&mut self, other: &CountSummary) {
        assert_eq!(self.counts.len(), other.counts.len(), "qubit counts differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.shots += other.shots;
    }

    /// Restricts to the qubits listed in `map`, in that order.
    pub fn select(&self, map: &[usize]) -> CountSummary {
        CountSummary {
            counts: map.iter().map(|&i| self.counts[i]).collect(),
            shots: self.shots,
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.shots as f64)
            .collect()
    }
}

pub fn probabilities<T: Real>(state: &QuantumState<T>) -> Vec<T> {
    state.probabilities()
}

/// Draws `shots` outcomes from the state's Born distribution, then applies
/// readout errors. Outcome draws and flip draws come from separate child
/// streams of `seed`, so zero error rates reproduce the error-free rows.
pub fn sample_shots<T: Real>(
    state: &QuantumState<T>,
    shots: usize,
    seed: u64,
    detection: DetectionError,
) -> Result<ShotBatch, MeasurementError> {
    if shots == 0 {
        return Err(MeasurementError::NoShots);
    }
    let detection = DetectionError::new(detection.eps_g, detection.eps_r)?;
    let mut cumulative = Vec::with_capacity(state.dim());
    let mut acc = 0.0f64;
    for p in state.probabilities() {
        acc += p.as_f64();
        cumulative.push(acc);
    }
    let last = cumulative.len() - 1;
    let mut rng = rng_from_seed(child_seed(seed, "outcomes", 0));
    let mut rows: Vec<u64> = (0..shots)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cumulative.partition_point(|&c| c <= u).min(last) as u64
        })
        .collect();

    if !detection.is_zero() {
        let mut flips = rng_from_seed(child_seed(seed, "detection", 0));
        for row in rows.iter_mut() {
            for k in 0..state.atom_count() {
                let excited = *row >> k & 1 == 1;
                let eps = if excited {
                    detection.eps_r
                } else {
                    detection.eps_g
                };
                if flips.random::<f64>() < eps {
                    *row ^= 1 << k;
                }
            }
        }
    }
    Ok(ShotBatch::from_rows(state.atom_count(), rows, seed))
}

pub fn rydberg_counts(batch: &ShotBatch) -> CountSummary {
    let mut counts = vec![0u64; batch.atoms];
    for &row in &batch.rows {
        for (k, c) in counts.iter_mut().enumerate() {
            *c += row >> k & 1;
        }
    }
    CountSummary {
        counts,
        shots: batch.rows.len() as u64,
    }
}
