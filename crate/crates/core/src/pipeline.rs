//! The perturb → evolve → sample pipeline shared by every experiment.

use thiserror::Error;

use crate::evolution::{evolve_with, EvolutionError, IntegratorConfig};
use crate::fidelity::FidelityError;
use crate::geometry::MachineConstraints;
use crate::hamiltonian::PhysicsConstants;
use crate::measurement::{
    rydberg_counts, sample_shots, CountSummary, DetectionError, MeasurementError,
};
use crate::noise::{perturb, NoiseError, NoiseModel};
use crate::program::{AhsProgram, ProgramError};
use crate::rng::child_seed;
use crate::scalar::Real;
use crate::state::{ground_state, QuantumState, MAX_STATE_ATOMS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error("{atoms} atoms exceed the state-vector limit of {MAX_STATE_ATOMS}")]
    TooManyAtoms { atoms: usize },
    #[error("at least one repeat is required")]
    NoRepeats,
    #[error("direction vector must be non-zero and finite")]
    InvalidDirection,
    #[error("invalid MTD policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("no admissible victim placement found in {attempts} attempts")]
    PlacementExhausted { attempts: usize },
}

impl SimulationError {
    /// Whether the failure came from numerical integration rather than from
    /// the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            SimulationError::Evolution(
                EvolutionError::NormDrift(_) | EvolutionError::TaylorNotConverged
            )
        )
    }
}

/// Physics, integrator and machine settings for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator<T> {
    pub constants: PhysicsConstants<T>,
    pub integrator: IntegratorConfig<T>,
    pub constraints: MachineConstraints<T>,
}

impl<T: Real> Default for Simulator<T> {
    fn default() -> Self {
        Self {
            constants: PhysicsConstants::default(),
            integrator: IntegratorConfig::default(),
            constraints: MachineConstraints::default(),
        }
    }
}

impl<T: Real> Simulator<T> {
    /// Noiseless final state from the all-ground initial state.
    pub fn final_state(&self, program: &AhsProgram<T>) -> Result<QuantumState<T>, SimulationError> {
        let n = program.atom_count();
        if n > MAX_STATE_ATOMS {
            return Err(SimulationError::TooManyAtoms { atoms: n });
        }
        Ok(evolve_with(
            program,
            &self.constants,
            &ground_state(n),
            &self.integrator,
            |_, _| {},
        )?)
    }

    /// Validates, perturbs for `run_index` and evolves.
    pub fn noisy_final_state(
        &self,
        program: &AhsProgram<T>,
        noise: &NoiseModel<T>,
        run_index: u64,
    ) -> Result<QuantumState<T>, SimulationError> {
        program.check(&self.constraints)?;
        let perturbed = perturb(program, noise, run_index, &self.constraints)?;
        self.final_state(&perturbed)
    }

    pub fn sample(
        &self,
        state: &QuantumState<T>,
        shots: usize,
        seed: u64,
        detection: DetectionError,
    ) -> Result<CountSummary, SimulationError> {
        Ok(rydberg_counts(&sample_shots(
            state, shots, seed, detection,
        )?))
    }

    /// One full run: noise draw `run_index`, evolution and `shots` samples.
    pub fn run(
        &self,
        program: &AhsProgram<T>,
        shots: usize,
        noise: &NoiseModel<T>,
        run_index: u64,
        seed: u64,
    ) -> Result<CountSummary, SimulationError> {
        let state = self.noisy_final_state(program, noise, run_index)?;
        self.sample(&state, shots, seed, noise.detection)
    }

    /// Mean per-qubit counts of `repeats` noiseless runs of `shots` shots.
    ///
    /// The noiseless final state is deterministic, so it is computed once and
    /// sampled `repeats` times with child seeds `("repeat", r)` of `seed`.
    pub fn expected_counts(
        &self,
        program: &AhsProgram<T>,
        shots: usize,
        repeats: usize,
        seed: u64,
    ) -> Result<Vec<f64>, SimulationError> {
        if repeats == 0 {
            return Err(SimulationError::NoRepeats);
        }
        program.check(&self.constraints)?;
        let state = self.final_state(program)?;
        let mut total = CountSummary::zeros(program.atom_count());
        for r in 0..repeats {
            let counts = self.sample(
                &state,
                shots,
                child_seed(seed, "repeat", r as u64),
                DetectionError::default(),
            )?;
            total.accumulate(&counts);
        }
        Ok(total
            .counts
            .iter()
            .map(|&c| c as f64 / repeats as f64)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Position, TRIANGLE_TOP};
    use crate::program::DrivingField;
    use crate::reference;

    #[test]
    fn unexcited_program_expects_zero() {
        let base = reference::base_program_at(Position::new(10.0, 10.0));
        let dark = base
            .with_drive(DrivingField::constant(0.0, 0.0, 0.0, base.duration()).unwrap())
            .unwrap();
        let e = Simulator::default()
            .expected_counts(&dark, 1000, 3, 1)
            .unwrap();
        assert_eq!(e, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn control_expectation_has_dark_top_and_even_base() {
        let shots = 1000;
        let e = Simulator::default()
            .expected_counts(
                &reference::control_program_at(Position::new(10.0, 10.0)),
                shots,
                1,
                7,
            )
            .unwrap();
        assert!(e[TRIANGLE_TOP] < 0.01 * shots as f64);
        // the base pair is symmetric; difference of two binomials within 3σ
        let p = e[0] / shots as f64;
        let sigma = (2.0 * p * (1.0 - p) * shots as f64).sqrt();
        assert!((e[0] - e[1]).abs() < 3.0 * sigma, "{e:?}");
    }

    #[test]
    fn expected_counts_reproducible() {
        let sim = Simulator::default();
        let p = reference::control_program_at(Position::new(10.0, 10.0));
        assert_eq!(
            sim.expected_counts(&p, 500, 1, 3).unwrap(),
            sim.expected_counts(&p, 500, 1, 3).unwrap()
        );
        assert_eq!(
            sim.expected_counts(&p, 500, 10, 3).unwrap(),
            sim.expected_counts(&p, 500, 10, 3).unwrap()
        );
        assert_eq!(
            sim.expected_counts(&p, 500, 0, 3),
            Err(SimulationError::NoRepeats)
        );
    }

    #[test]
    fn zero_noise_matches_noiseless_pipeline() {
        let sim = Simulator::default();
        let p = reference::control_program_at(Position::new(10.0, 10.0));
        let noisy = sim.run(&p, 400, &NoiseModel::none(), 0, 21).unwrap();
        let state = sim.final_state(&p).unwrap();
        let clean = sim
            .sample(&state, 400, 21, DetectionError::default())
            .unwrap();
        assert_eq!(noisy, clean);
    }
}
