//! Analog Hamiltonian simulation of neutral-atom Rydberg registers.
//!
//! The crate covers program construction ([`program`], [`geometry`],
//! [`waveform`]), the many-body Hamiltonian ([`hamiltonian`]), state-vector
//! propagation ([`evolution`]), shot sampling ([`measurement`]), the
//! count-based relative fidelity ([`fidelity`]), seeded hardware noise
//! ([`noise`]) and the two-tenant crosstalk and moving-target-defense
//! scenarios ([`colocation`], [`mtd`]).
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the tolerances in this crate assume.
//! Units: µm for lengths, s for times, rad/s for frequencies.

pub mod colocation;
pub mod dense;
pub mod evolution;
pub mod fidelity;
pub mod geometry;
pub mod hamiltonian;
pub mod io;
pub mod measurement;
pub mod mtd;
pub mod noise;
pub mod pipeline;
pub mod program;
pub mod random;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod state;
pub mod waveform;

pub use scalar::Real;

pub use colocation::{layout_at_distance, make_attack_program, run_colocated, AnchorMode};
pub use evolution::{convergence_check, evolve, EvolutionError, Method};
pub use fidelity::{relative_fidelity, FidelityReport, NormalizationMode};
pub use geometry::make_triangle_register;
pub use hamiltonian::{apply_hamiltonian, build_dense, vdw_table};
pub use measurement::{rydberg_counts, sample_shots, CountSummary, DetectionError, ShotBatch};
pub use mtd::run_with_mtd;
pub use noise::{perturb, sample_site_field, NoiseSpec, SiteFieldSpec};
pub use pipeline::SimulationError;
pub use program::{merge, ProgramError};
pub use state::ground_state;

pub type Position = geometry::Position<f64>;
pub type Register = geometry::Register<f64>;
pub type MachineConstraints = geometry::MachineConstraints<f64>;
pub type Waveform = waveform::Waveform<f64>;
pub type DrivingField = program::DrivingField<f64>;
pub type ShiftingField = program::ShiftingField<f64>;
pub type AhsProgram = program::AhsProgram<f64>;
pub type PhysicsConstants = hamiltonian::PhysicsConstants<f64>;
pub type VdwTable = hamiltonian::VdwTable<f64>;
pub type QuantumState = state::QuantumState<f64>;
pub type IntegratorConfig = evolution::IntegratorConfig<f64>;
pub type NoiseModel = noise::NoiseModel<f64>;
pub type SiteNoiseField = noise::SiteNoiseField<f64>;
pub type Simulator = pipeline::Simulator<f64>;
pub type TenantLayout = colocation::TenantLayout<f64>;
pub type MtdPolicy = mtd::MtdPolicy<f64>;
pub type DisplacementRect = mtd::DisplacementRect<f64>;
