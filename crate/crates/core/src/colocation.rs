//! Two tenants sharing one register: the victim and an attacker that drives
//! a strong local detuning on its own atoms.

use serde::{Deserialize, Serialize};

use crate::geometry::{Position, Register};
use crate::measurement::CountSummary;
use crate::noise::NoiseModel;
use crate::pipeline::{SimulationError, Simulator};
use crate::program::{merge, AhsProgram, Merged, ProgramError, ShiftingField};
use crate::rng::child_seed;
use crate::scalar::Real;
use crate::state::QuantumState;
use crate::waveform::Waveform;

/// How the separation between two tenants is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorMode {
    /// Closest pair of sites, one from each tenant.
    #[default]
    NearestPair,
    CentroidToCentroid,
}

pub fn anchor_distance<T: Real>(a: &Register<T>, b: &Register<T>, mode: AnchorMode) -> T {
    match mode {
        AnchorMode::NearestPair => a
            .sites()
            .iter()
            .flat_map(|p| b.sites().iter().map(move |q| p.distance(q)))
            .fold(T::infinity(), T::min),
        AnchorMode::CentroidToCentroid => a.centroid().distance(&b.centroid()),
    }
}

/// Site with the largest `y` (last one on ties): the apex of a triangle.
pub fn top_site<T: Real>(register: &Register<T>) -> usize {
    register.sites().iter().enumerate().fold(0, |best, (k, p)| {
        if p.y >= register.sites()[best].y {
            k
        } else {
            best
        }
    })
}

/// `base` plus a constant local detuning of `delta_local_peak` on its top site.
pub fn make_attack_program<T: Real>(
    base: &AhsProgram<T>,
    delta_local_peak: T,
) -> Result<AhsProgram<T>, ProgramError> {
    let mut pattern = vec![T::zero(); base.atom_count()];
    pattern[top_site(base.register())] = T::one();
    let shift = ShiftingField::new(
        Waveform::constant(delta_local_peak, base.duration())?,
        pattern,
    )?;
    base.with_shift(Some(shift))
}

/// Victim and attacker at fixed absolute positions, merged and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct TenantLayout<T> {
    pub victim: AhsProgram<T>,
    pub attacker: AhsProgram<T>,
    pub separation: T,
    pub anchor: AnchorMode,
    pub merged: Merged<T>,
}

impl<T: Real> TenantLayout<T> {
    /// Builds a layout from already-positioned tenants.
    pub fn new(
        victim: AhsProgram<T>,
        attacker: AhsProgram<T>,
        anchor: AnchorMode,
        sim: &Simulator<T>,
    ) -> Result<Self, SimulationError> {
        let merged = merge(&victim, &attacker)?;
        merged.program.check(&sim.constraints)?;
        let separation = anchor_distance(victim.register(), attacker.register(), anchor);
        Ok(Self {
            victim,
            attacker,
            separation,
            anchor,
            merged,
        })
    }
}

fn unit<T: Real>(direction: (T, T)) -> Result<(T, T), SimulationError> {
    let len = direction.0.hypot(direction.1);
    if !(len.is_finite() && len > T::zero()) {
        return Err(SimulationError::InvalidDirection);
    }
    Ok((direction.0 / len, direction.1 / len))
}

/// Places the attacker at anchor distance `d` from the victim along
/// `direction`.
///
/// The attacker is first centred on the victim's centroid, then pushed along
/// `direction` to the smallest offset beyond which every anchor distance is
/// at least `d`; its original absolute position is ignored.
pub fn layout_at_distance<T: Real>(
    victim: &AhsProgram<T>,
    attacker: &AhsProgram<T>,
    d: T,
    direction: (T, T),
    anchor: AnchorMode,
    sim: &Simulator<T>,
) -> Result<TenantLayout<T>, SimulationError> {
    if !(d >= sim.constraints.min_spacing) {
        return Err(ProgramError::SpacingViolation {
            first: 0,
            second: victim.atom_count(),
            distance: d.as_f64(),
            min_spacing: sim.constraints.min_spacing.as_f64(),
        }
        .into());
    }
    let (ux, uy) = unit(direction)?;
    let vc = victim.register().centroid();
    let ac = attacker.register().centroid();
    let centred = attacker.translate(vc.x - ac.x, vc.y - ac.y);
    let offset = match anchor {
        AnchorMode::CentroidToCentroid => d,
        AnchorMode::NearestPair => {
            // |w + s·u| = d  ⇔  s² + 2(w·u)s + |w|² − d² = 0; take the upper root
            let mut s = T::zero();
            for p in victim.register().sites() {
                for q in centred.register().sites() {
                    let (wx, wy) = (q.x - p.x, q.y - p.y);
                    let b = wx * ux + wy * uy;
                    let disc = b * b - (wx * wx + wy * wy - d * d);
                    if disc >= T::zero() {
                        s = s.max(-b + disc.sqrt());
                    }
                }
            }
            s
        }
    };
    let placed = centred.translate(offset * ux, offset * uy);
    TenantLayout::new(victim.clone(), placed, anchor, sim)
}

/// Joint final state plus the per-tenant split of sampled counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ColocatedOutcome<T> {
    pub victim: CountSummary,
    pub attacker: CountSummary,
    /// Victim qubits' Rydberg probabilities before sampling.
    pub victim_marginals: Vec<T>,
}

/// Evolves the merged program for run seed `seed` (noise draw included).
pub fn evolve_layout<T: Real>(
    sim: &Simulator<T>,
    layout: &TenantLayout<T>,
    noise: &NoiseModel<T>,
    seed: u64,
) -> Result<QuantumState<T>, SimulationError> {
    sim.noisy_final_state(
        &layout.merged.program,
        noise,
        child_seed(seed, "noise-run", 0),
    )
}

/// Samples a joint state and splits counts back onto the two tenants.
pub fn sample_layout<T: Real>(
    sim: &Simulator<T>,
    layout: &TenantLayout<T>,
    state: &QuantumState<T>,
    shots: usize,
    noise: &NoiseModel<T>,
    seed: u64,
) -> Result<ColocatedOutcome<T>, SimulationError> {
    let counts = sim.sample(state, shots, child_seed(seed, "shots", 0), noise.detection)?;
    let marginals = state.rydberg_marginals();
    Ok(ColocatedOutcome {
        victim: counts.select(&layout.merged.first),
        attacker: counts.select(&layout.merged.second),
        victim_marginals: Merged::<T>::select(&layout.merged.first, &marginals),
    })
}

/// Merge, perturb, evolve the joint register, sample, split.
pub fn run_colocated<T: Real>(
    sim: &Simulator<T>,
    layout: &TenantLayout<T>,
    shots: usize,
    noise: &NoiseModel<T>,
    seed: u64,
) -> Result<ColocatedOutcome<T>, SimulationError> {
    let state = evolve_layout(sim, layout, noise, seed)?;
    sample_layout(sim, layout, &state, shots, noise, seed)
}

/// Runs one tenant on its own with the same seed discipline as
/// [`run_colocated`].
pub fn run_standalone<T: Real>(
    sim: &Simulator<T>,
    program: &AhsProgram<T>,
    shots: usize,
    noise: &NoiseModel<T>,
    seed: u64,
) -> Result<(CountSummary, Vec<T>), SimulationError> {
    let state = sim.noisy_final_state(program, noise, child_seed(seed, "noise-run", 0))?;
    let counts = sim.sample(&state, shots, child_seed(seed, "shots", 0), noise.detection)?;
    Ok((counts, state.rydberg_marginals()))
}

pub(crate) fn min_distance_to<T: Real>(register: &Register<T>, others: &[Position<T>]) -> T {
    register
        .sites()
        .iter()
        .flat_map(|p| others.iter().map(move |q| p.distance(q)))
        .fold(T::infinity(), T::min)
}
