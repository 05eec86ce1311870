//! Moving target defense: relocate the victim before every batch of shots so
//! an attacker cannot stay parked next to it.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colocation::{min_distance_to, run_colocated, run_standalone, AnchorMode, TenantLayout};
use crate::fidelity::{relative_fidelity, FidelityReport, NormalizationMode};
use crate::measurement::CountSummary;
use crate::noise::NoiseModel;
use crate::pipeline::{SimulationError, Simulator};
use crate::program::AhsProgram;
use crate::rng::{child_seed, rng_from_seed, Rng};
use crate::scalar::Real;

/// Allowed victim translations `[dx_min, dx_max] × [dy_min, dy_max]`, µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementRect<T> {
    pub dx_min: T,
    pub dx_max: T,
    pub dy_min: T,
    pub dy_max: T,
}

impl<T: Real> DisplacementRect<T> {
    /// The single translation `(dx, dy)`.
    pub fn point(dx: T, dy: T) -> Self {
        Self {
            dx_min: dx,
            dx_max: dx,
            dy_min: dy,
            dy_max: dy,
        }
    }

    fn is_valid(&self) -> bool {
        [self.dx_min, self.dx_max, self.dy_min, self.dy_max]
            .iter()
            .all(|v| v.is_finite())
            && self.dx_min <= self.dx_max
            && self.dy_min <= self.dy_max
    }

    fn sample(&self, rng: &mut Rng) -> (T, T) {
        let lerp = |lo: T, hi: T, u: f64| lo + (hi - lo) * T::lit(u);
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        (
            lerp(self.dx_min, self.dx_max, u),
            lerp(self.dy_min, self.dy_max, v),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtdPolicy<T> {
    pub displacement: DisplacementRect<T>,
    pub batches: usize,
    /// Draw a second placement after each batch's measurement (reported only;
    /// the simulator keeps no state between batches).
    pub move_after_measure: bool,
    pub min_attacker_gap: T,
    pub seed: u64,
    pub max_attempts: usize,
}

impl<T: Real> MtdPolicy<T> {
    /// 10 batches over a 30 µm square pointing away from an attacker on the
    /// `(+x, +y)` side, 8 µm minimum gap.
    pub fn reference(seed: u64) -> Self {
        Self {
            displacement: DisplacementRect {
                dx_min: T::lit(-30.0),
                dx_max: T::zero(),
                dy_min: T::lit(-30.0),
                dy_max: T::zero(),
            },
            batches: 10,
            move_after_measure: false,
            min_attacker_gap: T::lit(8.0),
            seed,
            max_attempts: 1000,
        }
    }

    fn check(&self) -> Result<(), SimulationError> {
        if self.batches == 0 {
            return Err(SimulationError::InvalidPolicy("batches must be at least 1"));
        }
        if !self.displacement.is_valid() {
            return Err(SimulationError::InvalidPolicy(
                "displacement rectangle is empty or non-finite",
            ));
        }
        if !(self.min_attacker_gap.is_finite() && self.min_attacker_gap >= T::zero()) {
            return Err(SimulationError::InvalidPolicy(
                "min_attacker_gap must be non-negative",
            ));
        }
        if self.max_attempts == 0 {
            return Err(SimulationError::InvalidPolicy(
                "max_attempts must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Draws an admissible victim translation: the moved victim stays in the
/// field and at least `min_attacker_gap` (and the machine's spacing) away
/// from every attacker site.
pub fn sample_placement<T: Real>(
    policy: &MtdPolicy<T>,
    victim: &AhsProgram<T>,
    attacker: Option<&AhsProgram<T>>,
    sim: &Simulator<T>,
    rng: &mut Rng,
) -> Result<(T, T), SimulationError> {
    let gap = policy.min_attacker_gap.max(sim.constraints.min_spacing);
    for _ in 0..policy.max_attempts {
        let (dx, dy) = policy.displacement.sample(rng);
        let moved = victim.register().translated(dx, dy);
        if !moved.sites().iter().all(|p| sim.constraints.contains(p)) {
            continue;
        }
        if let Some(a) = attacker {
            if min_distance_to(&moved, a.register().sites()) < gap {
                continue;
            }
        }
        return Ok((dx, dy));
    }
    Err(SimulationError::PlacementExhausted {
        attempts: policy.max_attempts,
    })
}

/// Run seed of batch `b`.
pub fn batch_seed(seed: u64, batch: usize) -> u64 {
    child_seed(seed, "batch", batch as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord<T> {
    pub batch: usize,
    pub dx: T,
    pub dy: T,
    /// Post-measurement parking translation when `move_after_measure` is set.
    pub parked: Option<(T, T)>,
    pub separation: Option<T>,
    pub victim: CountSummary,
    /// Batch counts against the per-batch expectation.
    pub rf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtdOutcome<T> {
    /// Victim counts of all batches against the standalone control.
    pub report: FidelityReport,
    pub batches: Vec<BatchRecord<T>>,
}

/// Per-qubit expectation of the standalone victim for `shots` shots.
pub fn victim_expectation<T: Real>(
    sim: &Simulator<T>,
    victim: &AhsProgram<T>,
    shots: usize,
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>, SimulationError> {
    sim.expected_counts(victim, shots, repeats, child_seed(seed, "control", 0))
}

/// Runs the victim under `policy`. `attacker` is already at its absolute
/// position and never moves; `None` runs the victim alone.
#[allow(clippy::too_many_arguments)]
pub fn run_with_mtd<T: Real>(
    sim: &Simulator<T>,
    victim: &AhsProgram<T>,
    attacker: Option<&AhsProgram<T>>,
    policy: &MtdPolicy<T>,
    shots_per_batch: usize,
    noise: &NoiseModel<T>,
    seed: u64,
    control_repeats: usize,
) -> Result<MtdOutcome<T>, SimulationError> {
    policy.check()?;
    let per_batch = victim_expectation(sim, victim, shots_per_batch, control_repeats, seed)?;

    let records = (0..policy.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(child_seed(policy.seed, "placement", b as u64));
            let (dx, dy) = sample_placement(policy, victim, attacker, sim, &mut rng)?;
            let parked = if policy.move_after_measure {
                Some(sample_placement(policy, victim, attacker, sim, &mut rng)?)
            } else {
                None
            };
            let moved = victim.translate(dx, dy);
            let run_seed = batch_seed(seed, b);
            let (counts, separation) = match attacker {
                Some(a) => {
                    let layout = TenantLayout::new(moved, a.clone(), AnchorMode::NearestPair, sim)?;
                    let out = run_colocated(sim, &layout, shots_per_batch, noise, run_seed)?;
                    (out.victim, Some(layout.separation))
                }
                None => (
                    run_standalone(sim, &moved, shots_per_batch, noise, run_seed)?.0,
                    None,
                ),
            };
            let rf = relative_fidelity(&counts, &per_batch, NormalizationMode::ShotNormalized)?.rf;
            Ok(BatchRecord {
                batch: b,
                dx,
                dy,
                parked,
                separation,
                victim: counts,
                rf,
            })
        })
        .collect::<Result<Vec<_>, SimulationError>>()?;

    let mut total = CountSummary::zeros(victim.atom_count());
    for r in &records {
        total.accumulate(&r.victim);
    }
    let scale = policy.batches as f64;
    let expected: Vec<f64> = per_batch.iter().map(|e| e * scale).collect();
    let report = relative_fidelity(&total, &expected, NormalizationMode::ShotNormalized)?;
    Ok(MtdOutcome {
        report,
        batches: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colocation::{layout_at_distance, make_attack_program};
    use crate::geometry::Position;
    use crate::reference;

    fn victim() -> AhsProgram<f64> {
        reference::control_program_at(Position::new(30.0, 30.0))
    }

    fn attacker() -> AhsProgram<f64> {
        make_attack_program(
            &reference::base_program_at(Position::origin()),
            reference::ATTACK_DELTA_LOCAL,
        )
        .unwrap()
    }

    #[test]
    fn placements_respect_gap_and_field() {
        let sim = Simulator::default();
        let layout = layout_at_distance(
            &victim(),
            &attacker(),
            5.0,
            (1.0, 1.0),
            AnchorMode::NearestPair,
            &sim,
        )
        .unwrap();
        let policy = MtdPolicy::reference(3);
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let (dx, dy) =
                sample_placement(&policy, &victim(), Some(&layout.attacker), &sim, &mut rng)
                    .unwrap();
            let moved = victim().register().translated(dx, dy);
            assert!(min_distance_to(&moved, layout.attacker.register().sites()) >= 8.0);
            assert!(moved.sites().iter().all(|p| sim.constraints.contains(p)));
            assert!((-30.0..=0.0).contains(&dx) && (-30.0..=0.0).contains(&dy));
        }
    }

    #[test]
    fn impossible_policy_exhausts() {
        let sim = Simulator::default();
        let layout = layout_at_distance(
            &victim(),
            &attacker(),
            5.0,
            (1.0, 1.0),
            AnchorMode::NearestPair,
            &sim,
        )
        .unwrap();
        let policy = MtdPolicy {
            displacement: DisplacementRect::point(0.0, 0.0),
            max_attempts: 5,
            ..MtdPolicy::reference(1)
        };
        let err = run_with_mtd(
            &sim,
            &victim(),
            Some(&layout.attacker),
            &policy,
            10,
            &NoiseModel::none(),
            1,
            1,
        )
        .unwrap_err();
        assert_eq!(err, SimulationError::PlacementExhausted { attempts: 5 });
    }

    #[test]
    fn zero_batches_rejected() {
        let sim = Simulator::default();
        let policy = MtdPolicy {
            batches: 0,
            ..MtdPolicy::reference(1)
        };
        assert!(matches!(
            run_with_mtd(
                &sim,
                &victim(),
                None,
                &policy,
                10,
                &NoiseModel::none(),
                1,
                1
            ),
            Err(SimulationError::InvalidPolicy(_))
        ));
    }

    #[test]
    fn single_static_batch_equals_fixed_placement() {
        let sim = Simulator::default();
        let layout = layout_at_distance(
            &victim(),
            &attacker(),
            5.0,
            (1.0, 1.0),
            AnchorMode::NearestPair,
            &sim,
        )
        .unwrap();
        let policy = MtdPolicy {
            displacement: DisplacementRect::point(0.0, 0.0),
            batches: 1,
            min_attacker_gap: 0.0,
            ..MtdPolicy::reference(9)
        };
        let (shots, seed, repeats) = (300, 17, 2);
        let mtd = run_with_mtd(
            &sim,
            &victim(),
            Some(&layout.attacker),
            &policy,
            shots,
            &NoiseModel::none(),
            seed,
            repeats,
        )
        .unwrap();
        let fixed = run_colocated(
            &sim,
            &layout,
            shots,
            &NoiseModel::none(),
            batch_seed(seed, 0),
        )
        .unwrap();
        let expected = victim_expectation(&sim, &victim(), shots, repeats, seed).unwrap();
        let rf = relative_fidelity(&fixed.victim, &expected, NormalizationMode::ShotNormalized)
            .unwrap()
            .rf;
        assert_eq!(mtd.report.rf, rf);
        assert_eq!(mtd.batches[0].victim, fixed.victim);
    }

    #[test]
    fn move_after_measure_reports_parking() {
        let sim = Simulator::default();
        let policy = MtdPolicy {
            batches: 2,
            move_after_measure: true,
            ..MtdPolicy::reference(4)
        };
        let out = run_with_mtd(
            &sim,
            &victim(),
            None,
            &policy,
            50,
            &NoiseModel::none(),
            2,
            1,
        )
        .unwrap();
        assert!(out
            .batches
            .iter()
            .all(|b| b.parked.is_some() && b.separation.is_none()));
        let again = run_with_mtd(
            &sim,
            &victim(),
            None,
            &policy,
            50,
            &NoiseModel::none(),
            2,
            1,
        )
        .unwrap();
        assert_eq!(out, again);
    }
}
