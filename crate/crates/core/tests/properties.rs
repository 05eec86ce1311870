//! Physical invariants of the Hamiltonian, the propagator and the
//! two-tenant pipeline.

use ahs_core::colocation::{layout_at_distance, run_standalone, AnchorMode};
use ahs_core::evolution::evolve_with;
use ahs_core::fidelity::{relative_fidelity, NormalizationMode};
use ahs_core::geometry::{MachineConstraints, Position, Register};
use ahs_core::hamiltonian::{apply_hamiltonian, build_dense, vdw_table, PhysicsConstants};
use ahs_core::mtd::{run_with_mtd, victim_expectation, MtdPolicy};
use ahs_core::noise::NoiseModel;
use ahs_core::pipeline::Simulator;
use ahs_core::program::{AhsProgram, DrivingField, ShiftingField};
use ahs_core::random::{random_program, random_state};
use ahs_core::rng::rng_from_seed;
use ahs_core::{
    evolve, ground_state, make_attack_program, reference, run_colocated, IntegratorConfig,
};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn final_probabilities(p: &AhsProgram<f64>) -> Vec<f64> {
    evolve(
        p,
        &ground_state(p.atom_count()),
        &IntegratorConfig::default(),
    )
    .unwrap()
    .probabilities()
}

#[test]
fn matrix_free_matches_dense_on_random_inputs() {
    let mut rng = rng_from_seed(101);
    for i in 0..40 {
        let n = 1 + i % 4;
        let p = random_program(&mut rng, n);
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        let t = p.duration() * (i as f64 / 40.0);
        let psi = random_state(&mut rng, n);
        let fast = apply_hamiltonian(&p, &table, t, psi.amplitudes()).unwrap();
        let slow = build_dense(&p, &table, t).unwrap().matvec(psi.amplitudes());
        // relative to the largest energy scale in play
        let scale = fast.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let diff = fast
            .iter()
            .zip(&slow)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(diff / scale < 1e-12, "case {i}: {diff} at scale {scale}");
    }
}

#[test]
fn dense_builds_are_hermitian() {
    let mut rng = rng_from_seed(102);
    for i in 0..20 {
        let p = random_program(&mut rng, 1 + i % 4);
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        let h = build_dense(&p, &table, 0.5 * p.duration()).unwrap();
        assert!(
            h.hermitian_defect() < 1e-12,
            "case {i}: {}",
            h.hermitian_defect()
        );
    }
}

#[test]
fn random_evolutions_preserve_norm() {
    let mut rng = rng_from_seed(103);
    for i in 0..12 {
        let n = 1 + i % 4;
        let p = random_program(&mut rng, n);
        let out = evolve(&p, &random_state(&mut rng, n), &IntegratorConfig::default()).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-8);
    }
}

fn pair(d: f64, duration: f64) -> AhsProgram<f64> {
    let reg = Register::new(vec![Position::new(0.0, 0.0), Position::new(d, 0.0)]).unwrap();
    AhsProgram::new(
        reg,
        DrivingField::constant(reference::OMEGA, 0.0, 0.0, duration).unwrap(),
        None,
        duration,
    )
    .unwrap()
}

#[test]
fn blockade_suppresses_double_excitation() {
    let omega = reference::OMEGA;
    let window = 2.0 * std::f64::consts::PI / omega;
    let p = pair(5.5, window);
    let mut max_rr = 0.0f64;
    let mut single = Vec::new();
    evolve_with(
        &p,
        &PhysicsConstants::default(),
        &ground_state(2),
        &IntegratorConfig::default(),
        |t, a| {
            max_rr = max_rr.max(a[3].norm_sqr());
            single.push((t, a[1].norm_sqr() + a[2].norm_sqr()));
        },
    )
    .unwrap();
    assert!(max_rr < 0.01, "P(rr) reached {max_rr}");
    let (t_peak, _) = single.iter().take_while(|&&(t, _)| t < 0.9 * window).fold(
        (0.0, f64::MIN),
        |best, &(t, v)| if v > best.1 { (t, v) } else { best },
    );
    let predicted = std::f64::consts::PI / (2f64.sqrt() * omega);
    assert!(
        (t_peak / predicted - 1.0).abs() < 0.05,
        "peak at {t_peak}, predicted {predicted}"
    );
}

#[test]
fn relabelling_atoms_permutes_probabilities() {
    let mut rng = rng_from_seed(104);
    let p = loop {
        let p = random_program(&mut rng, 3);
        if p.shift().is_some() {
            break p;
        }
    };
    let perm = [2usize, 0, 1];
    let sites = perm.iter().map(|&k| p.register().sites()[k]).collect();
    let shift = p.shift().unwrap();
    let pattern = perm.iter().map(|&k| shift.pattern()[k]).collect();
    let q = AhsProgram::new(
        Register::new(sites).unwrap(),
        p.drive().clone(),
        Some(ShiftingField::new(shift.delta_local().clone(), pattern).unwrap()),
        p.duration(),
    )
    .unwrap();
    let (pp, pq) = (final_probabilities(&p), final_probabilities(&q));
    for (i, &prob) in pq.iter().enumerate() {
        // new qubit j is old qubit perm[j]
        let old = (0..3).fold(0, |acc, j| acc | ((i >> j) & 1) << perm[j]);
        assert!((prob - pp[old]).abs() < 1e-10, "basis {i}");
    }
}

#[test]
fn translation_leaves_dynamics_unchanged() {
    let mut rng = rng_from_seed(105);
    for n in [2, 3] {
        let p = random_program(&mut rng, n);
        let d = max_diff(
            &final_probabilities(&p),
            &final_probabilities(&p.translate(10.0, 10.0)),
        );
        assert!(d < 1e-10, "n={n}: {d}");
    }
}

#[test]
fn constant_phase_offset_is_unobservable() {
    let mut rng = rng_from_seed(106);
    for n in [1, 3] {
        let p = random_program(&mut rng, n);
        let d = p.drive();
        let shifted = DrivingField::new(
            d.omega().clone(),
            d.phi().map_values(|v| v + 0.7),
            d.delta_global().clone(),
        )
        .unwrap();
        let q = p.with_drive(shifted).unwrap();
        let diff = max_diff(&final_probabilities(&p), &final_probabilities(&q));
        assert!(diff < 1e-10, "n={n}: {diff}");
    }
}

fn wide_simulator() -> Simulator<f64> {
    Simulator {
        constraints: MachineConstraints::new(400.0, 400.0, 4.0, 256).unwrap(),
        ..Simulator::default()
    }
}

fn attacker() -> AhsProgram<f64> {
    make_attack_program(
        &reference::base_program_at(Position::origin()),
        reference::ATTACK_DELTA_LOCAL,
    )
    .unwrap()
}

#[test]
fn distant_tenants_evolve_independently() {
    let sim = wide_simulator();
    let victim = reference::control_program_at(Position::new(10.0, 10.0));
    let layout = layout_at_distance(
        &victim,
        &attacker(),
        200.0,
        (1.0, 1.0),
        AnchorMode::NearestPair,
        &sim,
    )
    .unwrap();
    let joint = run_colocated(&sim, &layout, 10, &NoiseModel::none(), 1).unwrap();
    let alone = sim.final_state(&victim).unwrap().rydberg_marginals();
    assert!(max_diff(&joint.victim_marginals, &alone) < 1e-6);
}

#[test]
fn crosstalk_at_five_microns_beats_hundred() {
    let sim = wide_simulator();
    let shots = 2000;
    let victim = reference::control_program_at(Position::new(10.0, 10.0));
    let expected = victim_expectation(&sim, &victim, shots, 5, 9).unwrap();
    let rf_at = |d: f64| {
        let layout = layout_at_distance(
            &victim,
            &attacker(),
            d,
            (1.0, 1.0),
            AnchorMode::NearestPair,
            &sim,
        )
        .unwrap();
        let out = run_colocated(&sim, &layout, shots, &NoiseModel::none(), 3).unwrap();
        (
            relative_fidelity(&out.victim, &expected, NormalizationMode::ShotNormalized)
                .unwrap()
                .rf,
            out.victim,
        )
    };
    let (far, far_counts) = rf_at(100.0);
    let (near, _) = rf_at(5.0);
    assert!(near < far, "rf(5) = {near}, rf(100) = {far}");

    // at 100 µm the victim's counts look like a standalone run
    let (alone, marginals) = run_standalone(&sim, &victim, shots, &NoiseModel::none(), 3).unwrap();
    for (k, &p) in marginals.iter().enumerate() {
        let sigma = (2.0 * p * (1.0 - p) * shots as f64).sqrt().max(1.0);
        let gap = (far_counts.counts[k] as f64 - alone.counts[k] as f64).abs();
        assert!(
            gap <= 3.0 * sigma,
            "qubit {k}: {gap} vs 3σ = {}",
            3.0 * sigma
        );
    }
}

#[test]
fn mtd_is_no_worse_than_its_worst_batch() {
    let sim = Simulator::default();
    let victim = reference::control_program_at(Position::new(30.0, 30.0));
    let layout = layout_at_distance(
        &victim,
        &attacker(),
        5.0,
        (1.0, 1.0),
        AnchorMode::NearestPair,
        &sim,
    )
    .unwrap();
    for seed in [1, 2] {
        let policy = MtdPolicy::reference(seed);
        let out = run_with_mtd(
            &sim,
            &victim,
            Some(&layout.attacker),
            &policy,
            500,
            &NoiseModel::none(),
            seed,
            2,
        )
        .unwrap();
        let worst = out
            .batches
            .iter()
            .map(|b| b.rf)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.batches.len(), 10);
        assert!(
            out.report.rf >= worst,
            "seed {seed}: {} < {worst}",
            out.report.rf
        );
    }
}

#[test]
fn mtd_without_attacker_recovers_control() {
    let sim = Simulator::default();
    let victim = reference::control_program_at(Position::new(30.0, 30.0));
    let out = run_with_mtd(
        &sim,
        &victim,
        None,
        &MtdPolicy::reference(5),
        1000,
        &NoiseModel::none(),
        5,
        5,
    )
    .unwrap();
    assert!(out.report.rf > 0.99, "{}", out.report.rf);
}
