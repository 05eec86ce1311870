//! Random programs and states for property tests and oracle checks.
//!
//! Magnitudes stay within what a real device accepts: Ω ≤ 1e7 rad/s,
//! |Δ_global| ≤ 2e7 rad/s, Δ_local ≤ 5e7 rad/s, 1 to 4 µs, sites at least
//! 4 µm apart inside a 20 µm box.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{Position, Register};
use crate::program::{AhsProgram, DrivingField, ShiftingField};
use crate::rng::Rng;
use crate::state::QuantumState;
use crate::waveform::Waveform;

pub const MAX_OMEGA: f64 = 1e7;
pub const MAX_DELTA_GLOBAL: f64 = 2e7;
pub const MAX_DELTA_LOCAL: f64 = 5e7;

/// `n` sites in a 20 µm box, rejection-sampled to keep 4 µm spacing.
pub fn random_register(rng: &mut Rng, n: usize) -> Register<f64> {
    let mut sites: Vec<Position<f64>> = Vec::with_capacity(n);
    while sites.len() < n {
        let p = Position::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
        if sites.iter().all(|q| q.distance(&p) >= 4.0) {
            sites.push(p);
        }
    }
    Register::new(sites).expect("finite sites")
}

fn random_waveform(rng: &mut Rng, duration: f64, knots: usize, lo: f64, hi: f64) -> Waveform<f64> {
    let mut times: Vec<f64> = (0..knots)
        .map(|i| duration * i as f64 / (knots - 1) as f64)
        .collect();
    times[knots - 1] = duration;
    let values = (0..knots).map(|_| rng.random_range(lo..=hi)).collect();
    Waveform::new(times, values).expect("valid grid")
}

/// Piecewise-linear drive with 2 to 4 knots per waveform and, half the
/// time, a random local shift.
pub fn random_program(rng: &mut Rng, n: usize) -> AhsProgram<f64> {
    let duration = rng.random_range(1e-6..=4e-6);
    let mut knots = || rng.random_range(2..=4usize);
    let (k1, k2, k3, k4) = (knots(), knots(), knots(), knots());
    let drive = DrivingField::new(
        random_waveform(rng, duration, k1, 0.0, MAX_OMEGA),
        random_waveform(rng, duration, k2, -PI, PI),
        random_waveform(rng, duration, k3, -MAX_DELTA_GLOBAL, MAX_DELTA_GLOBAL),
    )
    .expect("matching end times");
    let shift = rng.random_bool(0.5).then(|| {
        let pattern = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        ShiftingField::new(
            random_waveform(rng, duration, k4, 0.0, MAX_DELTA_LOCAL),
            pattern,
        )
        .expect("valid shift")
    });
    AhsProgram::new(random_register(rng, n), drive, shift, duration).expect("consistent program")
}

/// Haar-like random normalized state on `n` atoms.
pub fn random_state(rng: &mut Rng, n: usize) -> QuantumState<f64> {
    let mut amps: Vec<Complex<f64>> = (0..1usize << n)
        .map(|_| Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    QuantumState::new(amps).expect("normalized")
}
