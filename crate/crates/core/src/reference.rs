//! The reference control program and the constants the experiments share.
//!
//! The control is a 5.5 µm equilateral triangle driven on resonance with a
//! constant Ω = 2.5×10⁶ rad/s for 4 µs; its apex carries a constant local
//! detuning of 5×10⁷ rad/s, twenty times Ω.

use crate::geometry::{make_triangle_register, Position, TRIANGLE_TOP};
use crate::program::{AhsProgram, DrivingField, ShiftingField};
use crate::scalar::Real;
use crate::waveform::Waveform;

pub const TRIANGLE_SIDE_UM: f64 = 5.5;
pub const OMEGA: f64 = 2.5e6;
pub const DURATION_S: f64 = 4e-6;
pub const ATTACK_DELTA_LOCAL: f64 = 5e7;

/// Unshifted reference triangle with its first corner at `origin`.
pub fn base_program_at<T: Real>(origin: Position<T>) -> AhsProgram<T> {
    let duration = T::lit(DURATION_S);
    let register = make_triangle_register(T::lit(TRIANGLE_SIDE_UM), origin).expect("positive side");
    let drive =
        DrivingField::constant(T::lit(OMEGA), T::zero(), T::zero(), duration).expect("valid drive");
    AhsProgram::new(register, drive, None, duration).expect("consistent program")
}

/// Shifting field of constant magnitude on one site of an `n`-site register.
pub fn single_site_shift<T: Real>(
    n: usize,
    site: usize,
    magnitude: T,
    duration: T,
) -> ShiftingField<T> {
    let mut pattern = vec![T::zero(); n];
    pattern[site] = T::one();
    ShiftingField::new(
        Waveform::constant(magnitude, duration).expect("valid duration"),
        pattern,
    )
    .expect("non-negative magnitude")
}

/// The control program with its first corner at `origin`.
pub fn control_program_at<T: Real>(origin: Position<T>) -> AhsProgram<T> {
    let base = base_program_at(origin);
    let shift = single_site_shift(3, TRIANGLE_TOP, T::lit(ATTACK_DELTA_LOCAL), base.duration());
    base.with_shift(Some(shift))
        .expect("pattern matches register")
}

pub fn control_program() -> AhsProgram<f64> {
    control_program_at(Position::origin())
}
