//! AHS programs: register plus global drive plus optional local detuning.

use thiserror::Error;

use crate::geometry::{MachineConstraints, Register};
use crate::scalar::Real;
use crate::waveform::Waveform;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("register has no sites")]
    EmptyRegister,
    #[error("site {site} has a non-finite coordinate")]
    NonFiniteSite { site: usize },
    #[error("triangle side must be positive and finite")]
    InvalidSide,
    #[error("machine constraints must be strictly positive")]
    InvalidConstraints,
    #[error("invalid waveform: {0}")]
    InvalidWaveform(&'static str),
    #[error("time {t} outside waveform range [0, {end}]")]
    OutOfRange { t: f64, end: f64 },
    #[error("invalid driving field: {0}")]
    InvalidDrive(&'static str),
    #[error("invalid shifting field: {0}")]
    InvalidShift(String),
    #[error("duration must be finite and non-negative")]
    InvalidDuration,
    #[error(
        "sites {first} and {second} are {distance} um apart, below the minimum {min_spacing} um"
    )]
    SpacingViolation {
        first: usize,
        second: usize,
        distance: f64,
        min_spacing: f64,
    },
    #[error("site {site} at ({x}, {y}) um lies outside the field of view")]
    OutOfField { site: usize, x: f64, y: f64 },
    #[error("{atoms} atoms exceed the machine limit of {max}")]
    TooManyAtoms { atoms: usize, max: usize },
    #[error("waveform mismatch: {0}")]
    WaveformMismatch(String),
    #[error("programs have different driving fields")]
    DriveMismatch,
    #[error("programs have different durations ({0} s vs {1} s)")]
    DurationMismatch(f64, f64),
}

/// Global drive: Rabi frequency Ω (rad/s), phase φ (rad), detuning Δ (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingField<T> {
    omega: Waveform<T>,
    phi: Waveform<T>,
    delta_global: Waveform<T>,
}

impl<T: Real> DrivingField<T> {
    pub fn new(
        omega: Waveform<T>,
        phi: Waveform<T>,
        delta_global: Waveform<T>,
    ) -> Result<Self, ProgramError> {
        let end = omega.end_time();
        if phi.end_time() != end || delta_global.end_time() != end {
            return Err(ProgramError::WaveformMismatch(
                "omega, phi and delta_global must end at the same time".into(),
            ));
        }
        if omega.min_value() < T::zero() {
            return Err(ProgramError::InvalidDrive("omega must be non-negative"));
        }
        Ok(Self {
            omega,
            phi,
            delta_global,
        })
    }

    /// Constant Ω, φ and Δ over `[0, duration]`.
    pub fn constant(omega: T, phi: T, delta_global: T, duration: T) -> Result<Self, ProgramError> {
        Self::new(
            Waveform::constant(omega, duration)?,
            Waveform::constant(phi, duration)?,
            Waveform::constant(delta_global, duration)?,
        )
    }

    pub fn omega(&self) -> &Waveform<T> {
        &self.omega
    }

    pub fn phi(&self) -> &Waveform<T> {
        &self.phi
    }

    pub fn delta_global(&self) -> &Waveform<T> {
        &self.delta_global
    }

    pub fn end_time(&self) -> T {
        self.omega.end_time()
    }

    pub(crate) fn with_omega(&self, omega: Waveform<T>) -> Self {
        Self {
            omega,
            ..self.clone()
        }
    }

    pub(crate) fn with_delta_global(&self, delta_global: Waveform<T>) -> Self {
        Self {
            delta_global,
            ..self.clone()
        }
    }
}

/// Local detuning `−Δ_local(t)·h_k·n_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftingField<T> {
    delta_local: Waveform<T>,
    pattern: Vec<T>,
}

impl<T: Real> ShiftingField<T> {
    pub fn new(delta_local: Waveform<T>, pattern: Vec<T>) -> Result<Self, ProgramError> {
        if delta_local.min_value() < T::zero() {
            return Err(ProgramError::InvalidShift(
                "delta_local must be non-negative".into(),
            ));
        }
        if let Some(k) = pattern
            .iter()
            .position(|&h| !(h >= T::zero() && h <= T::one()))
        {
            return Err(ProgramError::InvalidShift(format!(
                "pattern[{k}] outside [0, 1]"
            )));
        }
        Ok(Self {
            delta_local,
            pattern,
        })
    }

    pub fn delta_local(&self) -> &Waveform<T> {
        &self.delta_local
    }

    pub fn pattern(&self) -> &[T] {
        &self.pattern
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AhsProgram<T> {
    register: Register<T>,
    drive: DrivingField<T>,
    shift: Option<ShiftingField<T>>,
    duration: T,
}

impl<T: Real> AhsProgram<T> {
    pub fn new(
        register: Register<T>,
        drive: DrivingField<T>,
        shift: Option<ShiftingField<T>>,
        duration: T,
    ) -> Result<Self, ProgramError> {
        let program = Self {
            register,
            drive,
            shift,
            duration,
        };
        program.check_fields()?;
        Ok(program)
    }

    fn check_fields(&self) -> Result<(), ProgramError> {
        if !(self.duration.is_finite() && self.duration >= T::zero()) {
            return Err(ProgramError::InvalidDuration);
        }
        if self.drive.end_time() != self.duration {
            return Err(ProgramError::WaveformMismatch(format!(
                "drive ends at {} s, program duration is {} s",
                self.drive.end_time(),
                self.duration
            )));
        }
        if let Some(shift) = &self.shift {
            if shift.delta_local.end_time() != self.duration {
                return Err(ProgramError::WaveformMismatch(format!(
                    "shift ends at {} s, program duration is {} s",
                    shift.delta_local.end_time(),
                    self.duration
                )));
            }
            if shift.pattern.len() != self.register.len() {
                return Err(ProgramError::WaveformMismatch(format!(
                    "shift pattern has {} entries for {} sites",
                    shift.pattern.len(),
                    self.register.len()
                )));
            }
        }
        Ok(())
    }

    pub fn register(&self) -> &Register<T> {
        &self.register
    }

    pub fn drive(&self) -> &DrivingField<T> {
        &self.drive
    }

    pub fn shift(&self) -> Option<&ShiftingField<T>> {
        self.shift.as_ref()
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn atom_count(&self) -> usize {
        self.register.len()
    }

    /// Per-site shift coefficients, zero when there is no shifting field.
    pub fn shift_pattern(&self) -> Vec<T> {
        match &self.shift {
            Some(s) => s.pattern.clone(),
            None => vec![T::zero(); self.register.len()],
        }
    }

    /// Returns the program unchanged if it fits the machine.
    pub fn validate(self, constraints: &MachineConstraints<T>) -> Result<Self, ProgramError> {
        self.check(constraints)?;
        Ok(self)
    }

    /// Non-consuming form of [`validate`](Self::validate).
    pub fn check(&self, constraints: &MachineConstraints<T>) -> Result<(), ProgramError> {
        self.check_fields()?;
        self.register.check(constraints)
    }

    /// Shifts every site by `(dx, dy)` µm; fields are untouched.
    pub fn translate(&self, dx: T, dy: T) -> Self {
        Self {
            register: self.register.translated(dx, dy),
            ..self.clone()
        }
    }

    pub fn with_register(&self, register: Register<T>) -> Result<Self, ProgramError> {
        Self::new(
            register,
            self.drive.clone(),
            self.shift.clone(),
            self.duration,
        )
    }

    pub fn with_drive(&self, drive: DrivingField<T>) -> Result<Self, ProgramError> {
        Self::new(
            self.register.clone(),
            drive,
            self.shift.clone(),
            self.duration,
        )
    }

    pub fn with_shift(&self, shift: Option<ShiftingField<T>>) -> Result<Self, ProgramError> {
        Self::new(
            self.register.clone(),
            self.drive.clone(),
            shift,
            self.duration,
        )
    }
}

/// Result of co-locating two programs on one machine.
#[derive(Debug, Clone, PartialEq)]
pub struct Merged<T> {
    pub program: AhsProgram<T>,
    /// `first[k]` is the merged index of the first program's qubit `k`.
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl<T> Merged<T> {
    /// Picks the entries belonging to one tenant out of a per-qubit vector.
    pub fn select<V: Copy>(map: &[usize], merged: &[V]) -> Vec<V> {
        map.iter().map(|&i| merged[i]).collect()
    }
}

/// Places `b`'s sites after `a`'s under the one shared drive.
///
/// Shifting fields are combined into one pattern, filling zeros for the tenant
/// without one. When both tenants carry a shift their `Δ_local` waveforms must
/// be identical, since the machine has a single local-detuning channel.
pub fn merge<T: Real>(a: &AhsProgram<T>, b: &AhsProgram<T>) -> Result<Merged<T>, ProgramError> {
    if a.duration != b.duration {
        return Err(ProgramError::DurationMismatch(
            a.duration.as_f64(),
            b.duration.as_f64(),
        ));
    }
    if a.drive != b.drive {
        return Err(ProgramError::DriveMismatch);
    }
    let sites: Vec<_> = a
        .register
        .sites()
        .iter()
        .chain(b.register.sites())
        .copied()
        .collect();
    let register = Register::new(sites)?;
    let shift = match (&a.shift, &b.shift) {
        (None, None) => None,
        (sa, sb) => {
            let delta = match (sa, sb) {
                (Some(x), Some(y)) if x.delta_local != y.delta_local => {
                    return Err(ProgramError::WaveformMismatch(
                        "tenants use different delta_local waveforms".into(),
                    ))
                }
                (Some(x), _) => x.delta_local.clone(),
                (None, Some(y)) => y.delta_local.clone(),
                (None, None) => unreachable!(),
            };
            let mut pattern = a.shift_pattern();
            pattern.extend(b.shift_pattern());
            Some(ShiftingField::new(delta, pattern)?)
        }
    };
    let na = a.atom_count();
    let program = AhsProgram::new(register, a.drive.clone(), shift, a.duration)?;
    Ok(Merged {
        program,
        first: (0..na).collect(),
        second: (na..na + b.atom_count()).collect(),
    })
}
