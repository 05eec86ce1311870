//! Piecewise-linear time series.

use crate::program::ProgramError;
use crate::scalar::Real;

/// Knots `(t_i, v_i)` with `t_0 = 0` and strictly increasing times; values
/// between knots are linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> Waveform<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self, ProgramError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(ProgramError::InvalidWaveform(
                "times and values must be non-empty and equal length",
            ));
        }
        if times[0] != T::zero() {
            return Err(ProgramError::InvalidWaveform("first knot must be at t = 0"));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(ProgramError::InvalidWaveform("non-finite knot"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ProgramError::InvalidWaveform(
                "knot times must be strictly increasing",
            ));
        }
        Ok(Self { times, values })
    }

    /// Two-knot waveform holding `value` on `[0, duration]`.
    pub fn constant(value: T, duration: T) -> Result<Self, ProgramError> {
        if duration == T::zero() {
            return Self::new(vec![T::zero()], vec![value]);
        }
        Self::new(vec![T::zero(), duration], vec![value, value])
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn end_time(&self) -> T {
        *self.times.last().expect("waveform has knots")
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Value at `t`; exact at knots, linear between them.
    pub fn eval(&self, t: T) -> Result<T, ProgramError> {
        if !(t >= T::zero() && t <= self.end_time()) {
            return Err(ProgramError::OutOfRange {
                t: t.as_f64(),
                end: self.end_time().as_f64(),
            });
        }
        // index of the first knot strictly after t
        let hi = self.times.partition_point(|&k| k <= t);
        if hi == 0 {
            return Ok(self.values[0]);
        }
        let lo = hi - 1;
        if hi == self.times.len() || self.times[lo] == t {
            return Ok(self.values[lo]);
        }
        let (t0, t1) = (self.times[lo], self.times[hi]);
        let (v0, v1) = (self.values[lo], self.values[hi]);
        let w = (t - t0) / (t1 - t0);
        Ok(v0 + (v1 - v0) * w)
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
