use num_complex::Complex;

use crate::evolution::EvolutionError;
use crate::scalar::Real;

/// Largest register the dense state vector supports.
pub const MAX_STATE_ATOMS: usize = 20;

/// Normalized amplitude vector over the `2^N` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T> {
    n: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> QuantumState<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self, EvolutionError> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() || dim > 1 << MAX_STATE_ATOMS {
            return Err(EvolutionError::BadDimension(dim));
        }
        let state = Self {
            n: dim.trailing_zeros() as usize,
            amplitudes,
        };
        let drift = (state.norm().as_f64() - 1.0).abs();
        if !(drift < T::NORM_TOLERANCE) {
            return Err(EvolutionError::NotNormalized(drift));
        }
        Ok(state)
    }

    /// All atoms in `g`.
    pub fn ground(n: usize) -> Self {
        assert!(
            (1..=MAX_STATE_ATOMS).contains(&n),
            "atom count out of range"
        );
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amplitudes[0] = Complex::new(T::one(), T::zero());
        Self { n, amplitudes }
    }

    pub(crate) fn from_raw(n: usize, amplitudes: Vec<Complex<T>>) -> Self {
        Self { n, amplitudes }
    }

    pub fn atom_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Born-rule probabilities `|a_i|²`.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability that qubit `k` is found in `r`.
    pub fn rydberg_marginal(&self, k: usize) -> T {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i >> k & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn rydberg_marginals(&self) -> Vec<T> {
        (0..self.n).map(|k| self.rydberg_marginal(k)).collect()
    }
}

pub fn ground_state<T: Real>(n: usize) -> QuantumState<T> {
    QuantumState::ground(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_states() {
        let s = ground_state::<f64>(3);
        assert_eq!(s.dim(), 8);
        assert_eq!(s.amplitudes()[0], Complex::new(1.0, 0.0));
        assert!(s.amplitudes()[1..]
            .iter()
            .all(|a| *a == Complex::new(0.0, 0.0)));
        assert_eq!(s.norm(), 1.0);
        let one = ground_state::<f64>(1);
        assert_eq!(
            one.amplitudes(),
            &[Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]
        );
    }

    #[test]
    fn construction_checks_norm_and_size() {
        let half = Complex::new(0.5, 0.0);
        assert!(QuantumState::new(vec![half; 4]).is_ok());
        assert!(matches!(
            QuantumState::new(vec![half; 2]),
            Err(EvolutionError::NotNormalized(_))
        ));
        assert!(matches!(
            QuantumState::new(vec![half; 3]),
            Err(EvolutionError::BadDimension(3))
        ));
    }

    #[test]
    fn marginals() {
        let a = Complex::new(0.5f64.sqrt(), 0.0);
        let z = Complex::new(0.0, 0.0);
        // weight on indices 0b01 and 0b11: qubit 0 always excited
        let s = QuantumState::new(vec![z, a, z, a]).unwrap();
        let m = s.rydberg_marginals();
        assert!((m[0] - 1.0).abs() < 1e-15);
        assert!((m[1] - 0.5).abs() < 1e-15);
    }
}
