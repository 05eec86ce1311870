//! The Rydberg many-body Hamiltonian
//!
//! ```text
//! H(t) = Σ_k (Ω/2)(e^{iφ}|g⟩⟨r| + e^{−iφ}|r⟩⟨g|)_k
//!      − Σ_k (Δ_global + Δ_local·h_k) n_k
//!      + Σ_{j<k} V_jk n_j n_k,          V_jk = C6 / d_jk⁶
//! ```
//!
//! in units where ħ = 1 (energies in rad/s). Basis states are indexed
//! little-endian: qubit `k` is bit `k` of the index, with `g = 0`, `r = 1`.
//!
//! [`Hamiltonian`] applies the operator matrix-free; [`build_dense`] builds
//! the same operator from Kronecker products of single-qubit matrices and is
//! kept as an independent reference.

use num_complex::Complex;
use thiserror::Error;

use crate::dense::DenseMatrix;
use crate::geometry::Register;
use crate::program::{AhsProgram, ProgramError};
use crate::scalar::Real;

/// Largest register [`build_dense`] will materialize.
pub const DENSE_MAX_ATOMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("sites {first} and {second} coincide")]
    DegenerateGeometry { first: usize, second: usize },
    #[error("state has dimension {got}, operator expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{atoms} atoms is too large for a dense matrix (max {max})")]
    TooLarge { atoms: usize, max: usize },
    #[error("C6 must be positive and finite")]
    InvalidConstants,
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConstants<T> {
    /// van der Waals coefficient, rad·µm⁶/s.
    pub c6: T,
    /// Pairs farther apart than this are dropped. `None` keeps every pair.
    pub vdw_cutoff: Option<T>,
}

/// C6 for the ⁸⁷Rb 70S state used by Aquila, in rad·µm⁶/s.
pub const DEFAULT_C6: f64 = 5.42e12;

impl<T: Real> PhysicsConstants<T> {
    pub fn new(c6: T) -> Result<Self, HamiltonianError> {
        if !(c6.is_finite() && c6 > T::zero()) {
            return Err(HamiltonianError::InvalidConstants);
        }
        Ok(Self {
            c6,
            vdw_cutoff: None,
        })
    }
}

impl<T: Real> Default for PhysicsConstants<T> {
    fn default() -> Self {
        Self {
            c6: T::lit(DEFAULT_C6),
            vdw_cutoff: None,
        }
    }
}

/// Symmetric pair-interaction matrix, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct VdwTable<T> {
    n: usize,
    v: Vec<T>,
}

impl<T: Real> VdwTable<T> {
    pub fn atom_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> T {
        self.v[j * self.n + k]
    }

    /// Interaction energy `Σ_{j<k} V_jk b_j b_k` of every basis state.
    pub fn basis_energies(&self) -> Vec<T> {
        let dim = 1usize << self.n;
        (0..dim)
            .map(|state| {
                let mut e = T::zero();
                for j in 0..self.n {
                    if state >> j & 1 == 0 {
                        continue;
                    }
                    for k in j + 1..self.n {
                        if state >> k & 1 == 1 {
                            e = e + self.get(j, k);
                        }
                    }
                }
                e
            })
            .collect()
    }
}

pub fn vdw_table<T: Real>(
    register: &Register<T>,
    constants: &PhysicsConstants<T>,
) -> Result<VdwTable<T>, HamiltonianError> {
    let n = register.len();
    let sites = register.sites();
    let mut v = vec![T::zero(); n * n];
    for j in 0..n {
        for k in j + 1..n {
            let d = sites[j].distance(&sites[k]);
            if d == T::zero() {
                return Err(HamiltonianError::DegenerateGeometry {
                    first: j,
                    second: k,
                });
            }
            if constants.vdw_cutoff.is_some_and(|cut| d > cut) {
                continue;
            }
            let d3 = d * d * d;
            let value = constants.c6 / (d3 * d3);
            v[j * n + k] = value;
            v[k * n + j] = value;
        }
    }
    Ok(VdwTable { n, v })
}

/// Field values of a program at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValues<T> {
    pub omega: T,
    pub phi: T,
    pub delta_global: T,
    pub delta_local: T,
}

impl<T: Real> FieldValues<T> {
    pub fn at(program: &AhsProgram<T>, t: T) -> Result<Self, ProgramError> {
        let drive = program.drive();
        Ok(Self {
            omega: drive.omega().eval(t)?,
            phi: drive.phi().eval(t)?,
            delta_global: drive.delta_global().eval(t)?,
            delta_local: match program.shift() {
                Some(s) => s.delta_local().eval(t)?,
                None => T::zero(),
            },
        })
    }
}

/// A program's Hamiltonian with all time-independent pieces precomputed.
#[derive(Debug, Clone)]
pub struct Hamiltonian<'a, T> {
    program: &'a AhsProgram<T>,
    n: usize,
    interaction: Vec<T>,
    excitations: Vec<T>,
    shift_weight: Vec<T>,
}

impl<'a, T: Real> Hamiltonian<'a, T> {
    pub fn new(program: &'a AhsProgram<T>, table: &VdwTable<T>) -> Result<Self, HamiltonianError> {
        let n = program.atom_count();
        if table.atom_count() != n {
            return Err(HamiltonianError::DimensionMismatch {
                expected: n,
                got: table.atom_count(),
            });
        }
        let dim = 1usize << n;
        let pattern = program.shift_pattern();
        let mut excitations = Vec::with_capacity(dim);
        let mut shift_weight = Vec::with_capacity(dim);
        for state in 0..dim {
            excitations.push(T::from_u32((state as u64).count_ones()).expect("small count"));
            shift_weight.push(
                (0..n)
                    .filter(|k| state >> k & 1 == 1)
                    .map(|k| pattern[k])
                    .sum(),
            );
        }
        Ok(Self {
            program,
            n,
            interaction: table.basis_energies(),
            excitations,
            shift_weight,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Freezes the operator at time `t`.
    pub fn at(&self, t: T) -> Result<FrozenHamiltonian<T>, HamiltonianError> {
        let f = FieldValues::at(self.program, t)?;
        let diag = (0..self.dim())
            .map(|i| {
                self.interaction[i]
                    - f.delta_global * self.excitations[i]
                    - f.delta_local * self.shift_weight[i]
            })
            .collect();
        let half = f.omega / T::lit(2.0);
        Ok(FrozenHamiltonian {
            n: self.n,
            diag,
            lower: Complex::from_polar(half, f.phi),
        })
    }
}

/// The operator at a fixed time: diagonal energies plus one drive coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenHamiltonian<T> {
    n: usize,
    diag: Vec<T>,
    /// `⟨g|H_k|r⟩ = (Ω/2)e^{iφ}`; the conjugate sits on `⟨r|H_k|g⟩`.
    lower: Complex<T>,
}

impl<T: Real> FrozenHamiltonian<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    /// Upper bound on the spectral norm: `max|diag| + N·Ω/2`.
    pub fn norm_bound(&self) -> T {
        let dmax = self.diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
        dmax + T::from_usize(self.n).expect("small") * self.lower.norm()
    }

    /// `a·self + b·other`; both must act on the same register.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            lower: self.lower * a + other.lower * b,
        }
    }

    /// `out = H·input`.
    pub fn apply_into(&self, input: &[Complex<T>], out: &mut [Complex<T>]) {
        let upper = self.lower.conj();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = input[i] * self.diag[i];
            for k in 0..self.n {
                let bit = 1usize << k;
                if i & bit == 0 {
                    acc = acc + self.lower * input[i | bit];
                } else {
                    acc = acc + upper * input[i & !bit];
                }
            }
            *o = acc;
        }
    }
}

/// `H(t)·amplitudes`, computed without materializing `H`.
pub fn apply_hamiltonian<T: Real>(
    program: &AhsProgram<T>,
    table: &VdwTable<T>,
    t: T,
    amplitudes: &[Complex<T>],
) -> Result<Vec<Complex<T>>, HamiltonianError> {
    let h = Hamiltonian::new(program, table)?;
    if amplitudes.len() != h.dim() {
        return Err(HamiltonianError::DimensionMismatch {
            expected: h.dim(),
            got: amplitudes.len(),
        });
    }
    let frozen = h.at(t)?;
    let mut out = vec![Complex::new(T::zero(), T::zero()); amplitudes.len()];
    frozen.apply_into(amplitudes, &mut out);
    Ok(out)
}

fn single_qubit<T: Real>(entries: [(f64, f64); 4]) -> DenseMatrix<T> {
    DenseMatrix::from_rows(
        2,
        entries
            .iter()
            .map(|&(re, im)| Complex::new(T::lit(re), T::lit(im)))
            .collect(),
    )
}

/// `⊗_{q=N−1..0}` with `ops[q]` on qubit `q` (identity where `None`).
fn embed<T: Real>(n: usize, ops: &[(usize, &DenseMatrix<T>)]) -> DenseMatrix<T> {
    let id = DenseMatrix::identity(2);
    let mut acc = DenseMatrix::identity(1);
    for q in (0..n).rev() {
        let factor = ops.iter().find(|(k, _)| *k == q).map_or(&id, |(_, m)| *m);
        acc = acc.kron(factor);
    }
    acc
}

/// Explicit `2^N × 2^N` matrix of `H(t)` built from Kronecker products.
pub fn build_dense<T: Real>(
    program: &AhsProgram<T>,
    table: &VdwTable<T>,
    t: T,
) -> Result<DenseMatrix<T>, HamiltonianError> {
    let n = program.atom_count();
    if n > DENSE_MAX_ATOMS {
        return Err(HamiltonianError::TooLarge {
            atoms: n,
            max: DENSE_MAX_ATOMS,
        });
    }
    if table.atom_count() != n {
        return Err(HamiltonianError::DimensionMismatch {
            expected: n,
            got: table.atom_count(),
        });
    }
    let f = FieldValues::at(program, t)?;
    let pauli_x = single_qubit::<T>([(0., 0.), (1., 0.), (1., 0.), (0., 0.)]);
    let pauli_y = single_qubit::<T>([(0., 0.), (0., -1.), (0., 1.), (0., 0.)]);
    let number = single_qubit::<T>([(0., 0.), (0., 0.), (0., 0.), (1., 0.)]);
    let real = |x: T| Complex::new(x, T::zero());
    let half = f.omega / T::lit(2.0);
    let pattern = program.shift_pattern();

    let mut h = DenseMatrix::zeros(1 << n);
    for (k, &h_k) in pattern.iter().enumerate() {
        h.add_assign(&embed(n, &[(k, &pauli_x)]).scaled(real(half * f.phi.cos())));
        h.add_assign(&embed(n, &[(k, &pauli_y)]).scaled(real(-half * f.phi.sin())));
        h.add_assign(
            &embed(n, &[(k, &number)]).scaled(real(-(f.delta_global + f.delta_local * h_k))),
        );
    }
    for j in 0..n {
        for k in j + 1..n {
            h.add_assign(&embed(n, &[(j, &number), (k, &number)]).scaled(real(table.get(j, k))));
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Position;
    use crate::program::{DrivingField, ShiftingField};
    use crate::reference;
    use crate::waveform::Waveform;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn pair(d: f64, omega: f64) -> AhsProgram<f64> {
        let reg = Register::new(vec![Position::new(0.0, 0.0), Position::new(d, 0.0)]).unwrap();
        AhsProgram::new(
            reg,
            DrivingField::constant(omega, 0.0, 0.0, 1e-6).unwrap(),
            None,
            1e-6,
        )
        .unwrap()
    }

    #[test]
    fn vdw_at_control_spacing() {
        let t = vdw_table(pair(5.5, 0.0).register(), &PhysicsConstants::default()).unwrap();
        // 5.5⁶ = 27680.640625
        let expected = 5.42e12 / 27_680.640_625;
        assert!((t.get(0, 1) - expected).abs() / expected < 1e-14);
        assert!((t.get(0, 1) - 1.958e8).abs() < 1e5);
        assert_eq!(t.get(0, 0), 0.0);
        assert_eq!(t.get(1, 0), t.get(0, 1));
        let far = vdw_table(pair(11.0, 0.0).register(), &PhysicsConstants::default()).unwrap();
        assert!((t.get(0, 1) / far.get(0, 1) - 64.0).abs() < 1e-12);
        assert!((far.get(0, 1) - 3.06e6).abs() < 1e4);
    }

    #[test]
    fn single_atom_table_is_zero() {
        let reg = Register::new(vec![Position::new(1.0, 1.0)]).unwrap();
        let t = vdw_table(&reg, &PhysicsConstants::default()).unwrap();
        assert_eq!(t.atom_count(), 1);
        assert_eq!(t.get(0, 0), 0.0);
    }

    #[test]
    fn coincident_sites_are_degenerate() {
        let reg = Register::new(vec![Position::new(1.0, 1.0), Position::new(1.0, 1.0)]).unwrap();
        assert!(matches!(
            vdw_table(&reg, &PhysicsConstants::default()),
            Err(HamiltonianError::DegenerateGeometry {
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn cutoff_drops_far_pairs() {
        let consts = PhysicsConstants {
            c6: DEFAULT_C6,
            vdw_cutoff: Some(10.0),
        };
        let t = vdw_table(pair(11.0, 0.0).register(), &consts).unwrap();
        assert_eq!(t.get(0, 1), 0.0);
    }

    #[test]
    fn single_atom_drive() {
        let reg = Register::new(vec![Position::new(0.0, 0.0)]).unwrap();
        let p = AhsProgram::new(
            reg,
            DrivingField::constant(2.5e6, 0.0, 0.0, 1e-6).unwrap(),
            None,
            1e-6,
        )
        .unwrap();
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        let out = apply_hamiltonian(&p, &table, 0.0, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(out, vec![c(0.0), c(1.25e6)]);
    }

    #[test]
    fn diagonal_only_interaction() {
        let p = pair(5.5, 0.0);
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        let psi = vec![c(0.5), c(0.5), c(0.5), c(0.5)];
        let out = apply_hamiltonian(&p, &table, 5e-7, &psi).unwrap();
        assert_eq!(&out[..3], &[c(0.0), c(0.0), c(0.0)]);
        assert!((out[3].re - 0.5 * table.get(0, 1)).abs() < 1e-6);
        assert!((out[3].re - 0.5 * 1.958e8).abs() < 1e5);
    }

    #[test]
    fn zero_fields_single_atom_gives_zero() {
        let reg = Register::new(vec![Position::new(0.0, 0.0)]).unwrap();
        let p = AhsProgram::new(
            reg,
            DrivingField::constant(0.0, 0.0, 0.0, 1e-6).unwrap(),
            None,
            1e-6,
        )
        .unwrap();
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        let out = apply_hamiltonian(&p, &table, 0.0, &[c(0.6), c(0.8)]).unwrap();
        assert_eq!(out, vec![c(0.0), c(0.0)]);
        let dense = build_dense(&p, &table, 0.0).unwrap();
        assert_eq!(dense, DenseMatrix::zeros(2));
    }

    #[test]
    fn dimension_mismatch() {
        let p = pair(5.5, 1.0);
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        assert!(matches!(
            apply_hamiltonian(&p, &table, 0.0, &[c(1.0), c(0.0)]),
            Err(HamiltonianError::DimensionMismatch {
                expected: 4,
                got: 2
            })
        ));
    }

    #[test]
    fn dense_matches_matrix_free_on_control() {
        let p = reference::control_program();
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        let h = build_dense(&p, &table, 0.0).unwrap();
        assert_eq!(h.hermitian_defect(), 0.0);
        for i in 0..8 {
            let mut e = vec![c(0.0); 8];
            e[i] = c(1.0);
            let fast = apply_hamiltonian(&p, &table, 0.0, &e).unwrap();
            let slow = h.matvec(&e);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_guard() {
        let sites = (0..11)
            .map(|i| Position::new(5.0 * i as f64, 0.0))
            .collect();
        let p = AhsProgram::new(
            Register::new(sites).unwrap(),
            DrivingField::constant(1.0, 0.0, 0.0, 1.0).unwrap(),
            None,
            1.0,
        )
        .unwrap();
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        assert!(matches!(
            build_dense(&p, &table, 0.0),
            Err(HamiltonianError::TooLarge { atoms: 11, .. })
        ));
    }

    #[test]
    fn local_detuning_lowers_rydberg_energy() {
        let base = pair(6.0, 1e6);
        let table = vdw_table(base.register(), &PhysicsConstants::default()).unwrap();
        let energies = |mag: f64| {
            let shift =
                ShiftingField::new(Waveform::constant(mag, 1e-6).unwrap(), vec![1.0, 0.0]).unwrap();
            let p = base.with_shift(Some(shift)).unwrap();
            Hamiltonian::new(&p, &table)
                .unwrap()
                .at(0.0)
                .unwrap()
                .diagonal()
                .to_vec()
        };
        let (lo, hi) = (energies(1e6), energies(2e6));
        for state in 0..4 {
            if state & 1 == 1 {
                assert!(hi[state] < lo[state]);
            } else {
                assert_eq!(hi[state], lo[state]);
            }
        }
    }

    #[test]
    fn out_of_range_time() {
        let p = pair(5.5, 1.0);
        let table = vdw_table(p.register(), &PhysicsConstants::default()).unwrap();
        assert!(matches!(
            apply_hamiltonian(&p, &table, 2e-6, &[c(1.0), c(0.0), c(0.0), c(0.0)]),
            Err(HamiltonianError::Program(ProgramError::OutOfRange { .. }))
        ));
    }
}
