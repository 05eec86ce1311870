//! Seeded, parametric hardware noise.
//!
//! A [`NoiseModel`] perturbs a program per run: Gaussian site jitter,
//! a multiplicative Rabi fluctuation, an additive global detuning offset,
//! and optionally a position-dependent [`SiteNoiseField`] sampled at the
//! register centroid. Readout errors are carried along and applied at
//! sampling time. Every draw is a pure function of `(seed, run_index)`; a new
//! seed stands for a new calibration session.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{MachineConstraints, Position, Register};
use crate::measurement::DetectionError;
use crate::program::{AhsProgram, ProgramError};
use crate::rng::{child_seed, rng_from_seed, Rng};
use crate::scalar::Real;

/// Placement attempts before jitter is declared too large.
pub const JITTER_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("noise parameters must be finite and non-negative")]
    InvalidParameters,
    #[error("correlation length must be positive")]
    InvalidCorrelationLength,
    #[error("position jitter broke the spacing constraints in {JITTER_RETRIES} consecutive draws")]
    JitterTooLarge,
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Configuration of a site-dependent noise field (all `f64`, as stored in
/// experiment configs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteFieldSpec {
    /// Grid cell edge, µm.
    pub cell_um: f64,
    pub correlation_length_um: f64,
    /// Standard deviation of the additive detuning offset, rad/s.
    pub detuning_sigma: f64,
    /// Standard deviation of the relative Ω factor.
    pub omega_rel_sigma: f64,
}

/// Serialized form of a [`NoiseModel`]; the site field is stored as a spec
/// and realized from the model seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub pos_jitter_sigma_um: f64,
    pub omega_rel_sigma: f64,
    pub delta_offset_sigma: f64,
    pub detection: DetectionError,
    pub site_field: Option<SiteFieldSpec>,
    pub seed: u64,
}

/// Gaussian random field on a grid of cells covering the field of view.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteNoiseField<T> {
    cell: T,
    nx: usize,
    ny: usize,
    correlation_length: T,
    /// Additive detuning offset per cell, rad/s; row-major in `(iy, ix)`.
    detuning: Vec<T>,
    /// Multiplicative Ω factor per cell.
    omega_factor: Vec<T>,
}

impl<T: Real> SiteNoiseField<T> {
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn correlation_length(&self) -> T {
        self.correlation_length
    }

    pub fn detuning_cells(&self) -> &[T] {
        &self.detuning
    }

    pub fn omega_cells(&self) -> &[T] {
        &self.omega_factor
    }

    fn bilinear(&self, values: &[T], p: &Position<T>) -> T {
        let half = T::lit(0.5);
        // fractional cell-centre coordinates, clamped to the outermost centres
        let fx = (p.x / self.cell - half)
            .max(T::zero())
            .min(T::from_usize(self.nx - 1).expect("small"));
        let fy = (p.y / self.cell - half)
            .max(T::zero())
            .min(T::from_usize(self.ny - 1).expect("small"));
        let ix = fx
            .floor()
            .to_usize()
            .expect("in range")
            .min(self.nx.saturating_sub(2));
        let iy = fy
            .floor()
            .to_usize()
            .expect("in range")
            .min(self.ny.saturating_sub(2));
        let ix1 = (ix + 1).min(self.nx - 1);
        let iy1 = (iy + 1).min(self.ny - 1);
        let wx = fx - T::from_usize(ix).expect("small");
        let wy = fy - T::from_usize(iy).expect("small");
        let at = |x: usize, y: usize| values[y * self.nx + x];
        let one = T::one();
        at(ix, iy) * (one - wx) * (one - wy)
            + at(ix1, iy) * wx * (one - wy)
            + at(ix, iy1) * (one - wx) * wy
            + at(ix1, iy1) * wx * wy
    }

    /// Detuning offset at `p`, bilinear between cell centres.
    pub fn detuning_at(&self, p: &Position<T>) -> T {
        self.bilinear(&self.detuning, p)
    }

    pub fn omega_factor_at(&self, p: &Position<T>) -> T {
        self.bilinear(&self.omega_factor, p)
    }
}

fn normal<T: Real>(rng: &mut Rng, sigma: T) -> T {
    let z: f64 = StandardNormal.sample(rng);
    sigma * T::lit(z)
}

/// Smooths i.i.d. unit Gaussians with a Gaussian kernel of length `ell`,
/// normalized so every cell keeps unit variance.
fn smoothed_unit_field(nx: usize, ny: usize, cell: f64, ell: f64, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..nx * ny).map(|_| StandardNormal.sample(rng)).collect();
    let centre = |i: usize| ((i % nx) as f64 * cell, (i / nx) as f64 * cell);
    (0..nx * ny)
        .map(|c| {
            let (cx, cy) = centre(c);
            let (mut acc, mut w2) = (0.0, 0.0);
            for (j, &z) in raw.iter().enumerate() {
                let (x, y) = centre(j);
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                let w = (-r2 / (2.0 * ell * ell)).exp();
                acc += w * z;
                w2 += w * w;
            }
            acc / w2.sqrt()
        })
        .collect()
}

/// Realizes a site field over the machine's field of view.
pub fn sample_site_field<T: Real>(
    spec: &SiteFieldSpec,
    constraints: &MachineConstraints<T>,
    seed: u64,
) -> Result<SiteNoiseField<T>, NoiseError> {
    if !(spec.correlation_length_um.is_finite() && spec.correlation_length_um > 0.0) {
        return Err(NoiseError::InvalidCorrelationLength);
    }
    let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
    if !(spec.cell_um.is_finite()
        && spec.cell_um > 0.0
        && finite_nonneg(spec.detuning_sigma)
        && finite_nonneg(spec.omega_rel_sigma))
    {
        return Err(NoiseError::InvalidParameters);
    }
    let nx = (constraints.field_width.as_f64() / spec.cell_um)
        .ceil()
        .max(1.0) as usize;
    let ny = (constraints.field_height.as_f64() / spec.cell_um)
        .ceil()
        .max(1.0) as usize;
    let mut rng = rng_from_seed(child_seed(seed, "site-field", 0));
    let ell = spec.correlation_length_um;
    let det = smoothed_unit_field(nx, ny, spec.cell_um, ell, &mut rng);
    let omg = smoothed_unit_field(nx, ny, spec.cell_um, ell, &mut rng);
    Ok(SiteNoiseField {
        cell: T::lit(spec.cell_um),
        nx,
        ny,
        correlation_length: T::lit(ell),
        detuning: det
            .iter()
            .map(|&z| T::lit(spec.detuning_sigma * z))
            .collect(),
        omega_factor: omg
            .iter()
            .map(|&z| T::lit((1.0 + spec.omega_rel_sigma * z).max(0.0)))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T> {
    pub pos_jitter_sigma: T,
    pub omega_rel_sigma: T,
    pub delta_offset_sigma: T,
    pub detection: DetectionError,
    pub site_field: Option<SiteNoiseField<T>>,
    pub seed: u64,
}

impl<T: Real> NoiseModel<T> {
    /// The model that changes nothing.
    pub fn none() -> Self {
        Self {
            pos_jitter_sigma: T::zero(),
            omega_rel_sigma: T::zero(),
            delta_offset_sigma: T::zero(),
            detection: DetectionError::default(),
            site_field: None,
            seed: 0,
        }
    }

    pub fn from_spec(
        spec: &NoiseSpec,
        constraints: &MachineConstraints<T>,
    ) -> Result<Self, NoiseError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(spec.pos_jitter_sigma_um)
            && ok(spec.omega_rel_sigma)
            && ok(spec.delta_offset_sigma))
        {
            return Err(NoiseError::InvalidParameters);
        }
        DetectionError::new(spec.detection.eps_g, spec.detection.eps_r)
            .map_err(|_| NoiseError::InvalidParameters)?;
        Ok(Self {
            pos_jitter_sigma: T::lit(spec.pos_jitter_sigma_um),
            omega_rel_sigma: T::lit(spec.omega_rel_sigma),
            delta_offset_sigma: T::lit(spec.delta_offset_sigma),
            detection: spec.detection,
            site_field: spec
                .site_field
                .as_ref()
                .map(|f| sample_site_field(f, constraints, spec.seed))
                .transpose()?,
            seed: spec.seed,
        })
    }

    /// True when [`perturb`] is the identity (readout errors aside).
    pub fn is_program_neutral(&self) -> bool {
        self.pos_jitter_sigma == T::zero()
            && self.omega_rel_sigma == T::zero()
            && self.delta_offset_sigma == T::zero()
            && self.site_field.is_none()
    }

    pub fn is_noiseless(&self) -> bool {
        self.is_program_neutral() && self.detection.is_zero()
    }
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        Self::none()
    }
}

/// Applies one run's worth of noise to `program`.
pub fn perturb<T: Real>(
    program: &AhsProgram<T>,
    model: &NoiseModel<T>,
    run_index: u64,
    constraints: &MachineConstraints<T>,
) -> Result<AhsProgram<T>, NoiseError> {
    if model.is_program_neutral() {
        return Ok(program.clone());
    }
    let centroid = program.register().centroid();
    let mut out = program.clone();

    if model.pos_jitter_sigma > T::zero() {
        let mut rng = rng_from_seed(child_seed(model.seed, "jitter", run_index));
        let sigma = model.pos_jitter_sigma;
        let mut placed = None;
        for _ in 0..JITTER_RETRIES {
            let sites = program
                .register()
                .sites()
                .iter()
                .map(|p| p.offset(normal(&mut rng, sigma), normal(&mut rng, sigma)))
                .collect();
            let register = Register::new(sites)?;
            if register.check(constraints).is_ok() {
                placed = Some(register);
                break;
            }
        }
        out = out.with_register(placed.ok_or(NoiseError::JitterTooLarge)?)?;
    }

    let mut omega_factor = T::one();
    let mut delta_offset = T::zero();
    if model.omega_rel_sigma > T::zero() {
        let mut rng = rng_from_seed(child_seed(model.seed, "omega", run_index));
        omega_factor = omega_factor + normal(&mut rng, model.omega_rel_sigma);
    }
    if model.delta_offset_sigma > T::zero() {
        let mut rng = rng_from_seed(child_seed(model.seed, "delta", run_index));
        delta_offset = normal(&mut rng, model.delta_offset_sigma);
    }
    if let Some(field) = &model.site_field {
        omega_factor = omega_factor * field.omega_factor_at(&centroid);
        delta_offset = delta_offset + field.detuning_at(&centroid);
    }
    if omega_factor != T::one() {
        let factor = omega_factor.max(T::zero());
        let drive = out
            .drive()
            .with_omega(out.drive().omega().map_values(|v| v * factor));
        out = out.with_drive(drive)?;
    }
    if delta_offset != T::zero() {
        let drive = out
            .drive()
            .with_delta_global(out.drive().delta_global().map_values(|v| v + delta_offset));
        out = out.with_drive(drive)?;
    }
    Ok(out)
}
