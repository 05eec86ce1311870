//! Experiment configuration files.
//!
//! A config is one JSON object selecting exactly one experiment kind. Every
//! field except `experiment` and `seed` has a default; see `docs/formats.md`.

use std::path::{Path, PathBuf};

use ahs_core::colocation::AnchorMode;
use ahs_core::evolution::{IntegratorConfig, Method};
use ahs_core::fidelity::NormalizationMode;
use ahs_core::io::{parse_program, program_from_value, program_to_value, serialize_program};
use ahs_core::mtd::DisplacementRect;
use ahs_core::noise::NoiseSpec;
use ahs_core::rng::child_seed;
use ahs_core::{
    geometry, reference, AhsProgram, MachineConstraints, MtdPolicy, NoiseModel, Position, Simulator,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Control,
    Heatmap,
    Sweep,
    Mtd,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Control => "control",
            ExperimentKind::Heatmap => "heatmap",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Mtd => "mtd",
        }
    }
}

/// A program given inline (an `ahs-program/1` object) or as a path relative
/// to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProgramSource {
    File(String),
    Inline(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub origin_um: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub step_um: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            origin_um: [0.0, 0.0],
            nx: 4,
            ny: 5,
            step_um: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackerSpec {
    pub enabled: bool,
    /// Attacker's base program; defaults to the victim's program without its
    /// shifting field.
    pub program: Option<ProgramSource>,
    pub delta_local_peak: f64,
    pub direction: [f64; 2],
    pub anchor: AnchorMode,
}

impl Default for AttackerSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            program: None,
            delta_local_peak: reference::ATTACK_DELTA_LOCAL,
            direction: [1.0, 1.0],
            anchor: AnchorMode::NearestPair,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtdSpec {
    pub displacement: DisplacementRect<f64>,
    pub batches: usize,
    pub move_after_measure: bool,
    pub min_attacker_gap_um: f64,
    pub max_attempts: usize,
    /// Attacker distance of the fixed placement compared against.
    pub static_distance_um: f64,
}

impl Default for MtdSpec {
    fn default() -> Self {
        let p = MtdPolicy::reference(0);
        Self {
            displacement: p.displacement,
            batches: p.batches,
            move_after_measure: p.move_after_measure,
            min_attacker_gap_um: p.min_attacker_gap,
            max_attempts: p.max_attempts,
            static_distance_um: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSpec {
    pub dt_s: f64,
    pub method: Method,
    pub taylor_tol: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let d = IntegratorConfig::<f64>::default();
        Self {
            dt_s: d.dt,
            method: d.method,
            taylor_tol: d.taylor_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineSpec {
    pub field_width_um: f64,
    pub field_height_um: f64,
    pub min_spacing_um: f64,
    pub max_atoms: usize,
}

impl Default for MachineSpec {
    fn default() -> Self {
        let c = MachineConstraints::default();
        Self {
            field_width_um: c.field_width,
            field_height_um: c.field_height,
            min_spacing_um: c.min_spacing,
            max_atoms: c.max_atoms,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Defaults to the reference control program.
    #[serde(default)]
    pub program: Option<ProgramSource>,
    /// Translation applied to the program before anything else, µm.
    #[serde(default)]
    pub offset_um: [f64; 2],
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub normalization: NormalizationMode,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub distances_um: Vec<f64>,
    #[serde(default)]
    pub attacker: AttackerSpec,
    #[serde(default)]
    pub mtd: MtdSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub machine: MachineSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_shots() -> usize {
    1000
}

fn default_repeats() -> usize {
    20
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::config_parse("config", &e))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = serde_json::from_str(&text)
            .map_err(|e| ExperimentError::config_parse(&path.display().to_string(), &e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }
}

/// A config with programs loaded and every invariant checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub shots: usize,
    pub repeats: usize,
    pub normalization: NormalizationMode,
    pub program: AhsProgram,
    pub program_sha256: String,
    pub attacker: Option<AhsProgram>,
    pub direction: (f64, f64),
    pub anchor: AnchorMode,
    pub grid: GridSpec,
    pub distances_um: Vec<f64>,
    pub policy: MtdPolicy,
    pub static_distance_um: f64,
    pub noise: NoiseModel,
    pub sim: Simulator,
    pub output: Option<PathBuf>,
    /// The config as run: programs inlined, output path dropped (so artifacts
    /// do not depend on where they are written).
    pub echo: Value,
}

fn load_program(source: &ProgramSource, base: &Path) -> Result<AhsProgram, ExperimentError> {
    match source {
        ProgramSource::File(rel) => {
            let path = base.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                ExperimentError::Config(format!("cannot read program {}: {e}", path.display()))
            })?;
            parse_program(&text)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
        }
        ProgramSource::Inline(v) => program_from_value(v.clone())
            .map_err(|e| ExperimentError::Config(format!("inline program: {e}"))),
    }
}

pub fn program_hash(program: &AhsProgram) -> String {
    hex::encode(Sha256::digest(serialize_program(program).as_bytes()))
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl ExperimentConfig {
    /// Loads programs relative to `base` and validates the whole config.
    pub fn resolve(&self, base: &Path) -> Result<Resolved, ExperimentError> {
        if self.shots == 0 {
            return Err(config_err("shots must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(config_err("repeats must be at least 1"));
        }
        let m = &self.machine;
        let constraints = geometry::MachineConstraints::new(
            m.field_width_um,
            m.field_height_um,
            m.min_spacing_um,
            m.max_atoms,
        )?;
        let i = &self.integrator;
        let integrator = IntegratorConfig::new(i.dt_s, i.method, i.taylor_tol)?;
        let sim = Simulator {
            integrator,
            constraints,
            ..Simulator::default()
        };

        let source = self.program.clone();
        let input = match &source {
            Some(s) => load_program(s, base)?,
            None => reference::control_program_at(Position::origin()),
        };
        let program_sha256 = program_hash(&input);
        let [ox, oy] = self.offset_um;
        if !(ox.is_finite() && oy.is_finite()) {
            return Err(config_err("offset_um must be finite"));
        }
        let program = input.translate(ox, oy);

        let a = &self.attacker;
        let attacker_input = match &a.program {
            Some(s) => Some(load_program(s, base)?),
            None => None,
        };
        let attacker = if a.enabled {
            let base_program = match &attacker_input {
                Some(p) => p.clone(),
                None => input.with_shift(None)?,
            };
            Some(ahs_core::make_attack_program(
                &base_program,
                a.delta_local_peak,
            )?)
        } else {
            None
        };
        let [dx, dy] = a.direction;
        if !(dx.is_finite() && dy.is_finite() && dx.hypot(dy) > 0.0) {
            return Err(config_err("attacker.direction must be a non-zero vector"));
        }

        if self.grid.nx == 0
            || self.grid.ny == 0
            || !(self.grid.step_um.is_finite() && self.grid.step_um >= 0.0)
        {
            return Err(config_err("grid needs nx, ny >= 1 and a non-negative step"));
        }
        if self.distances_um.iter().any(|d| !d.is_finite()) {
            return Err(config_err("distances_um must be finite"));
        }

        let s = &self.mtd;
        if s.batches == 0 {
            return Err(config_err("mtd.batches must be at least 1"));
        }
        let policy = MtdPolicy {
            displacement: s.displacement,
            batches: s.batches,
            move_after_measure: s.move_after_measure,
            min_attacker_gap: s.min_attacker_gap_um,
            seed: child_seed(self.seed, "mtd-policy", 0),
            max_attempts: s.max_attempts,
        };

        let noise_spec = NoiseSpec {
            seed: child_seed(self.seed, "noise", self.noise.seed),
            ..self.noise.clone()
        };
        let noise = NoiseModel::from_spec(&noise_spec, &sim.constraints)?;

        let mut echo_cfg = self.clone();
        echo_cfg.program = Some(ProgramSource::Inline(program_to_value(&input)));
        if let Some(p) = &attacker_input {
            echo_cfg.attacker.program = Some(ProgramSource::Inline(program_to_value(p)));
        }
        echo_cfg.output = OutputSpec::default();
        let echo = serde_json::to_value(&echo_cfg).expect("config serializes");

        Ok(Resolved {
            kind: self.experiment,
            seed: self.seed,
            shots: self.shots,
            repeats: self.repeats,
            normalization: self.normalization,
            program,
            program_sha256,
            attacker,
            direction: (dx, dy),
            anchor: a.anchor,
            grid: self.grid.clone(),
            distances_um: self.distances_um.clone(),
            policy,
            static_distance_um: s.static_distance_um,
            noise,
            sim,
            output: self.output.path.clone(),
            echo,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "control", "seed": 3}"#).unwrap();
        assert_eq!(cfg.shots, 1000);
        assert_eq!(cfg.repeats, 20);
        assert_eq!(cfg.grid, GridSpec::default());
        let r = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(r.program, reference::control_program());
        assert!(r.attacker.is_some());
        assert!(r.echo.get("output").unwrap().get("path").unwrap().is_null());
    }

    #[test]
    fn seed_is_mandatory() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "control"}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_fields_and_kinds_rejected() {
        assert!(
            ExperimentConfig::from_json(r#"{"experiment": "control", "seed": 1, "shotz": 5}"#)
                .is_err()
        );
        assert!(ExperimentConfig::from_json(r#"{"experiment": "anneal", "seed": 1}"#).is_err());
    }

    #[test]
    fn zero_batches_is_a_config_error() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "mtd", "seed": 1, "mtd": {"batches": 0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.resolve(Path::new(".")).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn hash_tracks_program_content() {
        let a = reference::control_program();
        let b = a.translate(1.0, 0.0);
        assert_eq!(program_hash(&a), program_hash(&a.clone()));
        assert_ne!(program_hash(&a), program_hash(&b));
        assert_eq!(program_hash(&a).len(), 64);
    }
}
