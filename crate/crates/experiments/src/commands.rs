//! The four studies behind the `ahs` subcommands.
//!
//! Each `run_*` function computes a result from a [`Resolved`] config and is
//! pure given the config; `write_*` renders it to the artifact files. Seeds
//! split from the root as experiment → cell/distance/batch → shot batch.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ahs_core::colocation::{evolve_layout, layout_at_distance, run_standalone, sample_layout};
use ahs_core::fidelity::{relative_fidelity, FidelityReport, NormalizationMode};
use ahs_core::measurement::CountSummary;
use ahs_core::mtd::{run_with_mtd, victim_expectation, BatchRecord};
use ahs_core::pipeline::SimulationError;
use ahs_core::rng::child_seed;
use ahs_core::{run_colocated, AhsProgram};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Resolved;
use crate::error::ExperimentError;

fn expected_for(r: &Resolved, program: &AhsProgram) -> Result<Vec<f64>, SimulationError> {
    r.sim.expected_counts(
        program,
        r.shots,
        r.repeats,
        child_seed(r.seed, "control", 0),
    )
}

fn header(r: &Resolved) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("experiment".into(), json!(r.kind.name()));
    m.insert("seed".into(), json!(r.seed));
    m.insert("shots".into(), json!(r.shots));
    m.insert("repeats".into(), json!(r.repeats));
    m.insert("program_sha256".into(), json!(r.program_sha256));
    m
}

fn finish(mut m: serde_json::Map<String, Value>, r: &Resolved) -> String {
    m.insert("config".into(), r.echo.clone());
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("json");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|source| ExperimentError::Output {
        path: path.display().to_string(),
        source,
    })
}

/// `<path>` with `suffix` appended to the full file name.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlResult {
    pub expected_counts: Vec<f64>,
}

pub fn run_control(r: &Resolved) -> Result<ControlResult, ExperimentError> {
    Ok(ControlResult {
        expected_counts: expected_for(r, &r.program)?,
    })
}

pub fn render_control(r: &Resolved, res: &ControlResult) -> String {
    let mut m = header(r);
    m.insert("expected_counts".into(), json!(res.expected_counts));
    finish(m, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub ix: usize,
    pub iy: usize,
    pub x_um: f64,
    pub y_um: f64,
    pub counts: CountSummary,
    /// Pre-sampling basis-state probabilities of the cell's final state.
    pub probabilities: Vec<f64>,
    pub rf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapResult {
    /// Mean per-qubit counts over all cells.
    pub expected: Vec<f64>,
    pub cells: Vec<HeatmapCell>,
}

/// Runs the program once per grid cell (translated by the cell offset);
/// the expectation pools all cells, as the control runs of a drift study do.
pub fn run_heatmap(r: &Resolved) -> Result<HeatmapResult, ExperimentError> {
    let g = &r.grid;
    let layout: Vec<(usize, usize)> = (0..g.ny)
        .flat_map(|iy| (0..g.nx).map(move |ix| (ix, iy)))
        .collect();
    let cells = layout
        .par_iter()
        .enumerate()
        .map(|(i, &(ix, iy))| {
            let x = g.origin_um[0] + ix as f64 * g.step_um;
            let y = g.origin_um[1] + iy as f64 * g.step_um;
            let program = r.program.translate(x, y);
            let cell_seed = child_seed(r.seed, "cell", i as u64);
            let state = r.sim.noisy_final_state(&program, &r.noise, cell_seed)?;
            let counts = r.sim.sample(
                &state,
                r.shots,
                child_seed(cell_seed, "shots", 0),
                r.noise.detection,
            )?;
            Ok(HeatmapCell {
                ix,
                iy,
                x_um: x,
                y_um: y,
                counts,
                probabilities: state.probabilities(),
                rf: 0.0,
            })
        })
        .collect::<Result<Vec<_>, SimulationError>>()?;

    let n = r.program.atom_count();
    let mut total = CountSummary::zeros(n);
    for c in &cells {
        total.accumulate(&c.counts);
    }
    let expected: Vec<f64> = total
        .counts
        .iter()
        .map(|&c| c as f64 / cells.len() as f64)
        .collect();
    let mut cells = cells;
    for c in &mut cells {
        c.rf = relative_fidelity(&c.counts, &expected, r.normalization)
            .map_err(SimulationError::from)?
            .rf;
    }
    Ok(HeatmapResult { expected, cells })
}

pub fn render_heatmap(r: &Resolved, res: &HeatmapResult) -> (String, String) {
    let mut csv = String::from("ix,iy,x_um,y_um,rf\n");
    for c in &res.cells {
        writeln!(csv, "{},{},{},{},{}", c.ix, c.iy, c.x_um, c.y_um, c.rf).unwrap();
    }
    let mut m = header(r);
    m.insert("expected_counts".into(), json!(res.expected));
    m.insert(
        "cell_counts".into(),
        json!(res
            .cells
            .iter()
            .map(|c| &c.counts.counts)
            .collect::<Vec<_>>()),
    );
    (csv, finish(m, r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub distance_um: f64,
    pub rf: f64,
    /// Standard error of rf over repeats (0 for a single repeat).
    pub rf_err: f64,
    pub separation_um: f64,
    /// Victim Rydberg marginals of the first repeat, before sampling.
    pub victim_marginals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub expected: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Victim rf against its standalone expectation with the attacker placed at
/// each distance; `repeats` independent sampled runs per distance.
pub fn run_sweep(r: &Resolved) -> Result<SweepResult, ExperimentError> {
    let attacker = r
        .attacker
        .as_ref()
        .ok_or_else(|| ExperimentError::Config("sweep needs an enabled attacker".into()))?;
    if r.distances_um.is_empty() {
        return Err(ExperimentError::Config(
            "sweep needs at least one distance".into(),
        ));
    }
    let layouts = r
        .distances_um
        .iter()
        .map(|&d| layout_at_distance(&r.program, attacker, d, r.direction, r.anchor, &r.sim))
        .collect::<Result<Vec<_>, _>>()?;
    let expected = expected_for(r, &r.program)?;
    let deterministic = r.noise.is_program_neutral();

    let rows = layouts
        .par_iter()
        .enumerate()
        .map(|(i, layout)| {
            let point_seed = child_seed(r.seed, "distance", i as u64);
            let shared = if deterministic {
                Some(evolve_layout(&r.sim, layout, &r.noise, point_seed)?)
            } else {
                None
            };
            let mut rfs = Vec::with_capacity(r.repeats);
            let mut marginals = Vec::new();
            for rep in 0..r.repeats {
                let run_seed = child_seed(point_seed, "repeat", rep as u64);
                let out = match &shared {
                    Some(state) => {
                        sample_layout(&r.sim, layout, state, r.shots, &r.noise, run_seed)?
                    }
                    None => run_colocated(&r.sim, layout, r.shots, &r.noise, run_seed)?,
                };
                if rep == 0 {
                    marginals = out.victim_marginals.clone();
                }
                rfs.push(relative_fidelity(&out.victim, &expected, r.normalization)?.rf);
            }
            let (rf, rf_err) = mean_and_stderr(&rfs);
            Ok(SweepRow {
                distance_um: r.distances_um[i],
                rf,
                rf_err,
                separation_um: layout.separation,
                victim_marginals: marginals,
            })
        })
        .collect::<Result<Vec<_>, SimulationError>>()?;
    Ok(SweepResult { expected, rows })
}

pub fn render_sweep(r: &Resolved, res: &SweepResult) -> (String, String) {
    let mut csv = String::from("distance_um,rf,rf_err\n");
    for row in &res.rows {
        writeln!(csv, "{},{},{}", row.distance_um, row.rf, row.rf_err).unwrap();
    }
    let mut m = header(r);
    m.insert("expected_counts".into(), json!(res.expected));
    m.insert("rows".into(), json!(res.rows));
    (csv, finish(m, r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtdResult {
    pub static_report: FidelityReport,
    pub static_separation_um: Option<f64>,
    pub mtd_report: FidelityReport,
    pub batches: Vec<BatchRecord<f64>>,
}

/// Fixed placement versus the MTD policy with the same total shot budget.
pub fn run_mtd(r: &Resolved) -> Result<MtdResult, ExperimentError> {
    let policy = &r.policy;
    let total_shots = r.shots * policy.batches;
    let per_batch = victim_expectation(&r.sim, &r.program, r.shots, r.repeats, r.seed)?;
    let expected: Vec<f64> = per_batch
        .iter()
        .map(|e| e * policy.batches as f64)
        .collect();
    let static_seed = child_seed(r.seed, "static", 0);

    let (static_counts, static_separation, attacker) = match &r.attacker {
        Some(a) => {
            let layout = layout_at_distance(
                &r.program,
                a,
                r.static_distance_um,
                r.direction,
                r.anchor,
                &r.sim,
            )?;
            let out = run_colocated(&r.sim, &layout, total_shots, &r.noise, static_seed)?;
            (out.victim, Some(layout.separation), Some(layout.attacker))
        }
        None => {
            let (counts, _) =
                run_standalone(&r.sim, &r.program, total_shots, &r.noise, static_seed)?;
            (counts, None, None)
        }
    };
    let static_report =
        relative_fidelity(&static_counts, &expected, NormalizationMode::ShotNormalized)
            .map_err(SimulationError::from)?;
    let mtd = run_with_mtd(
        &r.sim,
        &r.program,
        attacker.as_ref(),
        policy,
        r.shots,
        &r.noise,
        r.seed,
        r.repeats,
    )?;
    Ok(MtdResult {
        static_report,
        static_separation_um: static_separation,
        mtd_report: mtd.report,
        batches: mtd.batches,
    })
}

pub fn render_mtd(r: &Resolved, res: &MtdResult) -> (String, String) {
    let mut csv = String::from("batch,dx,dy,rf\n");
    for b in &res.batches {
        writeln!(csv, "{},{},{},{}", b.batch, b.dx, b.dy, b.rf).unwrap();
    }
    let mut m = header(r);
    m.insert("rf_static".into(), json!(res.static_report.rf));
    m.insert("rf_mtd".into(), json!(res.mtd_report.rf));
    m.insert(
        "static_separation_um".into(),
        json!(res.static_separation_um),
    );
    m.insert("static".into(), json!(res.static_report));
    m.insert("mtd".into(), json!(res.mtd_report));
    m.insert(
        "batches".into(),
        json!(res
            .batches
            .iter()
            .map(|b| json!({
                "batch": b.batch,
                "dx": b.dx,
                "dy": b.dy,
                "parked": b.parked,
                "separation_um": b.separation,
                "counts": b.victim.counts,
                "rf": b.rf,
            }))
            .collect::<Vec<_>>()),
    );
    (csv, finish(m, r))
}

/// Runs the experiment selected by the config and writes its artifacts.
/// Returns the paths written.
pub fn execute(r: &Resolved) -> Result<Vec<PathBuf>, ExperimentError> {
    let out = r
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.{}", r.kind.name(), default_extension(r))));
    let mut written = vec![out.clone()];
    match r.kind {
        crate::config::ExperimentKind::Control => {
            let res = run_control(r)?;
            write_file(&out, &render_control(r, &res))?;
        }
        crate::config::ExperimentKind::Heatmap => {
            let (csv, meta) = render_heatmap(r, &run_heatmap(r)?);
            write_pair(&out, &csv, ".meta.json", &meta, &mut written)?;
        }
        crate::config::ExperimentKind::Sweep => {
            let (csv, meta) = render_sweep(r, &run_sweep(r)?);
            write_pair(&out, &csv, ".meta.json", &meta, &mut written)?;
        }
        crate::config::ExperimentKind::Mtd => {
            let (csv, summary) = render_mtd(r, &run_mtd(r)?);
            write_pair(&out, &csv, ".summary.json", &summary, &mut written)?;
        }
    }
    Ok(written)
}

fn default_extension(r: &Resolved) -> &'static str {
    match r.kind {
        crate::config::ExperimentKind::Control => "json",
        _ => "csv",
    }
}

fn write_pair(
    out: &Path,
    main: &str,
    suffix: &str,
    side: &str,
    written: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    write_file(out, main)?;
    let meta = sidecar(out, suffix);
    write_file(&meta, side)?;
    written.push(meta);
    Ok(())
}
