//! Program JSON (`ahs-program/1`) and the Braket-shaped AHS export.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{Position, Register};
use crate::program::{AhsProgram, DrivingField, ProgramError, ShiftingField};
use crate::scalar::Real;
use crate::waveform::Waveform;

pub const SCHEMA: &str = "ahs-program/1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema {0:?}, expected \"ahs-program/1\"")]
    Schema(String),
    #[error("invalid program: {0}")]
    Program(#[from] ProgramError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaveformDoc<T> {
    times_s: Vec<T>,
    values: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterDoc<T> {
    sites: Vec<[T; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveDoc<T> {
    omega: WaveformDoc<T>,
    phi: WaveformDoc<T>,
    delta_global: WaveformDoc<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftDoc<T> {
    delta_local: WaveformDoc<T>,
    pattern: Vec<T>,
}

/// Wire form of an [`AhsProgram`]; field order here is the emitted order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramDoc<T> {
    schema: String,
    register: RegisterDoc<T>,
    drive: DriveDoc<T>,
    shift: Option<ShiftDoc<T>>,
    duration_s: T,
}

impl<T: Real> From<&Waveform<T>> for WaveformDoc<T> {
    fn from(w: &Waveform<T>) -> Self {
        Self {
            times_s: w.times().to_vec(),
            values: w.values().to_vec(),
        }
    }
}

impl<T: Real> WaveformDoc<T> {
    fn build(self) -> Result<Waveform<T>, ProgramError> {
        Waveform::new(self.times_s, self.values)
    }
}

fn to_doc<T: Real>(p: &AhsProgram<T>) -> ProgramDoc<T> {
    ProgramDoc {
        schema: SCHEMA.to_string(),
        register: RegisterDoc {
            sites: p.register().sites().iter().map(|s| [s.x, s.y]).collect(),
        },
        drive: DriveDoc {
            omega: p.drive().omega().into(),
            phi: p.drive().phi().into(),
            delta_global: p.drive().delta_global().into(),
        },
        shift: p.shift().map(|s| ShiftDoc {
            delta_local: s.delta_local().into(),
            pattern: s.pattern().to_vec(),
        }),
        duration_s: p.duration(),
    }
}

fn from_doc<T: Real>(doc: ProgramDoc<T>) -> Result<AhsProgram<T>, FormatError> {
    if doc.schema != SCHEMA {
        return Err(FormatError::Schema(doc.schema));
    }
    let register = Register::new(
        doc.register
            .sites
            .into_iter()
            .map(|[x, y]| Position::new(x, y))
            .collect(),
    )?;
    let drive = DrivingField::new(
        doc.drive.omega.build()?,
        doc.drive.phi.build()?,
        doc.drive.delta_global.build()?,
    )?;
    let shift = doc
        .shift
        .map(|s| ShiftingField::new(s.delta_local.build()?, s.pattern))
        .transpose()?;
    Ok(AhsProgram::new(register, drive, shift, doc.duration_s)?)
}

pub fn program_to_value<T: Real>(p: &AhsProgram<T>) -> Value {
    serde_json::to_value(to_doc(p)).expect("program document serializes")
}

/// Pretty-printed canonical JSON.
pub fn serialize_program<T: Real>(p: &AhsProgram<T>) -> String {
    serde_json::to_string_pretty(&to_doc(p)).expect("program document serializes")
}

pub fn parse_program<T: Real>(text: &str) -> Result<AhsProgram<T>, FormatError> {
    from_doc(serde_json::from_str(text)?)
}

pub fn program_from_value<T: Real>(value: Value) -> Result<AhsProgram<T>, FormatError> {
    from_doc(serde_json::from_value(value)?)
}

const UM_TO_M: f64 = 1e-6;

fn time_series<T: Real>(w: &Waveform<T>) -> Value {
    let values: Vec<f64> = w.values().iter().map(|v| v.as_f64()).collect();
    let times: Vec<f64> = w.times().iter().map(|v| v.as_f64()).collect();
    json!({ "values": values, "times": times })
}

/// Braket-style AHS IR document.
///
/// Positions are converted to metres, frequencies stay in rad/s and times in
/// seconds. The local detuning appears under `hamiltonian.localDetuning` with
/// its per-site pattern; it is omitted when the program has no shift.
pub fn export_braket_compatible<T: Real>(p: &AhsProgram<T>) -> Value {
    let sites: Vec<[f64; 2]> = p
        .register()
        .sites()
        .iter()
        .map(|s| [s.x.as_f64() * UM_TO_M, s.y.as_f64() * UM_TO_M])
        .collect();
    let filling = vec![1; sites.len()];
    let drive = p.drive();
    let local: Vec<Value> = p
        .shift()
        .map(|s| {
            let pattern: Vec<f64> = s.pattern().iter().map(|h| h.as_f64()).collect();
            json!({
                "magnitude": {
                    "time_series": time_series(s.delta_local()),
                    "pattern": pattern,
                }
            })
        })
        .into_iter()
        .collect();
    json!({
        "braketSchemaHeader": { "name": "braket.ir.ahs.program", "version": "1" },
        "setup": {
            "ahs_register": { "sites": sites, "filling": filling }
        },
        "hamiltonian": {
            "drivingFields": [{
                "amplitude": { "time_series": time_series(drive.omega()), "pattern": "uniform" },
                "phase": { "time_series": time_series(drive.phi()), "pattern": "uniform" },
                "detuning": { "time_series": time_series(drive.delta_global()), "pattern": "uniform" }
            }],
            "localDetuning": local
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn control_round_trips() {
        let p = reference::control_program();
        let text = serialize_program(&p);
        let back: AhsProgram<f64> = parse_program(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn missing_register_is_parse_error() {
        let mut v = program_to_value(&reference::control_program());
        v.as_object_mut().unwrap().remove("register");
        let err = parse_program::<f64>(&v.to_string()).unwrap_err();
        assert!(matches!(err, FormatError::Parse { .. }), "{err}");
        assert!(err.to_string().contains("register"));
    }

    #[test]
    fn malformed_text_reports_location() {
        let err =
            parse_program::<f64>("{\n  \"schema\": \"ahs-program/1\",\n  \"register\": [,]\n}")
                .unwrap_err();
        match err {
            FormatError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_schema_rejected() {
        let mut v = program_to_value(&reference::control_program());
        v["schema"] = json!("ahs-program/9");
        assert!(matches!(
            program_from_value::<f64>(v),
            Err(FormatError::Schema(_))
        ));
    }

    #[test]
    fn braket_export_shape() {
        let doc = export_braket_compatible(&reference::control_program());
        let sites = doc["setup"]["ahs_register"]["sites"].as_array().unwrap();
        assert_eq!(sites.len(), 3);
        assert_eq!(sites[1][0].as_f64().unwrap(), 5.5e-6);
        let local = doc["hamiltonian"]["localDetuning"].as_array().unwrap();
        assert_eq!(local.len(), 1);
        assert_eq!(local[0]["magnitude"]["pattern"], json!([0.0, 0.0, 1.0]));
        assert_eq!(
            local[0]["magnitude"]["time_series"]["values"],
            json!([5e7, 5e7])
        );
        assert_eq!(
            doc["hamiltonian"]["drivingFields"][0]["amplitude"]["pattern"],
            json!("uniform")
        );
    }
}
