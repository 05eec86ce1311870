use ahs_core::evolution::EvolutionError;
use ahs_core::noise::NoiseError;
use ahs_core::pipeline::SimulationError;
use ahs_core::program::ProgramError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub(crate) fn config_parse(origin: &str, e: &serde_json::Error) -> Self {
        ExperimentError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
    }

    /// 2 for anything the user can fix in the config, 3 for integration
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Simulation(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

impl From<ProgramError> for ExperimentError {
    fn from(e: ProgramError) -> Self {
        SimulationError::from(e).into()
    }
}

impl From<NoiseError> for ExperimentError {
    fn from(e: NoiseError) -> Self {
        SimulationError::from(e).into()
    }
}

impl From<EvolutionError> for ExperimentError {
    fn from(e: EvolutionError) -> Self {
        SimulationError::from(e).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(ExperimentError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            ExperimentError::from(EvolutionError::NormDrift(1e-3)).exit_code(),
            3
        );
        assert_eq!(
            ExperimentError::from(EvolutionError::TaylorNotConverged).exit_code(),
            3
        );
        assert_eq!(
            ExperimentError::from(ProgramError::InvalidDuration).exit_code(),
            2
        );
    }
}
