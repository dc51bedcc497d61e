//! Parameter sweeps, figure presets and the command-line front end.

pub mod cli;
pub mod output;
pub mod sweep;

use thiserror::Error;

use crate::analytic::AnalyticError;
use crate::model::config::ConfigError;
use crate::sim::SimError;

pub use output::{write_rows, Metadata};
pub use sweep::{
    case_label, evaluate_analytic, evaluate_sim, figure, parse_range, run_sweep, CellResult,
    Engine, RunSettings, SweepRow, SweepSpec,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

impl ExperimentError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) => "config",
            ExperimentError::Analytic(AnalyticError::NoConvergence { .. }) => "no_convergence",
            ExperimentError::Analytic(_) => "analytic",
            ExperimentError::Sim(_) => "simulation",
            ExperimentError::Io(_) | ExperimentError::Csv(_) => "io",
            ExperimentError::Usage(_) => "usage",
        }
    }

    /// 2 for bad input (config or flags), 1 for failures while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
        });
        if let ExperimentError::Config(ConfigError::Parse { key: Some(k), .. }) = self {
            v["key"] = serde_json::Value::String(k.clone());
        }
        if let ExperimentError::Config(ConfigError::UnknownPath(p)) = self {
            v["key"] = serde_json::Value::String(p.clone());
        }
        v
    }
}
