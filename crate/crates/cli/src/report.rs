//! Run reports: JSON with a config echo, structured results, and timings
//! isolated under their own key so reports stay diffable.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use plaplab::continuity::{DiniResult, StructureReport};
use plaplab::probe::{DecayProfile, ExponentReport, ProbePoint, TheoreticalAlpha};
use plaplab::solver::SolveDiagnostics;

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct SolverSection {
    pub converged: bool,
    pub reference_residual: f64,
    pub final_residual: f64,
    pub continuation_levels: usize,
    pub diagnostics: Option<SolveDiagnostics>,
    /// Residual history when the solve failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_history: Option<Vec<f64>>,
    pub output_field: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ProbeSection {
    pub point: ProbePoint,
    pub sup: ExponentReport,
    pub p_mean: ExponentReport,
    pub target: TheoreticalAlpha,
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_csv: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DiniSection {
    pub regime: String,
    pub exponent: f64,
    pub big_r: f64,
    pub result: DiniResult,
    pub admissible: bool,
}

#[derive(Debug, Default, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<ProbeSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dini: Option<DiniSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub known_decay: Option<KnownDecaySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub warnings: Vec<String>,
    /// Wall-clock seconds per stage; excluded from determinism comparisons.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
pub struct KnownDecaySection {
    pub center: [f64; 2],
    pub prefactor: f64,
    pub exponent: f64,
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self { command: command.into(), config, ..Default::default() }
    }

    pub fn warn_once(&mut self, message: String) {
        if !self.warnings.contains(&message) {
            self.warnings.push(message);
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<std::path::PathBuf, CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Io(format!("cannot create `{}`: {e}", out_dir.display())))?;
        let path = out_dir.join("report.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("report serialization: {e}")))?;
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display())))?;
        Ok(path)
    }
}

/// CSV export of a decay profile: `k,r_k,tau_k,E_sup,E_pmean`.
pub fn write_profile_csv(profile: &DecayProfile, path: &Path) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("cannot create `{}`: {e}", path.display())))?,
    );
    let io = |e: std::io::Error| CliError::Io(format!("write `{}`: {e}", path.display()));
    writeln!(w, "k,r_k,tau_k,E_sup,E_pmean").map_err(io)?;
    for e in &profile.entries {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            e.k, e.r, e.tau, e.e_sup, e.e_pmean
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}
