//! Run reports and their JSON and CSV renderings.

use domainshift_core::corpus::CorpusManifest;
use domainshift_core::divergence::LOG_BASE;
use domainshift_core::json::{self, format_f64};
use domainshift_core::metrics::{IcvReport, IddMatrix};
use domainshift_core::smos::{LossBreakdown, TermCheck};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub const TOOL_VERSION: &str = concat!("domainshift ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// `.csv` means CSV, anything else JSON.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingResults {
    pub history: Vec<LossBreakdown>,
    pub optimizer_steps: u64,
    /// Accuracy of the final model on each domain.
    pub accuracy: BTreeMap<String, f64>,
    pub held_out: Option<String>,
    /// Representation IDD of the final featurizer over every domain.
    pub representation_idd: Option<IddMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResults {
    pub manifest: CorpusManifest,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthResults {
    /// Samples per generated domain, precursor data under `precursor`.
    pub samples: BTreeMap<String, usize>,
    pub input_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckResults {
    pub checks: Vec<TermCheck>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Results {
    Scan(ScanResults),
    Icv(Vec<IcvReport>),
    Idd(IddMatrix),
    Training(TrainingResults),
    GradCheck(GradCheckResults),
    Synth(SynthResults),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_echo: Value,
    pub results: Results,
    pub tool_version: String,
    pub log_base: u32,
    /// Seconds; only present when timing was requested, since it breaks
    /// byte-for-byte reproducibility.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl RunReport {
    pub fn new(command: &str, config_echo: Value, results: Results) -> Self {
        Self {
            command: command.to_string(),
            config_echo,
            results,
            tool_version: TOOL_VERSION.to_string(),
            log_base: LOG_BASE,
            wall_time: None,
        }
    }
}

/// Renders a report in the requested format.
pub fn render_report(report: &RunReport, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => Ok(json::to_canonical_string(report)
            .map_err(|e| CliError::new("SerializeError", e.to_string()))?
            .into_bytes()),
        Format::Csv => render_csv(&report.results),
    }
}

/// Writes a report to `path`, or to `stdout` when no path is given.
pub fn emit_report(
    report: &RunReport,
    format: Format,
    path: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let bytes = render_report(report, format)?;
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => stdout.write_all(&bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn render_csv(results: &Results) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let f = |x: f64| format_f64(x);
    let rows: Vec<Vec<String>> = match results {
        Results::Scan(s) => {
            let mut rows = vec![vec!["domain".into(), "class".into(), "path".into()]];
            for d in &s.manifest.domains {
                for (class, paths) in &d.classes {
                    for p in paths {
                        rows.push(vec![d.name.clone(), class.clone(), p.clone()]);
                    }
                }
            }
            rows
        }
        Results::Icv(reports) => {
            let mut rows = vec![vec!["domain".into(), "class".into(), "trial".into(), "jsd".into()]];
            for r in reports {
                for (t, trial) in r.per_trial.iter().enumerate() {
                    for (class, v) in r.classes.iter().zip(trial) {
                        rows.push(vec![r.domain.clone(), class.clone(), t.to_string(), f(*v)]);
                    }
                }
            }
            rows
        }
        Results::Idd(m) => {
            let mut header = vec!["domain".to_string()];
            header.extend(m.domain_names.iter().cloned());
            let mut rows = vec![header];
            for (name, row) in m.domain_names.iter().zip(&m.values) {
                let mut r = vec![name.clone()];
                r.extend(row.iter().map(|v| f(*v)));
                rows.push(r);
            }
            rows
        }
        Results::Training(t) => {
            let mut rows = vec![["step", "l_s", "l_erm", "l_js", "l_kl", "total"]
                .map(String::from)
                .to_vec()];
            for (i, h) in t.history.iter().enumerate() {
                rows.push(vec![
                    i.to_string(),
                    f(h.l_s),
                    f(h.l_erm),
                    f(h.l_js),
                    f(h.l_kl),
                    f(h.total),
                ]);
            }
            rows
        }
        Results::GradCheck(g) => {
            let mut rows = vec![["loss", "block", "checked", "max_rel_error"].map(String::from).to_vec()];
            for c in &g.checks {
                let loss = c.loss.name().to_string();
                for b in &c.report.blocks {
                    rows.push(vec![loss.clone(), b.name.clone(), b.checked.to_string(), f(b.max_rel_error)]);
                }
            }
            rows
        }
        Results::Synth(s) => {
            let mut rows = vec![vec!["domain".to_string(), "samples".to_string()]];
            for (name, n) in &s.samples {
                rows.push(vec![name.clone(), n.to_string()]);
            }
            rows
        }
    };
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::new("IoError", e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::new("IoError", e.to_string()))
}
