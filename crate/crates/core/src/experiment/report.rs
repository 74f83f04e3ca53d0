use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::assembly::Segment;
use crate::error::Result;
use crate::maslov::{CrossingRecord, PhaseSample};

/// An integer or real side of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Integer(i64),
    Real(f64),
}

/// One verified identity: lhs == rhs exactly, or |lhs − rhs| ≤ tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub details: String,
}

impl Check {
    pub fn integer(name: impl Into<String>, lhs: i64, rhs: i64, details: impl Into<String>) -> Self {
        Self { name: name.into(), lhs: Quantity::Integer(lhs), rhs: Quantity::Integer(rhs), tolerance: None, pass: lhs == rhs, details: details.into() }
    }

    /// value ≤ bound.
    pub fn bounded(name: impl Into<String>, value: f64, bound: f64, details: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lhs: Quantity::Real(value),
            rhs: Quantity::Real(bound),
            tolerance: Some(bound),
            pass: value <= bound,
            details: details.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentSummary {
    pub segment: Segment,
    pub range: (f64, f64),
    pub crossing_form: Option<i64>,
    pub spectral_flow: Option<i64>,
    pub crossings: usize,
}

/// One DtN/NtD sample for the diagnostics table.
#[derive(Debug, Clone, Serialize)]
pub struct DtnRow {
    pub s: f64,
    pub segment: Segment,
    pub lambda: f64,
    pub t: f64,
    pub sigma_min_interior: f64,
    pub sym_defect: f64,
    pub ntd_sym_defect: Option<f64>,
    pub inverse_residual: Option<f64>,
    pub frame_angle: Option<f64>,
    pub isotropy: f64,
}

/// Plot data written to CSV only.
#[derive(Debug, Clone, Default)]
pub struct Tables {
    pub mu_trace: Vec<(Segment, f64, f64)>,
    pub phase_trace: Vec<(Segment, PhaseSample)>,
    pub dtn: Vec<DtnRow>,
    /// τ values and, per τ, the tracked near-zero branches.
    pub branches: Option<(Vec<f64>, Vec<Vec<f64>>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub tau: f64,
    /// Λ actually used (recorded so a run can be pinned).
    pub lambda_max: Option<f64>,
    pub checks: Vec<Check>,
    pub segments: Vec<SegmentSummary>,
    pub crossings: Vec<CrossingRecord>,
    /// Experiment-specific data (fits, boundary form, DtN summary).
    pub details: serde_json::Value,
    /// Wall-clock seconds per stage; excluded from determinism guarantees.
    pub timing: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip)]
    pub tables: Tables,
}

impl VerificationReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            experiment: experiment.to_string(),
            config: config.clone(),
            tau: config.path.tau,
            lambda_max: None,
            checks: Vec::new(),
            segments: Vec::new(),
            crossings: Vec::new(),
            details: serde_json::Value::Null,
            timing: BTreeMap::new(),
            pass: false,
            tables: Tables::default(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn finish(&mut self) {
        self.pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// JSON without the timing block.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes<F>(header: &[String], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Writes `<experiment>.json` and, with CSV requested, the crossing table and whichever
/// traces the experiment produced. Returns the written paths.
pub fn emit_report(report: &VerificationReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let base = report.experiment.clone();
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let path = dir.join(format!("{base}.json"));
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    if !formats.contains(&Format::Csv) {
        return Ok(written);
    }
    let header = strings(&["s_star", "segment", "lambda", "t", "kernel_dim", "signature", "contribution"]);
    let bytes = csv_bytes(&header, |w| {
        for r in &report.crossings {
            w.write_record([
                num(r.s_star),
                r.segment.label().to_string(),
                num(r.lambda),
                num(r.t),
                r.kernel_dim.to_string(),
                r.signature.to_string(),
                r.contribution.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let path = dir.join(format!("{base}_crossings.csv"));
    write_atomic(&path, &bytes)?;
    written.push(path);

    let t = &report.tables;
    if !t.mu_trace.is_empty() {
        let bytes = csv_bytes(&strings(&["s", "segment", "mu_min"]), |w| {
            for (seg, s, mu) in &t.mu_trace {
                w.write_record([num(*s), seg.label().to_string(), num(*mu)])?;
            }
            Ok(())
        })?;
        let path = dir.join(format!("{base}_mu_trace.csv"));
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    if !t.phase_trace.is_empty() {
        let width = t.phase_trace.iter().map(|(_, p)| p.phases.len()).max().unwrap_or(0);
        let mut header = strings(&["s", "segment"]);
        header.extend((0..width).map(|k| format!("psi_{k}")));
        let bytes = csv_bytes(&header, |w| {
            for (seg, p) in &t.phase_trace {
                let mut row = vec![num(p.s), seg.label().to_string()];
                row.extend(p.phases.iter().map(|v| num(*v)));
                row.resize(width + 2, String::new());
                w.write_record(&row)?;
            }
            Ok(())
        })?;
        let path = dir.join(format!("{base}_phase_trace.csv"));
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    if !t.dtn.is_empty() {
        let bytes = csv_bytes(&strings(&["s", "lambda", "t", "sigma_min_interior", "sym_defect"]), |w| {
            for r in &t.dtn {
                w.write_record([num(r.s), num(r.lambda), num(r.t), num(r.sigma_min_interior), num(r.sym_defect)])?;
            }
            Ok(())
        })?;
        let path = dir.join(format!("{base}_dtn.csv"));
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    if let Some((taus, rows)) = &t.branches {
        let width = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut header = strings(&["tau"]);
        header.extend((0..width).map(|j| format!("lambda_branch_{j}")));
        let bytes = csv_bytes(&header, |w| {
            for (tau, row) in taus.iter().zip(rows) {
                let mut rec = vec![num(*tau)];
                rec.extend(row.iter().map(|v| num(*v)));
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
        let path = dir.join(format!("{base}_branches.csv"));
        write_atomic(&path, &bytes)?;
        written.push(path);
        if let Some(fit) = report.details.get("fit") {
            let path = dir.join(format!("{base}_fit.json"));
            let mut text = serde_json::to_string_pretty(fit)?;
            text.push('\n');
            write_atomic(&path, text.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}
