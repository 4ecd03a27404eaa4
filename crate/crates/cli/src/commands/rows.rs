//! CSV row schema shared by `solve` and `bench`, plus the certificate file
//! format consumed by `verify`.

use minmax_core::certificate::{DirectionalCertificate, StationaryCertificate, Termination};
use minmax_core::verify::CertContext;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CSV_HEADER: [&str; 17] = [
    "family",
    "dims",
    "method",
    "iterations",
    "acg_iterations",
    "runtime_s",
    "p_hat_xi",
    "norm_u_rel",
    "norm_v",
    "termination",
    "delta",
    "tau",
    "dd_lower_bound",
    "distance_bound",
    "eta",
    "feas",
    "c_final",
];

#[derive(Debug, Clone, Default)]
pub struct RunRow {
    pub family: String,
    pub dims: String,
    pub method: String,
    pub iterations: u64,
    pub acg_iterations: u64,
    pub runtime: String,
    pub p_hat_xi: f64,
    pub norm_u_rel: f64,
    pub norm_v: f64,
    pub termination: String,
    pub delta: Option<f64>,
    pub tau: Option<f64>,
    pub dd_lower_bound: Option<f64>,
    pub distance_bound: Option<f64>,
    pub eta: Option<f64>,
    pub feas: Option<f64>,
    pub c_final: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl RunRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.family.clone(),
            self.dims.clone(),
            self.method.clone(),
            self.iterations.to_string(),
            self.acg_iterations.to_string(),
            self.runtime.clone(),
            format!("{:.6e}", self.p_hat_xi),
            format!("{:.6e}", self.norm_u_rel),
            format!("{:.6e}", self.norm_v),
            self.termination.clone(),
            opt(self.delta),
            opt(self.tau),
            opt(self.dd_lower_bound),
            opt(self.distance_bound),
            opt(self.eta),
            opt(self.feas),
            opt(self.c_final),
        ]
    }
}

/// The runtime column convention: a run that hit the limit records the limit
/// itself with a trailing star.
pub fn format_runtime(measured_s: f64, termination: Termination, limit_s: f64) -> String {
    if termination == Termination::TimeLimit {
        format!("{limit_s:.2}*")
    } else {
        format!("{measured_s:.2}")
    }
}

/// Append a row, creating the file with a header when needed (RFC 4180 via
/// the csv writer).
pub fn append_csv(path: &Path, row: &RunRow) -> anyhow::Result<()> {
    let exists = path.exists();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if !exists {
        w.write_record(CSV_HEADER)?;
    }
    w.write_record(row.record())?;
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[RunRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Certificate file: everything `verify` needs to re-check a solve.
#[derive(Debug, Serialize, Deserialize)]
pub struct CertFile {
    pub family: String,
    pub method: String,
    pub context: CertContext,
    pub certificate: StationaryCertificate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directional: Option<DirectionalCertificate>,
}

pub fn write_cert(path: &Path, cert: &CertFile) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(cert)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_cert(path: &Path) -> anyhow::Result<CertFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
