//! Bench configuration: TOML with one table-array per problem family.

use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct BenchConfig {
    pub bench: BenchSection,
    #[serde(default)]
    pub qvm: Vec<QvmRow>,
    #[serde(default)]
    pub trr: Vec<TrrRow>,
    #[serde(default)]
    pub pc: Vec<PcRow>,
}

#[derive(Debug, Deserialize)]
pub struct BenchSection {
    /// Per-cell wall-clock limit in seconds.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    pub methods: Vec<String>,
}

fn default_time_limit() -> f64 {
    4000.0
}

#[derive(Debug, Clone, Deserialize)]
pub struct QvmRow {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub big_m: f64,
    pub m: f64,
    #[serde(default = "default_density")]
    pub density: f64,
    pub seed: u64,
    pub rho_x: f64,
    pub rho_y: f64,
}

fn default_density() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
pub struct TrrRow {
    pub points: usize,
    pub features: usize,
    #[serde(default = "default_trr_density")]
    pub density: f64,
    pub seed: u64,
    pub rho_x: f64,
    pub rho_y: f64,
}

fn default_trr_density() -> f64 {
    0.3
}

#[derive(Debug, Clone, Deserialize)]
pub struct PcRow {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub rho_x: f64,
    pub rho_y: f64,
}
