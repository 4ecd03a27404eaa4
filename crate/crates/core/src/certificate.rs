//! Output types: stationarity certificates and per-solve reports.

use crate::linalg::norm;

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Termination {
    Converged,
    TimeLimit,
    IterLimit,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::Converged => "Converged",
            Termination::TimeLimit => "TimeLimit",
            Termination::IterLimit => "IterLimit",
        };
        f.write_str(s)
    }
}

/// Primal-dual stationarity certificate: (ū, v̄, x̄, ȳ) with measured
/// residual norms, plus the multiplier r̄ and feasibility gap in the
/// linearly constrained case.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StationaryCertificate {
    pub u_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub r_bar: Option<Vec<f64>>,
    pub norm_u: f64,
    pub norm_v: f64,
    pub feas_violation: Option<f64>,
}

impl StationaryCertificate {
    pub fn new(
        u_bar: Vec<f64>,
        v_bar: Vec<f64>,
        x_bar: Vec<f64>,
        y_bar: Vec<f64>,
    ) -> Self {
        let norm_u = norm(&u_bar);
        let norm_v = norm(&v_bar);
        StationaryCertificate {
            u_bar,
            v_bar,
            x_bar,
            y_bar,
            r_bar: None,
            norm_u,
            norm_v,
            feas_violation: None,
        }
    }
}

/// Certificate that a point is near a directional-stationary point: the
/// lower bound on the minimal directional derivative at some x̂, and the
/// distance bound ‖x̂ − x‖.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DirectionalCertificate {
    pub delta: f64,
    pub tau: f64,
    pub dd_lower_bound: f64,
    pub distance_bound: f64,
    pub primal_dual: StationaryCertificate,
}

/// Iteration counts, oracle tallies, and terminal diagnostics of one solve.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolveReport {
    pub outer_iterations: u64,
    pub acg_iterations: u64,
    pub oracle_calls: u64,
    pub wall_time_s: f64,
    /// Terminal composite objective value (smoothed, where applicable).
    pub terminal_value: f64,
    pub termination: Termination,
    pub penalty_c_final: Option<f64>,
    /// Stepsize trajectory, recorded by the adaptive solver.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_trajectory: Vec<f64>,
    /// Inner-tolerance trajectory, recorded by the adaptive solver.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau_trajectory: Vec<f64>,
}

impl SolveReport {
    pub fn new() -> Self {
        SolveReport {
            outer_iterations: 0,
            acg_iterations: 0,
            oracle_calls: 0,
            wall_time_s: 0.0,
            terminal_value: f64::NAN,
            termination: Termination::Converged,
            penalty_c_final: None,
            lambda_trajectory: Vec::new(),
            tau_trajectory: Vec::new(),
        }
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

impl Default for SolveReport {
    fn default() -> Self {
        Self::new()
    }
}
