//! Smoothing scheme drivers: solve the min-max problem through its smooth
//! approximation, then assemble primal-dual or directional stationarity
//! certificates, plus the conversions between stationarity notions.

use crate::aipp::{aipp_solve, AippConfig, Curvature};
use crate::certificate::{DirectionalCertificate, SolveReport, StationaryCertificate};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::problem::MinMaxProblem;
use crate::raipp::{raipp_solve, RaippConfig};
use crate::sets::normal_cone_distance;
use crate::smoothing::SmoothedObjective;
use std::time::Duration;

/// Which composite solver drives the smoothed problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Fixed stepsize λ = 1/(4m), σ = 1/2, minimum inner iteration rule.
    Aipp,
    /// Adaptive stepsize and curvature estimates, relaxed inner criterion.
    Raipp,
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub engine: Engine,
    /// Scale the target residual by ‖∇p_ξ(x₀)‖ + 1 (the benchmark
    /// convention); absolute tolerances otherwise.
    pub relative: bool,
    /// Override for ξ; must be ≥ D_y/ρ_y. Defaults to exactly D_y/ρ_y,
    /// the smallest admissible value.
    pub xi_override: Option<f64>,
    pub time_limit: Option<Duration>,
    pub max_outer: u64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            engine: Engine::Aipp,
            relative: false,
            xi_override: None,
            time_limit: None,
            max_outer: 10_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeOutput {
    pub certificate: StationaryCertificate,
    pub report: SolveReport,
    pub xi: f64,
    /// The residual scale ‖∇p_ξ(x₀)‖ + 1 (1.0 for absolute runs).
    pub scale: f64,
}

/// Find a quadruple (ū, v̄, x̄, ȳ) with ‖ū‖ ≤ ρₓ·scale and ‖v̄‖ ≤ ρ_y:
/// run the composite solver on p_ξ + h with ξ = D_y/ρ_y, then read the dual
/// pair off the inner argmax at the refined point.
pub fn solve_primal_dual(
    problem: &MinMaxProblem,
    rho_x: f64,
    rho_y: f64,
    x0: &[f64],
    y0: &[f64],
    config: &SchemeConfig,
) -> Result<SchemeOutput> {
    if rho_x <= 0.0 || rho_y <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerances must be positive, got ({rho_x}, {rho_y})"
        )));
    }
    let consts = problem.constants;
    consts.validate()?;
    let xi_min = consts.d_y / rho_y;
    let xi = match config.xi_override {
        Some(v) if v >= xi_min * (1.0 - 1e-12) => v,
        Some(v) => {
            return Err(Error::InvalidArgument(format!(
                "ξ = {v} below the admissible minimum D_y/ρ_y = {xi_min}"
            )))
        }
        None => xi_min,
    };
    let smoothed = SmoothedObjective::with_anchor(problem, xi, y0.to_vec())?;

    let scale = if config.relative {
        norm(&smoothed.grad_p_xi(x0)) + 1.0
    } else {
        1.0
    };
    let rho_bar = rho_x * scale;
    let curvature = Curvature {
        m: consts.m,
        big_m: smoothed.l_xi,
    };

    let out = match config.engine {
        Engine::Aipp => {
            let mut cfg = AippConfig::new(consts.m, rho_bar);
            cfg.time_limit = config.time_limit;
            cfg.max_outer = config.max_outer;
            aipp_solve(&smoothed, &problem.h, curvature, &cfg, x0)?
        }
        Engine::Raipp => {
            let mut cfg = RaippConfig::new(consts.m, rho_bar);
            cfg.time_limit = config.time_limit;
            cfg.max_outer = config.max_outer;
            raipp_solve(&smoothed, &problem.h, curvature, &cfg, x0)?
        }
    };

    let y_bar = smoothed.y_xi(&out.x);
    let v_bar = smoothed.dual_residual(&y_bar);
    let certificate = StationaryCertificate::new(out.u, v_bar, out.x, y_bar);
    let mut report = out.report;
    report.terminal_value = smoothed.composite_value(&certificate.x_bar);
    report.oracle_calls = report.oracle_calls.max(problem.oracle_calls_bundled());
    Ok(SchemeOutput {
        certificate,
        report,
        xi,
        scale,
    })
}

/// The admissible dual tolerance for a δ-directional target:
/// τ = min{ mδ²/(2D_y), δ²/(32mD_y) }.
pub fn directional_tau(delta: f64, m: f64, d_y: f64) -> f64 {
    (m * delta * delta / (2.0 * d_y)).min(delta * delta / (32.0 * m * d_y))
}

/// Drive the scheme so the output is within δ of a δ-directional stationary
/// point: primal-dual tolerances (δ/2, τ) with τ as in `directional_tau`.
pub fn solve_directional(
    problem: &MinMaxProblem,
    delta: f64,
    x0: &[f64],
    y0: &[f64],
    config: &SchemeConfig,
) -> Result<(Vec<f64>, DirectionalCertificate, SolveReport)> {
    if delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "δ must be positive, got {delta}"
        )));
    }
    let consts = problem.constants;
    let tau = directional_tau(delta, consts.m, consts.d_y);
    let out = solve_primal_dual(problem, delta / 2.0, tau, x0, y0, config)?;
    let (dd_lower_bound, distance_bound) =
        near_directional_certificate(&out.certificate, consts.m, consts.d_y);
    let cert = DirectionalCertificate {
        delta,
        tau,
        dd_lower_bound,
        distance_bound,
        primal_dual: out.certificate,
    };
    Ok((cert.primal_dual.x_bar.clone(), cert, out.report))
}

/// Bounds guaranteed near a primal-dual stationary quadruple: some x̂ has
/// inf_{‖d‖≤1} p̂'(x̂; d) ≥ −‖ū‖ − 2√(2mD_y‖v̄‖) and ‖x̂−x̄‖ ≤ √(2D_y‖v̄‖/m).
/// Uses the measured residuals, which is tighter than the requested
/// tolerances and still valid by monotonicity.
pub fn near_directional_certificate(
    cert: &StationaryCertificate,
    m: f64,
    d_y: f64,
) -> (f64, f64) {
    let dd = -cert.norm_u - 2.0 * (2.0 * m * d_y * cert.norm_v).sqrt();
    let dist = (2.0 * d_y * cert.norm_v / m).sqrt();
    (dd, dist)
}

/// Direction of the conversion between δ-directional and (λ,ε)-prox
/// stationarity thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxBoundDirection {
    /// Given ε, the largest δ for which a δ-directional point is (λ,ε)-prox
    /// stationary: δ ≤ λ³ε / (λ² + 2(1−λm)(1+λ)).
    DeltaToEps,
    /// Given δ, the largest ε for which a (λ,ε)-prox stationary point is
    /// δ-directional: ε ≤ δ·min{1, 1/λ}.
    EpsToDelta,
}

pub fn prox_stationarity_bounds(
    lambda: f64,
    m: f64,
    epsilon_or_delta: f64,
    direction: ProxBoundDirection,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0 / m) {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} outside (0, 1/m) for m = {m}"
        )));
    }
    Ok(match direction {
        ProxBoundDirection::DeltaToEps => {
            let eps = epsilon_or_delta;
            lambda.powi(3) * eps / (lambda * lambda + 2.0 * (1.0 - lambda * m) * (1.0 + lambda))
        }
        ProxBoundDirection::EpsToDelta => {
            let delta = epsilon_or_delta;
            delta * 1.0f64.min(1.0 / lambda)
        }
    })
}

/// First-order Nash residuals of a candidate pair:
/// rx = dist(0, ∇ₓΦ(x,y) + ∂h(x)), ry = dist(0, ∂[−Φ(x,·)](y)).
/// Requires h and Y of verifiable kind and the ∇_y Φ oracle.
pub fn nash_residuals(problem: &MinMaxProblem, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let gx = problem.grad_x(x, y);
    let rx = match problem.h.set_kind() {
        None => norm(&gx),
        Some(kind) => normal_cone_distance(kind, x, &gx)?,
    };
    let gy = problem.grad_y(x, y)?;
    let neg_gy: Vec<f64> = gy.iter().map(|g| -g).collect();
    let ry = normal_cone_distance(problem.y_set, y, &neg_gy)?;
    Ok((rx, ry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn directional_tau_formula() {
        // δ = 0.1, m = 1, D_y = √2 → τ = 0.01/(32√2).
        let tau = directional_tau(0.1, 1.0, std::f64::consts::SQRT_2);
        assert_relative_eq!(tau, 0.01 / (32.0 * std::f64::consts::SQRT_2), epsilon = 1e-15);
        assert_abs_diff_eq!(tau, 2.2097e-4, epsilon = 1e-8);
    }

    #[test]
    fn near_directional_bounds_formulas() {
        let cert = StationaryCertificate::new(vec![1e-2], vec![1e-1], vec![0.0], vec![0.0]);
        let (dd, dist) = near_directional_certificate(&cert, 1.0, std::f64::consts::SQRT_2);
        let inner = 0.2 * std::f64::consts::SQRT_2;
        assert_relative_eq!(dd, -1e-2 - 2.0 * inner.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(dist, inner.sqrt(), epsilon = 1e-12);

        // Exact dual feasibility collapses the bounds to (−‖ū‖, 0).
        let cert0 = StationaryCertificate::new(vec![0.3], vec![0.0], vec![0.0], vec![0.0]);
        let (dd, dist) = near_directional_certificate(&cert0, 2.0, 1.5);
        assert_relative_eq!(dd, -0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(dist, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn prox_bounds_both_directions() {
        // λ = 1/2, m = 1, ε = 1 → δ ≤ 1/14.
        let d = prox_stationarity_bounds(0.5, 1.0, 1.0, ProxBoundDirection::DeltaToEps).unwrap();
        assert_relative_eq!(d, 1.0 / 14.0, epsilon = 1e-15);
        // λ = 2 requires m < 1/2; use m = 0.4. ε ≤ δ·min{1, 1/λ} = 0.05.
        let e = prox_stationarity_bounds(2.0, 0.4, 0.1, ProxBoundDirection::EpsToDelta).unwrap();
        assert_relative_eq!(e, 0.05, epsilon = 1e-15);
        // λ → (1/m)⁻: threshold → λε.
        let m = 1.0;
        let eps = 0.7;
        let lam = 1.0 / m - 1e-9;
        let d = prox_stationarity_bounds(lam, m, eps, ProxBoundDirection::DeltaToEps).unwrap();
        assert_relative_eq!(d, lam * eps, max_relative = 1e-6);
        assert!(prox_stationarity_bounds(1.0, 1.0, 1.0, ProxBoundDirection::DeltaToEps).is_err());
    }
}
