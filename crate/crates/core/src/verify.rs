//! Independent re-verification of stationarity certificates, plus the
//! complexity-bound diagnostic formulas.

use crate::certificate::StationaryCertificate;
use crate::error::Result;
use crate::linalg::{self, norm};
use crate::problem::ProblemConstants;
use crate::problems::Instance;
use crate::qp_aipp::LinearConstraint;
use crate::sample;
use crate::sets::SetKind;
use crate::smoothing::SmoothedObjective;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Solve-time context a certificate is verified against.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CertContext {
    pub xi: f64,
    pub rho_x: f64,
    pub rho_y: f64,
    pub eta: Option<f64>,
    /// Residual scale ‖∇p_ξ(x₀)‖ + 1 recorded at solve time (1 = absolute).
    pub scale: f64,
    pub relative: bool,
    pub penalty_c_final: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, measured: f64, bound: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed: measured <= bound,
            measured,
            bound,
        });
    }
}

/// Recompute every certificate claim from the instance data: stored norms,
/// residual bounds, the dual pair via a fresh inner argmax, Nash residuals,
/// the multiplier identity, and a smoothing sandwich spot-check.
pub fn verify_certificate(
    instance: &Arc<Instance>,
    constraint: Option<&LinearConstraint>,
    cert: &StationaryCertificate,
    ctx: &CertContext,
) -> Result<VerifyReport> {
    let problem = instance.problem();
    let smoothed = SmoothedObjective::new(&problem, ctx.xi)?;
    let mut report = VerifyReport { checks: Vec::new() };

    // Stored norms recomputable from stored vectors.
    report.push(
        "norm_u_consistent",
        (norm(&cert.u_bar) - cert.norm_u).abs(),
        1e-12 * cert.norm_u.max(1.0),
    );
    report.push(
        "norm_v_consistent",
        (norm(&cert.v_bar) - cert.norm_v).abs(),
        1e-12 * cert.norm_v.max(1.0),
    );

    // Residual scale, recomputed from the family's canonical start point.
    let scale = if ctx.relative {
        let x0 = instance.default_x0();
        norm(&smoothed.grad_p_xi(&x0)) + 1.0
    } else {
        1.0
    };
    report.push(
        "scale_consistent",
        (scale - ctx.scale).abs(),
        1e-9 * ctx.scale.max(1.0),
    );
    report.push("norm_u_bound", cert.norm_u, ctx.rho_x * scale + 1e-12);
    report.push("norm_v_bound", cert.norm_v, ctx.rho_y + 1e-12);

    // Dual pair recomputed from scratch.
    let y_fresh = smoothed.y_xi(&cert.x_bar);
    let v_fresh = smoothed.dual_residual(&y_fresh);
    report.push(
        "y_bar_recompute",
        linalg::dist(&y_fresh, &cert.y_bar),
        1e-10,
    );
    report.push(
        "v_bar_recompute",
        linalg::dist(&v_fresh, &cert.v_bar),
        1e-10,
    );

    // Nash residuals must be dominated by the stored residual norms.
    let gx = problem.grad_x(&cert.x_bar, &cert.y_bar);
    let gx_with_multiplier = match (constraint, &cert.r_bar) {
        (Some(lc), Some(r)) => linalg::add(&gx, &(lc.apply_adjoint)(r)),
        _ => gx,
    };
    let rx = match problem.h.set_kind() {
        None => norm(&gx_with_multiplier),
        Some(kind) => crate::sets::normal_cone_distance(kind, &cert.x_bar, &gx_with_multiplier)?,
    };
    let gy = problem.grad_y(&cert.x_bar, &cert.y_bar)?;
    let neg_gy: Vec<f64> = gy.iter().map(|g| -g).collect();
    let ry = crate::sets::normal_cone_distance(problem.y_set, &cert.y_bar, &neg_gy)?;
    report.push("nash_rx_dominated", rx, cert.norm_u + 1e-8);
    report.push("nash_ry_dominated", ry, cert.norm_v + 1e-8);

    // Constrained case: feasibility and the multiplier identity.
    if let (Some(lc), Some(r_bar)) = (constraint, &cert.r_bar) {
        let viol = lc.violation(&cert.x_bar);
        let feas = norm(&viol);
        if let Some(eta) = ctx.eta {
            report.push("feasibility", feas, eta + 1e-12);
        }
        if let Some(stored) = cert.feas_violation {
            report.push("feas_consistent", (feas - stored).abs(), 1e-12 * stored.max(1.0));
        }
        if let Some(c) = ctx.penalty_c_final {
            let recomputed = linalg::scale(&viol, c);
            report.push(
                "multiplier_identity",
                linalg::dist(&recomputed, r_bar),
                1e-10 * (1.0 + norm(r_bar)),
            );
        }
    }

    // Smoothing sandwich spot-check at a few sampled feasible points.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let d_y = problem.constants.d_y;
    let slack = d_y * d_y / (2.0 * ctx.xi);
    let mut worst_upper = f64::NEG_INFINITY;
    let mut worst_lower = f64::NEG_INFINITY;
    for _ in 0..5 {
        let x = sample_x(instance, &mut rng);
        let p_xi = smoothed.p_xi_value(&x);
        let p = instance.exact_p(&x);
        worst_upper = worst_upper.max(p_xi - p);
        worst_lower = worst_lower.max(p - slack - p_xi);
    }
    report.push("sandwich_upper", worst_upper, 1e-9);
    report.push("sandwich_lower", worst_lower, 1e-9);

    Ok(report)
}

fn sample_x(instance: &Instance, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use rand::Rng;
    match instance {
        Instance::Qvm(q) => sample::sample_simplex(q.n, rng),
        Instance::Trr(t) => (0..t.k).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect(),
        Instance::Pc(p) => sample::sample_point(
            SetKind::Box { lo: 0.0, hi: p.r },
            p.k_dim * p.n_dim,
            rng,
        ),
    }
}

/// Ω_ξ = 1 + (√ξ·L_y + √L_x)/√m, the per-iteration cost driver of the
/// smoothing scheme's complexity bound.
pub fn omega_xi(c: &ProblemConstants, xi: f64) -> f64 {
    1.0 + (xi.sqrt() * c.l_y + c.l_x.sqrt()) / c.m.sqrt()
}

/// Upper bound on the initial proximal gap: min{ ½d₀², λ(φ(x₀) − φ*) }.
pub fn r_phi_lambda_upper(d0: f64, lambda: f64, phi_x0: f64, phi_star: f64) -> f64 {
    (0.5 * d0 * d0).min(lambda * (phi_x0 - phi_star))
}

/// Penalty threshold T_η = 2R/(η²(1−σ)λ) + ĉ; the final penalty parameter
/// never exceeds 2·max(T_η, c₀).
pub fn penalty_threshold(r_upper: f64, eta: f64, sigma: f64, lambda: f64, hat_c: f64) -> f64 {
    2.0 * r_upper / (eta * eta * (1.0 - sigma) * lambda) + hat_c
}

/// Effective curvature of the terminal penalty subproblem: M + T_η‖A‖².
pub fn penalty_curvature(big_m: f64, t_eta: f64, norm_a: f64) -> f64 {
    big_m + t_eta * norm_a * norm_a
}

/// Ω_{ξ,η} = Ω_ξ + √(R + D_y²/(mξ))·‖A‖/η for the constrained scheme.
pub fn omega_xi_eta(
    c: &ProblemConstants,
    xi: f64,
    r_upper: f64,
    norm_a: f64,
    eta: f64,
) -> f64 {
    omega_xi(c, xi) + (r_upper + c.d_y * c.d_y / (c.m * xi)).sqrt() * norm_a / eta
}
