//! Adaptive proximal point solver: large stepsizes with halving on detected
//! subproblem nonconvexity, backtracked curvature estimates inside the inner
//! accelerated method, a relaxed inner acceptance criterion, and a
//! per-iteration refinement check of the true residual norm.

use crate::acg::{acg_step, hpe_satisfied, AcgParams, AcgState};
use crate::aipp::{refine, AippOutput, Curvature, ProxSubproblem};
use crate::certificate::{SolveReport, Termination};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};
use crate::oracle::{check_in_dom, ProxFn, SmoothFn};
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct RaippConfig {
    pub rho_bar: f64,
    /// Relaxed inner acceptance threshold σ̂.
    pub sigma_hat: f64,
    /// The prox subproblem must stay (1/θ)-strongly convex; violations halve λ.
    pub theta: f64,
    /// Stepsize cap λ ≤ cap_factor/m.
    pub lambda_cap_factor: f64,
    /// Initial curvature estimate M̃ = M_guess / init_divisor.
    pub m_tilde_init_divisor: f64,
    /// Per-subproblem inner budget 10·⌈2√(2L)/√σ̂⌉ before λ is halved.
    pub acg_budget_factor: f64,
    pub max_outer: u64,
    pub time_limit: Option<Duration>,
    pub acg_iter_cap: u64,
}

impl RaippConfig {
    pub fn new(_m: f64, rho_bar: f64) -> Self {
        RaippConfig {
            rho_bar,
            sigma_hat: 0.999,
            theta: 4.0,
            lambda_cap_factor: 100.0,
            m_tilde_init_divisor: 100.0,
            acg_budget_factor: 10.0,
            max_outer: 10_000_000,
            time_limit: None,
            acg_iter_cap: 100_000_000,
        }
    }
}

enum InnerOutcome {
    Accepted(AcgState),
    NegativeCurvature,
    BudgetExceeded,
    Deadline(AcgState),
}

/// Same output contract as the fixed-stepsize solver; λ is managed
/// internally and the report carries the λ and τ trajectories.
pub fn raipp_solve<F: SmoothFn + ?Sized, H: ProxFn + ?Sized>(
    f: &F,
    h: &H,
    curvature: Curvature,
    config: &RaippConfig,
    x0: &[f64],
) -> Result<AippOutput> {
    check_in_dom(h, x0)?;
    if config.rho_bar <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let start = Instant::now();
    let deadline = config.time_limit.map(|d| start + d);
    let m = curvature.m;
    let lambda_cap = config.lambda_cap_factor / m;
    let lambda0 = 1.0 / m;

    let mut lambda = lambda0;
    let mut m_tilde = (curvature.big_m / config.m_tilde_init_divisor).max(1e-12);
    let mut tau = 10.0 * (lambda0 * curvature.big_m + 1.0);
    let mut ever_halved = false;

    let mut report = SolveReport::new();
    let mut z_prev = x0.to_vec();
    let mut termination = Termination::IterLimit;

    'outer: for _k in 1..=config.max_outer {
        // Solve the prox subproblem at the current λ, halving on failure.
        let accepted: AcgState;
        loop {
            if lambda < 1e-12 / m {
                return Err(Error::InternalConsistency(
                    "stepsize collapsed; curvature model inconsistent".into(),
                ));
            }
            let sub = ProxSubproblem {
                f,
                h,
                lambda,
                center: z_prev.clone(),
            };
            match solve_subproblem(
                &sub,
                &z_prev,
                lambda,
                &mut m_tilde,
                tau.min(config.sigma_hat),
                config,
                &mut report,
                deadline,
            )? {
                InnerOutcome::Accepted(st) => {
                    accepted = st;
                    break;
                }
                InnerOutcome::NegativeCurvature | InnerOutcome::BudgetExceeded => {
                    lambda *= 0.5;
                    ever_halved = true;
                }
                InnerOutcome::Deadline(st) => {
                    termination = Termination::TimeLimit;
                    z_prev = st.z;
                    break 'outer;
                }
            }
            if report.acg_iterations >= config.acg_iter_cap {
                termination = Termination::IterLimit;
                break 'outer;
            }
        }

        report.outer_iterations += 1;
        report.lambda_trajectory.push(lambda);

        // Refinement check of the true residual at the accepted iterate.
        let m_lambda = m_tilde + 1.0 / lambda;
        let (x_bar, u_bar) = refine(&accepted.z, f, h, m_lambda);
        report.oracle_calls += 1;
        let u_bar_norm = norm(&u_bar);
        if u_bar_norm <= config.rho_bar {
            report.tau_trajectory.push(tau);
            report.wall_time_s = start.elapsed().as_secs_f64();
            report.termination = Termination::Converged;
            report.terminal_value = f.value(&x_bar) + h.value(&x_bar);
            return Ok(AippOutput {
                x: x_bar,
                u: u_bar,
                report,
            });
        }

        // Inner-accuracy adaptation from the ratio of refined to prox residual.
        let denom = norm(&crate::aipp::residual(&z_prev, &accepted.z, &accepted.u));
        let pi = if denom > 1e-300 {
            lambda * u_bar_norm / denom
        } else {
            1.3
        };
        if pi > 1.5 {
            tau = 1.5 * tau / pi;
        } else if pi < 1.2 {
            tau = 1.2 * tau / pi;
        }
        report.tau_trajectory.push(tau);

        // Stepsize growth while no halving has ever occurred.
        if !ever_halved {
            lambda = (2.0 * lambda).min(lambda_cap);
        }

        z_prev = accepted.z;
        if let Some(d) = deadline {
            if Instant::now() >= d {
                termination = Termination::TimeLimit;
                break 'outer;
            }
        }
    }

    let m_lambda = m_tilde + 1.0 / lambda;
    let (x_bar, u_bar) = refine(&z_prev, f, h, m_lambda);
    report.oracle_calls += 1;
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.termination = termination;
    report.terminal_value = f.value(&x_bar) + h.value(&x_bar);
    Ok(AippOutput {
        x: x_bar,
        u: u_bar,
        report,
    })
}

#[allow(clippy::too_many_arguments)]
fn solve_subproblem<F: SmoothFn + ?Sized, H: ProxFn + ?Sized>(
    sub: &ProxSubproblem<'_, F, H>,
    z0: &[f64],
    lambda: f64,
    m_tilde: &mut f64,
    sigma_eff: f64,
    config: &RaippConfig,
    report: &mut SolveReport,
    deadline: Option<Instant>,
) -> Result<InnerOutcome> {
    // The smooth part keeps ¼ of the prox quadratic, so a curvature dip below
    // −(½ − 1/θ) certifies the subproblem is not (1/θ)-strongly convex.
    let weak_margin = 0.5 - 1.0 / config.theta;
    let mut state = AcgState::new(z0);
    loop {
        let l = lambda * *m_tilde + 0.5;
        let budget =
            (config.acg_budget_factor * (2.0 * (2.0 * l).sqrt() / config.sigma_hat.sqrt()).ceil())
                as u64;
        if state.iter >= budget {
            return Ok(InnerOutcome::BudgetExceeded);
        }
        if let Some(d) = deadline {
            if Instant::now() >= d {
                return Ok(InnerOutcome::Deadline(state));
            }
        }
        let step = acg_step(&state, sub, AcgParams { mu: 0.5, l }, z0);
        let (next, diag) = match step {
            Ok(v) => v,
            // A certifiably negative ε means the running lower model cut
            // above the function: the smooth part is not convex at this λ.
            Err(Error::InternalConsistency(_)) => return Ok(InnerOutcome::NegativeCurvature),
            Err(e) => return Err(e),
        };
        report.acg_iterations += 1;
        report.oracle_calls += 1;

        let scale = value_scale(diag.psi_s_z_tilde, diag.psi_s_z_new);
        // Descent-model check: ψ_s(z⁺) ≤ ψ_s(z̃) + ⟨∇ψ_s(z̃), z⁺−z̃⟩ + (L/2)‖z⁺−z̃‖².
        let dz = linalg::sub(&next.z, &diag.z_tilde);
        let lin = diag.psi_s_z_tilde + dot(&diag.grad_z_tilde, &dz);
        let quad = 0.5 * l * dot(&dz, &dz);
        if diag.psi_s_z_new > lin + quad + 1e-10 * scale {
            *m_tilde *= 2.0;
            continue; // redo this step with the doubled estimate
        }
        // Negative-curvature certificate with the (½ − 1/θ) margin, checked at
        // both new points.
        let psi_s_y = sub.psi_s_value(&next.y);
        report.oracle_calls += 1;
        let dy = linalg::sub(&next.y, &diag.z_tilde);
        let lin_y = diag.psi_s_z_tilde + dot(&diag.grad_z_tilde, &dy);
        let curv_y = lin_y - 0.5 * weak_margin * dot(&dy, &dy);
        let curv_z = lin - 0.5 * weak_margin * dot(&dz, &dz);
        if psi_s_y < curv_y - 1e-10 * scale || diag.psi_s_z_new < curv_z - 1e-10 * scale {
            return Ok(InnerOutcome::NegativeCurvature);
        }

        state = next;
        if hpe_satisfied(&state, z0, sigma_eff) {
            return Ok(InnerOutcome::Accepted(state));
        }
    }
}

fn value_scale(a: f64, b: f64) -> f64 {
    1.0f64.max(a.abs()).max(b.abs())
}
