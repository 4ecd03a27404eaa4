//! Quadratic-penalty methods for linearly constrained problems: solve a
//! sequence of penalized composite problems min f + h + (c/2)‖Ax−b‖² with
//! geometrically increasing c until the feasibility gap meets its tolerance,
//! then recover the multiplier r̄ = c(Ax̄−b).

use crate::aipp::{aipp_solve, AippConfig, AippOutput, Curvature};
use crate::certificate::{SolveReport, StationaryCertificate, Termination};
use crate::error::{Error, Result};
use crate::linalg::{self, norm, operator_norm};
use crate::oracle::{ProxFn, SmoothFn};
use crate::problem::MinMaxProblem;
use crate::smoothing::SmoothedObjective;
use std::time::{Duration, Instant};

pub type ApplyFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Linear operator data for the constraint A x = b, with a certified
/// operator norm computed once at construction.
pub struct LinearConstraint {
    pub apply: ApplyFn,
    pub apply_adjoint: ApplyFn,
    pub b: Vec<f64>,
    pub norm_a: f64,
}

impl LinearConstraint {
    pub fn new(apply: ApplyFn, apply_adjoint: ApplyFn, b: Vec<f64>, dim_in: usize) -> Result<Self> {
        let norm_a = operator_norm(&*apply, &*apply_adjoint, dim_in, 1e-8)?;
        Ok(LinearConstraint {
            apply,
            apply_adjoint,
            b,
            norm_a,
        })
    }

    /// Dense-matrix constructor (rows are the constraint rows).
    pub fn from_dense(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a[0].is_empty() {
            return Err(Error::EmptyVector);
        }
        let rows = a.len();
        let cols = a[0].len();
        if b.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: b.len(),
            });
        }
        let a2 = a.clone();
        let apply: ApplyFn = Box::new(move |x: &[f64]| {
            a.iter().map(|row| linalg::dot(row, x)).collect()
        });
        let apply_adjoint: ApplyFn = Box::new(move |r: &[f64]| {
            let mut out = vec![0.0; cols];
            for (ri, row) in r.iter().zip(&a2) {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += ri * v;
                }
            }
            out
        });
        Self::new(apply, apply_adjoint, b, cols)
    }

    pub fn violation(&self, x: &[f64]) -> Vec<f64> {
        linalg::sub(&(self.apply)(x), &self.b)
    }
}

#[derive(Debug, Clone)]
pub struct QpConfig {
    /// Base penalty offset ĉ from the boundedness assumption; 0 suffices for
    /// compact dom h.
    pub hat_c: f64,
    pub lambda: Option<f64>,
    pub sigma: f64,
    pub max_doublings: u32,
    /// Start each penalty round from the previous round's solution instead of
    /// the method-level initial point.
    pub warm_start: bool,
    pub time_limit: Option<Duration>,
    pub max_outer: u64,
}

impl Default for QpConfig {
    fn default() -> Self {
        QpConfig {
            hat_c: 0.0,
            lambda: None,
            sigma: 0.5,
            max_doublings: 60,
            warm_start: true,
            time_limit: None,
            max_outer: 10_000_000,
        }
    }
}

/// One penalty round's record: the penalty parameter and the feasibility gap
/// of its approximate stationary point.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PenaltyRound {
    pub c: f64,
    pub feasibility: f64,
}

#[derive(Debug)]
pub struct QpAippOutput {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub report: SolveReport,
    pub rounds: Vec<PenaltyRound>,
}

/// The penalized smooth part f_c = f + (c/2)‖A·−b‖².
pub(crate) struct PenalizedSmooth<'a, F: SmoothFn + ?Sized> {
    pub f: &'a F,
    pub constraint: &'a LinearConstraint,
    pub c: f64,
}

impl<F: SmoothFn + ?Sized> SmoothFn for PenalizedSmooth<'_, F> {
    fn value(&self, x: &[f64]) -> f64 {
        let v = self.constraint.violation(x);
        self.f.value(x) + 0.5 * self.c * linalg::dot(&v, &v)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let v = self.constraint.violation(x);
        let at = (self.constraint.apply_adjoint)(&v);
        let g = self.f.grad(x);
        linalg::axpy(&g, self.c, &at)
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (fv, fg) = self.f.value_grad(x);
        let v = self.constraint.violation(x);
        let at = (self.constraint.apply_adjoint)(&v);
        (
            fv + 0.5 * self.c * linalg::dot(&v, &v),
            linalg::axpy(&fg, self.c, &at),
        )
    }
}

/// Penalty loop for smooth composite f + h subject to Ax = b: returns
/// (x̄, ū, r̄) with ū ∈ ∇f(x̄) + ∂h(x̄) + A*r̄, ‖ū‖ ≤ ρ̄, ‖Ax̄−b‖ ≤ η̄.
pub fn qp_aipp_solve<F: SmoothFn + ?Sized, H: ProxFn + ?Sized>(
    f: &F,
    h: &H,
    curvature: Curvature,
    constraint: &LinearConstraint,
    config: &QpConfig,
    x0: &[f64],
    rho_bar: f64,
    eta_bar: f64,
) -> Result<QpAippOutput> {
    if rho_bar <= 0.0 || eta_bar <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerances must be positive, got ({rho_bar}, {eta_bar})"
        )));
    }
    if config.hat_c < 0.0 {
        return Err(Error::InvalidArgument("ĉ must be nonnegative".into()));
    }
    let start = Instant::now();
    let deadline = config.time_limit.map(|d| start + d);
    let norm_a2 = constraint.norm_a * constraint.norm_a;
    let c0 = config.hat_c + curvature.big_m / norm_a2;

    let mut report = SolveReport::new();
    let mut rounds = Vec::new();
    let mut c = c0;
    let mut x_start = x0.to_vec();
    let mut last: Option<(AippOutput, f64)> = None;

    for _round in 0..=config.max_doublings {
        let fc = PenalizedSmooth { f, constraint, c };
        let m_c = curvature.big_m + c * norm_a2;
        let mut inner_cfg = AippConfig::new(curvature.m, rho_bar);
        if let Some(l) = config.lambda {
            inner_cfg.lambda = l;
        }
        inner_cfg.sigma = config.sigma;
        inner_cfg.max_outer = config.max_outer;
        inner_cfg.time_limit = deadline.map(|d| d.saturating_duration_since(Instant::now()));
        let out = aipp_solve(
            &fc,
            h,
            Curvature {
                m: curvature.m,
                big_m: m_c,
            },
            &inner_cfg,
            &x_start,
        )?;
        report.outer_iterations += out.report.outer_iterations;
        report.acg_iterations += out.report.acg_iterations;
        report.oracle_calls += out.report.oracle_calls;

        let feas = norm(&constraint.violation(&out.x));
        rounds.push(PenaltyRound { c, feasibility: feas });

        if out.report.termination != Termination::Converged {
            // Ran out of budget inside this round.
            let r = linalg::scale(&constraint.violation(&out.x), c);
            report.termination = out.report.termination;
            report.terminal_value = out.report.terminal_value;
            report.wall_time_s = start.elapsed().as_secs_f64();
            report.penalty_c_final = Some(c);
            return Ok(QpAippOutput {
                x: out.x,
                u: out.u,
                r,
                report,
                rounds,
            });
        }

        if feas <= eta_bar {
            let r = linalg::scale(&constraint.violation(&out.x), c);
            report.termination = Termination::Converged;
            report.terminal_value = out.report.terminal_value;
            report.wall_time_s = start.elapsed().as_secs_f64();
            report.penalty_c_final = Some(c);
            return Ok(QpAippOutput {
                x: out.x,
                u: out.u,
                r,
                report,
                rounds,
            });
        }

        if config.warm_start {
            x_start = out.x.clone();
        }
        last = Some((out, c));
        c *= 2.0;
    }

    let c_final = last.map(|(_, c)| c).unwrap_or(c0);
    Err(Error::Divergence { c: c_final })
}

#[derive(Debug)]
pub struct QpSchemeOutput {
    pub certificate: StationaryCertificate,
    pub report: SolveReport,
    pub rounds: Vec<PenaltyRound>,
    pub xi: f64,
}

/// Smoothing wrapper for the linearly constrained min-max problem: runs the
/// penalty loop on p_ξ + h with ξ = D_y/ρ_y and assembles the quintuple
/// (ū, v̄, x̄, ȳ, r̄).
#[allow(clippy::too_many_arguments)]
pub fn qp_aipp_s_solve(
    problem: &MinMaxProblem,
    constraint: &LinearConstraint,
    rho_x: f64,
    rho_y: f64,
    eta: f64,
    config: &QpConfig,
    x0: &[f64],
    y0: &[f64],
) -> Result<QpSchemeOutput> {
    if rho_x <= 0.0 || rho_y <= 0.0 || eta <= 0.0 {
        return Err(Error::InvalidArgument(
            "tolerances must be positive".into(),
        ));
    }
    let consts = problem.constants;
    consts.validate()?;
    let xi = consts.d_y / rho_y;
    let smoothed = SmoothedObjective::with_anchor(problem, xi, y0.to_vec())?;
    let curvature = Curvature {
        m: consts.m,
        big_m: smoothed.l_xi,
    };
    let out = qp_aipp_solve(
        &smoothed,
        &problem.h,
        curvature,
        constraint,
        config,
        x0,
        rho_x,
        eta,
    )?;

    let y_bar = smoothed.y_xi(&out.x);
    let v_bar = smoothed.dual_residual(&y_bar);
    let feas = norm(&constraint.violation(&out.x));
    let mut certificate = StationaryCertificate::new(out.u, v_bar, out.x, y_bar);
    certificate.r_bar = Some(out.r);
    certificate.feas_violation = Some(feas);
    let mut report = out.report;
    report.terminal_value = smoothed.composite_value(&certificate.x_bar);
    report.oracle_calls = report.oracle_calls.max(problem.oracle_calls_bundled());
    Ok(QpSchemeOutput {
        certificate,
        report,
        rounds: out.rounds,
        xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{central_difference, FnSmooth, HKind};
    use crate::sets::SetKind;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn segment_constraint() -> LinearConstraint {
        // A = [1 1], b = 1 over the box [0,1]².
        LinearConstraint::from_dense(vec![vec![1.0, 1.0]], vec![1.0]).unwrap()
    }

    #[test]
    fn adjoint_consistency_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..5).map(|_| rng.gen::<f64>() - 0.5).collect())
            .collect();
        let lc = LinearConstraint::from_dense(a, vec![0.0; 3]).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() - 0.5).collect();
            let r: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() - 0.5).collect();
            let ax = (lc.apply)(&x);
            let atr = (lc.apply_adjoint)(&r);
            assert_abs_diff_eq!(
                linalg::dot(&ax, &r),
                linalg::dot(&x, &atr),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn zero_operator_rejected() {
        let res = LinearConstraint::from_dense(vec![vec![0.0, 0.0]], vec![0.0]);
        assert!(res.is_err());
    }

    #[test]
    fn penalized_gradient_matches_finite_differences() {
        let f = FnSmooth {
            value: |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            grad: |x: &[f64]| x.to_vec(),
        };
        let lc = segment_constraint();
        let fc = PenalizedSmooth {
            f: &f,
            constraint: &lc,
            c: 3.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let g = fc.grad(&x);
            let fd = central_difference(|p| fc.value(p), &x, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn toy_segment_problem_meets_tolerances() {
        // f = 0 (made weakly convex by a negligible curvature bound),
        // h = box indicator, A = [1 1], b = 1: the solution set is the
        // segment; compare feasibility against the exact projection.
        let f = FnSmooth {
            value: |_x: &[f64]| 0.0,
            grad: |x: &[f64]| vec![0.0; x.len()],
        };
        let h = HKind::Indicator(SetKind::Box { lo: 0.0, hi: 1.0 });
        let lc = segment_constraint();
        let config = QpConfig::default();
        let out = qp_aipp_solve(
            &f,
            &h,
            Curvature {
                m: 1e-6,
                big_m: 1e-6,
            },
            &lc,
            &config,
            &[0.9, 0.9],
            1e-6,
            1e-8,
        )
        .unwrap();
        assert!(out.report.converged());
        assert!(norm(&lc.violation(&out.x)) <= 1e-8);
        assert!(norm(&out.u) <= 1e-6);
        // Multiplier identity r̄ = c(Ax̄ − b).
        let c = out.report.penalty_c_final.unwrap();
        let recomputed = linalg::scale(&lc.violation(&out.x), c);
        for (a, b) in out.r.iter().zip(&recomputed) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        // Doubling trace: c starts at ĉ + M/‖A‖² and doubles each round.
        let c0 = 0.0 + 1e-6 / (lc.norm_a * lc.norm_a);
        for (i, round) in out.rounds.iter().enumerate() {
            assert_abs_diff_eq!(round.c, c0 * 2f64.powi(i as i32), max_relative = 1e-12);
        }
        // Final iterate is near the projection of the start onto the segment.
        let p = [0.5, 0.5]; // projection of (0.9,0.9) onto {x₁+x₂=1} ∩ box
        assert!(linalg::dist(&out.x, &p) <= 1e-2);
    }

    #[test]
    fn feasible_stationary_start_single_round() {
        // Start feasible and stationary for the penalized problem: terminates
        // in the first penalty round.
        let f = FnSmooth {
            value: |x: &[f64]| 0.5 * ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)),
            grad: |x: &[f64]| vec![x[0] - 0.5, x[1] - 0.5],
        };
        let h = HKind::Zero;
        let lc = segment_constraint();
        let out = qp_aipp_solve(
            &f,
            &h,
            Curvature { m: 1.0, big_m: 1.0 },
            &lc,
            &QpConfig::default(),
            &[0.5, 0.5],
            1e-6,
            1e-6,
        )
        .unwrap();
        assert_eq!(out.rounds.len(), 1);
        assert!(out.report.converged());
    }
}
