//! Accelerated composite gradient method for strongly convex composite
//! subproblems min ψ_s + ψ_n. Each iterate carries a certificate triple
//! (z, u, ε) with u ∈ ∂_ε(ψ_s+ψ_n)(z), which the outer proximal-point loop
//! consumes through the relative error criterion
//! ‖u‖² + 2ε ≤ σ‖z₀ − z + u‖².

use crate::error::{Error, Result};
use crate::linalg::{self, dot, lincomb, norm};

/// Oracles for one composite subproblem.
///
/// `psi_n_prox(α, a)` must solve min_y { ψ_n(y) + ‖y − a‖²/(2α) } exactly.
pub trait CompositeOracle: Sync {
    fn psi_s_value(&self, z: &[f64]) -> f64;
    fn psi_s_grad(&self, z: &[f64]) -> Vec<f64>;
    fn psi_n_value(&self, z: &[f64]) -> f64;
    fn psi_n_prox(&self, alpha: f64, a: &[f64]) -> Vec<f64>;

    fn psi_s_value_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        (self.psi_s_value(z), self.psi_s_grad(z))
    }
}

/// Strong-convexity/smoothness pair for the subproblem: μ for ψ_n, L for ∇ψ_s.
#[derive(Debug, Clone, Copy)]
pub struct AcgParams {
    pub mu: f64,
    pub l: f64,
}

impl AcgParams {
    pub fn validate(&self) -> Result<()> {
        if self.mu < 0.0 || self.l <= 0.0 || self.l < self.mu {
            return Err(Error::InvalidArgument(format!(
                "need 0 ≤ μ ≤ L and L > 0, got μ={}, L={}",
                self.mu, self.l
            )));
        }
        Ok(())
    }
}

/// Full iterate of the method. The running lower model Γ_j is affine and is
/// stored as Γ_j(y) = γ_α + ⟨y, γ_β⟩.
#[derive(Debug, Clone)]
pub struct AcgState {
    pub a: f64,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub gamma_alpha: f64,
    pub gamma_beta: Vec<f64>,
    pub u: Vec<f64>,
    pub eps: f64,
    pub iter: u64,
}

impl AcgState {
    pub fn new(z0: &[f64]) -> Self {
        AcgState {
            a: 0.0,
            z: z0.to_vec(),
            y: z0.to_vec(),
            gamma_alpha: 0.0,
            gamma_beta: vec![0.0; z0.len()],
            u: vec![0.0; z0.len()],
            eps: 0.0,
            iter: 0,
        }
    }

    pub fn gamma_at(&self, y: &[f64]) -> f64 {
        self.gamma_alpha + dot(y, &self.gamma_beta)
    }
}

/// Per-step diagnostics surfaced for adaptive callers (curvature estimation
/// and nonconvexity detection).
#[derive(Debug, Clone)]
pub struct AcgStepDiag {
    pub z_tilde: Vec<f64>,
    pub psi_s_z_tilde: f64,
    pub grad_z_tilde: Vec<f64>,
    pub psi_s_z_new: f64,
}

/// One iteration: the A-recursion, the affine-model update, the prox step,
/// and the certificate pair (u, ε).
pub fn acg_step<O: CompositeOracle + ?Sized>(
    state: &AcgState,
    oracle: &O,
    params: AcgParams,
    y0: &[f64],
) -> Result<(AcgState, AcgStepDiag)> {
    params.validate()?;
    let AcgParams { mu, l } = params;
    let a_j = state.a;
    let t = mu * a_j + 1.0;
    let a_next = a_j + (t + (t * t + 4.0 * l * t * a_j).sqrt()) / (2.0 * l);
    let w_old = a_j / a_next;
    let w_new = (a_next - a_j) / a_next;

    let z_tilde = lincomb(w_old, &state.z, w_new, &state.y);
    let (psi_s_zt, grad_zt) = oracle.psi_s_value_grad(&z_tilde);

    // Γ_{j+1} = w_old·Γ_j + w_new·[ψ_s(z̃) + ⟨∇ψ_s(z̃), · − z̃⟩]
    let gamma_alpha = w_old * state.gamma_alpha + w_new * (psi_s_zt - dot(&grad_zt, &z_tilde));
    let gamma_beta = lincomb(w_old, &state.gamma_beta, w_new, &grad_zt);

    // y_{j+1} minimizes Γ_{j+1}(y) + ψ_n(y) + ‖y − y₀‖²/(2A_{j+1});
    // completing the square this is the ψ_n-prox at a = y₀ − A_{j+1}·γ_β.
    let a_target = linalg::axpy(y0, -a_next, &gamma_beta);
    let y_new = oracle.psi_n_prox(a_next, &a_target);

    let z_new = lincomb(w_old, &state.z, w_new, &y_new);

    let u_new: Vec<f64> = y0
        .iter()
        .zip(&y_new)
        .map(|(y0i, yi)| (y0i - yi) / a_next)
        .collect();

    let psi_s_zn = oracle.psi_s_value(&z_new);
    let psi_z_new = psi_s_zn + oracle.psi_n_value(&z_new);
    let gamma_y = gamma_alpha + dot(&y_new, &gamma_beta);
    let model_y = gamma_y + oracle.psi_n_value(&y_new);
    let mut eps = psi_z_new - model_y - dot(&u_new, &linalg::sub(&z_new, &y_new));

    // ε is analytically nonnegative; tiny negatives are floating-point
    // cancellation at the scale of the objective values involved.
    if eps < 0.0 {
        let scale = 1.0f64.max(psi_z_new.abs()).max(model_y.abs());
        if eps >= -1e-12 * scale {
            eps = 0.0;
        } else {
            return Err(Error::InternalConsistency(format!(
                "negative ε = {eps:.3e} at iteration {} (scale {scale:.3e})",
                state.iter + 1
            )));
        }
    }

    Ok((
        AcgState {
            a: a_next,
            z: z_new,
            y: y_new,
            gamma_alpha,
            gamma_beta,
            u: u_new,
            eps,
            iter: state.iter + 1,
        },
        AcgStepDiag {
            z_tilde,
            psi_s_z_tilde: psi_s_zt,
            grad_z_tilde: grad_zt,
            psi_s_z_new: psi_s_zn,
        },
    ))
}

/// The relative-error acceptance test ‖u‖² + 2ε ≤ σ‖z₀ − z + u‖².
pub fn hpe_satisfied(state: &AcgState, z0: &[f64], sigma: f64) -> bool {
    let lhs = dot(&state.u, &state.u) + 2.0 * state.eps;
    let r: f64 = z0
        .iter()
        .zip(&state.z)
        .zip(&state.u)
        .map(|((z0i, zi), ui)| {
            let d = z0i - zi + ui;
            d * d
        })
        .sum();
    lhs <= sigma * r
}

/// A resumable run of the method from a fixed start point.
pub struct AcgRun<'a, O: CompositeOracle + ?Sized> {
    pub oracle: &'a O,
    pub params: AcgParams,
    pub z0: Vec<f64>,
    pub state: AcgState,
}

impl<'a, O: CompositeOracle + ?Sized> AcgRun<'a, O> {
    pub fn new(oracle: &'a O, params: AcgParams, z0: &[f64]) -> Self {
        AcgRun {
            oracle,
            params,
            z0: z0.to_vec(),
            state: AcgState::new(z0),
        }
    }

    pub fn step(&mut self) -> Result<AcgStepDiag> {
        let (next, diag) = acg_step(&self.state, self.oracle, self.params, &self.z0)?;
        self.state = next;
        Ok(diag)
    }

    /// Iterate until the HPE inequality holds together with `extra`, with at
    /// least `min_iters` iterations performed overall. Returns the number of
    /// iterations executed by this call.
    pub fn run_until<P: Fn(&AcgState) -> bool>(
        &mut self,
        sigma: f64,
        min_iters: u64,
        extra: P,
        iter_cap: u64,
        deadline: Option<std::time::Instant>,
    ) -> Result<u64> {
        let mut done_here = 0u64;
        loop {
            if self.state.iter >= min_iters
                && self.state.iter > 0
                && hpe_satisfied(&self.state, &self.z0, sigma)
                && extra(&self.state)
            {
                return Ok(done_here);
            }
            if self.state.iter >= iter_cap {
                return Err(Error::NonConvergence {
                    iters: self.state.iter,
                    last: Box::new(self.state.clone()),
                });
            }
            if let Some(d) = deadline {
                if std::time::Instant::now() >= d {
                    // Surface the timeout as a clean non-error to the caller,
                    // which owns the budget; iteration count already tallied.
                    return Ok(done_here);
                }
            }
            self.step()?;
            done_here += 1;
        }
    }
}

/// Iteration bound of the method at relative tolerance σ:
/// ⌈2√(2L)(1+√σ)/√σ⌉.
pub fn acg_iteration_bound(l: f64, sigma: f64) -> u64 {
    ((2.0 * (2.0 * l).sqrt() * (1.0 + sigma.sqrt()) / sigma.sqrt()).ceil()) as u64
}

/// Convenience single-shot runner; σ ∈ (0,1).
pub fn run_acg<O: CompositeOracle + ?Sized, P: Fn(&AcgState) -> bool>(
    oracle: &O,
    params: AcgParams,
    z0: &[f64],
    sigma: f64,
    min_iters: u64,
    extra: P,
    iter_cap: u64,
) -> Result<(AcgState, u64)> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "σ must lie in (0,1), got {sigma}"
        )));
    }
    let mut run = AcgRun::new(oracle, params, z0);
    let iters = run.run_until(sigma, min_iters, extra, iter_cap, None)?;
    Ok((run.state, iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{HKind, ProxFn};
    use crate::sets::SetKind;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Quadratic ½ xᵀ D x − bᵀx + box indicator, D diagonal.
    struct QuadBox {
        d: Vec<f64>,
        b: Vec<f64>,
        h: HKind,
    }

    impl CompositeOracle for QuadBox {
        fn psi_s_value(&self, z: &[f64]) -> f64 {
            z.iter()
                .zip(&self.d)
                .zip(&self.b)
                .map(|((zi, di), bi)| 0.5 * di * zi * zi - bi * zi)
                .sum()
        }
        fn psi_s_grad(&self, z: &[f64]) -> Vec<f64> {
            z.iter()
                .zip(&self.d)
                .zip(&self.b)
                .map(|((zi, di), bi)| di * zi - bi)
                .collect()
        }
        fn psi_n_value(&self, z: &[f64]) -> f64 {
            ProxFn::value(&self.h, z)
        }
        fn psi_n_prox(&self, alpha: f64, a: &[f64]) -> Vec<f64> {
            ProxFn::resolvent(&self.h, alpha, a)
        }
    }

    #[test]
    fn first_step_coefficient_is_one_over_l() {
        // A_0 = 0 forces A_1 = 1/L for any μ.
        for &(mu, l) in &[(0.0, 1.0), (0.5, 2.0), (3.0, 10.0)] {
            let q = QuadBox {
                d: vec![l],
                b: vec![0.0],
                h: HKind::Zero,
            };
            let st = AcgState::new(&[0.5]);
            let (next, _) = acg_step(&st, &q, AcgParams { mu, l }, &[0.5]).unwrap();
            assert_abs_diff_eq!(next.a, 1.0 / l, epsilon = 1e-14);
        }
    }

    #[test]
    fn one_dimensional_first_step_fixture() {
        // ψ_s = (x−1)²/2, ψ_n = 0, L = 1, μ = 0, z₀ = 0:
        // y₁ = z₁ = 1, u₁ = −1, ε₁ = ψ(z₁) − Γ₁(y₁) − ⟨u₁, z₁−y₁⟩ = 1/2.
        let q = QuadBox {
            d: vec![1.0],
            b: vec![1.0],
            h: HKind::Zero,
        };
        let st = AcgState::new(&[0.0]);
        let (next, _) = acg_step(&st, &q, AcgParams { mu: 0.0, l: 1.0 }, &[0.0]).unwrap();
        assert_abs_diff_eq!(next.y[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(next.z[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(next.u[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(next.eps, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn stationary_start_terminates_immediately() {
        // z₀ optimal with ψ_n = 0: u = 0, ε = 0 at the first checked iterate.
        let q = QuadBox {
            d: vec![2.0, 1.0],
            b: vec![0.0, 0.0],
            h: HKind::Zero,
        };
        let (st, iters) = run_acg(
            &q,
            AcgParams { mu: 0.0, l: 2.0 },
            &[0.0, 0.0],
            0.5,
            0,
            |_| true,
            1000,
        )
        .unwrap();
        assert_eq!(iters, 1);
        assert_abs_diff_eq!(norm(&st.u), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st.eps, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn converges_to_closed_form_minimizer() {
        let q = QuadBox {
            d: vec![4.0, 1.0, 9.0],
            b: vec![1.0, -2.0, 0.5],
            h: HKind::Zero,
        };
        let xstar = [0.25, -2.0, 0.5 / 9.0];
        let mut run = AcgRun::new(&q, AcgParams { mu: 0.0, l: 9.0 }, &[5.0, 5.0, 5.0]);
        let mut vals = Vec::new();
        for _ in 0..400 {
            run.step().unwrap();
            vals.push(q.psi_s_value(&run.state.z));
        }
        assert!(linalg::dist(&run.state.z, &xstar) <= 1e-6);
        // Monotone in function value after a finite transient.
        let tail_start = vals
            .windows(2)
            .position(|w| w[1] <= w[0] + 1e-12)
            .unwrap_or(0);
        assert!(tail_start < 200);
        for w in vals[tail_start..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn lemma_bound_and_subdifferential_certificate() {
        // 100 seeded strongly convex composite instances; terminate within the
        // ⌈2√(2L)(1+√σ)/√σ⌉ bound and pass the ε-subdifferential inequality.
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let sigma = 0.5;
        for _ in 0..100 {
            let n = rng.gen_range(2..6);
            let l_target: f64 = rng.gen_range(1.0..1000.0);
            let d: Vec<f64> = (0..n)
                .map(|i| {
                    if i == 0 {
                        l_target
                    } else {
                        rng.gen_range(0.1..l_target)
                    }
                })
                .collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q = QuadBox {
                d,
                b,
                h: HKind::Indicator(SetKind::Box { lo: -1.0, hi: 1.0 }),
            };
            let z0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (st, iters) = run_acg(
                &q,
                AcgParams {
                    mu: 0.0,
                    l: l_target,
                },
                &z0,
                sigma,
                0,
                |_| true,
                10_000_000,
            )
            .unwrap();
            assert!(iters <= acg_iteration_bound(l_target, sigma));

            // u ∈ ∂_ε(ψ_s+ψ_n)(z): ψ(z') ≥ ψ(z) + ⟨u, z'−z⟩ − ε at samples.
            let psi_z = q.psi_s_value(&st.z) + q.psi_n_value(&st.z);
            for _ in 0..200 {
                let zp: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let psi_zp = q.psi_s_value(&zp) + q.psi_n_value(&zp);
                let lin = dot(&st.u, &linalg::sub(&zp, &st.z));
                assert!(psi_zp >= psi_z + lin - st.eps - 1e-8);
            }
        }
    }

    #[test]
    fn gamma_recursion_matches_accumulated_model() {
        // Folding the defining convex combination of tangent planes must agree
        // with the (α, β) recursion.
        let q = QuadBox {
            d: vec![3.0, 1.5],
            b: vec![0.7, -0.4],
            h: HKind::Zero,
        };
        let z0 = [1.0, -2.0];
        let mut run = AcgRun::new(&q, AcgParams { mu: 0.0, l: 3.0 }, &z0);
        // Shadow accumulation: list of (weight_at_creation, value, grad, point)
        // folded with the running A-ratios.
        let mut pieces: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = Vec::new();
        for _ in 0..25 {
            let a_old = run.state.a;
            let diag = run.step().unwrap();
            let a_new = run.state.a;
            let w_old = a_old / a_new;
            let w_new = (a_new - a_old) / a_new;
            for p in pieces.iter_mut() {
                p.0 *= w_old;
            }
            pieces.push((w_new, diag.psi_s_z_tilde, diag.grad_z_tilde, diag.z_tilde));

            let yj = run.state.y.clone();
            let by_parts: f64 = pieces
                .iter()
                .map(|(w, v, g, zt)| w * (v + dot(g, &linalg::sub(&yj, zt))))
                .sum();
            assert_abs_diff_eq!(run.state.gamma_at(&yj), by_parts, epsilon = 1e-10);
        }
    }

    #[test]
    fn gamma_stays_below_psi_s() {
        // Γ_j is a convex combination of tangent planes of a convex ψ_s.
        let q = QuadBox {
            d: vec![2.0, 5.0],
            b: vec![1.0, 1.0],
            h: HKind::Zero,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut run = AcgRun::new(&q, AcgParams { mu: 0.0, l: 5.0 }, &[2.0, -1.0]);
        for _ in 0..30 {
            run.step().unwrap();
            for _ in 0..10 {
                let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
                assert!(run.state.gamma_at(&y) <= q.psi_s_value(&y) + 1e-10);
            }
        }
    }

    #[test]
    fn iteration_cap_raises_nonconvergence() {
        let q = QuadBox {
            d: vec![1.0],
            b: vec![1.0],
            h: HKind::Zero,
        };
        let err = run_acg(
            &q,
            AcgParams { mu: 0.0, l: 1.0 },
            &[100.0],
            1e-12,
            0,
            |st| st.eps < -1.0, // unsatisfiable
            5,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iters: 5, .. }));
    }
}
