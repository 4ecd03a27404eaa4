//! Power-control-with-jammer instances: X is the K×N power matrix, y the
//! jammer powers, Φ sums the negated log-SINR terms. The y-resolvent reduces
//! to a per-coordinate bisection because Φ(X, ·) is separable in y.

use super::Instance;
use crate::error::{Error, Result};
use crate::oracle::{HKind, OracleCounters};
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::sets::SetKind;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct PcInstance {
    pub n_dim: usize,
    pub k_dim: usize,
    /// Channel gains |H|², K×K×N, index (j,k,n).
    pub a: Vec<f64>,
    /// Jammer gains |P|², K×N, index (k,n).
    pub b: Vec<f64>,
    pub sigma: f64,
    /// Box radius for X: R = K^{1/K}.
    pub r: f64,
    pub seed: u64,
    pub constants: ProblemConstants,
}

impl PcInstance {
    #[inline]
    fn a_at(&self, j: usize, k: usize, n: usize) -> f64 {
        self.a[(j * self.k_dim + k) * self.n_dim + n]
    }

    #[inline]
    fn b_at(&self, k: usize, n: usize) -> f64 {
        self.b[k * self.n_dim + n]
    }

    #[inline]
    fn x_at(x: &[f64], k: usize, n: usize, n_dim: usize) -> f64 {
        x[k * n_dim + n]
    }

    /// Interference-plus-noise S⁻ and total S for channel (k, n).
    fn s_pair(&self, x: &[f64], yn: f64, k: usize, n: usize) -> (f64, f64) {
        let mut s_minus = self.sigma * self.sigma + self.b_at(k, n) * yn;
        for j in 0..self.k_dim {
            if j != k {
                s_minus += self.a_at(j, k, n) * Self::x_at(x, j, n, self.n_dim);
            }
        }
        let s = self.a_at(k, k, n) * Self::x_at(x, k, n, self.n_dim) + s_minus;
        (s_minus, s)
    }

    pub fn phi(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for n in 0..self.n_dim {
            for k in 0..self.k_dim {
                let (sm, s) = self.s_pair(x, y[n], k, n);
                total += sm.ln() - s.ln();
            }
        }
        total
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let nd = self.n_dim;
        let kd = self.k_dim;
        let mut g = vec![0.0; kd * nd];
        for n in 0..nd {
            // Reuse the per-(j,n) pair values across the k-sum.
            let pairs: Vec<(f64, f64)> = (0..kd).map(|j| self.s_pair(x, y[n], j, n)).collect();
            for k in 0..kd {
                let mut d = -self.a_at(k, k, n) / pairs[k].1;
                for j in 0..kd {
                    if j != k {
                        let (sm, s) = pairs[j];
                        d += self.a_at(k, j, n) * self.a_at(j, j, n)
                            * Self::x_at(x, j, n, nd)
                            / (s * sm);
                    }
                }
                g[k * nd + n] = d;
            }
        }
        g
    }

    /// ∂Φ/∂y_n = Σ_k B_{k,n} A_{k,k,n} X_{k,n} / (S_{k,n} S⁻_{k,n})
    pub fn dphi_dyn(&self, x: &[f64], yn: f64, n: usize) -> f64 {
        (0..self.k_dim)
            .map(|k| {
                let (sm, s) = self.s_pair(x, yn, k, n);
                self.b_at(k, n) * self.a_at(k, k, n) * Self::x_at(x, k, n, self.n_dim) / (s * sm)
            })
            .sum()
    }

    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (0..self.n_dim)
            .map(|n| self.dphi_dyn(x, y[n], n))
            .collect()
    }

    pub fn y_upper(&self) -> f64 {
        self.n_dim as f64 / 2.0
    }

    /// Exact resolvent: per coordinate, the root of
    /// F_n(t) = ∂Φ/∂y_n(X, t) − (t − y0_n)/λ on [0, N/2] with boundary
    /// clamping; F_n is continuous and strictly decreasing, so bisection
    /// brackets the root.
    pub fn y_resolve(&self, lam: f64, x: &[f64], y0: &[f64]) -> Vec<f64> {
        let hi = self.y_upper();
        (0..self.n_dim)
            .map(|n| {
                let f = |t: f64| self.dphi_dyn(x, t, n) - (t - y0[n]) / lam;
                if f(0.0) <= 0.0 {
                    return 0.0;
                }
                if f(hi) >= 0.0 {
                    return hi;
                }
                let mut lo = 0.0;
                let mut up = hi;
                while up - lo > 1e-12 {
                    let mid = 0.5 * (lo + up);
                    if f(mid) > 0.0 {
                        lo = mid;
                    } else {
                        up = mid;
                    }
                }
                0.5 * (lo + up)
            })
            .collect()
    }

    /// p(x) = max_{y∈[0,N/2]^N} Φ(X,y) by per-coordinate maximization of the
    /// separable concave objective (gradient-sign bisection, no prox term).
    pub fn exact_p(&self, x: &[f64]) -> f64 {
        let hi = self.y_upper();
        let y: Vec<f64> = (0..self.n_dim)
            .map(|n| {
                let d = |t: f64| self.dphi_dyn(x, t, n);
                if d(hi) >= 0.0 {
                    return hi;
                }
                if d(0.0) <= 0.0 {
                    return 0.0;
                }
                let mut lo = 0.0;
                let mut up = hi;
                while up - lo > 1e-13 {
                    let mid = 0.5 * (lo + up);
                    if d(mid) > 0.0 {
                        lo = mid;
                    } else {
                        up = mid;
                    }
                }
                0.5 * (lo + up)
            })
            .collect();
        self.phi(x, &y)
    }
}

/// Sample from the standard complex Gaussian CN(0,1): real and imaginary
/// parts i.i.d. Normal(0, 1/2); the tensors hold squared moduli.
fn squared_modulus_cn01(rng: &mut ChaCha8Rng) -> f64 {
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let re = normal(rng) / std::f64::consts::SQRT_2;
    let im = normal(rng) / std::f64::consts::SQRT_2;
    re * re + im * im
}

pub fn pc_generate(n_dim: usize, k_dim: usize, seed: u64) -> Result<PcInstance> {
    if n_dim == 0 || k_dim == 0 {
        return Err(Error::EmptyVector);
    }
    let sigma = 1.0 / std::f64::consts::SQRT_2;
    let r = (k_dim as f64).powf(1.0 / k_dim as f64);

    let mut rng_a = ChaCha8Rng::seed_from_u64(seed);
    rng_a.set_stream(1);
    let a: Vec<f64> = (0..k_dim * k_dim * n_dim)
        .map(|_| squared_modulus_cn01(&mut rng_a))
        .collect();
    let mut rng_b = ChaCha8Rng::seed_from_u64(seed);
    rng_b.set_stream(2);
    let b: Vec<f64> = (0..k_dim * n_dim)
        .map(|_| squared_modulus_cn01(&mut rng_b))
        .collect();

    let factor = 2.0 / (sigma.powi(4)).min(sigma.powi(6));
    let mut max_a2 = 0.0f64;
    let mut max_ba = 0.0f64;
    for k in 0..k_dim {
        for n in 0..n_dim {
            let mut sum_a2 = 0.0;
            let mut sum_ba = 0.0;
            for j in 0..k_dim {
                let akjn = a[(k * k_dim + j) * n_dim + n];
                sum_a2 += akjn * akjn;
                sum_ba += b[j * n_dim + n] * akjn;
            }
            max_a2 = max_a2.max(sum_a2);
            max_ba = max_ba.max(sum_ba);
        }
    }
    let m = factor * max_a2;
    let l_y = factor * max_ba;
    let d_y = (n_dim as f64 / 2.0) * (n_dim as f64).sqrt();

    Ok(PcInstance {
        n_dim,
        k_dim,
        a,
        b,
        sigma,
        r,
        seed,
        constants: ProblemConstants {
            m,
            l_x: m,
            l_y,
            d_y,
        },
    })
}

pub(super) fn build_problem(inst: Arc<Instance>) -> MinMaxProblem {
    let p = match &*inst {
        Instance::Pc(p) => p.clone(),
        _ => unreachable!("pc builder on non-pc instance"),
    };
    let p = Arc::new(p);
    let constants = p.constants;
    let (nx, ny) = (p.k_dim * p.n_dim, p.n_dim);
    let x_box = SetKind::Box { lo: 0.0, hi: p.r };
    let y_box = SetKind::Box {
        lo: 0.0,
        hi: p.y_upper(),
    };

    let p1 = p.clone();
    let p2 = p.clone();
    let p3 = p.clone();
    let p4 = p.clone();
    MinMaxProblem {
        phi: Box::new(move |x, y| p1.phi(x, y)),
        grad_x_phi: Box::new(move |x, y| p2.grad_x(x, y)),
        grad_y_phi: Some(Box::new(move |x, y| p3.grad_y(x, y))),
        y_resolvent: Box::new(move |lam, x, y0| p4.y_resolve(lam, x, y0)),
        h: HKind::Indicator(x_box),
        y_set: y_box,
        constants,
        n_x: nx,
        n_y: ny,
        counters: OracleCounters::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::central_difference;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_inputs_give_zero_objective() {
        let inst = pc_generate(3, 2, 1).unwrap();
        let x = vec![0.0; 6];
        let y = vec![0.0; 3];
        assert_abs_diff_eq!(inst.phi(&x, &y), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dual_partial_is_positive_and_decreasing() {
        let inst = pc_generate(4, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..30 {
            let x: Vec<f64> = (0..12).map(|_| rng.gen::<f64>() * inst.r).collect();
            for n in 0..4 {
                let mut prev = f64::INFINITY;
                for step in 0..6 {
                    let t = step as f64 * 0.4;
                    let d = inst.dphi_dyn(&x, t, n);
                    assert!(d > 0.0, "∂Φ/∂y_{n} = {d} not positive");
                    assert!(d <= prev + 1e-12, "not decreasing in y_{n}");
                    prev = d;
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // N = K = 2, seed 5.
        let inst = pc_generate(2, 2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..25 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * inst.r).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
            let g = inst.grad_x(&x, &y);
            let fd = central_difference(|p| inst.phi(p, &y), &x, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
            let gy = inst.grad_y(&x, &y);
            let fdy = central_difference(|p| inst.phi(&x, p), &y, 1e-6);
            for (a, b) in gy.iter().zip(&fdy) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn resolvent_collapses_for_degenerate_inputs() {
        let inst = pc_generate(3, 2, 9).unwrap();
        let x = vec![0.4; 6];
        let y0 = vec![0.3, 1.2, 0.0];
        // λ → 0⁺: output → clamp(y0).
        let y = inst.y_resolve(1e-14, &x, &y0);
        for (a, b) in y.iter().zip(&y0) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        // B ≡ 0 ⇒ F_n = −(t − y0)/λ ⇒ root = clamp(y0).
        let mut inst0 = inst.clone();
        inst0.b.iter_mut().for_each(|v| *v = 0.0);
        let y = inst0.y_resolve(2.0, &x, &y0);
        for (a, b) in y.iter().zip(&y0) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn one_dimensional_resolvent_matches_grid_scan() {
        // N = K = 1, seed 9: the root must match a dense grid scan of the
        // 1-D concave prox objective.
        let inst = pc_generate(1, 1, 9).unwrap();
        let x = vec![0.8];
        let y0 = vec![0.1];
        let lam = 1.5;
        let y = inst.y_resolve(lam, &x, &y0)[0];

        let hi = inst.y_upper();
        let mut best = (f64::NEG_INFINITY, 0.0);
        let steps = 1_000_000;
        for i in 0..=steps {
            let t = hi * i as f64 / steps as f64;
            let val = lam * inst.phi(&x, &[t]) - 0.5 * (t - y0[0]) * (t - y0[0]);
            if val > best.0 {
                best = (val, t);
            }
        }
        assert_abs_diff_eq!(y, best.1, epsilon = 1e-5);
    }

    #[test]
    fn generation_deterministic_per_seed() {
        let a = pc_generate(3, 3, 4).unwrap();
        let b = pc_generate(3, 3, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, pc_generate(3, 3, 5).unwrap());
        // (σ, R) = (1/√2, K^{1/K})
        assert_abs_diff_eq!(a.sigma, 1.0 / std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(a.r, 3f64.powf(1.0 / 3.0), epsilon = 1e-15);
    }
}
