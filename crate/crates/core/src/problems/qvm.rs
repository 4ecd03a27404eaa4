//! Quadratic vector min-max instances: Φ(x,y) = Σ y_i g_i(x) over simplex
//! sets, with g_i(x) = (α_i/2)‖C_i x − d_i‖² − (β_i/2)‖D_i B_i x‖² and the
//! pair (α_i, β_i) calibrated so the Hessian of each g_i has extreme
//! eigenvalues (−m, M).

use super::Instance;
use crate::error::{Error, Result};
use crate::linalg::{self, Csr};
use crate::oracle::{HKind, OracleCounters};
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::sets::{project_simplex, SetKind};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct QvmInstance {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub c_mats: Vec<Csr>,
    pub b_mats: Vec<Csr>,
    pub d_diags: Vec<Vec<f64>>,
    pub d_vecs: Vec<Vec<f64>>,
    pub big_m_target: f64,
    pub m_target: f64,
    pub density: f64,
    pub seed: u64,
    pub norm_p: f64,
    pub constants: ProblemConstants,
}

/// Stream-split generator: one independent ChaCha stream per matrix.
fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sparse_uniform(rows: usize, cols: usize, density: f64, rng: &mut ChaCha8Rng) -> Csr {
    let total = rows * cols;
    let nnz = ((density * total as f64).round() as usize).clamp(1, total);
    let mut picked = BTreeSet::new();
    while picked.len() < nnz {
        picked.insert(rng.gen_range(0..total));
    }
    let triplets: Vec<(usize, usize, f64)> = picked
        .into_iter()
        .map(|p| (p / cols, p % cols, rng.gen::<f64>()))
        .collect();
    Csr::from_triplets(rows, cols, triplets)
}

impl QvmInstance {
    pub fn g_value(&self, i: usize, x: &[f64]) -> f64 {
        let cx = self.c_mats[i].matvec(x);
        let r = linalg::sub(&cx, &self.d_vecs[i]);
        let bx = self.b_mats[i].matvec(x);
        let dbx: f64 = bx
            .iter()
            .zip(&self.d_diags[i])
            .map(|(v, d)| (d * v) * (d * v))
            .sum();
        0.5 * self.alpha[i] * linalg::dot(&r, &r) - 0.5 * self.beta[i] * dbx
    }

    pub fn g_grad(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let cx = self.c_mats[i].matvec(x);
        let r = linalg::sub(&cx, &self.d_vecs[i]);
        let ct_r = self.c_mats[i].t_matvec(&r);
        let bx = self.b_mats[i].matvec(x);
        let d2bx: Vec<f64> = bx
            .iter()
            .zip(&self.d_diags[i])
            .map(|(v, d)| d * d * v)
            .collect();
        let bt = self.b_mats[i].t_matvec(&d2bx);
        ct_r
            .iter()
            .zip(&bt)
            .map(|(a, b)| self.alpha[i] * a - self.beta[i] * b)
            .collect()
    }

    /// Stack of (g_1(x), …, g_k(x)).
    pub fn g_stack(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k).map(|i| self.g_value(i, x)).collect()
    }

    pub fn phi(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.k).map(|i| y[i] * self.g_value(i, x)).sum()
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for i in 0..self.k {
            if y[i] == 0.0 {
                continue;
            }
            let gi = self.g_grad(i, x);
            for (acc, v) in g.iter_mut().zip(&gi) {
                *acc += y[i] * v;
            }
        }
        g
    }

    /// Exact p(x) = max_{y∈Δᵏ} Σ y_i g_i(x) = max_i g_i(x).
    pub fn exact_p(&self, x: &[f64]) -> f64 {
        (0..self.k)
            .map(|i| self.g_value(i, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Hessian-vector product of g_i.
    pub fn hess_apply(&self, i: usize, v: &[f64]) -> Vec<f64> {
        let cv = self.c_mats[i].matvec(v);
        let ct = self.c_mats[i].t_matvec(&cv);
        let bv = self.b_mats[i].matvec(v);
        let d2bv: Vec<f64> = bv
            .iter()
            .zip(&self.d_diags[i])
            .map(|(x, d)| d * d * x)
            .collect();
        let bt = self.b_mats[i].t_matvec(&d2bv);
        ct.iter()
            .zip(&bt)
            .map(|(a, b)| self.alpha[i] * a - self.beta[i] * b)
            .collect()
    }
}

/// Generate a calibrated instance. Matrix entries are U[0,1] (diagonals
/// U[1,1000]); (α_i, β_i) are found by alternating bisections so that
/// λ_max(∇²g_i) = M and λ_min(∇²g_i) = −m within 1%.
pub fn qvm_generate(
    n: usize,
    l: usize,
    k: usize,
    big_m_target: f64,
    m_target: f64,
    density: f64,
    seed: u64,
) -> Result<QvmInstance> {
    if !(m_target > 0.0 && m_target <= big_m_target) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < m ≤ M, got m={m_target}, M={big_m_target}"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density must lie in (0,1], got {density}"
        )));
    }
    if n == 0 || l == 0 || k == 0 {
        return Err(Error::EmptyVector);
    }

    let mut c_mats = Vec::with_capacity(k);
    let mut b_mats = Vec::with_capacity(k);
    let mut d_vecs = Vec::with_capacity(k);
    let mut d_diags = Vec::with_capacity(k);
    for i in 0..k {
        let i64u = i as u64;
        c_mats.push(sparse_uniform(l, n, density, &mut rng_for(seed, 1000 + i64u)));
        b_mats.push(sparse_uniform(n, n, density, &mut rng_for(seed, 2000 + i64u)));
        let mut rng_d = rng_for(seed, 3000 + i64u);
        d_vecs.push((0..l).map(|_| rng_d.gen::<f64>()).collect());
        let mut rng_dd = rng_for(seed, 4000 + i64u);
        d_diags.push((0..n).map(|_| rng_dd.gen_range(1.0..1000.0)).collect());
    }

    let mut inst = QvmInstance {
        n,
        l,
        k,
        alpha: vec![1.0; k],
        beta: vec![1.0; k],
        c_mats,
        b_mats,
        d_diags,
        d_vecs,
        big_m_target,
        m_target,
        density,
        seed,
        norm_p: 0.0,
        constants: ProblemConstants {
            m: m_target,
            l_x: big_m_target,
            l_y: 0.0,
            d_y: std::f64::consts::SQRT_2,
        },
    };

    for i in 0..k {
        calibrate_pair(&mut inst, i)?;
    }

    // P is n×k with columns α_i C_iᵀ d_i.
    let p_cols: Vec<Vec<f64>> = (0..k)
        .map(|i| linalg::scale(&inst.c_mats[i].t_matvec(&inst.d_vecs[i]), inst.alpha[i]))
        .collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, col) in p_cols.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(col) {
                *o += v[i] * c;
            }
        }
        out
    };
    let apply_t = |v: &[f64]| -> Vec<f64> {
        p_cols.iter().map(|col| linalg::dot(col, v)).collect()
    };
    inst.norm_p = match linalg::operator_norm(apply, apply_t, k, 1e-8) {
        Ok(s) => s,
        Err(Error::ZeroOperator) => 0.0,
        Err(e) => return Err(e),
    };
    inst.constants.l_y = big_m_target * (k as f64).sqrt() + inst.norm_p;
    Ok(inst)
}

/// Extreme eigenvalues of ∇²g_i at the current (α_i, β_i).
fn extreme_eigs(inst: &QvmInstance, i: usize) -> Result<(f64, f64)> {
    // Frobenius bounds dominate the spectrum of each PSD part.
    let fb_s: f64 = inst.c_mats[i].vals.iter().map(|v| v * v).sum();
    let mut fb_t = 0.0;
    let b = &inst.b_mats[i];
    for r in 0..b.rows {
        let row_sq: f64 = (b.row_ptr[r]..b.row_ptr[r + 1])
            .map(|kk| b.vals[kk] * b.vals[kk])
            .sum();
        let d = inst.d_diags[i][r];
        fb_t += d * d * row_sq;
    }
    let bound = inst.alpha[i] * fb_s + inst.beta[i] * fb_t;
    linalg::sym_extreme_eigs(|v| inst.hess_apply(i, v), inst.n, bound, 1e-10)
}

/// Alternating 1-D bisections: α drives λ_max to M (nondecreasing in α),
/// β drives λ_min to −m (nonincreasing in β).
fn calibrate_pair(inst: &mut QvmInstance, i: usize) -> Result<()> {
    let target_max = inst.big_m_target;
    let target_min = -inst.m_target;
    let tol_max = 0.005 * inst.big_m_target;
    let tol_min = 0.005 * inst.m_target;

    for _round in 0..100 {
        // α-bisection at fixed β.
        let eval_max = |inst: &QvmInstance| -> Result<f64> { Ok(extreme_eigs(inst, i)?.1) };
        bisect_param(inst, i, true, target_max, tol_max, &eval_max)?;
        // β-bisection at fixed α.
        let eval_min = |inst: &QvmInstance| -> Result<f64> { Ok(extreme_eigs(inst, i)?.0) };
        bisect_param(inst, i, false, target_min, tol_min, &eval_min)?;

        let (lmin, lmax) = extreme_eigs(inst, i)?;
        if (lmax - target_max).abs() <= tol_max && (lmin - target_min).abs() <= tol_min {
            return Ok(());
        }
    }
    Err(Error::Calibration { rounds: 100 })
}

fn bisect_param(
    inst: &mut QvmInstance,
    i: usize,
    is_alpha: bool,
    target: f64,
    tol: f64,
    eval: &dyn Fn(&QvmInstance) -> Result<f64>,
) -> Result<()> {
    let set = |inst: &mut QvmInstance, v: f64| {
        if is_alpha {
            inst.alpha[i] = v;
        } else {
            inst.beta[i] = v;
        }
    };
    let current = if is_alpha { inst.alpha[i] } else { inst.beta[i] };
    // λ_max is nondecreasing in α; λ_min is nonincreasing in β. Normalize to
    // "increasing toward target" by negating in the β case.
    let signed = |v: f64| if is_alpha { v } else { -v };
    let starget = signed(target);

    let mut lo = current;
    let mut hi = current;
    set(inst, lo);
    let mut flo = signed(eval(inst)?);
    let mut fhi = flo;
    let mut grow = 0;
    while flo > starget {
        lo *= 0.5;
        set(inst, lo);
        flo = signed(eval(inst)?);
        grow += 1;
        if grow > 200 {
            return Err(Error::Calibration { rounds: grow });
        }
    }
    grow = 0;
    while fhi < starget {
        hi *= 2.0;
        set(inst, hi);
        fhi = signed(eval(inst)?);
        grow += 1;
        if grow > 200 {
            return Err(Error::Calibration { rounds: grow });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        set(inst, mid);
        let fmid = signed(eval(inst)?);
        if (fmid - starget).abs() <= tol {
            return Ok(());
        }
        if fmid < starget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration { rounds: 200 })
}

pub(super) fn build_problem(inst: Arc<Instance>) -> MinMaxProblem {
    let q = match &*inst {
        Instance::Qvm(q) => q.clone(),
        _ => unreachable!("qvm builder on non-qvm instance"),
    };
    let q = Arc::new(q);
    let (n, k) = (q.n, q.k);
    let constants = q.constants;

    let q1 = q.clone();
    let q2 = q.clone();
    let q3 = q.clone();
    let q4 = q.clone();
    MinMaxProblem {
        phi: Box::new(move |x, y| q1.phi(x, y)),
        grad_x_phi: Box::new(move |x, y| q2.grad_x(x, y)),
        grad_y_phi: Some(Box::new(move |x, _y| q3.g_stack(x))),
        y_resolvent: Box::new(move |lam, x, y0| {
            let g = q4.g_stack(x);
            let target = linalg::axpy(y0, lam, &g);
            project_simplex(&target).expect("simplex projection")
        }),
        h: HKind::Indicator(SetKind::Simplex),
        y_set: SetKind::Simplex,
        constants,
        n_x: n,
        n_y: k,
        counters: OracleCounters::new(),
    }
}
