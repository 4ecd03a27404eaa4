//! Dense vector helpers, a minimal CSR sparse matrix, and operator-norm
//! estimation by power iteration.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// a + s*b
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    axpy(a, -1.0, b)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    axpy(a, 1.0, b)
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// w1*a + w2*b
pub fn lincomb(w1: f64, a: &[f64], w2: f64, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| w1 * x + w2 * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Compressed sparse row matrix with f64 entries.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Build from (row, col, value) triplets. Triplets must not repeat a position.
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut vals = Vec::with_capacity(t.len());
        for &(r, c, v) in &t {
            debug_assert!(r < rows && c < cols);
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            vals.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            rows,
            cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// y = A^T x
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.vals[k] * xr;
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[r][self.col_idx[k]] = self.vals[k];
            }
        }
        d
    }
}

/// Estimate of the operator norm ‖A‖ = σ_max(A) of a linear map given by
/// matvec closures for A and A^T. Power iteration on A^T A, certified by the
/// Rayleigh-quotient residual: the returned σ satisfies |σ − ‖A‖| ≤ tol·‖A‖.
pub fn operator_norm<F, G>(apply: F, apply_adjoint: G, dim_in: usize, tol: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if dim_in == 0 {
        return Err(Error::EmptyVector);
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let mut best: Option<f64> = None;
    // A few independent starts guard against an unlucky orthogonal start.
    for start in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6f70_6e6f + start);
        let mut v: Vec<f64> = (0..dim_in).map(|_| rng.gen::<f64>() - 0.5).collect();
        let nv = norm(&v);
        if nv == 0.0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        let mut theta = 0.0;
        let mut converged = false;
        for _ in 0..200_000 {
            let bv = apply_adjoint(&apply(&v)); // B v with B = A^T A
            theta = dot(&v, &bv); // Rayleigh quotient (v normalized)
            let resid: f64 = bv
                .iter()
                .zip(&v)
                .map(|(b, x)| (b - theta * x) * (b - theta * x))
                .sum::<f64>()
                .sqrt();
            let nbv = norm(&bv);
            if nbv == 0.0 {
                theta = 0.0;
                converged = true;
                break;
            }
            // σ = sqrt(θ), so a relative residual of tol/2 on θ certifies tol on σ.
            if resid <= 0.25 * tol * theta.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
            v = bv.iter().map(|b| b / nbv).collect();
        }
        if converged && theta > 0.0 {
            best = Some(best.map_or(theta, |b: f64| b.max(theta)));
        } else if converged && best.is_none() {
            best = Some(0.0);
        }
    }
    match best {
        Some(theta) if theta > 0.0 => Ok(theta.sqrt()),
        Some(_) => Err(Error::ZeroOperator),
        None => Err(Error::InternalConsistency(
            "power iteration did not converge".into(),
        )),
    }
}

/// Extreme eigenvalues (λ_min, λ_max) of a symmetric operator, by power
/// iteration on shifted positive-definite forms. `bound` must satisfy
/// bound ≥ max(|λ_min|, |λ_max|).
pub fn sym_extreme_eigs<F>(op: F, dim: usize, bound: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let s = bound + 1.0;
    // λ_max(op + sI) = λ_max + s, and op + sI is PSD.
    let shifted_up = |v: &[f64]| axpy(&op(v), s, v);
    let lmax = dominant_eig(&shifted_up, dim, s * rel_tol)? - s;
    // λ_max(sI − op) = s − λ_min.
    let shifted_down = |v: &[f64]| {
        let av = op(v);
        v.iter().zip(&av). map(|(x, a)| s * x - a).collect::<Vec<f64>>()
    };
    let lmin = s - dominant_eig(&shifted_down, dim, s * rel_tol)?;
    Ok((lmin, lmax))
}

fn dominant_eig<F>(op: &F, dim: usize, abs_tol: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x6569_6773);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nv = norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut theta = 0.0;
    for _ in 0..200_000 {
        let av = op(&v);
        theta = dot(&v, &av);
        let resid: f64 = av
            .iter()
            .zip(&v)
            .map(|(a, x)| (a - theta * x) * (a - theta * x))
            .sum::<f64>()
            .sqrt();
        if resid <= abs_tol.max(1e-14) {
            return Ok(theta);
        }
        let nav = norm(&av);
        if nav == 0.0 {
            return Ok(0.0);
        }
        v = av.iter().map(|a| a / nav).collect();
    }
    Ok(theta)
}
