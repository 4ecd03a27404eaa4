//! Truncated robust regression: Φ(x,y) = Σ y_j φ_α(ℓ_j(x)) over the simplex,
//! with φ_α(t) = α·log(1 + t/α) and logistic losses ℓ_j. Includes the LIBSVM
//! sparse text reader/writer and a synthetic generator.

use super::Instance;
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracle::{HKind, OracleCounters};
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::sets::{project_simplex, SetKind};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct TrrInstance {
    /// Sparse feature rows a_j, sorted by index.
    pub features: Vec<Vec<(usize, f64)>>,
    /// Labels in {−1, +1}.
    pub labels: Vec<f64>,
    /// Feature dimension (the x variable).
    pub k: usize,
    pub alpha: f64,
    pub constants: ProblemConstants,
}

fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl TrrInstance {
    pub fn from_data(features: Vec<Vec<(usize, f64)>>, labels: Vec<f64>, alpha: f64) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyVector);
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if alpha <= 0.0 {
            return Err(Error::InvalidArgument("α must be positive".into()));
        }
        let k = features
            .iter()
            .flat_map(|row| row.iter().map(|&(i, _)| i + 1))
            .max()
            .unwrap_or(0);
        if k == 0 {
            return Err(Error::InvalidArgument("all feature rows empty".into()));
        }
        let max_sq = features
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v * v).sum::<f64>())
            .fold(0.0, f64::max);
        let sum_sq: f64 = features
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v * v).sum::<f64>())
            .sum();
        let m = max_sq / alpha;
        let constants = ProblemConstants {
            m,
            l_x: m,
            l_y: sum_sq.sqrt(),
            d_y: std::f64::consts::SQRT_2,
        };
        Ok(TrrInstance {
            features,
            labels,
            k,
            alpha,
            constants,
        })
    }

    pub fn n_points(&self) -> usize {
        self.features.len()
    }

    fn margin(&self, j: usize, x: &[f64]) -> f64 {
        let dot: f64 = self.features[j].iter().map(|&(i, v)| v * x[i]).sum();
        -self.labels[j] * dot
    }

    /// ℓ_j(x) = log(1 + exp(−b_j⟨a_j, x⟩))
    pub fn loss(&self, j: usize, x: &[f64]) -> f64 {
        softplus(self.margin(j, x))
    }

    /// φ_α(t) = α log(1 + t/α)
    pub fn phi_alpha(&self, t: f64) -> f64 {
        self.alpha * (t / self.alpha).ln_1p()
    }

    /// Truncated losses (φ_α ∘ ℓ_j)(x) for all j.
    pub fn truncated_losses(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_points())
            .map(|j| self.phi_alpha(self.loss(j, x)))
            .collect()
    }

    /// τ_j(x) = sigmoid(−b_j⟨a_j,x⟩) / (α + ℓ_j(x)); |τ_j| ≤ 1/α.
    pub fn tau(&self, j: usize, x: &[f64]) -> f64 {
        let t = self.margin(j, x);
        sigmoid(t) / (self.alpha + softplus(t))
    }

    pub fn phi(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n_points())
            .map(|j| y[j] * self.phi_alpha(self.loss(j, x)))
            .sum()
    }

    /// ∇ₓΦ(x,y) = −α Σ_j y_j b_j τ_j(x) a_j
    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.k];
        for j in 0..self.n_points() {
            if y[j] == 0.0 {
                continue;
            }
            let w = -self.alpha * y[j] * self.labels[j] * self.tau(j, x);
            for &(i, v) in &self.features[j] {
                g[i] += w * v;
            }
        }
        g
    }

    /// p(x) = max_j (φ_α ∘ ℓ_j)(x), the vertex maximum over the simplex.
    pub fn exact_p(&self, x: &[f64]) -> f64 {
        self.truncated_losses(x)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Parse LIBSVM sparse text: one "label idx:val idx:val…" record per line,
/// 1-based indices. Labels must be ±1 (0/1 datasets are mapped 0 → −1).
pub fn parse_libsvm(text: &str) -> Result<(Vec<Vec<(usize, f64)>>, Vec<f64>)> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_tok = parts.next().ok_or(Error::Parse {
            line: line_num,
            msg: "missing label".into(),
        })?;
        let raw: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_num,
            msg: format!("bad label '{label_tok}'"),
        })?;
        let label = if raw == 0.0 {
            -1.0
        } else if raw == 1.0 || raw == -1.0 {
            raw
        } else {
            return Err(Error::Parse {
                line: line_num,
                msg: format!("non-binary label {raw}"),
            });
        };
        let mut row = Vec::new();
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or(Error::Parse {
                line: line_num,
                msg: format!("expected idx:val, got '{tok}'"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: line_num,
                msg: format!("bad index '{idx_s}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_num,
                    msg: "indices are 1-based".into(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: line_num,
                msg: format!("bad value '{val_s}'"),
            })?;
            row.push((idx - 1, val));
        }
        row.sort_by_key(|&(i, _)| i);
        features.push(row);
        labels.push(label);
    }
    if features.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no records".into(),
        });
    }
    Ok((features, labels))
}

pub fn emit_libsvm(features: &[Vec<(usize, f64)>], labels: &[f64]) -> String {
    let mut out = String::new();
    for (row, &lab) in features.iter().zip(labels) {
        out.push_str(if lab > 0.0 { "+1" } else { "-1" });
        for &(i, v) in row {
            out.push_str(&format!(" {}:{}", i + 1, v));
        }
        out.push('\n');
    }
    out
}

/// Load a LIBSVM file as a TRR instance with the benchmark α = 10.
pub fn trr_load(path: &std::path::Path) -> Result<TrrInstance> {
    let text = std::fs::read_to_string(path)?;
    let (features, labels) = parse_libsvm(&text)?;
    TrrInstance::from_data(features, labels, 10.0)
}

/// Synthetic data with planted labels: sparse U[0,1] features, labels from
/// the sign of a hidden linear model.
pub fn trr_generate_synthetic(
    points: usize,
    features: usize,
    density: f64,
    seed: u64,
) -> Result<TrrInstance> {
    if points == 0 || features == 0 {
        return Err(Error::EmptyVector);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density must lie in (0,1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..features).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let mut rows = Vec::with_capacity(points);
    let mut labels = Vec::with_capacity(points);
    for _ in 0..points {
        let mut row: Vec<(usize, f64)> = (0..features)
            .filter(|_| rng.gen::<f64>() < density)
            .map(|i| (i, rng.gen::<f64>()))
            .collect();
        if row.is_empty() {
            row.push((rng.gen_range(0..features), rng.gen::<f64>()));
        }
        let score: f64 = row.iter().map(|&(i, v)| w[i] * v).sum();
        labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
        rows.push(row);
    }
    TrrInstance::from_data(rows, labels, 10.0)
}

pub(super) fn build_problem(inst: Arc<Instance>) -> MinMaxProblem {
    let t = match &*inst {
        Instance::Trr(t) => t.clone(),
        _ => unreachable!("trr builder on non-trr instance"),
    };
    let t = Arc::new(t);
    let (k, n) = (t.k, t.n_points());
    let constants = t.constants;

    let t1 = t.clone();
    let t2 = t.clone();
    let t3 = t.clone();
    let t4 = t.clone();
    MinMaxProblem {
        phi: Box::new(move |x, y| t1.phi(x, y)),
        grad_x_phi: Box::new(move |x, y| t2.grad_x(x, y)),
        grad_y_phi: Some(Box::new(move |x, _y| t3.truncated_losses(x))),
        y_resolvent: Box::new(move |lam, x, y0| {
            // The loss stack is computed once per resolvent call.
            let losses = t4.truncated_losses(x);
            let target = linalg::axpy(y0, lam, &losses);
            project_simplex(&target).expect("simplex projection")
        }),
        h: HKind::Zero,
        y_set: SetKind::Simplex,
        constants,
        n_x: k,
        n_y: n,
        counters: OracleCounters::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::central_difference;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const SAMPLE: &str = "+1 1:0.5 3:1.25\n-1 2:0.75\n+1 1:0.1 2:0.2 3:0.3\n";

    #[test]
    fn parse_and_reemit_roundtrip() {
        let (rows, labels) = parse_libsvm(SAMPLE).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(labels, vec![1.0, -1.0, 1.0]);
        assert_eq!(rows[0], vec![(0, 0.5), (2, 1.25)]);
        let emitted = emit_libsvm(&rows, &labels);
        let (rows2, labels2) = parse_libsvm(&emitted).unwrap();
        assert_eq!(rows, rows2);
        assert_eq!(labels, labels2);
        assert_eq!(emitted, emit_libsvm(&rows2, &labels2));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_libsvm("+1 1:0.5\nbad 2:1\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_libsvm("+3 1:0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        // zero labels map to −1
        let (_, labels) = parse_libsvm("0 1:2.0\n1 1:1.0\n").unwrap();
        assert_eq!(labels, vec![-1.0, 1.0]);
    }

    #[test]
    fn loss_at_origin_matches_closed_form() {
        let inst = TrrInstance::from_data(vec![vec![(0, 1.0)]], vec![1.0], 10.0).unwrap();
        let l0 = inst.loss(0, &[0.0]);
        assert_relative_eq!(l0, 2.0f64.ln(), epsilon = 1e-15);
        let p = inst.phi_alpha(l0);
        assert_relative_eq!(p, 10.0 * (1.0 + 2.0f64.ln() / 10.0).ln(), epsilon = 1e-15);
    }

    #[test]
    fn tau_bounded_by_inverse_alpha() {
        let inst = trr_generate_synthetic(40, 8, 0.4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..250 {
            let x: Vec<f64> = (0..8).map(|_| rng.gen::<f64>() * 40.0 - 20.0).collect();
            for j in 0..40 {
                let tau = inst.tau(j, &x);
                assert!(tau.abs() <= 1.0 / inst.alpha + 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inst = trr_generate_synthetic(15, 6, 0.5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let y = crate::sample::sample_simplex(15, &mut rng);
            let g = inst.grad_x(&x, &y);
            let fd = central_difference(|p| inst.phi(p, &y), &x, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn declared_constants_hold_on_samples() {
        let inst = trr_generate_synthetic(25, 10, 0.4, 8).unwrap();
        let c = inst.constants;
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..150 {
            let x: Vec<f64> = (0..10).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let xp: Vec<f64> = (0..10).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let y = crate::sample::sample_simplex(25, &mut rng);
            let yp = crate::sample::sample_simplex(25, &mut rng);
            let lhs = linalg::dist(&inst.grad_x(&x, &y), &inst.grad_x(&xp, &yp));
            let rhs = c.l_x * linalg::dist(&x, &xp) + c.l_y * linalg::dist(&y, &yp);
            assert!(lhs <= rhs + 1e-9);
        }
    }
}
