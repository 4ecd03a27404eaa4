//! Smooth approximation of the max function: p_ξ(x) = max_{y∈Y} { Φ(x,y) −
//! ‖y−y₀‖²/(2ξ) }, its gradient via the inner argmax, and the curvature
//! constants Q_ξ and L_ξ.

use crate::error::{Error, Result};
use crate::linalg;
use crate::oracle::SmoothFn;
use crate::problem::{MinMaxProblem, ProblemConstants};

/// (Q_ξ, L_ξ) from the problem constants:
/// Q_ξ = ξ·L_y + √(ξ(L_x+m)), L_ξ = L_y·Q_ξ + L_x ≤ (L_y√ξ + √L_x)².
pub fn smoothing_constants(c: &ProblemConstants, xi: f64) -> Result<(f64, f64)> {
    if xi <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "smoothing constant must be positive, got {xi}"
        )));
    }
    let q_xi = xi * c.l_y + (xi * (c.l_x + c.m)).sqrt();
    let l_xi = c.l_y * q_xi + c.l_x;
    Ok((q_xi, l_xi))
}

/// A min-max problem wrapped with a smoothing constant ξ and anchor y₀.
pub struct SmoothedObjective<'a> {
    pub problem: &'a MinMaxProblem,
    pub xi: f64,
    pub y0: Vec<f64>,
    pub q_xi: f64,
    pub l_xi: f64,
}

impl<'a> SmoothedObjective<'a> {
    /// The anchor y₀ defaults to the zero vector; the prox formula only uses
    /// it as a center, so it need not lie in Y.
    pub fn new(problem: &'a MinMaxProblem, xi: f64) -> Result<Self> {
        let y0 = vec![0.0; problem.n_y];
        Self::with_anchor(problem, xi, y0)
    }

    pub fn with_anchor(problem: &'a MinMaxProblem, xi: f64, y0: Vec<f64>) -> Result<Self> {
        if y0.len() != problem.n_y {
            return Err(Error::DimensionMismatch {
                expected: problem.n_y,
                got: y0.len(),
            });
        }
        let (q_xi, l_xi) = smoothing_constants(&problem.constants, xi)?;
        Ok(SmoothedObjective {
            problem,
            xi,
            y0,
            q_xi,
            l_xi,
        })
    }

    /// y_ξ(x): the exact maximizer of the (1/ξ)-strongly concave inner
    /// problem, delegated to the y-resolvent with λ = ξ.
    pub fn y_xi(&self, x: &[f64]) -> Vec<f64> {
        self.problem.y_resolve(self.xi, x, &self.y0)
    }

    pub fn p_xi_value(&self, x: &[f64]) -> f64 {
        let y = self.y_xi(x);
        self.p_xi_value_at(x, &y)
    }

    fn p_xi_value_at(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = linalg::dist(y, &self.y0);
        self.problem.phi_value(x, y) - d * d / (2.0 * self.xi)
    }

    /// ∇p_ξ(x) = ∇ₓΦ(x, y_ξ(x)).
    pub fn grad_p_xi(&self, x: &[f64]) -> Vec<f64> {
        let y = self.y_xi(x);
        self.problem.grad_x(x, &y)
    }

    /// v̄ = (y₀ − y_ξ(x))/ξ, the dual residual attached to x.
    pub fn dual_residual(&self, y_xi: &[f64]) -> Vec<f64> {
        linalg::sub(&self.y0, y_xi)
            .iter()
            .map(|v| v / self.xi)
            .collect()
    }

    /// Smoothed composite value p̂_ξ(x) = p_ξ(x) + h(x).
    pub fn composite_value(&self, x: &[f64]) -> f64 {
        self.p_xi_value(x) + self.problem.h_value(x)
    }
}

impl SmoothFn for SmoothedObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.p_xi_value(x)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.grad_p_xi(x)
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let y = self.y_xi(x);
        (self.p_xi_value_at(x, &y), self.problem.grad_x(x, &y))
    }
}
