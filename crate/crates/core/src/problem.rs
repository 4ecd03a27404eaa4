//! The min-max problem oracle bundle: Φ evaluations, the h- and y-resolvents,
//! and the curvature/Lipschitz constants attached to an instance.

use crate::error::{Error, Result};
use crate::oracle::{HKind, OracleCounters};
use crate::sets::SetKind;
use std::sync::atomic::Ordering;
use std::sync::Arc;

pub type PointFn = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type GradFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type YResolventFn = Box<dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Curvature and Lipschitz data: weak-convexity modulus m, the gradient
/// Lipschitz pair (L_x, L_y), and the diameter D_y of Y.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProblemConstants {
    pub m: f64,
    pub l_x: f64,
    pub l_y: f64,
    pub d_y: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.l_x > 0.0 && self.l_y >= 0.0 && self.d_y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "constants must be positive: {self:?}"
            )));
        }
        if self.m > self.l_x * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "weak-convexity modulus m = {} exceeds L_x = {}",
                self.m, self.l_x
            )));
        }
        Ok(())
    }
}

/// Oracle bundle for min_{x} { max_{y ∈ Y} Φ(x,y) + h(x) }.
///
/// `y_resolvent(λ, x0, y0)` solves argmax_{y∈Y} { λΦ(x0,y) − ½‖y−y0‖² }
/// exactly; `h` provides values and the exact resolvent of the convex term.
pub struct MinMaxProblem {
    pub phi: PointFn,
    pub grad_x_phi: GradFn,
    /// ∇_y Φ, available on every generated family; used by the Nash-residual
    /// verifier, not by the solvers.
    pub grad_y_phi: Option<GradFn>,
    pub y_resolvent: YResolventFn,
    pub h: HKind,
    pub y_set: SetKind,
    pub constants: ProblemConstants,
    pub n_x: usize,
    pub n_y: usize,
    pub counters: Arc<OracleCounters>,
}

impl MinMaxProblem {
    pub fn phi_value(&self, x: &[f64], y: &[f64]) -> f64 {
        OracleCounters::bump(&self.counters.phi);
        (self.phi)(x, y)
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        OracleCounters::bump(&self.counters.grad_x);
        (self.grad_x_phi)(x, y)
    }

    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let g = self
            .grad_y_phi
            .as_ref()
            .ok_or(Error::Unsupported("∇_y Φ oracle not provided"))?;
        OracleCounters::bump(&self.counters.grad_y);
        Ok(g(x, y))
    }

    pub fn y_resolve(&self, lam: f64, x0: &[f64], y0: &[f64]) -> Vec<f64> {
        OracleCounters::bump(&self.counters.y_resolvent);
        let y = (self.y_resolvent)(lam, x0, y0);
        debug_assert!(
            self.y_set.contains(&y, 1e-7),
            "y-resolvent output left Y (defect {:.2e})",
            self.y_set.membership_defect(&y)
        );
        y
    }

    pub fn h_value(&self, x: &[f64]) -> f64 {
        OracleCounters::bump(&self.counters.h_value);
        crate::oracle::ProxFn::value(&self.h, x)
    }

    pub fn h_resolve(&self, lam: f64, x0: &[f64]) -> Vec<f64> {
        OracleCounters::bump(&self.counters.h_resolvent);
        crate::oracle::ProxFn::resolvent(&self.h, lam, x0)
    }

    pub fn oracle_calls_bundled(&self) -> u64 {
        self.counters.bundled_total()
    }

    pub fn reset_counters(&self) {
        self.counters.reset();
    }

    pub fn acg_iterations_hint(&self) -> u64 {
        self.counters.grad_x.load(Ordering::Relaxed)
    }
}
