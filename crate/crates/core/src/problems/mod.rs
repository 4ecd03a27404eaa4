//! Seeded generators and exact oracles for the three benchmark families:
//! quadratic vector min-max (QVM), truncated robust regression (TRR), and
//! power control with a jammer (PC).

pub mod container;
pub mod pc;
pub mod qvm;
pub mod trr;

pub use pc::PcInstance;
pub use qvm::QvmInstance;
pub use trr::TrrInstance;

use crate::problem::{MinMaxProblem, ProblemConstants};
use std::sync::Arc;

/// A generated or loaded benchmark instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Qvm(QvmInstance),
    Trr(TrrInstance),
    Pc(PcInstance),
}

impl Instance {
    pub fn family_tag(&self) -> &'static str {
        match self {
            Instance::Qvm(_) => "qvm",
            Instance::Trr(_) => "trr",
            Instance::Pc(_) => "pc",
        }
    }

    /// (dim x, dim y)
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Instance::Qvm(q) => (q.n, q.k),
            Instance::Trr(t) => (t.k, t.n_points()),
            Instance::Pc(p) => (p.k_dim * p.n_dim, p.n_dim),
        }
    }

    pub fn dims_label(&self) -> String {
        match self {
            Instance::Qvm(q) => format!("n={};l={};k={}", q.n, q.l, q.k),
            Instance::Trr(t) => format!("points={};features={}", t.n_points(), t.k),
            Instance::Pc(p) => format!("N={};K={}", p.n_dim, p.k_dim),
        }
    }

    pub fn constants(&self) -> ProblemConstants {
        match self {
            Instance::Qvm(q) => q.constants,
            Instance::Trr(t) => t.constants,
            Instance::Pc(p) => p.constants,
        }
    }

    /// Benchmark initial point: the uniform simplex vertexless center for
    /// QVM, the origin for TRR and PC.
    pub fn default_x0(&self) -> Vec<f64> {
        match self {
            Instance::Qvm(q) => vec![1.0 / q.n as f64; q.n],
            Instance::Trr(t) => vec![0.0; t.k],
            Instance::Pc(p) => vec![0.0; p.k_dim * p.n_dim],
        }
    }

    /// Exact max function p(x) = max_{y∈Y} Φ(x,y) by a brute-force route
    /// independent of the y-resolvent.
    pub fn exact_p(&self, x: &[f64]) -> f64 {
        match self {
            Instance::Qvm(q) => q.exact_p(x),
            Instance::Trr(t) => t.exact_p(x),
            Instance::Pc(p) => p.exact_p(x),
        }
    }

    /// Oracle bundle backed by this instance.
    pub fn problem(self: &Arc<Self>) -> MinMaxProblem {
        match &**self {
            Instance::Qvm(_) => qvm::build_problem(self.clone()),
            Instance::Trr(_) => trr::build_problem(self.clone()),
            Instance::Pc(_) => pc::build_problem(self.clone()),
        }
    }
}
