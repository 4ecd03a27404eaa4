//! Solvers for nonconvex-concave composite min-max problems
//! min_x { max_{y∈Y} Φ(x,y) + h(x) }, optionally subject to linear equality
//! constraints.
//!
//! The max term is replaced by a prox-regularized smooth approximation p_ξ;
//! the resulting smooth composite problem is solved by an accelerated
//! inexact proximal point loop (fixed-step or adaptive), or a quadratic
//! penalty wrapper in the constrained case. Outputs carry stationarity
//! certificates with measured residual norms that the [`verify`] module can
//! re-check independently.

pub mod acg;
pub mod aipp;
pub mod aipp_s;
pub mod certificate;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod problems;
pub mod qp_aipp;
pub mod raipp;
pub mod sample;
pub mod sets;
pub mod smoothing;
pub mod verify;

pub use certificate::{DirectionalCertificate, SolveReport, StationaryCertificate, Termination};
pub use error::{Error, Result};
pub use problem::{MinMaxProblem, ProblemConstants};
