//! Oracle traits for composite optimization: smooth value/gradient bundles
//! and exact proximal (resolvent) oracles, plus per-category call counters.

use crate::error::Result;
use crate::linalg;
use crate::sets::SetKind;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// A differentiable function given by value and gradient oracles.
pub trait SmoothFn: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;

    /// Value and gradient at the same point. Implementations that share work
    /// between the two (e.g. an inner argmax) should override this.
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.grad(x))
    }
}

/// A closed convex function given by a value oracle (∞ outside its domain)
/// and an exact resolvent: argmin { λ·h(x) + ½‖x − x0‖² }.
pub trait ProxFn: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn resolvent(&self, lam: f64, x0: &[f64]) -> Vec<f64>;
}

/// Smooth function built from closures.
pub struct FnSmooth<V, G>
where
    V: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub value: V,
    pub grad: G,
}

impl<V, G> SmoothFn for FnSmooth<V, G>
where
    V: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

/// The convex term h of the composite objective. All experiment families use
/// either h ≡ 0 or the indicator of a simplex/box, which keeps the resolvent
/// exact and the stationarity certificates verifiable.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum HKind {
    Zero,
    Indicator(SetKind),
}

impl HKind {
    /// Membership tolerance for indicator evaluation.
    const DOM_TOL: f64 = 1e-7;

    pub fn set_kind(&self) -> Option<SetKind> {
        match self {
            HKind::Zero => None,
            HKind::Indicator(k) => Some(*k),
        }
    }
}

impl ProxFn for HKind {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            HKind::Zero => 0.0,
            HKind::Indicator(k) => {
                if k.contains(x, Self::DOM_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn resolvent(&self, _lam: f64, x0: &[f64]) -> Vec<f64> {
        match self {
            HKind::Zero => x0.to_vec(),
            // For an indicator the resolvent is the projection, independent of λ.
            HKind::Indicator(k) => k.project(x0).expect("projection of finite point"),
        }
    }
}

/// Tallies of oracle invocations by category. An "oracle call" in reports is
/// the bundled count: the max over categories, since a bundle of O(1) calls
/// covers one invocation of each.
#[derive(Debug, Default)]
pub struct OracleCounters {
    pub phi: AtomicU64,
    pub grad_x: AtomicU64,
    pub grad_y: AtomicU64,
    pub h_value: AtomicU64,
    pub h_resolvent: AtomicU64,
    pub y_resolvent: AtomicU64,
}

impl OracleCounters {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn bundled_total(&self) -> u64 {
        [
            &self.phi,
            &self.grad_x,
            &self.h_value,
            &self.h_resolvent,
            &self.y_resolvent,
        ]
        .iter()
        .map(|c| c.load(Ordering::Relaxed))
        .max()
        .unwrap_or(0)
    }

    pub fn reset(&self) {
        for c in [
            &self.phi,
            &self.grad_x,
            &self.grad_y,
            &self.h_value,
            &self.h_resolvent,
            &self.y_resolvent,
        ] {
            c.store(0, Ordering::Relaxed);
        }
    }
}

/// Central finite-difference gradient of a scalar function, for checks.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + step;
        let fp = f(&xp);
        xp[i] = xi - step;
        let fm = f(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * step);
    }
    g
}

/// Relative disagreement ‖a − b‖ / max(1, ‖a‖, ‖b‖).
pub fn rel_vec_err(a: &[f64], b: &[f64]) -> f64 {
    let d = linalg::dist(a, b);
    d / linalg::norm(a).max(linalg::norm(b)).max(1.0)
}

/// Validate that a point is inside the domain of h up to tolerance.
pub fn check_in_dom(h: &dyn ProxFn, x: &[f64]) -> Result<()> {
    if h.value(x).is_finite() {
        Ok(())
    } else {
        Err(crate::error::Error::InvalidArgument(
            "point outside dom h".into(),
        ))
    }
}
