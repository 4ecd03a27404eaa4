//! Convex-set primitives: Euclidean projections onto the probability simplex
//! and boxes, membership tests, and normal-cone distances used by the
//! stationarity verifier.

use crate::error::{Error, Result};

/// Feasible-set kinds for which projections and normal cones are available.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SetKind {
    /// Probability simplex { z ≥ 0 : Σ z_i = 1 }.
    Simplex,
    /// Componentwise box [lo, hi]^n.
    Box { lo: f64, hi: f64 },
}

impl SetKind {
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        match *self {
            SetKind::Simplex => project_simplex(v),
            SetKind::Box { lo, hi } => project_box(v, lo, hi),
        }
    }

    /// Distance-like membership defect: 0 when x lies in the set.
    pub fn membership_defect(&self, x: &[f64]) -> f64 {
        match *self {
            SetKind::Simplex => {
                let sum: f64 = x.iter().sum();
                let neg: f64 = x.iter().map(|v| (-v).max(0.0)).sum();
                (sum - 1.0).abs() + neg
            }
            SetKind::Box { lo, hi } => x
                .iter()
                .map(|&v| (lo - v).max(0.0) + (v - hi).max(0.0))
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.membership_defect(x) <= tol
    }

    pub fn diameter(&self, dim: usize) -> f64 {
        match *self {
            SetKind::Simplex => std::f64::consts::SQRT_2,
            SetKind::Box { lo, hi } => (hi - lo) * (dim as f64).sqrt(),
        }
    }
}

/// Euclidean projection onto the probability simplex, by sort-based
/// thresholding. Ties are resolved by the largest valid threshold index,
/// which makes the output deterministic for identical inputs.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite entry".into()));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cssv = 0.0;
    let mut rho = 0usize;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cssv += ui;
        let t = (cssv - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            rho = i + 1;
            theta = t;
        }
    }
    debug_assert!(rho >= 1);
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Componentwise clamp into [lo, hi].
pub fn project_box(v: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    if lo > hi {
        return Err(Error::BadInterval { lo, hi });
    }
    Ok(v.iter().map(|&x| x.clamp(lo, hi)).collect())
}

/// min_{w ∈ N_C(x)} ‖g + w‖ for C the given set kind, i.e. the distance from
/// 0 to g + N_C(x). Zero exactly when −g lies in the normal cone at x.
///
/// Requires x ∈ C within tolerance 1e−9.
pub fn normal_cone_distance(kind: SetKind, x: &[f64], g: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyVector);
    }
    if x.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: g.len(),
        });
    }
    let defect = kind.membership_defect(x);
    if defect > 1e-9 {
        return Err(Error::OutsideSet { dist: defect });
    }
    match kind {
        SetKind::Box { lo, hi } => {
            let mut sq = 0.0;
            for (&xi, &gi) in x.iter().zip(g) {
                let at_lo = (xi - lo).abs() <= 1e-9;
                let at_hi = (hi - xi).abs() <= 1e-9;
                let r = if at_lo && at_hi {
                    0.0 // degenerate interval: normal cone is the whole line
                } else if at_lo {
                    // w ≤ 0 available
                    (-gi).max(0.0)
                } else if at_hi {
                    gi.max(0.0)
                } else {
                    gi.abs()
                };
                sq += r * r;
            }
            Ok(sq.sqrt())
        }
        SetKind::Simplex => {
            // N(x) = { w : w_i = t on the support, w_i ≤ t off it }.
            // Minimize f(t) = Σ_{i∈S}(g_i+t)² + Σ_{i∉S} min(g_i+t, 0)².
            // f'(t) = |S|·t + Σ_S g_i + Σ_{i∉S} min(g_i+t, 0) is continuous and
            // strictly increasing (slope ≥ |S| ≥ 1), so bisect its unique root.
            let support: Vec<bool> = x.iter().map(|&xi| xi > 1e-9).collect();
            let s_count = support.iter().filter(|&&s| s).count();
            debug_assert!(s_count >= 1);
            let fprime = |t: f64| -> f64 {
                let mut d = 0.0;
                for (&gi, &s) in g.iter().zip(&support) {
                    d += if s { gi + t } else { (gi + t).min(0.0) };
                }
                d
            };
            let t0 = 0.0;
            let f0 = fprime(t0);
            // Root lies within |f0| / |S| ≤ |f0| of t0.
            let mut lo = t0 - f0.abs() - 1.0;
            let mut hi = t0 + f0.abs() + 1.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if fprime(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            let mut sq = 0.0;
            for (&gi, &s) in g.iter().zip(&support) {
                let r = if s { gi + t } else { (gi + t).min(0.0) };
                sq += r * r;
            }
            Ok(sq.sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_projection_known_points() {
        assert_eq!(project_simplex(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(project_simplex(&[]), Err(Error::EmptyVector)));
    }

    #[test]
    fn simplex_projection_matches_grid_kkt_oracle() {
        // Independent oracle: barycentric grid refinement over Δ³ plus a KKT
        // residual check on the candidate.
        let v = [1.0, 0.5, 0.1];
        let w = project_simplex(&v).unwrap();

        let mut best = (f64::INFINITY, [0.0f64; 3]);
        let mut lo = [0.0f64; 2];
        let mut hi = [1.0f64; 2];
        for _round in 0..6 {
            let steps = 60;
            let mut local = (f64::INFINITY, [0.0f64; 3]);
            for i in 0..=steps {
                for j in 0..=steps {
                    let a = lo[0] + (hi[0] - lo[0]) * i as f64 / steps as f64;
                    let b = lo[1] + (hi[1] - lo[1]) * j as f64 / steps as f64;
                    if a + b > 1.0 {
                        continue;
                    }
                    let z = [a, b, 1.0 - a - b];
                    let d: f64 = z.iter().zip(&v).map(|(x, y)| (x - y) * (x - y)).sum();
                    if d < local.0 {
                        local = (d, z);
                    }
                }
            }
            best = local;
            let w0 = best.1;
            let span0 = (hi[0] - lo[0]) / steps as f64 * 3.0;
            let span1 = (hi[1] - lo[1]) / steps as f64 * 3.0;
            lo = [(w0[0] - span0).max(0.0), (w0[1] - span1).max(0.0)];
            hi = [(w0[0] + span0).min(1.0), (w0[1] + span1).min(1.0)];
        }
        for k in 0..3 {
            assert_abs_diff_eq!(w[k], best.1[k], epsilon = 1e-4);
        }
        // Frozen value from the oracle (threshold θ = 0.25).
        assert_abs_diff_eq!(w[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 0.0, epsilon = 1e-12);
        // KKT: w_i = max(v_i − θ, 0) with Σw = 1.
        let sum: f64 = w.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn box_projection_cases() {
        assert_eq!(
            project_box(&[-1.0, 0.5, 9.0], 0.0, 2.0).unwrap(),
            vec![0.0, 0.5, 2.0]
        );
        let inside = vec![0.3, 1.2];
        assert_eq!(project_box(&inside, 0.0, 2.0).unwrap(), inside);
        assert!(matches!(
            project_box(&[1.0], 2.0, 1.0),
            Err(Error::BadInterval { .. })
        ));
        // R = K^{1/K} with K = 5
        let r = 5.0f64.powf(0.2);
        let w = project_box(&[3.0], 0.0, r).unwrap();
        assert_abs_diff_eq!(w[0], 1.37972966146121, epsilon = 1e-10);
    }

    #[test]
    fn projections_idempotent_and_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for kind in [SetKind::Simplex, SetKind::Box { lo: -1.0, hi: 2.0 }] {
            for _ in 0..50 {
                let v: Vec<f64> = (0..7).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect();
                let p = kind.project(&v).unwrap();
                let pp = kind.project(&p).unwrap();
                for (a, b) in p.iter().zip(&pp) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-12);
                }
                // Variational inequality ⟨v − Pv, z − Pv⟩ ≤ 0 for z in the set.
                for _ in 0..20 {
                    let z = crate::sample::sample_point(kind, 7, &mut rng);
                    let ip: f64 = v
                        .iter()
                        .zip(&p)
                        .zip(&z)
                        .map(|((vi, pi), zi)| (vi - pi) * (zi - pi))
                        .sum();
                    assert!(ip <= 1e-9, "VI violated: {ip}");
                }
            }
        }
    }

    #[test]
    fn normal_cone_distance_box_cases() {
        let kind = SetKind::Box { lo: 0.0, hi: 1.0 };
        // interior
        let d = normal_cone_distance(kind, &[0.5], &[0.3]).unwrap();
        assert_abs_diff_eq!(d, 0.3, epsilon = 1e-12);
        // at the lower face, gradient pushes inward
        let d = normal_cone_distance(kind, &[0.0], &[0.5]).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        // outside errors
        assert!(matches!(
            normal_cone_distance(kind, &[2.0], &[0.0]),
            Err(Error::OutsideSet { .. })
        ));
    }

    #[test]
    fn normal_cone_distance_simplex_matches_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            // point on a face of Δ³ (one coordinate zero)
            let a: f64 = rng.gen();
            let x = [a, 1.0 - a, 0.0];
            let g: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let d = normal_cone_distance(SetKind::Simplex, &x, &g).unwrap();

            // Brute force over the parameterized cone: grid on t, per-coordinate
            // exact minimization over the slack of inactive coordinates.
            let mut best = f64::INFINITY;
            let gmax = g.iter().cloned().fold(f64::MIN, f64::max);
            let gmin = g.iter().cloned().fold(f64::MAX, f64::min);
            let (mut tlo, mut thi) = (-gmax - 2.0, -gmin + 2.0);
            for _round in 0..4 {
                let steps = 4000;
                let mut arg = tlo;
                for i in 0..=steps {
                    let t = tlo + (thi - tlo) * i as f64 / steps as f64;
                    let mut sq = 0.0;
                    for k in 0..3 {
                        let r = if x[k] > 1e-9 {
                            g[k] + t
                        } else {
                            (g[k] + t).min(0.0)
                        };
                        sq += r * r;
                    }
                    let val = sq.sqrt();
                    if val < best {
                        best = val;
                        arg = t;
                    }
                }
                let w = (thi - tlo) / steps as f64 * 4.0;
                tlo = arg - w;
                thi = arg + w;
            }
            assert_abs_diff_eq!(d, best, epsilon = 1e-6);
        }
    }

    #[test]
    fn normal_cone_distance_zero_when_gradient_opposes_cone_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // Box: construct w in the cone, check g = −w has zero residual.
        let kind = SetKind::Box { lo: 0.0, hi: 1.0 };
        for _ in 0..50 {
            let x = [0.0, rng.gen::<f64>(), 1.0];
            let w = [
                -rng.gen::<f64>(), // at lo: w ≤ 0
                0.0,
                rng.gen::<f64>(), // at hi: w ≥ 0
            ];
            let g: Vec<f64> = w.iter().map(|wi| -wi).collect();
            let d = normal_cone_distance(kind, &x, &g).unwrap();
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        }
        // Simplex: w_i = t on support, w_i = t − s_i off support.
        for _ in 0..50 {
            let a: f64 = rng.gen();
            let x = [a, 1.0 - a, 0.0];
            let t = rng.gen::<f64>() * 2.0 - 1.0;
            let w = [t, t, t - rng.gen::<f64>()];
            let g: Vec<f64> = w.iter().map(|wi| -wi).collect();
            let d = normal_cone_distance(SetKind::Simplex, &x, &g).unwrap();
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-9);
        }
    }
}
