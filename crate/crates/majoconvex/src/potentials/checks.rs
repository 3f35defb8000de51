//! Convexity-by-composition checks: the symmetric convex nondecreasing
//! route to convexity of w, and the seven-variable polyconvexity
//! hypothesis test for n = 3.

use serde_json::json;

use crate::error::{Error, Result};
use crate::sampling::SamplingPlan;
use crate::verdict::{MarginTracker, Verdict};

use super::PotentialSpec;

/// Checks the hypotheses "g symmetric, convex, nondecreasing in each
/// variable" on samples and, when they hold, verifies the conclusion that
/// w(F) = g(sigma(F)) is midpoint-convex along seeded segments in the full
/// matrix space. Hypothesis failure is inconclusive (the route does not
/// apply), not a refutation.
pub fn symmetric_convex_monotone_check(
    spec: &PotentialSpec,
    plan: &SamplingPlan,
) -> Result<Verdict> {
    if !plan.is_positive_box() {
        return Err(Error::precondition("needs a positive sampling box"));
    }
    let n = plan.dim();
    let mut stream = plan.stream().fork("symmetric-convex-monotone");
    let tol = spec.margin_tol();

    // Hypotheses: midpoint convexity and coordinatewise monotonicity of g.
    for _ in 0..plan.sample_count {
        let u = plan.sample(&mut stream);
        let v = plan.sample(&mut stream);
        let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
        let gu = spec.g(&u)?;
        let gv = spec.g(&v)?;
        let gm = spec.g(&mid)?;
        let scale = 1.0 + gu.abs() + gv.abs();
        if (0.5 * (gu + gv) - gm) / scale < -tol {
            return Ok(Verdict::inconclusive(
                0,
                format!("hypothesis failed: g is not midpoint-convex near {u:?}"),
            ));
        }
        let i = stream.index(n);
        let delta = 0.25 * (plan.intervals[i].1 - plan.intervals[i].0).max(1e-3);
        let mut up = u.clone();
        up[i] += delta;
        if (spec.g(&up)? - gu) / scale < -tol {
            return Ok(Verdict::inconclusive(
                0,
                format!("hypothesis failed: g is decreasing in coordinate {i}"),
            ));
        }
    }

    // Conclusion: w midpoint-convex along matrix segments in the full
    // matrix space (orientation-free composition; the result covers all
    // of gl(n), not just the positive-determinant component).
    let mut tracker = MarginTracker::new();
    for _ in 0..plan.sample_count {
        let f1 = stream.matrix_gaussian(n);
        let f2 = stream.matrix_gaussian(n);
        let mid = (&f1 + &f2) * 0.5;
        let w1 = spec.eval_on_gl(&f1)?;
        let w2 = spec.eval_on_gl(&f2)?;
        let wm = spec.eval_on_gl(&mid)?;
        let scale = 1.0 + w1.abs() + w2.abs();
        let margin = (0.5 * (w1 + w2) - wm) / scale;
        tracker.record(margin, tol, || {
            json!({
                "f1": matrix_rows(&f1),
                "f2": matrix_rows(&f2),
                "w_mid": wm,
            })
        });
    }
    Ok(tracker.finish())
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// For n = 3 only: sampled check that a seven-variable function phi is
/// nondecreasing in its first six arguments and invariant under the pair
/// of coordinate permutations acting on (v1, v2, v3) and (v4, v5, v6).
/// When both hold, the induced potential
/// w(F) = phi(s1, s2, s3, s1 s2, s1 s3, s2 s3, det F) is polyconvex and
/// the verdict says so in its detail.
pub fn ball_polyconvexity_hypothesis_check(
    phi: &dyn Fn(&[f64]) -> Result<f64>,
    plan: &SamplingPlan,
) -> Result<Verdict> {
    if plan.dim() != 7 {
        return Err(Error::invalid("phi takes exactly seven arguments"));
    }
    if !plan.is_positive_box() {
        return Err(Error::precondition("needs a positive sampling box"));
    }
    let mut stream = plan.stream().fork("ball-polyconvexity");
    let mut tracker = MarginTracker::new();
    let tol = 1e-9;

    const PERMS3: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];

    for _ in 0..plan.sample_count {
        let v = plan.sample(&mut stream);
        let base = phi(&v)?;
        let scale = 1.0 + base.abs();

        // (i) monotonicity in the first six variables
        for k in 0..6 {
            let delta = 0.25 * (plan.intervals[k].1 - plan.intervals[k].0).max(1e-3);
            let mut vp = v.clone();
            vp[k] += delta;
            let margin = (phi(&vp)? - base) / scale;
            tracker.record(margin, 1e-6, || {
                json!({"kind": "monotonicity", "direction": k + 1, "v": v})
            });
        }

        // (ii) the two independent three-coordinate symmetries
        for sigma in &PERMS3 {
            for tau in &PERMS3 {
                let perm: Vec<f64> = vec![
                    v[sigma[0]],
                    v[sigma[1]],
                    v[sigma[2]],
                    v[3 + tau[0]],
                    v[3 + tau[1]],
                    v[3 + tau[2]],
                    v[6],
                ];
                let margin = tol * scale - (phi(&perm)? - base).abs();
                tracker.record(margin / scale, 0.0, || {
                    json!({"kind": "symmetry", "sigma": sigma, "tau": tau, "v": v})
                });
            }
        }
    }
    let verdict = tracker.finish();
    if verdict.is_verified() {
        Ok(verdict.with_detail(
            "induced w(F) = phi(s1, s2, s3, s1 s2, s1 s3, s2 s3, det F) is polyconvex",
        ))
    } else {
        Ok(verdict)
    }
}
