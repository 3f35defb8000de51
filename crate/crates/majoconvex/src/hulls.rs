//! Isotropic matrix sets with prescribed singular values and their common
//! polyconvex / rank-one convex hull.
//!
//! For a positive vector a (kept descending here), E(a) collects the
//! positive-determinant matrices whose singular values are a rearrangement
//! of a; the hull K(a) is cut out by the top-k singular-value product
//! inequalities together with determinant equality:
//!
//!   prod_{i<=k} sigma_i(F) <= prod_{i<=k} a_i   (k = 1..n-1),
//!   det F = prod_i a_i.
//!
//! Under determinant equality these leading-index products are equivalent
//! to the trailing-index products over an ascending arrangement (divide
//! the full product by the complementary one), and both say exactly that
//! log sigma(F) is majorized by log a — membership is the Thompson order
//! against Diag(a), which `in_hull` cross-checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::majorization::{apply_t_transform, TTransformStep};
use crate::matrix_orders::{spectral_data, thompson_leq};
use crate::sampling::SamplingPlan;
use crate::verdict::{MarginTracker, Verdict};

/// The defining vector of E(a) and K(a), normalized to descending order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HullSpec {
    /// Positive, sorted descending.
    pub a: Vec<f64>,
    /// prod a_i, cached.
    pub product: f64,
}

/// Relative tolerance for the product and determinant comparisons.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

impl HullSpec {
    /// Accepts the defining values in any order and stores them descending.
    pub fn new(mut a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("hull spec needs at least one value"));
        }
        if a.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("hull spec values must be positive and finite"));
        }
        a.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let product = a.iter().product();
        Ok(HullSpec { a, product })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.a.clone()))
    }
}

/// Membership answer with the per-k product margins (log scale, positive
/// means inside) and the determinant mismatch, plus the Thompson-order
/// cross-check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HullMembership {
    pub inside: bool,
    /// log(prod_k a) - log(prod_k sigma) for k = 1..n-1.
    pub product_margins: Vec<f64>,
    /// Relative determinant mismatch det F / prod a - 1.
    pub det_mismatch: f64,
    /// Thompson-order route answer; must agree with `inside`.
    pub thompson_agrees: bool,
}

/// Whether sigma(F) is a rearrangement of a and det F matches prod a,
/// within relative tolerance.
pub fn in_extremal_set(f: &DMatrix<f64>, spec: &HullSpec, tol: f64) -> Result<bool> {
    let sd = spectral_data(f)?;
    if sd.determinant <= 0.0 {
        return Err(Error::precondition("det F must be positive"));
    }
    if sd.singular_values.len() != spec.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let sigma_match = sd
        .singular_values
        .iter()
        .zip(&spec.a)
        .all(|(s, a)| (s - a).abs() <= tol * a);
    let det_match = (sd.determinant - spec.product).abs() <= tol * spec.product;
    Ok(sigma_match && det_match)
}

/// Top-k product membership in K(a), cross-checked against the Thompson
/// order route.
pub fn in_hull(f: &DMatrix<f64>, spec: &HullSpec, tol: f64) -> Result<HullMembership> {
    let sd = spectral_data(f)?;
    if sd.determinant <= 0.0 {
        return Err(Error::precondition("det F must be positive"));
    }
    let n = spec.dim();
    if sd.singular_values.len() != n {
        return Err(Error::invalid("dimension mismatch"));
    }
    let mut product_margins = Vec::with_capacity(n.saturating_sub(1));
    let mut log_sigma = 0.0;
    let mut log_a = 0.0;
    let mut inside = true;
    for k in 0..(n - 1) {
        log_sigma += sd.singular_values[k].ln();
        log_a += spec.a[k].ln();
        let margin = log_a - log_sigma;
        if margin < -tol {
            inside = false;
        }
        product_margins.push(margin);
    }
    let det_mismatch = sd.determinant / spec.product - 1.0;
    if det_mismatch.abs() > tol {
        inside = false;
    }

    let thompson = thompson_leq(f, &spec.diag(), tol)?;
    Ok(HullMembership {
        inside,
        product_margins,
        det_mismatch,
        thompson_agrees: thompson == inside,
    })
}

/// Draws matrices from K(a): random T-transform chains applied to log a
/// give log singular values majorized by log a, wrapped in seeded
/// rotations. Every output is asserted to pass membership.
pub fn sample_hull(spec: &HullSpec, plan: &SamplingPlan) -> Result<Vec<DMatrix<f64>>> {
    let n = spec.dim();
    let mut stream = plan.stream().fork("hull-sampler");
    let log_a: Vec<f64> = spec.a.iter().map(|v| v.ln()).collect();
    let mut out = Vec::with_capacity(plan.sample_count);
    for _ in 0..plan.sample_count {
        let mut v = log_a.clone();
        if n >= 2 {
            let chain_len = stream.index(2 * n + 1);
            for _ in 0..chain_len {
                let (i, j) = stream.index_pair(n);
                let t = stream.uniform();
                v = apply_t_transform(&v, &TTransformStep { i, j, t })?;
            }
        }
        let sigma: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let r = stream.rotation(n);
        let q = stream.rotation(n);
        let f = &r * DMatrix::from_diagonal(&DVector::from_vec(sigma)) * &q;
        let membership = in_hull(&f, spec, MEMBERSHIP_TOL)?;
        if !membership.inside {
            return Err(Error::numerical(
                "hull sampler produced a matrix outside K(a)",
            ));
        }
        out.push(f);
    }
    Ok(out)
}

/// Closure of K(a) along rank-one segments: for hull samples A and
/// determinant-preserving rank-one directions u v^T (v orthogonal to
/// A^{-1} u, so the determinant is constant along the line), membership
/// along the segment is an interval; the check bisects its endpoints,
/// pulls them slightly inside, and verifies interior points stay in K(a).
pub fn rank_one_segment_closure_check(spec: &HullSpec, plan: &SamplingPlan) -> Result<Verdict> {
    let n = spec.dim();
    if n < 2 {
        return Err(Error::invalid("segments need dimension at least 2"));
    }
    let mut stream = plan.stream().fork("segment-closure");
    let sample_plan = SamplingPlan::new(plan.seed ^ 0x5e67, plan.sample_count, plan.intervals.clone())?;
    let anchors = sample_hull(spec, &sample_plan)?;
    let mut tracker = MarginTracker::new();
    let mut skipped = 0u64;

    for a_mat in &anchors {
        let u = DVector::from_vec(stream.vector_gaussian(n)).normalize();
        let w = DVector::from_vec(stream.vector_gaussian(n));
        // Determinant-preserving direction: v orthogonal to A^{-1} u.
        let a_inv_u = match a_mat.clone().lu().solve(&u) {
            Some(s) => s,
            None => {
                skipped += 1;
                continue;
            }
        };
        let v = &w - &a_inv_u * (w.dot(&a_inv_u) / a_inv_u.norm_squared());
        if v.norm() < 1e-8 {
            skipped += 1;
            continue;
        }
        let v = v.normalize();
        let direction = &u * v.transpose();

        let inside_at = |t: f64| -> Result<bool> {
            let m = a_mat + t * &direction;
            Ok(in_hull(&m, spec, MEMBERSHIP_TOL)?.inside)
        };

        // Expand to an outside point, then bisect the boundary on each side.
        let mut boundary = [0.0f64; 2];
        let mut found_segment = true;
        for (side, sign) in [(0usize, 1.0f64), (1usize, -1.0f64)] {
            let mut hi = 1.0;
            let mut iterations = 0;
            while inside_at(sign * hi)? {
                hi *= 2.0;
                iterations += 1;
                if iterations > 60 {
                    found_segment = false;
                    break;
                }
            }
            if !found_segment {
                break;
            }
            let mut lo = 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside_at(sign * mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            boundary[side] = sign * lo;
        }
        if !found_segment || boundary[0] - boundary[1] < 1e-9 {
            skipped += 1;
            continue;
        }
        // Pull the endpoints slightly inside and sweep the interior.
        let t_plus = boundary[0] * (1.0 - 1e-3);
        let t_minus = boundary[1] * (1.0 - 1e-3);
        for step in 0..=8 {
            let t = t_minus + (t_plus - t_minus) * step as f64 / 8.0;
            let m = a_mat + t * &direction;
            let membership = in_hull(&m, spec, MEMBERSHIP_TOL)?;
            let margin = membership
                .product_margins
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
                .min(MEMBERSHIP_TOL - membership.det_mismatch.abs());
            tracker.record(margin, MEMBERSHIP_TOL, || {
                json!({
                    "t": t,
                    "interval": [t_minus, t_plus],
                    "margins": membership.product_margins,
                })
            });
        }
    }
    let mut verdict = tracker.finish();
    if skipped > 0 {
        verdict = verdict.with_detail(format!("{skipped} segment samples skipped"));
    }
    Ok(verdict)
}
