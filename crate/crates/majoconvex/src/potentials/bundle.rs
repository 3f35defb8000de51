//! Coefficient matrices of the rank-one convexity test and the
//! finite-difference ellipticity oracle they are checked against.
//!
//! At a positive point y with gradient g_i and Hessian g_ij:
//!
//!   G_ij  = (y_i g_i - y_j g_j) / (y_i^2 - y_j^2)          (zero diagonal)
//!   Hb_ij = (y_j g_i - y_i g_j) / (y_i^2 - y_j^2)          (zero diagonal)
//!   H     = Hb + D^2 g
//!
//! The rank-one second variation of w = g(sigma(.)) at Diag(y) along a
//! rank-one direction a b^T equals
//!
//!   sum_ij H_ij a_i b_i a_j b_j + sum_ij G_ij a_i^2 b_j^2,
//!
//! and w is rank-one convex iff G_ij >= 0 everywhere (equivalently the
//! Baker–Ericksen quotients are nonnegative, equivalently h is Schur
//! convex) together with
//!
//!   sum_ij H_ij x_i x_j + sum_ij G_ij |x_i||x_j| >= 0   for all x.
//!
//! Near coinciding coordinates the quotients lose half their digits, so
//! within a relative gap of 1e-5 the continuity prolongations
//! G_ij -> (g_i + s(g_ii - g_ij))/(2s) and
//! Hb_ij -> (s(g_ii - g_ij) - g_i)/(2s), taken at the symmetrized point,
//! replace the direct formulas.
//!
//! Two side quantities tie the h- and l-level derivative routes to the
//! g-level ones and are exercised as consistency identities:
//!
//!   Gamma_ij = (h_i(x) - h_j(x)) / (exp x_i - exp x_j)  at x = log y,
//!              which satisfies Gamma_ij = G_ij (y_i + y_j) exactly;
//!   Xi_ij    = 2 (l_i(x) - l_j(x)) / (x_i - x_j)        at x = y ∘ y,
//!              which satisfies Xi_ij sqrt(x_i x_j) = Hb_ij(sqrt x),
//!   Xi_ii    = 2 l_ii(x) + l_i(x)/x_i.

use nalgebra::DMatrix;
use serde_json::json;

use crate::error::{ensure_finite, Error, Result};
use crate::numdiff;
use crate::sampling::SamplingPlan;
use crate::verdict::{MarginTracker, Verdict, Witness};

use super::PotentialSpec;

/// Relative gap below which two coordinates count as coinciding and the
/// prolongation formulas take over.
pub const EQUAL_ARGUMENT_DELTA: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct CoefficientBundle {
    pub point: Vec<f64>,
    /// G, symmetric with zero diagonal.
    pub g_matrix: DMatrix<f64>,
    /// H-bar, symmetric with zero diagonal.
    pub h_bar: DMatrix<f64>,
    /// Hessian of g at the point.
    pub hess_g: DMatrix<f64>,
    /// H = H-bar + Hessian.
    pub h_matrix: DMatrix<f64>,
    /// Xi evaluated at x = y ∘ y.
    pub xi: DMatrix<f64>,
    /// Gamma evaluated at x = log y.
    pub gamma: DMatrix<f64>,
}

fn pair_is_close(yi: f64, yj: f64) -> bool {
    (yi - yj).abs() <= EQUAL_ARGUMENT_DELTA * yi.abs().max(yj.abs())
}

/// G and H-bar entries for the pair (i, j): either the direct quotients or
/// the equal-argument prolongation at the symmetrized point.
fn pair_g_hbar(spec: &PotentialSpec, y: &[f64], grad: &[f64], i: usize, j: usize) -> Result<(f64, f64)> {
    if !pair_is_close(y[i], y[j]) {
        let denom = y[i] * y[i] - y[j] * y[j];
        let g = (y[i] * grad[i] - y[j] * grad[j]) / denom;
        let hb = (y[j] * grad[i] - y[i] * grad[j]) / denom;
        return Ok((g, hb));
    }
    if !spec.kind.smooth_at_ties() {
        return Err(Error::numerical(format!(
            "{} is not twice differentiable at coinciding arguments (|y_{i} - y_{j}| below the prolongation threshold)",
            spec.name()
        )));
    }
    let s = 0.5 * (y[i] + y[j]);
    let mut sym = y.to_vec();
    sym[i] = s;
    sym[j] = s;
    let grad_s = spec.g_grad(&sym)?;
    let hess_s = spec.g_hess(&sym)?;
    let gi = grad_s[i];
    let gii = hess_s[(i, i)];
    let gij = hess_s[(i, j)];
    let g = (gi + s * (gii - gij)) / (2.0 * s);
    let hb = (s * (gii - gij) - gi) / (2.0 * s);
    Ok((g, hb))
}

/// Assembles the full coefficient bundle at a positive point.
pub fn coefficients(spec: &PotentialSpec, y: &[f64]) -> Result<CoefficientBundle> {
    ensure_finite(y)?;
    if y.iter().any(|&v| v <= 0.0) {
        return Err(Error::domain("coefficients need a positive point"));
    }
    let n = y.len();
    let grad = spec.g_grad(y)?;
    let hess_g = spec.g_hess(y)?;

    let mut g_matrix = DMatrix::zeros(n, n);
    let mut h_bar = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (g, hb) = pair_g_hbar(spec, y, &grad, i, j)?;
            g_matrix[(i, j)] = g;
            g_matrix[(j, i)] = g;
            h_bar[(i, j)] = hb;
            h_bar[(j, i)] = hb;
        }
    }
    let h_matrix = &h_bar + &hess_g;

    // Gamma from the h-derivative route at x = log y.
    let x_log: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let h_grad = spec.h_grad(&x_log)?;
    let mut gamma = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if pair_is_close(y[i], y[j]) {
                g_matrix[(i, j)] * (y[i] + y[j])
            } else {
                (h_grad[i] - h_grad[j]) / (y[i] - y[j])
            };
            gamma[(i, j)] = v;
            gamma[(j, i)] = v;
        }
    }

    // Xi from the l-derivative route at x = y ∘ y.
    let x_sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let l_grad = spec.l_grad(&x_sq)?;
    let l_hess = spec.l_hess(&x_sq)?;
    let mut xi = DMatrix::zeros(n, n);
    for i in 0..n {
        xi[(i, i)] = 2.0 * l_hess[(i, i)] + l_grad[i] / x_sq[i];
        for j in (i + 1)..n {
            let v = if pair_is_close(y[i], y[j]) {
                2.0 * (l_hess[(i, i)] - l_hess[(i, j)])
            } else {
                2.0 * (l_grad[i] - l_grad[j]) / (x_sq[i] - x_sq[j])
            };
            xi[(i, j)] = v;
            xi[(j, i)] = v;
        }
    }

    Ok(CoefficientBundle {
        point: y.to_vec(),
        g_matrix,
        h_bar,
        hess_g,
        h_matrix,
        xi,
        gamma,
    })
}

// ---------------------------------------------------------------------------
// Ellipticity forms
// ---------------------------------------------------------------------------

/// A rank-one probe: a base point F with positive determinant and two unit
/// vectors spanning the direction a b^T.
#[derive(Clone, Debug)]
pub struct EllipticitySample {
    pub f: DMatrix<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl EllipticitySample {
    pub fn new(f: DMatrix<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = f.nrows();
        if f.ncols() != n || a.len() != n || b.len() != n {
            return Err(Error::invalid("dimension mismatch"));
        }
        let norm_a: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_b: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm_a - 1.0).abs() > 1e-12 || (norm_b - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("direction vectors must be unit within 1e-12"));
        }
        if f.clone().lu().determinant() <= 0.0 {
            return Err(Error::precondition("base point needs det F > 0"));
        }
        Ok(EllipticitySample { f, a, b })
    }
}

/// Second derivative of t -> w(F + t a b^T) at t = 0 by a central stencil.
/// This is the oracle the reduced form is checked against; it goes through
/// the singular value decomposition and touches none of the coefficient
/// formulas.
pub fn ellipticity_form(spec: &PotentialSpec, sample: &EllipticitySample) -> Result<f64> {
    let n = sample.f.nrows();
    let direction = DMatrix::from_fn(n, n, |i, j| sample.a[i] * sample.b[j]);
    let scale = sample.f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let h = numdiff::step(scale);
    let eval = |t: f64| spec.eval_potential(&(&sample.f + t * &direction));
    numdiff::second_directional(&eval, h)
}

/// The reduced rank-one form at a diagonal base point:
/// sum_ij H_ij a_i b_i a_j b_j + sum_ij G_ij a_i^2 b_j^2.
pub fn reduced_ellipticity_form(
    spec: &PotentialSpec,
    y: &[f64],
    a: &[f64],
    b: &[f64],
) -> Result<f64> {
    if a.len() != y.len() || b.len() != y.len() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let bundle = coefficients(spec, y)?;
    let n = y.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += bundle.h_matrix[(i, j)] * a[i] * b[i] * a[j] * b[j];
            total += bundle.g_matrix[(i, j)] * a[i] * a[i] * b[j] * b[j];
        }
    }
    Ok(total)
}

/// The quadratic-absolute form sum H_ij x_i x_j + sum G_ij |x_i||x_j|,
/// whose global nonnegativity is the second half of the rank-one
/// convexity characterization.
pub fn mainineq_value(bundle: &CoefficientBundle, x: &[f64]) -> f64 {
    let n = bundle.point.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += bundle.h_matrix[(i, j)] * x[i] * x[j];
            total += bundle.g_matrix[(i, j)] * x[i].abs() * x[j].abs();
        }
    }
    total
}

fn mainineq_scale(bundle: &CoefficientBundle, x: &[f64]) -> f64 {
    let n = bundle.point.len();
    let mut total = 1.0;
    for i in 0..n {
        for j in 0..n {
            total += (bundle.h_matrix[(i, j)] * x[i] * x[j]).abs()
                + (bundle.g_matrix[(i, j)] * x[i] * x[j]).abs();
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Rank-one convexity test
// ---------------------------------------------------------------------------

/// Coordinate-descent polish of a refuting probe: walks x toward the most
/// negative normalized margin in the sample's neighbourhood so that the
/// reported witness is as sharp as the local landscape allows.
fn polish_witness(bundle: &CoefficientBundle, x: &mut Vec<f64>) -> f64 {
    let mut best = mainineq_value(bundle, x) / mainineq_scale(bundle, x);
    let mut step = 0.25;
    for _ in 0..6 {
        for i in 0..x.len() {
            for dir in [-1.0, 1.0] {
                let mut cand = x.clone();
                cand[i] += dir * step * (1.0 + cand[i].abs());
                let v = mainineq_value(bundle, &cand) / mainineq_scale(bundle, &cand);
                if v < best {
                    best = v;
                    *x = cand;
                }
            }
        }
        step *= 0.5;
    }
    best
}

/// Samples the two conditions of the rank-one convexity characterization:
/// (a) G_ij >= 0 at sampled positive points (Schur convexity of the
/// diagonal h), and (b) nonnegativity of the quadratic-absolute form over
/// sign-mixed probes. Positive points are drawn log-uniformly so large
/// coordinate ratios are exercised.
pub fn rank_one_convexity_test(spec: &PotentialSpec, plan: &SamplingPlan) -> Result<Verdict> {
    if !plan.is_positive_box() {
        return Err(Error::precondition("rank-one convexity needs a positive box"));
    }
    let n = plan.dim();
    let mut stream = plan.stream().fork("rank-one-convexity");
    let tol = spec.margin_tol();
    let mut tracker = MarginTracker::new();

    'samples: for _ in 0..plan.sample_count {
        let y = plan.sample_log(&mut stream)?;
        if !spec.kind.smooth_at_ties() {
            let scale = y.iter().cloned().fold(0.0f64, f64::max);
            for i in 0..n {
                for j in (i + 1)..n {
                    if (y[i] - y[j]).abs() < 1e-3 * scale {
                        continue 'samples;
                    }
                }
            }
        }
        let bundle = coefficients(spec, &y)?;
        let grad = spec.g_grad(&y)?;

        // (a) Schur convexity of h via the sign of G. The margin is
        // normalized by the quotient's ingredient magnitudes so that
        // derivative noise magnified by a small denominator cannot turn
        // into a spurious refutation.
        for i in 0..n {
            for j in (i + 1)..n {
                let denom = (y[i] * y[i] - y[j] * y[j]).abs().max(1e-300);
                let grad_scale =
                    1.0 + ((y[i] * grad[i]).abs() + (y[j] * grad[j]).abs()) / denom;
                let margin = bundle.g_matrix[(i, j)] / grad_scale;
                tracker.record(margin, tol, || {
                    json!({
                        "condition": "a",
                        "y": y,
                        "pair": [i, j],
                        "g_ij": bundle.g_matrix[(i, j)],
                    })
                });
                if margin < -tol {
                    continue 'samples;
                }
            }
        }

        // (b) the quadratic-absolute form over sign-mixed probes.
        for _ in 0..8 {
            let x = stream.vector_gaussian(n);
            let margin = mainineq_value(&bundle, &x) / mainineq_scale(&bundle, &x);
            if margin < -tol {
                let mut polished = x.clone();
                let best = polish_witness(&bundle, &mut polished);
                tracker.record(best, tol, || {
                    json!({
                        "condition": "b",
                        "y": y,
                        "x": polished,
                        "value": mainineq_value(&bundle, &polished),
                    })
                });
                continue 'samples;
            }
            tracker.record(margin, tol, || json!({"condition": "b", "y": y, "x": x}));
        }
    }
    Ok(tracker.finish())
}

/// The Baker–Ericksen quotients (y_i g_i - y_j g_j)/(y_i^2 - y_j^2) at a
/// point with distinct entries; nonnegativity of all of them is
/// equivalent to condition (a) above (Schur convexity of h), which the
/// test suite cross-checks against `schur_convexity_test`.
pub fn baker_ericksen_check(spec: &PotentialSpec, y: &[f64]) -> Result<bool> {
    ensure_finite(y)?;
    if y.iter().any(|&v| v <= 0.0) {
        return Err(Error::domain("positive arguments required"));
    }
    let n = y.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if pair_is_close(y[i], y[j]) {
                return Err(Error::precondition(
                    "repeated entries: use the coefficient prolongation instead",
                ));
            }
        }
    }
    let grad = spec.g_grad(y)?;
    for i in 0..n {
        for j in (i + 1)..n {
            let q = (y[i] * grad[i] - y[j] * grad[j]) / (y[i] * y[i] - y[j] * y[j]);
            if q < -1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Region inclusion
// ---------------------------------------------------------------------------

/// Sampled equivalence between global nonnegativity of
/// H x x + G |x||x| and the inclusion A(G) ⊆ A(-H) of the sets
/// A(G) = {x : G|x||x| <= 1}, A(-H) = {x : -H x x <= 1}. The two sampled
/// verdicts must agree; disagreement reports an implementation fault.
pub fn region_inclusion_check(
    g_matrix: &DMatrix<f64>,
    h_matrix: &DMatrix<f64>,
    plan: &SamplingPlan,
) -> Result<Verdict> {
    let n = g_matrix.nrows();
    if g_matrix.ncols() != n || h_matrix.nrows() != n || h_matrix.ncols() != n {
        return Err(Error::invalid("matrices must be square of equal size"));
    }
    if plan.dim() != n {
        return Err(Error::invalid("plan dimension mismatch"));
    }
    if g_matrix.iter().any(|&v| v < 0.0) {
        return Err(Error::domain("G must have nonnegative entries"));
    }
    let warning = if g_matrix.iter().any(|&v| v == 0.0) {
        Some("G has zero entries; the positivity hypothesis holds only weakly")
    } else {
        None
    };

    let form_g = |x: &[f64]| -> f64 {
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += g_matrix[(i, j)] * x[i].abs() * x[j].abs();
            }
        }
        t
    };
    let form_h = |x: &[f64]| -> f64 {
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += h_matrix[(i, j)] * x[i] * x[j];
            }
        }
        t
    };

    let mut stream = plan.stream().fork("region-inclusion");
    let tol = 1e-9;
    let mut worst_a = f64::INFINITY;
    let mut worst_b = f64::INFINITY;
    let mut witness_a: Option<Witness> = None;
    let mut witness_b: Option<Witness> = None;

    for _ in 0..plan.sample_count {
        let x = plan.sample(&mut stream);
        let scale: f64 = 1.0 + form_g(&x).abs() + form_h(&x).abs();

        // (a) the pointwise inequality
        let va = (form_h(&x) + form_g(&x)) / scale;
        if va < worst_a {
            worst_a = va;
            if va < -tol {
                witness_a.get_or_insert(Witness {
                    input: json!({"route": "inequality", "x": x}),
                    margin: va,
                });
            }
        }

        // (b) the inclusion at the G-normalized point
        let q = form_g(&x);
        let vb = if q > 1e-12 {
            let root = q.sqrt();
            let xs: Vec<f64> = x.iter().map(|v| v / root).collect();
            (1.0 + form_h(&xs)) / (1.0 + form_h(&xs).abs())
        } else {
            // G-form vanishes along this ray: the whole ray lies in A(G),
            // so -H x x must be nonpositive.
            (form_h(&x)) / scale
        };
        if vb < worst_b {
            worst_b = vb;
            if vb < -tol {
                witness_b.get_or_insert(Witness {
                    input: json!({"route": "inclusion", "x": x}),
                    margin: vb,
                });
            }
        }
    }

    let a_holds = witness_a.is_none();
    let b_holds = witness_b.is_none();
    let samples = plan.sample_count as u64;
    let verdict = match (a_holds, b_holds) {
        (true, true) => Verdict::verified(samples, worst_a.min(worst_b)),
        (false, false) => Verdict::refuted(samples, witness_a.unwrap()),
        (a, _) => {
            let w = if a { witness_b.unwrap() } else { witness_a.unwrap() };
            Verdict::refuted(samples, w).with_detail(
                "equivalence mismatch between the inequality and inclusion routes: \
                 implementation fault, not a property of the inputs",
            )
        }
    };
    Ok(match warning {
        Some(wmsg) if verdict.detail.is_none() => verdict.with_detail(wmsg),
        _ => verdict,
    })
}
