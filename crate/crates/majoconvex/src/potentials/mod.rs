//! Objective isotropic potentials w(F) = g(sigma(F)).
//!
//! A potential is specified through its symmetric singular-value function
//! g on the positive orthant. Alongside g the module carries the two
//! auxiliary compositions used throughout the convexity machinery:
//! h(x) = g(exp x), the "diagonal" of w, and l(x) = g(sqrt x). Catalog
//! members ship analytic first and second derivatives on all three levels;
//! anything else falls back to central differences.

mod bundle;
mod checks;

pub use bundle::{
    baker_ericksen_check, coefficients, ellipticity_form, mainineq_value,
    rank_one_convexity_test, reduced_ellipticity_form, region_inclusion_check, CoefficientBundle,
    EllipticitySample,
};
pub use checks::{ball_polyconvexity_hypothesis_check, symmetric_convex_monotone_check};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::matrix_orders::spectral_data;
use crate::numdiff;
use crate::rng::SeedStream;

/// How first and second derivatives of g (and of the h/l compositions) are
/// produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// User-supplied potential: g plus optional analytic derivatives. The
/// dimension is fixed so the symmetry check at construction knows where to
/// probe.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    pub dimension: usize,
    pub g: Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>,
    pub grad: Option<Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>>,
    pub hess: Option<Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>>,
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPotential")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("analytic_grad", &self.grad.is_some())
            .field("analytic_hess", &self.hess.is_some())
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum PotentialKind {
    /// w(F) = -log det F, g(y) = -sum log y_i.
    NegLogDet,
    /// w(F) = log trace U_F^{-1}, g(y) = log sum 1/y_i.
    LogTraceInvU,
    /// w(F) = sum_k ||F||_k^{-alpha} where ||F||_k is the geometric mean of
    /// the k smallest singular values; alpha >= 2.
    ///
    /// The k smallest—rather than largest—are what keeps the diagonal
    /// h = g(exp .) convex: sums of the k smallest coordinates are concave,
    /// so each term exp((-alpha/k) * that sum) is convex, while the
    /// k-largest variant produces a non-convex h (counterexample: along
    /// (t, -t) in two variables the leading term becomes exp(-alpha |t|)).
    ModifiedOgden { alpha: f64 },
    /// g(y) = sum y_i^p; defined on all of gl(n) for p >= 1.
    PowerSum { p: f64 },
    /// g(y) = sum_k c_k * sum_i y_i^{e_k}.
    OgdenSum { terms: Vec<(f64, f64)> },
    Custom(CustomPotential),
}

impl PotentialKind {
    pub fn name(&self) -> String {
        match self {
            PotentialKind::NegLogDet => "neg_log_det".into(),
            PotentialKind::LogTraceInvU => "log_trace_inv_u".into(),
            PotentialKind::ModifiedOgden { alpha } => format!("modified_ogden({alpha})"),
            PotentialKind::PowerSum { p } => format!("power_sum({p})"),
            PotentialKind::OgdenSum { terms } => format!("ogden_sum({terms:?})"),
            PotentialKind::Custom(c) => format!("custom({})", c.name),
        }
    }

    /// Whether g extends smoothly through coinciding coordinates. Sort-based
    /// potentials do not: their difference quotients diverge at ties.
    pub fn smooth_at_ties(&self) -> bool {
        !matches!(self, PotentialKind::ModifiedOgden { .. })
    }

    /// Whether w = g(sigma(.)) is declared on all of gl(n) rather than only
    /// on positive-determinant matrices.
    pub fn full_domain(&self) -> bool {
        matches!(
            self,
            PotentialKind::PowerSum { .. } | PotentialKind::Custom(_)
        )
    }
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub derivative_mode: DerivativeMode,
}

impl PotentialSpec {
    /// Builds a spec and runs the sampled symmetry check on g
    /// (deterministic probes, tolerance 1e-9 relative).
    pub fn new(kind: PotentialKind, derivative_mode: DerivativeMode) -> Result<Self> {
        if let PotentialKind::ModifiedOgden { alpha } = kind {
            if !(alpha >= 2.0) {
                return Err(Error::invalid("modified Ogden exponent must satisfy alpha >= 2"));
            }
        }
        if let PotentialKind::PowerSum { p } = kind {
            if !(p >= 1.0) {
                return Err(Error::invalid("power sum exponent must satisfy p >= 1"));
            }
        }
        let spec = PotentialSpec {
            kind,
            derivative_mode,
        };
        spec.check_symmetry()?;
        Ok(spec)
    }

    pub fn analytic(kind: PotentialKind) -> Result<Self> {
        PotentialSpec::new(kind, DerivativeMode::Analytic)
    }

    pub fn name(&self) -> String {
        self.kind.name()
    }

    fn check_symmetry(&self) -> Result<()> {
        let dims: Vec<usize> = match &self.kind {
            PotentialKind::Custom(c) => vec![c.dimension],
            _ => vec![2, 3],
        };
        let mut stream = SeedStream::new(0x5f3759df);
        for n in dims {
            for _ in 0..8 {
                let y: Vec<f64> = (0..n).map(|_| stream.log_uniform_in(0.2, 5.0)).collect();
                let gy = self.g(&y)?;
                let p = stream.permutation(n);
                let py: Vec<f64> = p.iter().map(|&k| y[k]).collect();
                let gpy = self.g(&py)?;
                if (gy - gpy).abs() > 1e-9 * (1.0 + gy.abs()) {
                    return Err(Error::invalid(format!(
                        "g is not symmetric: g({y:?}) = {gy} vs permuted {gpy}"
                    )));
                }
            }
        }
        Ok(())
    }

    // ---------------------------------------------------------------------
    // g and its derivatives
    // ---------------------------------------------------------------------

    fn domain_check(&self, y: &[f64]) -> Result<()> {
        ensure_finite(y)?;
        if y.is_empty() {
            return Err(Error::invalid("empty argument"));
        }
        let needs_positive = match &self.kind {
            PotentialKind::PowerSum { .. } => false,
            _ => true,
        };
        if needs_positive {
            if let Some(&bad) = y.iter().find(|&&v| v <= 0.0) {
                return Err(Error::domain(format!(
                    "{} needs positive arguments, got {bad}",
                    self.name()
                )));
            }
        } else if y.iter().any(|&v| v < 0.0) {
            return Err(Error::domain("singular values cannot be negative"));
        }
        Ok(())
    }

    pub fn g(&self, y: &[f64]) -> Result<f64> {
        self.domain_check(y)?;
        let v = match &self.kind {
            PotentialKind::NegLogDet => -y.iter().map(|v| v.ln()).sum::<f64>(),
            PotentialKind::LogTraceInvU => y.iter().map(|v| 1.0 / v).sum::<f64>().ln(),
            PotentialKind::ModifiedOgden { alpha } => {
                let s = ascending(y);
                let mut total = 0.0;
                let mut log_prod = 0.0;
                for (k, &v) in s.iter().enumerate() {
                    log_prod += v.ln();
                    total += (-(alpha / (k as f64 + 1.0)) * log_prod).exp();
                }
                total
            }
            PotentialKind::PowerSum { p } => y.iter().map(|v| v.powf(*p)).sum(),
            PotentialKind::OgdenSum { terms } => terms
                .iter()
                .map(|&(c, e)| c * y.iter().map(|v| v.powf(e)).sum::<f64>())
                .sum(),
            PotentialKind::Custom(c) => (c.g)(y)?,
        };
        if !v.is_finite() {
            return Err(Error::numerical(format!("g not finite at {y:?}")));
        }
        Ok(v)
    }

    pub fn g_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.domain_check(y)?;
        if self.derivative_mode == DerivativeMode::FiniteDifference {
            let f = |v: &[f64]| self.g(v);
            return numdiff::gradient(&f, y);
        }
        match &self.kind {
            PotentialKind::NegLogDet => Ok(y.iter().map(|v| -1.0 / v).collect()),
            PotentialKind::LogTraceInvU => {
                let s: f64 = y.iter().map(|v| 1.0 / v).sum();
                Ok(y.iter().map(|v| -1.0 / (v * v * s)).collect())
            }
            PotentialKind::ModifiedOgden { alpha } => {
                let (order, s, terms) = ogden_terms(y, *alpha)?;
                let n = y.len();
                let mut grad = vec![0.0; n];
                for (k, &t) in terms.iter().enumerate() {
                    let c = -alpha / (k as f64 + 1.0);
                    for m in 0..=k {
                        grad[order[m]] += t * c / s[m];
                    }
                }
                Ok(grad)
            }
            PotentialKind::PowerSum { p } => Ok(y.iter().map(|v| p * v.powf(p - 1.0)).collect()),
            PotentialKind::OgdenSum { terms } => Ok(y
                .iter()
                .map(|v| terms.iter().map(|&(c, e)| c * e * v.powf(e - 1.0)).sum())
                .collect()),
            PotentialKind::Custom(c) => match &c.grad {
                Some(grad) => grad(y),
                None => {
                    let f = |v: &[f64]| self.g(v);
                    numdiff::gradient(&f, y)
                }
            },
        }
    }

    pub fn g_hess(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        self.domain_check(y)?;
        if self.derivative_mode == DerivativeMode::FiniteDifference {
            let f = |v: &[f64]| self.g(v);
            return numdiff::hessian(&f, y);
        }
        let n = y.len();
        match &self.kind {
            PotentialKind::NegLogDet => Ok(DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0 / (y[i] * y[i])
                } else {
                    0.0
                }
            })),
            PotentialKind::LogTraceInvU => {
                let s: f64 = y.iter().map(|v| 1.0 / v).sum();
                Ok(DMatrix::from_fn(n, n, |i, j| {
                    let base = -1.0 / (y[i] * y[i] * y[j] * y[j] * s * s);
                    if i == j {
                        base + 2.0 / (y[i] * y[i] * y[i] * s)
                    } else {
                        base
                    }
                }))
            }
            PotentialKind::ModifiedOgden { alpha } => {
                let (order, s, terms) = ogden_terms(y, *alpha)?;
                let mut hess = DMatrix::zeros(n, n);
                for (k, &t) in terms.iter().enumerate() {
                    let c = -alpha / (k as f64 + 1.0);
                    for m in 0..=k {
                        for l in 0..=k {
                            let (im, il) = (order[m], order[l]);
                            if m == l {
                                hess[(im, im)] += t * c * (c - 1.0) / (s[m] * s[m]);
                            } else {
                                hess[(im, il)] += t * c * c / (s[m] * s[l]);
                            }
                        }
                    }
                }
                Ok(hess)
            }
            PotentialKind::PowerSum { p } => Ok(DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    p * (p - 1.0) * y[i].powf(p - 2.0)
                } else {
                    0.0
                }
            })),
            PotentialKind::OgdenSum { terms } => Ok(DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    terms
                        .iter()
                        .map(|&(c, e)| c * e * (e - 1.0) * y[i].powf(e - 2.0))
                        .sum()
                } else {
                    0.0
                }
            })),
            PotentialKind::Custom(c) => match &c.hess {
                Some(hess) => hess(y),
                None => {
                    let f = |v: &[f64]| self.g(v);
                    numdiff::hessian(&f, y)
                }
            },
        }
    }

    // ---------------------------------------------------------------------
    // h(x) = g(exp x) and l(x) = g(sqrt x)
    // ---------------------------------------------------------------------

    pub fn h(&self, x: &[f64]) -> Result<f64> {
        ensure_finite(x)?;
        match &self.kind {
            PotentialKind::NegLogDet => Ok(-x.iter().sum::<f64>()),
            PotentialKind::LogTraceInvU => Ok(log_sum_exp(x.iter().map(|v| -v))),
            _ => {
                let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                self.g(&y)
            }
        }
    }

    /// Gradient of the diagonal h. Computed on the h side (not by chain
    /// rule from g_grad) for the catalog, so that bridge identities between
    /// the two derivative routes are genuine cross-checks.
    pub fn h_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_finite(x)?;
        if self.derivative_mode == DerivativeMode::FiniteDifference {
            let f = |v: &[f64]| self.h(v);
            return numdiff::gradient(&f, x);
        }
        match &self.kind {
            PotentialKind::NegLogDet => Ok(vec![-1.0; x.len()]),
            PotentialKind::LogTraceInvU => {
                // -softmax(-x)
                let m = x.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = x.iter().map(|v| (-v - m).exp()).collect();
                let total: f64 = weights.iter().sum();
                Ok(weights.iter().map(|w| -w / total).collect())
            }
            PotentialKind::ModifiedOgden { alpha } => {
                let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let (order, _s, terms) = ogden_terms(&y, *alpha)?;
                let n = x.len();
                let mut grad = vec![0.0; n];
                for (k, &t) in terms.iter().enumerate() {
                    let c = -alpha / (k as f64 + 1.0);
                    for m in 0..=k {
                        grad[order[m]] += t * c;
                    }
                }
                Ok(grad)
            }
            PotentialKind::PowerSum { p } => {
                Ok(x.iter().map(|v| p * (p * v).exp()).collect())
            }
            PotentialKind::OgdenSum { terms } => Ok(x
                .iter()
                .map(|v| terms.iter().map(|&(c, e)| c * e * (e * v).exp()).sum())
                .collect()),
            PotentialKind::Custom(_) => {
                let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let gg = self.g_grad(&y)?;
                Ok(gg.iter().zip(&y).map(|(gi, yi)| gi * yi).collect())
            }
        }
    }

    pub fn l(&self, x: &[f64]) -> Result<f64> {
        ensure_finite(x)?;
        if x.iter().any(|&v| v <= 0.0) {
            return Err(Error::domain("l is defined on the positive orthant"));
        }
        let y: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
        self.g(&y)
    }

    /// Gradient of l by the square-root chain rule on g_grad.
    pub fn l_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
        let gg = self.g_grad(&y)?;
        Ok(gg
            .iter()
            .zip(&y)
            .map(|(gi, yi)| gi / (2.0 * yi))
            .collect())
    }

    /// Hessian of l: l_ij = g_ij/(4 sqrt(x_i x_j)) - delta_ij g_i/(4 x_i^{3/2}).
    pub fn l_hess(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let y: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
        let gg = self.g_grad(&y)?;
        let gh = self.g_hess(&y)?;
        let n = x.len();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let base = gh[(i, j)] / (4.0 * y[i] * y[j]);
            if i == j {
                base - gg[i] / (4.0 * x[i] * y[i])
            } else {
                base
            }
        }))
    }

    // ---------------------------------------------------------------------
    // The potential itself
    // ---------------------------------------------------------------------

    /// w(F) = g(sigma(F)). Positive determinant is required unless the
    /// kind is declared on all of gl(n).
    pub fn eval_potential(&self, f: &DMatrix<f64>) -> Result<f64> {
        let sd = spectral_data(f)?;
        if !self.kind.full_domain() && sd.determinant <= 0.0 {
            return Err(Error::domain(format!(
                "{} needs det F > 0, got {:.3e}",
                self.name(),
                sd.determinant
            )));
        }
        self.g(&sd.singular_values)
    }

    /// The singular-value composition g(sigma(F)) without the orientation
    /// gate, for checks quantified over all of gl(n); g's own domain still
    /// applies.
    pub fn eval_on_gl(&self, f: &DMatrix<f64>) -> Result<f64> {
        let sd = spectral_data(f)?;
        self.g(&sd.singular_values)
    }

    /// w~(F) = g(|lambda(F)|), the eigenvalue-moduli companion of w.
    pub fn eval_w_tilde(&self, f: &DMatrix<f64>) -> Result<f64> {
        let sd = spectral_data(f)?;
        if sd.eigenvalue_moduli.iter().any(|&m| m <= 0.0) {
            return Err(Error::domain("zero eigenvalue modulus"));
        }
        self.g(&sd.eigenvalue_moduli)
    }

    /// Base tolerance for inequality margins under this derivative mode.
    pub fn margin_tol(&self) -> f64 {
        match self.derivative_mode {
            DerivativeMode::Analytic => 1e-9,
            DerivativeMode::FiniteDifference => 1e-6,
        }
    }
}

fn ascending(y: &[f64]) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

/// Sorted-ascending order map, values, and the Ogden terms
/// T_k = (prod of k smallest)^(-alpha/k). Errors on near-ties where the
/// sorted branch is ambiguous for derivatives.
fn ogden_terms(y: &[f64], alpha: f64) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap());
    let s: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    for w in s.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-8 * w[1].max(w[0]) {
            return Err(Error::numerical(
                "modified Ogden derivatives are undefined at coinciding singular values",
            ));
        }
    }
    let mut terms = Vec::with_capacity(n);
    let mut log_prod = 0.0;
    for (k, &v) in s.iter().enumerate() {
        log_prod += v.ln();
        terms.push((-(alpha / (k as f64 + 1.0)) * log_prod).exp());
    }
    Ok((order, s, terms))
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
