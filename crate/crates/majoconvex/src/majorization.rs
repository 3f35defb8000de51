//! Vector majorisation and its constructive carriers: T-transform chains,
//! doubly stochastic matrices, Birkhoff decompositions, and the sampled
//! Schur-convexity / isotonicity testers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ensure_finite, ensure_same_len, Error, Result};
use crate::numdiff;
use crate::sampling::SamplingPlan;
use crate::vectors::{majorization_relation_with_margins, SortedView};
use crate::verdict::{MarginTracker, Verdict};

/// Absolute tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-9;
/// Relative tolerance for finite-difference inequalities.
pub const DERIVATIVE_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// T-transforms
// ---------------------------------------------------------------------------

/// Mixes coordinates i and j by weight t:
/// out_i = t x_i + (1-t) x_j, out_j = t x_j + (1-t) x_i.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTransformStep {
    pub i: usize,
    pub j: usize,
    pub t: f64,
}

impl TTransformStep {
    pub fn new(i: usize, j: usize, t: f64) -> Result<Self> {
        if i == j {
            return Err(Error::invalid("T-transform indices must differ"));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("mixing weight t={t} outside [0,1]")));
        }
        Ok(TTransformStep { i, j, t })
    }
}

pub fn apply_t_transform(x: &[f64], step: &TTransformStep) -> Result<Vec<f64>> {
    ensure_finite(x)?;
    let n = x.len();
    if step.i >= n || step.j >= n {
        return Err(Error::invalid(format!(
            "indices ({}, {}) out of range for length {n}",
            step.i, step.j
        )));
    }
    if step.i == step.j {
        return Err(Error::invalid("T-transform indices must differ"));
    }
    if !(0.0..=1.0).contains(&step.t) {
        return Err(Error::invalid(format!(
            "mixing weight t={} outside [0,1]",
            step.t
        )));
    }
    let mut out = x.to_vec();
    out[step.i] = step.t * x[step.i] + (1.0 - step.t) * x[step.j];
    out[step.j] = step.t * x[step.j] + (1.0 - step.t) * x[step.i];
    Ok(out)
}

/// A chain of T-transforms taking y to x, up to the reported coordinate
/// permutation: replaying `steps` on y yields v with x_k = v[perm[k]].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TTransformChain {
    pub steps: Vec<TTransformStep>,
    pub perm: Vec<usize>,
}

impl TTransformChain {
    /// Applies the steps to y and then the permutation; the result should
    /// reproduce x to within replay tolerance.
    pub fn replay(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut v = y.to_vec();
        for s in &self.steps {
            v = apply_t_transform(&v, s)?;
        }
        Ok(self.perm.iter().map(|&p| v[p]).collect())
    }

    /// All intermediate vectors (before the final permutation), the
    /// starting point included.
    pub fn intermediates(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut v = y.to_vec();
        let mut out = vec![v.clone()];
        for s in &self.steps {
            v = apply_t_transform(&v, s)?;
            out.push(v.clone());
        }
        Ok(out)
    }
}

/// Constructs a chain of at most n-1 T-transforms taking y to x, given
/// x majorized by y.
///
/// Working on descending copies, each round picks the largest sorted index
/// j with x_j < v_j and the smallest k > j with x_k > v_k (the entries
/// between are equal), then moves delta = min(v_j - x_j, x_k - v_k)
/// from coordinate j to k. This is a T-transform with t = 1 - delta/(v_j -
/// v_k); it matches at least one more coordinate per round, keeps the
/// working vector sorted, and preserves x ≺ v.
pub fn t_transform_chain(y: &[f64], x: &[f64]) -> Result<TTransformChain> {
    let (rel, margins) = majorization_relation_with_margins(x, y, ALGEBRAIC_TOL)?;
    if !rel.majorized {
        return Err(Error::precondition(format!(
            "x is not majorized by y (worst partial-sum slack {:.3e}, total gap {:.3e})",
            margins.partial_sums, margins.total_gap
        )));
    }
    let n = y.len();
    let sy = SortedView::of(y);
    let sx = SortedView::of(x);
    let mut v = sy.values.clone();
    let target = &sx.values;

    let mut steps_sorted: Vec<TTransformStep> = Vec::new();
    for _round in 0..n {
        // Largest j with target_j < v_j beyond tolerance.
        let j = match (0..n).rev().find(|&i| v[i] - target[i] > ALGEBRAIC_TOL) {
            Some(j) => j,
            None => break,
        };
        let k = ((j + 1)..n)
            .find(|&i| target[i] - v[i] > ALGEBRAIC_TOL)
            .ok_or_else(|| Error::numerical("chain construction: no receiving coordinate"))?;
        let delta = (v[j] - target[j]).min(target[k] - v[k]);
        let spread = v[j] - v[k];
        debug_assert!(spread > 0.0);
        let t = (1.0 - delta / spread).clamp(0.0, 1.0);
        let step = TTransformStep { i: j, j: k, t };
        v = apply_t_transform(&v, &step)?;
        steps_sorted.push(step);
    }
    debug_assert!(steps_sorted.len() <= n.saturating_sub(1));

    // Map steps from the sorted frame back to y's coordinates.
    let steps: Vec<TTransformStep> = steps_sorted
        .iter()
        .map(|s| TTransformStep {
            i: sy.perm[s.i],
            j: sy.perm[s.j],
            t: s.t,
        })
        .collect();

    // Replaying the mapped steps on y produces w with w[sy.perm[m]] equal to
    // target[m] = x[sx.perm[m]]; hence x_k = w[perm_k] with:
    let mut perm = vec![0usize; n];
    for m in 0..n {
        perm[sx.perm[m]] = sy.perm[m];
    }
    Ok(TTransformChain { steps, perm })
}

// ---------------------------------------------------------------------------
// Doubly stochastic matrices
// ---------------------------------------------------------------------------

/// A square matrix with nonnegative entries (within tolerance) whose rows
/// and columns each sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct BistochasticMatrix {
    entries: DMatrix<f64>,
}

/// Validation tolerance for `BistochasticMatrix` invariants.
pub const BISTOCHASTIC_TOL: f64 = 1e-10;

impl BistochasticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, BISTOCHASTIC_TOL)
    }

    pub fn with_tolerance(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::invalid("matrix must be square and nonempty"));
        }
        for v in entries.iter() {
            if !v.is_finite() {
                return Err(Error::invalid("non-finite entry"));
            }
            if *v < -tol {
                return Err(Error::invalid(format!("negative entry {v}")));
            }
        }
        for i in 0..n {
            let rs: f64 = entries.row(i).sum();
            let cs: f64 = entries.column(i).sum();
            if (rs - 1.0).abs() > tol || (cs - 1.0).abs() > tol {
                return Err(Error::invalid(format!(
                    "row/column sum off unity at index {i}: {rs}, {cs}"
                )));
            }
        }
        Ok(BistochasticMatrix { entries })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_same_len(x, &vec![0.0; self.dim()])?;
        let v = nalgebra::DVector::from_column_slice(x);
        Ok((&self.entries * v).iter().copied().collect())
    }
}

fn t_transform_matrix(n: usize, step: &TTransformStep) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    m[(step.i, step.i)] = step.t;
    m[(step.i, step.j)] = 1.0 - step.t;
    m[(step.j, step.j)] = step.t;
    m[(step.j, step.i)] = 1.0 - step.t;
    m
}

/// Builds a doubly stochastic A with A y = x from the T-transform chain:
/// A is the chain's matrix product composed with the reported permutation.
pub fn doubly_stochastic_for(y: &[f64], x: &[f64]) -> Result<BistochasticMatrix> {
    let chain = t_transform_chain(y, x)?;
    let n = y.len();
    let mut a = DMatrix::identity(n, n);
    for s in &chain.steps {
        a = t_transform_matrix(n, s) * a;
    }
    // Row permutation: x_k = (chain result)[perm_k].
    let mut p = DMatrix::zeros(n, n);
    for k in 0..n {
        p[(k, chain.perm[k])] = 1.0;
    }
    BistochasticMatrix::with_tolerance(p * a, 1e-9)
}

// ---------------------------------------------------------------------------
// Birkhoff decomposition
// ---------------------------------------------------------------------------

/// A convex combination of permutation matrices. `perm` maps row -> column:
/// the k-th matrix has ones at (i, perm_k(i)).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedPermutations {
    pub terms: Vec<(f64, Vec<usize>)>,
}

impl WeightedPermutations {
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w).sum()
    }

    pub fn reconstruct(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for (w, p) in &self.terms {
            for (i, &j) in p.iter().enumerate() {
                m[(i, j)] += *w;
            }
        }
        m
    }
}

/// Kuhn augmenting-path matching over the support graph, rows processed in
/// increasing order, candidate columns scanned in increasing order; this
/// fixes the decomposition deterministically.
fn perfect_matching(support: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = support.len();
    let mut row_of_col = vec![usize::MAX; n];

    fn try_row(
        r: usize,
        support: &[Vec<bool>],
        row_of_col: &mut [usize],
        visited: &mut [bool],
    ) -> bool {
        let n = support.len();
        for c in 0..n {
            if support[r][c] && !visited[c] {
                visited[c] = true;
                if row_of_col[c] == usize::MAX
                    || try_row(row_of_col[c], support, row_of_col, visited)
                {
                    row_of_col[c] = r;
                    return true;
                }
            }
        }
        false
    }

    for r in 0..n {
        let mut visited = vec![false; n];
        if !try_row(r, support, &mut row_of_col, &mut visited) {
            return None;
        }
    }
    let mut perm = vec![0usize; n];
    for c in 0..n {
        perm[row_of_col[c]] = c;
    }
    Some(perm)
}

/// Decomposes a doubly stochastic matrix into at most (n-1)^2 + 1 weighted
/// permutations by repeated extraction of a perfect matching on the
/// positive support with the minimum matched entry as weight.
pub fn birkhoff_decompose(a: &BistochasticMatrix) -> Result<WeightedPermutations> {
    let n = a.dim();
    let mut residual = a.matrix().clone();
    let mut terms: Vec<(f64, Vec<usize>)> = Vec::new();
    let support_eps = 1e-12;
    let max_terms = (n - 1) * (n - 1) + 1;

    loop {
        let mass: f64 = residual.row(0).sum();
        if mass <= 1e-10 {
            break;
        }
        if terms.len() > max_terms {
            return Err(Error::numerical(format!(
                "Birkhoff extraction exceeded {max_terms} terms"
            )));
        }
        let support: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| residual[(i, j)] > support_eps).collect())
            .collect();
        let perm = perfect_matching(&support).ok_or_else(|| Error::NoPerfectMatching {
            mass,
            residual: residual.clone(),
        })?;
        let w = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| residual[(i, j)])
            .fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            residual[(i, j)] -= w;
            if residual[(i, j)].abs() < 1e-14 {
                residual[(i, j)] = 0.0;
            }
        }
        terms.push((w, perm));
    }
    Ok(WeightedPermutations { terms })
}

// ---------------------------------------------------------------------------
// Hardy–Littlewood–Pólya equivalence: sum phi(x) <= sum phi(y)
// ---------------------------------------------------------------------------

/// Checks sum phi(x_i) <= sum phi(y_i) over a battery of convex phi:
/// absolute shifts |u - c|, exponentials exp(s u), hinges max(0, u - c),
/// and random piecewise-linear convex functions (maxima of affine pieces)
/// drawn from the plan.
pub fn hlp_equivalence_check(x: &[f64], y: &[f64], plan: &SamplingPlan) -> Result<Verdict> {
    let (rel, _) = majorization_relation_with_margins(x, y, ALGEBRAIC_TOL)?;
    if !rel.majorized {
        return Err(Error::precondition("x is not majorized by y"));
    }
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let mut stream = plan.stream().fork("hlp");
    let mut tracker = MarginTracker::new();
    let rel_tol = 1e-10;

    let check = |phi: &dyn Fn(f64) -> f64, label: &str, tracker: &mut MarginTracker| {
        let sx: f64 = x.iter().map(|&u| phi(u)).sum();
        let sy: f64 = y.iter().map(|&u| phi(u)).sum();
        let scale = sy.abs().max(1.0);
        let margin = (sy - sx) / scale;
        tracker.record(margin, rel_tol, || {
            json!({"phi": label, "sum_x": sx, "sum_y": sy})
        });
    };

    for _ in 0..plan.sample_count {
        let c = stream.uniform_in(lo, hi);
        check(&|u| (u - c).abs(), &format!("abs shift c={c}"), &mut tracker);
        let s = stream.uniform_in(-3.0, 3.0);
        check(&|u| (s * u).exp(), &format!("exp slope s={s}"), &mut tracker);
        let c2 = stream.uniform_in(lo, hi);
        check(
            &|u| (u - c2).max(0.0),
            &format!("hinge c={c2}"),
            &mut tracker,
        );
        // Max of four affine pieces.
        let pieces: Vec<(f64, f64)> = (0..4)
            .map(|_| (stream.uniform_in(-2.0, 2.0), stream.uniform_in(-1.0, 1.0)))
            .collect();
        check(
            &|u| {
                pieces
                    .iter()
                    .map(|&(a, b)| a * u + b)
                    .fold(f64::NEG_INFINITY, f64::max)
            },
            "piecewise linear",
            &mut tracker,
        );
    }
    Ok(tracker.finish())
}

// ---------------------------------------------------------------------------
// Schur convexity and strong isotonicity testers
// ---------------------------------------------------------------------------

fn finite_at(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if !v.is_finite() {
        return Err(Error::numerical(format!("f not finite at {x:?}")));
    }
    Ok(v)
}

/// Sampled Schur-convexity test: symmetry under permutations plus the
/// pairwise derivative condition (x_i - x_j)(f_i(x) - f_j(x)) >= 0 with
/// central-difference partial derivatives.
pub fn schur_convexity_test(f: &dyn Fn(&[f64]) -> f64, plan: &SamplingPlan) -> Result<Verdict> {
    if !plan.is_symmetric_box() {
        return Err(Error::precondition(
            "box must be symmetric under coordinate permutation",
        ));
    }
    let n = plan.dim();
    let mut stream = plan.stream().fork("schur-convexity");
    let mut tracker = MarginTracker::new();

    for _ in 0..plan.sample_count {
        let x = plan.sample(&mut stream);
        let fx = finite_at(f, &x)?;

        // (i) symmetry under a sampled permutation
        let p = stream.permutation(n);
        let px: Vec<f64> = p.iter().map(|&k| x[k]).collect();
        let fpx = finite_at(f, &px)?;
        let sym_margin = ALGEBRAIC_TOL * (1.0 + fx.abs()) - (fpx - fx).abs();
        tracker.record(sym_margin, 0.0, || {
            json!({"kind": "symmetry", "x": x, "perm": p, "f_x": fx, "f_px": fpx})
        });

        // (ii) the pairwise condition with central differences
        let wrapped = |v: &[f64]| finite_at(f, v);
        let grad = numdiff::gradient(&wrapped, &x)?;
        for i in 0..n {
            for j in (i + 1)..n {
                let value = (x[i] - x[j]) * (grad[i] - grad[j]);
                let scale = 1.0 + (x[i] - x[j]).abs() * (grad[i].abs() + grad[j].abs());
                let margin = value / scale;
                tracker.record(margin, DERIVATIVE_TOL, || {
                    json!({"kind": "pair", "x": x, "i": i, "j": j, "value": value})
                });
            }
        }
    }
    Ok(tracker.finish())
}

/// Sampled strong-isotonicity test (descending nonnegative gradient in the
/// sorted chamber), cross-checked against the increasing + Schur-convex
/// characterization. Disagreement between the two routes is reported as
/// inconclusive.
pub fn strong_isotonicity_test(f: &dyn Fn(&[f64]) -> f64, plan: &SamplingPlan) -> Result<Verdict> {
    if !plan.is_symmetric_box() {
        return Err(Error::precondition(
            "box must be symmetric under coordinate permutation",
        ));
    }
    let n = plan.dim();
    let mut stream = plan.stream().fork("strong-isotonicity");
    let mut tracker = MarginTracker::new();
    let min_gap = 1e-4;

    for _ in 0..plan.sample_count {
        let mut x = plan.sample(&mut stream);
        x.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Keep the sample inside the open sorted chamber so the central
        // stencil does not straddle a permutation boundary.
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if x.windows(2).any(|w| w[0] - w[1] < min_gap * scale) {
            continue;
        }
        let wrapped = |v: &[f64]| finite_at(f, v);
        let grad = numdiff::gradient(&wrapped, &x)?;
        let gscale = 1.0 + grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for i in 0..n {
            let margin = if i + 1 < n {
                (grad[i] - grad[i + 1]) / gscale
            } else {
                grad[i] / gscale
            };
            tracker.record(margin, DERIVATIVE_TOL, || {
                json!({"kind": "gradient order", "x": x, "i": i, "grad": grad})
            });
        }
    }
    let primary = tracker.finish();

    // Cross-check: increasing and Schur convex.
    let schur = schur_convexity_test(f, plan)?;
    let mut stream = plan.stream().fork("increasing-check");
    let mut incr_ok = true;
    for _ in 0..plan.sample_count.min(64) {
        let x = plan.sample(&mut stream);
        let i = stream.index(n);
        let delta = 0.25 * (plan.intervals[i].1 - plan.intervals[i].0).max(1e-3);
        let mut xp = x.clone();
        xp[i] += delta;
        let fx = finite_at(f, &x)?;
        let fxp = finite_at(f, &xp)?;
        if fxp - fx < -DERIVATIVE_TOL * (1.0 + fx.abs()) {
            incr_ok = false;
            break;
        }
    }
    let secondary_ok = schur.is_verified() && incr_ok;
    match (primary.is_verified(), secondary_ok) {
        (true, true) | (false, false) => Ok(primary),
        (a, b) => Ok(Verdict::inconclusive(
            primary.samples_checked,
            format!(
                "gradient route {} but increasing+Schur-convex route {}",
                if a { "verified" } else { "refuted" },
                if b { "verified" } else { "refuted" }
            ),
        )),
    }
}
