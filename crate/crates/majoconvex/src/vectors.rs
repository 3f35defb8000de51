//! Coordinate vectors with descending-sort views and partial sums.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_same_len, Error, Result};

/// A finite real vector of fixed length n >= 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector must have length >= 1"));
        }
        ensure_finite(&entries)?;
        Ok(RealVector(entries))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sorted(&self) -> SortedView {
        SortedView::of(&self.0)
    }
}

impl std::ops::Deref for RealVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Descending rearrangement of a vector together with its prefix sums and
/// the stable sort permutation (`values[k] == original[perm[k]]`).
#[derive(Clone, Debug)]
pub struct SortedView {
    pub values: Vec<f64>,
    pub prefix_sums: Vec<f64>,
    pub perm: Vec<usize>,
}

impl SortedView {
    /// Ties are broken stably, by original index order.
    pub fn of(v: &[f64]) -> Self {
        let mut perm: Vec<usize> = (0..v.len()).collect();
        perm.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap().then(a.cmp(&b)));
        let values: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let mut prefix_sums = Vec::with_capacity(v.len());
        let mut acc = 0.0;
        for &x in &values {
            acc += x;
            prefix_sums.push(acc);
        }
        SortedView {
            values,
            prefix_sums,
            perm,
        }
    }

    pub fn total(&self) -> f64 {
        *self.prefix_sums.last().unwrap()
    }
}

/// Which of the three order relations hold between x and y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relations {
    pub componentwise_leq: bool,
    pub submajorized: bool,
    pub majorized: bool,
}

/// Margins behind a `Relations` answer: the minimum slack of each family
/// of inequalities (negative means violated).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationMargins {
    pub componentwise: f64,
    pub partial_sums: f64,
    pub total_gap: f64,
}

/// Decides componentwise order, submajorization and majorization of x by y
/// at absolute tolerance `tol`. Inputs are never mutated; all sorted work
/// happens on copies.
pub fn majorization_relation(x: &[f64], y: &[f64], tol: f64) -> Result<Relations> {
    Ok(majorization_relation_with_margins(x, y, tol)?.0)
}

pub fn majorization_relation_with_margins(
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<(Relations, RelationMargins)> {
    ensure_same_len(x, y)?;
    ensure_finite(x)?;
    ensure_finite(y)?;
    if tol < 0.0 {
        return Err(Error::invalid("tolerance must be nonnegative"));
    }
    let componentwise = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);

    let sx = SortedView::of(x);
    let sy = SortedView::of(y);
    let partial_sums = sx
        .prefix_sums
        .iter()
        .zip(&sy.prefix_sums)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    let total_gap = sy.total() - sx.total();

    let submajorized = partial_sums >= -tol;
    let relations = Relations {
        componentwise_leq: componentwise >= -tol,
        submajorized,
        majorized: submajorized && total_gap.abs() <= tol,
    };
    Ok((
        relations,
        RelationMargins {
            componentwise,
            partial_sums,
            total_gap,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_vector_is_majorized() {
        let r = majorization_relation(&[1.0, 1.0], &[2.0, 0.0], 1e-12).unwrap();
        assert!(!r.componentwise_leq);
        assert!(r.submajorized);
        assert!(r.majorized);
    }

    #[test]
    fn reflexivity() {
        let r = majorization_relation(&[3.0, 2.0, 1.0], &[3.0, 2.0, 1.0], 1e-12).unwrap();
        assert!(r.componentwise_leq && r.submajorized && r.majorized);
    }

    #[test]
    fn submajorized_without_equal_totals() {
        let r = majorization_relation(&[1.0, 1.0], &[3.0, 0.0], 1e-12).unwrap();
        assert!(r.submajorized);
        assert!(!r.majorized);
    }

    #[test]
    fn majorized_implies_submajorized_always() {
        // Structural: the flag is computed from submajorized.
        let r = majorization_relation(&[2.0, 2.0, 2.0], &[3.0, 2.0, 1.0], 1e-12).unwrap();
        assert!(r.majorized && r.submajorized);
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(majorization_relation(&[1.0], &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(majorization_relation(&[f64::NAN, 0.0], &[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn stable_tie_break() {
        let s = SortedView::of(&[1.0, 2.0, 1.0]);
        assert_eq!(s.perm, vec![1, 0, 2]);
    }
}
