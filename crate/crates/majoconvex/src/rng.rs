//! Deterministic sample stream.
//!
//! Every sampled verdict in the crate draws from `SeedStream`, which is
//! pinned to a named, versioned scheme (`majoconvex-stream-v1`): a
//! ChaCha8 generator keyed with the 64-bit seed, uniforms built from the
//! top 53 bits of each 64-bit output, and Gaussians by Box–Muller on two
//! consecutive uniforms. Identical seeds therefore reproduce identical
//! samples bit for bit across platforms and library versions.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Clone, Debug)]
pub struct SeedStream {
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derives an independent stream for a named sub-task. The label keeps
    /// sub-streams decoupled from the order in which callers consume them.
    pub fn fork(&self, label: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        let mut stream = self.clone();
        SeedStream::new(stream.rng.next_u64() ^ h)
    }

    /// Uniform in [0, 1): 53-bit mantissa from one 64-bit word.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Log-uniform over a positive interval; the natural draw for scale
    /// parameters such as singular values.
    pub fn log_uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo > 0.0 && hi > lo);
        (self.uniform_in(lo.ln(), hi.ln())).exp()
    }

    /// Standard normal by Box–Muller; consumes exactly two uniforms.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Rejection-free modulo bias is irrelevant at our n, but stay exact.
        let bound = (u64::MAX / n as u64) * n as u64;
        loop {
            let v = self.rng.next_u64();
            if v < bound {
                return (v % n as u64) as usize;
            }
        }
    }

    /// Distinct pair (i, j), i != j, uniform over ordered pairs.
    pub fn index_pair(&mut self, n: usize) -> (usize, usize) {
        debug_assert!(n >= 2);
        let i = self.index(n);
        let mut j = self.index(n - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    }

    pub fn vector_uniform(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform_in(lo, hi)).collect()
    }

    pub fn vector_gaussian(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }

    /// Fisher–Yates permutation of 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.index(i + 1);
            p.swap(i, j);
        }
        p
    }

    pub fn matrix_gaussian(&mut self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| self.gaussian())
    }

    /// Random rotation in SO(n): Gram–Schmidt on a Gaussian matrix with
    /// positive-diagonal normalization, determinant fixed to +1 by flipping
    /// the last column if necessary.
    pub fn rotation(&mut self, n: usize) -> DMatrix<f64> {
        loop {
            let g = self.matrix_gaussian(n);
            if let Some(q) = gram_schmidt(&g) {
                return q;
            }
        }
    }
}

fn gram_schmidt(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = g.nrows();
    let mut q = g.clone();
    for j in 0..n {
        for k in 0..j {
            let proj = q.column(j).dot(&q.column(k));
            let col_k = q.column(k).into_owned();
            let mut col_j = q.column_mut(j);
            col_j -= proj * col_k;
        }
        let norm = q.column(j).norm();
        if norm < 1e-10 {
            return None;
        }
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    let mut det = q.determinant();
    if det < 0.0 {
        q.column_mut(n - 1).neg_mut();
        det = -det;
    }
    debug_assert!((det - 1.0).abs() < 1e-6);
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_reproducible() {
        let a: Vec<f64> = {
            let mut s = SeedStream::new(7);
            (0..16).map(|_| s.uniform()).collect()
        };
        let b: Vec<f64> = {
            let mut s = SeedStream::new(7);
            (0..16).map(|_| s.uniform()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut s = SeedStream::new(3);
        for n in 2..=4 {
            let q = s.rotation(n);
            let qtq = q.transpose() * &q;
            let err = (&qtq - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(err < 1e-12, "n={n} err={err}");
            assert!((q.determinant() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn forked_streams_differ() {
        let s = SeedStream::new(11);
        let mut a = s.fork("alpha");
        let mut b = s.fork("beta");
        assert_ne!(a.uniform(), b.uniform());
    }
}
