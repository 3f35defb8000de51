//! Matrix-order properties: closed-form SVD oracles, polar orientation,
//! Weyl sweeps, Thompson preorder structure, and Schur–Horn round trips.

use majoconvex::majorization::{apply_t_transform, TTransformStep};
use majoconvex::matrix_orders::{
    diag_spectrum_majorization_check, loewner_monotonicity_check, schur_horn_construct,
    schur_product_monotonicity_check, spectral_data, symmetric_eigen_desc, thompson_leq,
    weyl_log_majorization_check, HermitianOrderPair,
};
use majoconvex::rng::SeedStream;
use nalgebra::DMatrix;

/// Closed-form singular values of a 2x2 matrix, used as an independent
/// oracle against the library decomposition.
fn svd2_closed_form(m: &DMatrix<f64>) -> (f64, f64) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let frob2 = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (frob2 * frob2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((frob2 + disc) / 2.0).sqrt();
    let s2 = ((frob2 - disc).max(0.0) / 2.0).sqrt();
    (s1, s2)
}

#[test]
fn spectral_data_matches_closed_form_two_by_two() {
    let mut stream = SeedStream::new(0xB1);
    for _ in 0..200 {
        let m = stream.matrix_gaussian(2);
        let sd = spectral_data(&m).unwrap();
        let (s1, s2) = svd2_closed_form(&m);
        assert!((sd.singular_values[0] - s1).abs() <= 1e-10 * (1.0 + s1));
        assert!((sd.singular_values[1] - s2).abs() <= 1e-10 * (1.0 + s1));
        let prod: f64 = sd.singular_values.iter().product();
        assert!((prod - sd.determinant.abs()).abs() <= 1e-8 * (1.0 + prod));
    }
}

#[test]
fn polar_orientation_and_reconstruction() {
    let mut stream = SeedStream::new(0xB2);
    for n in [2usize, 3, 4] {
        for _ in 0..50 {
            let mut m = stream.matrix_gaussian(n);
            if m.determinant() < 0.0 {
                m.column_mut(0).neg_mut();
            }
            let sd = spectral_data(&m).unwrap();
            let p = match sd.polar {
                Some(p) => p,
                None => continue,
            };
            assert!((p.rotation.determinant() - 1.0).abs() < 1e-8);
            assert!(((&p.rotation * &p.right_stretch) - &m).abs().max() < 1e-9 * (1.0 + m.abs().max()));
            assert!(((&p.left_stretch * &p.rotation) - &m).abs().max() < 1e-9 * (1.0 + m.abs().max()));
            // Stretches are symmetric positive definite.
            let (vals, _) = symmetric_eigen_desc(&p.right_stretch);
            assert!(vals.last().unwrap() > &0.0);
        }
    }
}

#[test]
fn weyl_sweep_over_dimensions() {
    let mut stream = SeedStream::new(0xB3);
    for n in [2usize, 3, 4] {
        let mut checked = 0;
        while checked < 300 {
            let m = stream.matrix_gaussian(n);
            let sd = spectral_data(&m).unwrap();
            if sd.singular_values[n - 1] < 1e-6 {
                continue;
            }
            let v = weyl_log_majorization_check(&m, 1e-9).unwrap();
            assert!(v.is_verified(), "n={n}: {v:?}");
            checked += 1;
        }
    }
}

#[test]
fn thompson_is_a_preorder_on_samples() {
    let mut stream = SeedStream::new(0xB4);
    let n = 3;
    let make = |stream: &mut SeedStream| -> DMatrix<f64> {
        loop {
            let m = stream.matrix_gaussian(n);
            if m.determinant() > 0.1 {
                return m;
            }
        }
    };
    for _ in 0..100 {
        let x = make(&mut stream);
        assert!(thompson_leq(&x, &x, 1e-9).unwrap());
    }
    // Transitivity on triples arranged by construction: X ≺ Y ≺ Z where
    // each step contracts the log singular values by an averaging chain.
    for _ in 0..50 {
        let z = make(&mut stream);
        let sd = spectral_data(&z).unwrap();
        let logs: Vec<f64> = sd.singular_values.iter().map(|v| v.ln()).collect();
        let mid = {
            let mut v = logs.clone();
            for _ in 0..2 {
                let (i, j) = stream.index_pair(n);
                let t = stream.uniform();
                v = apply_t_transform(&v, &TTransformStep { i, j, t }).unwrap();
            }
            v
        };
        let inner = {
            let mut v = mid.clone();
            for _ in 0..2 {
                let (i, j) = stream.index_pair(n);
                let t = stream.uniform();
                v = apply_t_transform(&v, &TTransformStep { i, j, t }).unwrap();
            }
            v
        };
        let diag = |v: &[f64]| {
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
                v.iter().map(|x| x.exp()).collect(),
            ))
        };
        let y = diag(&mid);
        let x = diag(&inner);
        assert!(thompson_leq(&y, &z, 3e-9).unwrap());
        assert!(thompson_leq(&x, &y, 3e-9).unwrap());
        assert!(thompson_leq(&x, &z, 3e-9).unwrap());
    }
}

#[test]
fn loewner_and_schur_product_sweeps() {
    let mut stream = SeedStream::new(0xB5);
    for n in [2usize, 3, 4] {
        for _ in 0..60 {
            let g = stream.matrix_gaussian(n);
            let sym = |m: &DMatrix<f64>| (m + m.transpose()) * 0.5;
            let a = sym(&stream.matrix_gaussian(n));
            let b = &a + &g * g.transpose();
            let pair = HermitianOrderPair::new(a.clone(), b.clone()).unwrap();
            assert!(loewner_monotonicity_check(&pair).unwrap().is_verified());

            let c_src = stream.matrix_gaussian(n);
            let c = &c_src * c_src.transpose();
            let pair = HermitianOrderPair::new(b, a).unwrap();
            assert!(schur_product_monotonicity_check(&pair, &c)
                .unwrap()
                .is_verified());
        }
    }
}

#[test]
fn diag_spectrum_sweep() {
    let mut stream = SeedStream::new(0xB6);
    for _ in 0..100 {
        let g = stream.matrix_gaussian(4);
        let a = (&g + g.transpose()) * 0.5;
        assert!(diag_spectrum_majorization_check(&a).unwrap().is_verified());
    }
}

#[test]
fn error_paths_are_surfaced() {
    // Thompson order needs positive determinants.
    let neg = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0]));
    let id = DMatrix::identity(2, 2);
    assert!(thompson_leq(&neg, &id, 1e-9).is_err());
    assert!(thompson_leq(&id, &neg, 1e-9).is_err());

    // Weyl check rejects numerically singular input.
    let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(weyl_log_majorization_check(&singular, 1e-9).is_err());

    // Asymmetry beyond tolerance is rejected.
    let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
    assert!(diag_spectrum_majorization_check(&skew).is_err());
    assert!(HermitianOrderPair::new(skew, DMatrix::identity(2, 2)).is_err());
}

#[test]
fn schur_horn_round_trip_from_chains() {
    let mut stream = SeedStream::new(0xB7);
    for n in 2..=5 {
        for _ in 0..40 {
            let b: Vec<f64> = (0..n).map(|_| stream.uniform_in(-3.0, 3.0)).collect();
            let mut a = b.clone();
            for _ in 0..stream.index(n) {
                let (i, j) = stream.index_pair(n);
                let t = stream.uniform();
                a = apply_t_transform(&a, &TTransformStep { i, j, t }).unwrap();
            }
            let m = schur_horn_construct(&a, &b).unwrap();
            for (k, &target) in a.iter().enumerate() {
                assert!(
                    (m[(k, k)] - target).abs() <= 1e-10,
                    "diag error {:.3e}",
                    (m[(k, k)] - target).abs()
                );
            }
            let (mut vals, _) = symmetric_eigen_desc(&m);
            vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let mut sorted_b = b.clone();
            sorted_b.sort_by(|x, y| y.partial_cmp(x).unwrap());
            for (v, t) in vals.iter().zip(&sorted_b) {
                assert!((v - t).abs() <= 1e-8, "spectrum error {:.3e}", (v - t).abs());
            }
            assert!(diag_spectrum_majorization_check(&m).unwrap().is_verified());
        }
    }
}
