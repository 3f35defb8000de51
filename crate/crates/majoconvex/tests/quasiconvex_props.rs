//! Quasiconvexity-pipeline properties: the spectral lemmas, the product
//! route hypotheses, quadrature behavior on the deformation catalog, the
//! proof-chain monotonicity, and the determinant route.

use majoconvex::matrix_orders::spectral_data;
use majoconvex::potentials::{PotentialKind, PotentialSpec};
use majoconvex::quasiconvex::{
    chain_quantities, lemma_exponential_product_check, lemma_weyl_domination_check,
    make_deformation, mean_log_stretch, quasiconvexity_quadrature, schur_route_check,
    standard_catalog, texe_hypothesis_check, DeformationKind, QuadratureGrid,
};
use majoconvex::rng::SeedStream;
use majoconvex::sampling::SamplingPlan;
use majoconvex::VerdictStatus;
use nalgebra::{DMatrix, DVector};

fn neg_log_det() -> PotentialSpec {
    PotentialSpec::analytic(PotentialKind::NegLogDet).unwrap()
}
fn log_trace_inv_u() -> PotentialSpec {
    PotentialSpec::analytic(PotentialKind::LogTraceInvU).unwrap()
}
fn power_sum(p: f64) -> PotentialSpec {
    PotentialSpec::analytic(PotentialKind::PowerSum { p }).unwrap()
}
fn modified_ogden(alpha: f64) -> PotentialSpec {
    PotentialSpec::analytic(PotentialKind::ModifiedOgden { alpha }).unwrap()
}

fn diag2(a: f64, b: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]))
}

#[test]
fn w_tilde_rejects_zero_modulus() {
    // A nilpotent-plus-identity block with a zero eigenvalue modulus.
    let singular_spectrum = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
    let lti = log_trace_inv_u();
    assert!(lti.eval_w_tilde(&singular_spectrum).is_err());
}

#[test]
fn w_tilde_examples() {
    let lti = log_trace_inv_u();
    // Symmetric positive definite: the companions agree.
    let spd = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
    let w = lti.eval_potential(&spd).unwrap();
    let wt = lti.eval_w_tilde(&spd).unwrap();
    assert!((w - wt).abs() < 1e-12);

    // Unipotent shear: both eigenvalue moduli are one.
    let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let nld = neg_log_det();
    assert!(nld.eval_w_tilde(&shear).unwrap().abs() < 1e-12);

    // Rotations: unit-modulus spectrum for any spec.
    let mut stream = SeedStream::new(1);
    let rot = stream.rotation(3);
    let v = lti.eval_w_tilde(&rot).unwrap();
    assert!((v - 3.0f64.ln()).abs() < 1e-9);
}

#[test]
fn lemma_weyl_domination() {
    let lti = log_trace_inv_u();
    // Normal matrices: equality.
    let spd = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
    let v = lemma_weyl_domination_check(&lti, &spd, 1e-9).unwrap();
    assert!(v.is_verified());
    assert!(v.worst_margin.abs() < 1e-9);

    // Strict gap for the shear.
    let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let v = lemma_weyl_domination_check(&lti, &shear, 1e-9).unwrap();
    assert!(v.is_verified());
    assert!(v.worst_margin > 1e-3);

    // Sweep with the Ogden potential.
    let og = modified_ogden(2.0);
    let mut stream = SeedStream::new(0xD1);
    let mut checked = 0;
    while checked < 300 {
        let m = stream.matrix_gaussian(3);
        let sd = spectral_data(&m).unwrap();
        if sd.singular_values[2] < 1e-3 || sd.eigenvalue_moduli[2] < 1e-3 {
            continue;
        }
        let v = lemma_weyl_domination_check(&og, &m, 1e-9).unwrap();
        assert!(v.is_verified(), "{v:?}");
        checked += 1;
    }

    // Potentials without Schur-convex diagonal are inconclusive.
    let neg_sum = PotentialSpec::analytic(PotentialKind::OgdenSum {
        terms: vec![(-1.0, 1.0)],
    })
    .unwrap();
    let v = lemma_weyl_domination_check(&neg_sum, &spd, 1e-9).unwrap();
    assert_eq!(v.status, VerdictStatus::Inconclusive);
}

#[test]
fn lemma_exponential_product() {
    let lti = log_trace_inv_u();
    let sym = |m: &DMatrix<f64>| (m + m.transpose()) * 0.5;
    let mut stream = SeedStream::new(0xD2);

    // B = 0 gives equality.
    let a = sym(&stream.matrix_gaussian(3));
    let v = lemma_exponential_product_check(&lti, &a, &DMatrix::zeros(3, 3), 1e-9).unwrap();
    assert!(v.is_verified());
    assert!(v.worst_margin.abs() < 1e-9);

    // Commuting (diagonal) pairs give equality.
    let da = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -0.2, 0.8]));
    let db = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.5, 0.1, 0.4]));
    let v = lemma_exponential_product_check(&lti, &da, &db, 1e-9).unwrap();
    assert!(v.is_verified());
    assert!(v.worst_margin.abs() < 1e-9);

    // Seeded sweep.
    for _ in 0..300 {
        let a = sym(&stream.matrix_gaussian(3));
        let b = sym(&stream.matrix_gaussian(3));
        let v = lemma_exponential_product_check(&lti, &a, &b, 1e-9).unwrap();
        assert!(v.is_verified(), "{v:?}");
    }

    // Overflow guard.
    let big = DMatrix::from_diagonal(&DVector::from_vec(vec![400.0, 0.0, -400.0]));
    let v = lemma_exponential_product_check(&lti, &big, &big, 1e-9).unwrap();
    assert_eq!(v.status, VerdictStatus::Inconclusive);
}

#[test]
fn thompson_sufficient_conditions() {
    // (1) w~(X Y) = w~(Y X) for invertible X and SPD Y; (2) the even-power
    // domination w~((X X^T)^m) >= w~(X^{2m}).
    let lti = log_trace_inv_u();
    let og = modified_ogden(2.0);
    let mut stream = SeedStream::new(0xD3);
    let mut checked = 0;
    while checked < 200 {
        let x = stream.matrix_gaussian(3);
        let sd = spectral_data(&x).unwrap();
        if sd.singular_values[2] < 5e-2 || sd.eigenvalue_moduli[2] < 5e-2 {
            continue;
        }
        let g = stream.matrix_gaussian(3);
        let y = &g * g.transpose() + DMatrix::identity(3, 3) * 0.1;

        for spec in [&lti, &og] {
            let lhs = spec.eval_w_tilde(&(&x * &y)).unwrap();
            let rhs = spec.eval_w_tilde(&(&y * &x)).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()));

            for m in 1..=3u32 {
                let xxt = &x * x.transpose();
                let mut pow_xxt = DMatrix::identity(3, 3);
                for _ in 0..m {
                    pow_xxt = &pow_xxt * &xxt;
                }
                let mut pow_x = DMatrix::identity(3, 3);
                for _ in 0..(2 * m) {
                    pow_x = &pow_x * &x;
                }
                let lhs = spec.eval_w_tilde(&pow_xxt).unwrap();
                let rhs = spec.eval_w_tilde(&pow_x).unwrap();
                assert!(
                    lhs - rhs >= -1e-9 * (1.0 + rhs.abs()),
                    "m={m}: {lhs} < {rhs}"
                );
            }
        }
        checked += 1;
    }
}

#[test]
fn texe_hypotheses_on_catalog() {
    let plan = SamplingPlan::cube(0xD4, 150, 3, -2.0, 2.0).unwrap();

    let v = texe_hypothesis_check(&log_trace_inv_u(), &plan).unwrap();
    assert!(v.is_verified(), "{v:?}");
    // The two readings of the monotonicity hypothesis disagree here.
    assert!(v.detail.as_ref().unwrap().contains("readings disagree"));

    let v = texe_hypothesis_check(&modified_ogden(2.0), &plan).unwrap();
    assert!(v.is_verified(), "{v:?}");

    let v = texe_hypothesis_check(&neg_log_det(), &plan).unwrap();
    assert!(v.is_verified(), "{v:?}");
    // h = -sum x is a function of the total alone: readings agree.
    assert!(v.detail.is_none());

    // Increasing diagonal: condition (b) refuted.
    let v = texe_hypothesis_check(&power_sum(2.0), &plan).unwrap();
    assert!(v.is_refuted());
    let w = v.witness.unwrap();
    assert!(w.input["condition"].as_str().unwrap().starts_with("b"));
}

#[test]
fn quadrature_identity_and_catalog_margins() {
    let grid = QuadratureGrid::new(32, 2).unwrap();
    let f_set = vec![
        DMatrix::identity(2, 2),
        diag2(2.0, 0.5),
        {
            let th: f64 = std::f64::consts::PI / 6.0;
            DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()])
                * diag2(3.0, 1.0 / 3.0)
        },
    ];
    for spec in [log_trace_inv_u(), modified_ogden(2.0)] {
        for f in &f_set {
            for d in standard_catalog(2).unwrap() {
                let report = quasiconvexity_quadrature(&spec, f, &d, &grid).unwrap();
                assert!(
                    report.verified,
                    "{} {:?}: margin {} est {}",
                    spec.name(),
                    d.kind,
                    report.margin,
                    report.discretization_error_estimate
                );
                if matches!(d.kind, DeformationKind::Identity) {
                    assert_eq!(report.margin, 0.0);
                }
            }
        }
    }
}

#[test]
fn quadrature_falsifier_sanity_power_sum() {
    // power_sum(2) fails the product-route hypotheses yet the energy
    // inequality itself holds at F = I (the potential is convex); the
    // quadrature must not conflate the two.
    let spec = power_sum(2.0);
    let plan = SamplingPlan::cube(0xD5, 100, 2, -2.0, 2.0).unwrap();
    assert!(texe_hypothesis_check(&spec, &plan).unwrap().is_refuted());

    let grid = QuadratureGrid::new(32, 2).unwrap();
    for d in standard_catalog(2).unwrap() {
        let report =
            quasiconvexity_quadrature(&spec, &DMatrix::identity(2, 2), &d, &grid).unwrap();
        assert!(report.margin >= 0.0, "{:?}: {}", d.kind, report.margin);
    }
}

#[test]
fn quadrature_convergence_matches_estimates() {
    let spec = log_trace_inv_u();
    let grid = QuadratureGrid::new(16, 3).unwrap();
    let d = make_deformation(
        DeformationKind::BumpShear {
            dir: 0,
            axis: 1,
            amplitude: 0.1,
            exponent: 2.0,
        },
        2,
    )
    .unwrap();
    let report =
        quasiconvexity_quadrature(&spec, &diag2(2.0, 0.5), &d, &grid).unwrap();
    // Successive level differences shrink and the last difference is
    // controlled by the reported estimate.
    let lv = &report.level_values;
    let d1 = (lv[1] - lv[0]).abs();
    let d2 = (lv[2] - lv[1]).abs();
    assert!(d2 < d1, "no convergence: {lv:?}");
    assert!(d2 <= 3.5 * report.discretization_error_estimate);
}

#[test]
fn chain_monotonicity_on_catalog() {
    // Integrated product-route chain: w energies decrease along
    // w(F Dphi) -> w~(U_F Vphi) -> w~(exp(log U_F + log Vphi)) -> w(F).
    let grid = QuadratureGrid::new(24, 1).unwrap();
    let f_set = vec![DMatrix::identity(2, 2), diag2(2.0, 0.5)];
    for spec in [neg_log_det(), log_trace_inv_u(), modified_ogden(2.0)] {
        for f in &f_set {
            for d in standard_catalog(2).unwrap() {
                let [q1, q2, q3, q4] = chain_quantities(&spec, f, &d, &grid).unwrap();
                let tol = 1e-9 * (1.0 + q1.abs());
                assert!(q1 >= q2 - tol, "{}: q1 {q1} < q2 {q2}", spec.name());
                assert!(q2 >= q3 - tol, "{}: q2 {q2} < q3 {q3}", spec.name());
                assert!(q3 >= q4 - tol, "{}: q3 {q3} < q4 {q4}", spec.name());
            }
        }
    }
}

#[test]
fn mean_log_stretch_identity_is_zero() {
    let d = make_deformation(DeformationKind::Identity, 2).unwrap();
    let grid = QuadratureGrid::new(16, 2).unwrap();
    let report = mean_log_stretch(&d, &grid).unwrap();
    assert!(report.mean_log_stretch.abs().max() < 1e-14);
    assert!(report.verdict.is_verified());
    for v in &report.eigenvalue_integrals {
        assert!(v.abs() < 1e-14);
    }
}

#[test]
fn mean_log_stretch_shear_has_positive_top_eigenvalue() {
    // The shear's mean log stretch is traceless with eigenvalues close to
    // +-(integral of c^2)/4 where c is the shear rate; the top one is
    // genuinely positive, far beyond the discretization estimate, and the
    // top log-singular-value integral is positive as well. The claimed
    // negative semidefiniteness is refuted by this deformation.
    let d = make_deformation(
        DeformationKind::BumpShear {
            dir: 0,
            axis: 1,
            amplitude: 0.1,
            exponent: 2.0,
        },
        2,
    )
    .unwrap();
    let grid = QuadratureGrid::new(32, 3).unwrap();
    let report = mean_log_stretch(&d, &grid).unwrap();
    assert!(report.verdict.is_refuted());
    assert!(report.max_eigenvalue > 100.0 * report.error_estimate);
    // c(t) = 0.1 * beta'(t), integral of c^2 / 4 = 0.01 * 4.876 / 4.
    let predicted = 0.01 * 4.8761904761904745 / 4.0;
    assert!(
        (report.max_eigenvalue - predicted).abs() < 0.15 * predicted,
        "max eig {} vs second-order prediction {predicted}",
        report.max_eigenvalue
    );
    assert!(report.eigenvalue_integrals[0] > 0.0);
    // The smallest index is the one that genuinely integrates nonpositive.
    assert!(report.eigenvalue_integrals[1] <= report.eigenvalue_error_estimates[1]);
}

#[test]
fn schur_route_examples() {
    let grid = QuadratureGrid::new(24, 2).unwrap();

    // Unimodular catalog plus neg_log_det: both sides vanish identically.
    let shear = make_deformation(
        DeformationKind::BumpShear {
            dir: 0,
            axis: 1,
            amplitude: 0.1,
            exponent: 2.0,
        },
        2,
    )
    .unwrap();
    let v = schur_route_check(&neg_log_det(), &shear, &grid).unwrap();
    assert!(v.is_verified());
    assert!(v.worst_margin.abs() < 1e-12, "{v:?}");

    let twist = make_deformation(DeformationKind::RadialTwist { amplitude: 0.25 }, 2).unwrap();
    let v = schur_route_check(&log_trace_inv_u(), &twist, &grid).unwrap();
    assert!(v.is_verified(), "{v:?}");

    let ident = make_deformation(DeformationKind::Identity, 2).unwrap();
    let v = schur_route_check(&log_trace_inv_u(), &ident, &grid).unwrap();
    assert!(v.is_verified());
    assert!(v.worst_margin.abs() < 1e-12);

    // Hypothesis failure: the negated trace has no Schur-convex diagonal.
    let neg_sum = PotentialSpec::analytic(PotentialKind::OgdenSum {
        terms: vec![(-1.0, 1.0)],
    })
    .unwrap();
    let v = schur_route_check(&neg_sum, &shear, &grid).unwrap();
    assert_eq!(v.status, VerdictStatus::Inconclusive);
}

#[test]
fn laminate_average_refutes_both_section_six_examples() {
    // A two-slope laminate along a rank-one direction u v^T with slopes
    // +-gamma on equal halves has exact energy average
    // (w(F + gamma a b^T) + w(F - gamma a b^T)) / 2 with a b^T = F u v^T.
    // Along the negative-second-variation witnesses of the rank-one test,
    // that average drops below w(F) at finite amplitude: the energy
    // inequality itself fails for both product-route example potentials,
    // not merely its second-order version.
    let lti = log_trace_inv_u();
    let y = [0.20630714f64, 1.79400214];
    let a = unit2(&[0.30965571, -0.95084875]);
    let b = unit2(&[-0.19802124, -0.98019773]);
    let f = DMatrix::from_diagonal(&DVector::from_vec(y.to_vec()));
    let dir = DMatrix::from_fn(2, 2, |i, j| a[i] * b[j]);
    for (gamma, expected) in [(0.1, -3.97e-4), (0.3, -3.52e-3)] {
        let plus = &f + gamma * &dir;
        let minus = &f - gamma * &dir;
        assert!(plus.determinant() > 0.0 && minus.determinant() > 0.0);
        let avg = 0.5 * (lti.eval_potential(&plus).unwrap() + lti.eval_potential(&minus).unwrap());
        let margin = avg - lti.eval_potential(&f).unwrap();
        assert!(margin < 0.5 * expected, "gamma={gamma}: margin {margin}");
        assert!((margin - expected).abs() < 0.1 * expected.abs());
    }

    let og = modified_ogden(2.0);
    let y = [0.72281731f64, 2.19356175, 0.33498437];
    let x = [0.78117801f64, 3.94027427, -0.33672651];
    let a: Vec<f64> = x.iter().map(|v| v.abs().sqrt()).collect();
    let b: Vec<f64> = x.iter().map(|v| v.signum() * v.abs().sqrt()).collect();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let f = DMatrix::from_diagonal(&DVector::from_vec(y.to_vec()));
    let dir = DMatrix::from_fn(3, 3, |i, j| a[i] * b[j] / (na * nb));
    let gamma = 0.1;
    let plus = &f + gamma * &dir;
    let minus = &f - gamma * &dir;
    assert!(plus.determinant() > 0.0 && minus.determinant() > 0.0);
    let avg = 0.5 * (og.eval_potential(&plus).unwrap() + og.eval_potential(&minus).unwrap());
    let margin = avg - og.eval_potential(&f).unwrap();
    assert!(margin < -1e-3, "margin {margin}");
}

fn unit2(v: &[f64; 2]) -> Vec<f64> {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    vec![v[0] / n, v[1] / n]
}

#[test]
fn deformation_certification_boundaries() {
    // Certified bound respected on dense probes for the laminate and shear.
    for n in [2usize, 3] {
        for d in standard_catalog(n).unwrap() {
            let mut stream = SeedStream::new(0xD6);
            for _ in 0..300 {
                let x: Vec<f64> = (0..n).map(|_| stream.uniform()).collect();
                let g = d.gradient(&x);
                let dev = (&g - DMatrix::identity(n, n)).norm();
                assert!(
                    dev <= d.gradient_bound + 1e-12,
                    "{:?} n={n}: observed {dev} certified {}",
                    d.kind,
                    d.gradient_bound
                );
                assert!((g.determinant() - 1.0).abs() < 1e-12);
            }
        }
    }
    // Uncertifiable amplitudes are rejected.
    assert!(make_deformation(
        DeformationKind::BumpShear {
            dir: 0,
            axis: 1,
            amplitude: 0.5,
            exponent: 2.0
        },
        2
    )
    .is_err());
}
