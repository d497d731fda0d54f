mod common;

use cfqmc_core::kernels::{gram, kernel_integral_1d, phi, KernelSpec, Smoothness};
use cfqmc_core::points::{Generator, PointSet, Provenance};
use common::{gauss_legendre, integrate};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn quadrature_oracle_sanity() {
    let (x, w) = gauss_legendre(10);
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    assert!(x.windows(2).all(|p| p[0] < p[1]));
    assert!((integrate(|t| t.powi(19), 0.0, 1.0, &[]) - 0.05).abs() < 1e-15);
    assert!((integrate(f64::exp, 0.0, 1.0, &[]) - (1f64.exp() - 1.0)).abs() < 1e-14);
    let kink = integrate(|t| (t - 0.3f64).abs(), 0.0, 1.0, &[0.3]);
    assert!((kink - (0.045 + 0.245)).abs() < 1e-15);
}

#[test]
fn single_integral_matches_quadrature_on_grid() {
    for k in Smoothness::ALL {
        for rho in [0.5, 1.0] {
            for i in 0..=100 {
                let y = i as f64 / 100.0;
                let closed = kernel_integral_1d(k, rho, y).unwrap();
                let oracle = integrate(
                    |x| phi(k, (x - y).abs() / rho),
                    0.0,
                    1.0,
                    &[y - rho, y, y + rho],
                );
                assert!(
                    (closed - oracle).abs() <= 1e-10,
                    "k={k:?} rho={rho} y={y}: {closed} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn double_integral_matches_nested_quadrature() {
    for k in Smoothness::ALL {
        for rho in [0.3, 0.5, 1.0] {
            let one_axis = integrate(
                |y| {
                    integrate(
                        |x| phi(k, (x - y).abs() / rho),
                        0.0,
                        1.0,
                        &[y - rho, y, y + rho],
                    )
                },
                0.0,
                1.0,
                &[rho, 1.0 - rho],
            );
            for dim in 1..=3 {
                let spec = KernelSpec::new(k, dim, rho).unwrap();
                let oracle = one_axis.powi(dim as i32);
                assert!(
                    (spec.double_integral() - oracle).abs() <= 1e-10,
                    "k={k:?} rho={rho} d={dim}"
                );
            }
        }
    }
}

/// `I[p](r) = int_r^1 t p(t) dt`, applied numerically.
fn apply_i(p: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    integrate(|t| t * p(t), r, 1.0, &[])
}

#[test]
fn closed_forms_match_the_recursion() {
    let phi1 = |r: f64| apply_i(&|t: f64| (1.0 - t).powi(2), r);
    let phi2 = |r: f64| apply_i(&|s: f64| apply_i(&|t: f64| (1.0 - t).powi(3), s), r);
    let cases: [(Smoothness, &dyn Fn(f64) -> f64); 2] =
        [(Smoothness::K1, &phi1), (Smoothness::K2, &phi2)];
    for (k, raw) in cases {
        let norm = raw(0.0);
        for i in 0..100 {
            let r = i as f64 / 100.0;
            let oracle = raw(r) / norm;
            assert!((phi(k, r) - oracle).abs() <= 1e-8, "k={k:?} r={r}");
        }
    }
    for i in 0..100 {
        let r = i as f64 / 100.0;
        assert_eq!(phi(Smoothness::K0, r), 1.0 - r);
    }
}

#[test]
fn k1_has_a_flat_derivative_at_the_support_edge() {
    let mut previous = f64::INFINITY;
    for h in [1e-2, 1e-3, 1e-4, 1e-5] {
        let slope = (phi(Smoothness::K1, 1.0 - h) - phi(Smoothness::K1, 1.0)) / h;
        assert!(slope.abs() < previous);
        previous = slope.abs();
    }
    assert!(previous < 1e-8);
}

#[test]
fn gram_matrices_are_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for trial in 0..50 {
        let dim = 1 + trial % 3;
        let m = rng.gen_range(2..=40);
        let coords: Vec<f64> = (0..m * dim).map(|_| rng.gen()).collect();
        let nodes =
            PointSet::from_coords(dim, coords, Provenance::new(Generator::Uniform, 0)).unwrap();
        let k = Smoothness::ALL[(trial / 3) % 3];
        let rho = [0.25, 0.6, 1.0][(trial / 9) % 3];
        let spec = KernelSpec::new(k, dim, rho).unwrap();
        let g = gram(&spec, &nodes, 0.0).unwrap();
        let mat = DMatrix::from_row_slice(m, m, g.as_slice());
        let smallest = SymmetricEigen::new(mat).eigenvalues.min();
        assert!(smallest >= -1e-10, "trial {trial}: {smallest}");
    }
}
