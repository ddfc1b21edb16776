mod common;

use approx::assert_relative_eq;
use common::*;
use hdmix::linalg::SymMatrix;
use hdmix::niw::{cluster_log_marginal, cluster_log_marginal_dual, log_marginal, ScaleMatrix};
use hdmix::{ClusterView, Matrix, NiwPrior};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single(y: &[f64]) -> ClusterView {
    ClusterView::new(Matrix::from_rows(&[y]).unwrap())
}

#[test]
fn single_point_p1_is_student_t() {
    let prior = NiwPrior::isotropic(1, 0.0, 1.0, 3.0, 1.0).unwrap();
    let h = Hyper::isotropic(1, 0.0, 1.0, 3.0, 1.0);
    let (loc, scale, dof) = h.predictive();
    assert_eq!(dof, 3.0);
    assert_relative_eq!(scale[(0, 0)], 2.0 / 3.0, max_relative = 1e-15);
    let oracle = mvt_log_density(&[0.0], &loc, &scale, dof);
    let got = log_marginal(&single(&[0.0]), &prior).unwrap();
    assert!((got - oracle).abs() < 1e-9);
    assert!((oracle + 0.79815).abs() < 1e-5);
    assert_eq!(format!("{:.6}", oracle.exp()), "0.450158");
}

#[test]
fn single_points_up_to_p3_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for p in 1..=3 {
        for _ in 0..5 {
            let kappa = rng.gen_range(0.3..4.0);
            let nu = p as f64 - 1.0 + rng.gen_range(0.5..6.0);
            let lambda = rng.gen_range(0.2..3.0);
            let mu = rng.gen_range(-1.0..1.0);
            let y: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let prior = NiwPrior::isotropic(p, mu, kappa, nu, lambda).unwrap();
            let (loc, scale, dof) = Hyper::isotropic(p, mu, kappa, nu, lambda).predictive();
            let quad = mvt_density_by_quadrature(&y, &loc, &scale, dof);
            let got = cluster_log_marginal(&single(&y), &prior).unwrap();
            assert!(((got.exp() - quad) / quad).abs() < 1e-6, "p={p}: {} vs {quad}", got.exp());
        }
    }
}

#[test]
fn p1_samples_match_two_dimensional_quadrature() {
    for (ys, mu0, k, nu, lam) in [
        (vec![0.0, 0.0], 0.0, 1.0, 3.0, 1.0),
        (vec![0.3, -1.1], 0.5, 2.0, 4.5, 0.7),
        (vec![1.0, 2.0, 0.5], -0.2, 0.5, 2.5, 2.0),
    ] {
        let prior = NiwPrior::isotropic(1, mu0, k, nu, lam).unwrap();
        let data = Matrix::from_vec(ys.len(), 1, ys.clone()).unwrap();
        let got = cluster_log_marginal(&ClusterView::new(data), &prior).unwrap();
        let quad = p1_marginal_by_quadrature(&ys, mu0, k, nu, lam);
        assert!(((got.exp() - quad) / quad).abs() < 1e-6, "{ys:?}: {} vs {quad}", got.exp());
    }
}

#[test]
fn samples_match_predictive_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..30 {
        let p = rng.gen_range(1..8);
        let n = rng.gen_range(1..10);
        let kappa = rng.gen_range(0.2..5.0);
        let nu = p as f64 - 1.0 + rng.gen_range(0.3..10.0);
        let lambda = rng.gen_range(0.2..4.0);
        let mu = rng.gen_range(-1.0..1.0);
        let data = gaussian(n, p, trial);
        let prior = NiwPrior::isotropic(p, mu, kappa, nu, lambda).unwrap();
        let oracle = predictive_chain_log_marginal(&rows_of(&data), &Hyper::isotropic(p, mu, kappa, nu, lambda));
        let c = ClusterView::new(data);
        for got in [
            cluster_log_marginal(&c, &prior).unwrap(),
            cluster_log_marginal_dual(&c, &prior).unwrap(),
        ] {
            assert!((got - oracle).abs() < 1e-9 * oracle.abs().max(1.0), "{got} vs {oracle}");
        }
    }
}

#[test]
fn full_scale_matrix_matches_predictive_chain() {
    let p = 4;
    let a = gaussian(p, p, 99);
    let mut lam = a.cross();
    lam.add_diag(0.5);
    let mu = vec![0.1, -0.2, 0.3, 0.0];
    let prior = NiwPrior::new(mu.clone(), 1.5, 7.0, ScaleMatrix::full(lam.clone()).unwrap()).unwrap();
    let data = gaussian(6, p, 100);
    let h = Hyper {
        mu0: mu,
        kappa0: 1.5,
        nu0: 7.0,
        lambda0: DMatrix::from_row_slice(p, p, lam.as_slice()),
    };
    let oracle = predictive_chain_log_marginal(&rows_of(&data), &h);
    let c = ClusterView::new(data);
    assert_relative_eq!(cluster_log_marginal(&c, &prior).unwrap(), oracle, max_relative = 1e-10);
    assert_relative_eq!(cluster_log_marginal_dual(&c, &prior).unwrap(), oracle, max_relative = 1e-10);
}

#[test]
fn indefinite_scale_rejected() {
    let bad = SymMatrix::from_vec(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
    assert!(ScaleMatrix::full(bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn primal_equals_dual(n in 1usize..20, p in 1usize..120, seed in 0u64..100_000,
                          kappa in 0.05f64..20.0, excess in 0.1f64..30.0,
                          lambda in 0.05f64..50.0, mu in -2.0f64..2.0) {
        let prior = NiwPrior::isotropic(p, mu, kappa, p as f64 - 1.0 + excess, lambda).unwrap();
        let c = ClusterView::new(gaussian(n, p, seed));
        let a = cluster_log_marginal(&c, &prior).unwrap();
        let b = cluster_log_marginal_dual(&c, &prior).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{} vs {}", a, b);
    }
}
