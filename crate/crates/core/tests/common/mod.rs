//! Independent oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls the determinant formulas under test: marginals come
//! from Student-t predictive chains or from numerical integration.

#![allow(dead_code)]

use std::f64::consts::PI;

use hdmix::partition::{enumerate_partitions, CrpPrior, Partition, PartitionPrior};
use hdmix::{ClusterView, Matrix, NiwPrior};
use nalgebra::{DMatrix, DVector};
use quadrature::double_exponential::integrate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

pub fn gaussian(n: usize, p: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

/// Log density of a multivariate t with `dof` degrees of freedom.
pub fn mvt_log_density(y: &[f64], loc: &[f64], scale: &DMatrix<f64>, dof: f64) -> f64 {
    let p = y.len() as f64;
    let chol = scale.clone().cholesky().expect("scale must be SPD");
    let d = DVector::from_iterator(y.len(), y.iter().zip(loc).map(|(a, b)| a - b));
    let q = d.dot(&chol.solve(&d));
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    ln_gamma((dof + p) / 2.0) - ln_gamma(dof / 2.0) - p / 2.0 * (dof * PI).ln() - 0.5 * log_det
        - (dof + p) / 2.0 * (q / dof).ln_1p()
}

/// Dense NIW hyperparameters for the oracles.
#[derive(Clone, Debug)]
pub struct Hyper {
    pub mu0: Vec<f64>,
    pub kappa0: f64,
    pub nu0: f64,
    pub lambda0: DMatrix<f64>,
}

impl Hyper {
    pub fn isotropic(p: usize, mu0: f64, kappa0: f64, nu0: f64, lambda: f64) -> Self {
        Self {
            mu0: vec![mu0; p],
            kappa0,
            nu0,
            lambda0: DMatrix::identity(p, p) * lambda,
        }
    }

    /// Posterior predictive t parameters `(loc, scale, dof)`.
    pub fn predictive(&self) -> (Vec<f64>, DMatrix<f64>, f64) {
        let p = self.mu0.len() as f64;
        let dof = self.nu0 - p + 1.0;
        let scale = &self.lambda0 * ((self.kappa0 + 1.0) / (self.kappa0 * dof));
        (self.mu0.clone(), scale, dof)
    }

    /// Conjugate update by one observation.
    pub fn update(&self, y: &[f64]) -> Self {
        let k = self.kappa0;
        let d = DVector::from_iterator(y.len(), y.iter().zip(&self.mu0).map(|(a, b)| a - b));
        Self {
            mu0: self.mu0.iter().zip(y).map(|(m, v)| (k * m + v) / (k + 1.0)).collect(),
            kappa0: k + 1.0,
            nu0: self.nu0 + 1.0,
            lambda0: &self.lambda0 + (&d * d.transpose()) * (k / (k + 1.0)),
        }
    }
}

/// `ln p(y₁…yₙ)` as a product of sequential Student-t predictives.
pub fn predictive_chain_log_marginal(rows: &[Vec<f64>], h: &Hyper) -> f64 {
    let mut h = h.clone();
    let mut total = 0.0;
    for y in rows {
        let (loc, scale, dof) = h.predictive();
        total += mvt_log_density(y, &loc, &scale, dof);
        h = h.update(y);
    }
    total
}

/// `∫₀^∞ f(x) dx` through `x = t/(1−t)`.
fn half_line(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    integrate(
        |t| {
            let x = t / (1.0 - t);
            f(x) / ((1.0 - t) * (1.0 - t))
        },
        0.0,
        1.0,
        tol,
    )
    .integral
}

/// `∫_{−∞}^{∞} f(x) dx` through `x = c + s·u/(1−u²)`.
fn real_line(f: impl Fn(f64) -> f64, c: f64, s: f64, tol: f64) -> f64 {
    integrate(
        |u| {
            let w = 1.0 - u * u;
            f(c + s * u / w) * s * (1.0 + u * u) / (w * w)
        },
        -1.0,
        1.0,
        tol,
    )
    .integral
}

/// Multivariate t density as the Gaussian scale mixture
/// `∫ N(y; loc, scale/w) Gamma(w; dof/2, rate dof/2) dw`, by quadrature.
pub fn mvt_density_by_quadrature(y: &[f64], loc: &[f64], scale: &DMatrix<f64>, dof: f64) -> f64 {
    let p = y.len() as f64;
    let chol = scale.clone().cholesky().unwrap();
    let d = DVector::from_iterator(y.len(), y.iter().zip(loc).map(|(a, b)| a - b));
    let q = d.dot(&chol.solve(&d));
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let a = dof / 2.0;
    half_line(
        |w| {
            if w <= 0.0 || !w.is_finite() {
                return 0.0;
            }
            let normal = -p / 2.0 * (2.0 * PI).ln() - 0.5 * (log_det - p * w.ln()) - 0.5 * w * q;
            let gamma = a * a.ln() - ln_gamma(a) + (a - 1.0) * w.ln() - a * w;
            (normal + gamma).exp()
        },
        1e-14,
    )
}

/// `p = 1` marginal of a sample by nested quadrature over `(μ, σ²)` of
/// `Π N(yᵢ; μ, σ²) · N(μ; μ₀, σ²/κ₀) · InvGamma(σ²; ν₀/2, λ/2)`.
pub fn p1_marginal_by_quadrature(ys: &[f64], mu0: f64, kappa0: f64, nu0: f64, lambda: f64) -> f64 {
    let (a, b) = (nu0 / 2.0, lambda / 2.0);
    let n = ys.len() as f64;
    let center = (kappa0 * mu0 + ys.iter().sum::<f64>()) / (kappa0 + n);
    half_line(
        |s2| {
            if s2 <= 0.0 || !s2.is_finite() {
                return 0.0;
            }
            let log_ig = a * b.ln() - ln_gamma(a) - (a + 1.0) * s2.ln() - b / s2;
            let inner = real_line(
                |mu| {
                    let ll: f64 = ys
                        .iter()
                        .map(|y| -0.5 * (2.0 * PI * s2).ln() - (y - mu).powi(2) / (2.0 * s2))
                        .sum();
                    let lp = -0.5 * (2.0 * PI * s2 / kappa0).ln() - kappa0 * (mu - mu0).powi(2) / (2.0 * s2);
                    (ll + lp + log_ig).exp()
                },
                center,
                s2.sqrt(),
                1e-15,
            );
            inner
        },
        1e-13,
    )
}

/// Exact partition posterior over all set partitions of the rows.
pub fn exact_posterior(data: &Matrix, prior: &NiwPrior, crp: &CrpPrior) -> Vec<(Partition, f64)> {
    let parts = enumerate_partitions(data.rows());
    let logs: Vec<f64> = parts
        .iter()
        .map(|p| {
            crp.log_eppf(p.sizes())
                + p.clusters()
                    .iter()
                    .map(|idx| hdmix::niw::cluster_log_marginal(&ClusterView::from_indices(data, idx), prior).unwrap())
                    .sum::<f64>()
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    parts.into_iter().zip(logs.iter().map(|l| (l - max).exp() / z)).collect()
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.to_vec()).collect()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
