//! Normal–Inverse-Wishart prior and the cluster marginal likelihood.
//!
//! A cluster's marginal likelihood has two equivalent evaluations:
//!
//! * **primal**: the `p × p` determinant `|Λ₀ + S + n κ₀/(n+κ₀) (ȳ−μ₀)(ȳ−μ₀)ᵀ|`
//! * **dual**: after whitening `ỹ = Λ₀^{-1/2}(y − μ₀)` the same determinant is
//!   `|Λ₀| · |I_n + ỸỸᵀ| · (κ₀ + 1ᵀ(I_n + ỸỸᵀ)⁻¹1) / (n + κ₀)`,
//!   which costs `O(p n² + n³)` and never touches a `p × p` matrix.
//!
//! The scalar factor follows from the matrix determinant lemma together with
//! `Ỹ(I_p + ỸᵀỸ)⁻¹Ỹᵀ = I_n − (I_n + ỸỸᵀ)⁻¹`.

use std::borrow::Cow;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, CholFactor, Matrix, SymMatrix};
use crate::special::{log_multigamma_ratio, GammaRatioSpec};

/// IW scale matrix. Scalar multiples of the identity are kept implicit so
/// that priors in `p ~ 10⁵` dimensions stay cheap.
#[derive(Clone, Debug)]
pub enum ScaleMatrix {
    Scalar { dim: usize, value: f64 },
    Full { matrix: SymMatrix, chol: CholFactor },
}

impl ScaleMatrix {
    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: 0,
                pivot: value,
            });
        }
        Ok(ScaleMatrix::Scalar { dim, value })
    }

    pub fn full(matrix: SymMatrix) -> Result<Self> {
        let chol = cholesky(&matrix)?;
        Ok(ScaleMatrix::Full { matrix, chol })
    }

    pub fn dim(&self) -> usize {
        match self {
            ScaleMatrix::Scalar { dim, .. } => *dim,
            ScaleMatrix::Full { matrix, .. } => matrix.dim(),
        }
    }

    pub fn log_det(&self) -> f64 {
        match self {
            ScaleMatrix::Scalar { dim, value } => *dim as f64 * value.ln(),
            ScaleMatrix::Full { chol, .. } => chol.log_det(),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ScaleMatrix::Scalar { value, .. } => Some(*value),
            ScaleMatrix::Full { .. } => None,
        }
    }

    pub fn to_dense(&self) -> SymMatrix {
        match self {
            ScaleMatrix::Scalar { dim, value } => SymMatrix::scaled_identity(*dim, *value),
            ScaleMatrix::Full { matrix, .. } => matrix.clone(),
        }
    }

    /// `W z` for a whitening map with `WᵀW = Λ₀⁻¹`.
    fn whiten(&self, z: &[f64]) -> Vec<f64> {
        match self {
            ScaleMatrix::Scalar { value, .. } => {
                let s = value.sqrt();
                z.iter().map(|v| v / s).collect()
            }
            ScaleMatrix::Full { chol, .. } => chol.solve_lower(z),
        }
    }
}

/// Conjugate prior `Σ ~ IW(ν₀, Λ₀)`, `μ | Σ ~ N(μ₀, Σ/κ₀)`.
#[derive(Clone, Debug)]
pub struct NiwPrior {
    mu0: Vec<f64>,
    kappa0: f64,
    nu0: f64,
    lambda0: ScaleMatrix,
}

impl NiwPrior {
    pub fn new(mu0: Vec<f64>, kappa0: f64, nu0: f64, lambda0: ScaleMatrix) -> Result<Self> {
        let p = lambda0.dim();
        if p == 0 {
            return Err(Error::Domain("prior dimension must be positive".into()));
        }
        if mu0.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: mu0.len(),
            });
        }
        if !(kappa0 > 0.0) || !kappa0.is_finite() {
            return Err(Error::Domain(format!("kappa0 must be positive, got {kappa0}")));
        }
        if !(nu0 > p as f64 - 1.0) || !nu0.is_finite() {
            return Err(Error::Domain(format!(
                "nu0 must exceed p - 1 = {}, got {nu0}",
                p - 1
            )));
        }
        Ok(Self {
            mu0,
            kappa0,
            nu0,
            lambda0,
        })
    }

    /// Prior with `μ₀ = m·1` and `Λ₀ = s·I`.
    pub fn isotropic(p: usize, mu0: f64, kappa0: f64, nu0: f64, lambda_scale: f64) -> Result<Self> {
        Self::new(
            vec![mu0; p],
            kappa0,
            nu0,
            ScaleMatrix::scalar(p, lambda_scale)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.lambda0.dim()
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn lambda0(&self) -> &ScaleMatrix {
        &self.lambda0
    }

    fn mu0_is_zero(&self) -> bool {
        self.mu0.iter().all(|&m| m == 0.0)
    }
}

/// Constants of the dimension-robust prior: `κ₀ = c1·√p`, `ν₀ = c2·p`,
/// `Λ₀ = p²·I`, `μ₀ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustPriorSpec {
    pub c1: f64,
    pub c2: f64,
}

impl RobustPriorSpec {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(Error::Domain(format!("c1 must be positive, got {c1}")));
        }
        if !(c2 > 1.0) || !c2.is_finite() {
            return Err(Error::Domain(format!("c2 must exceed 1, got {c2}")));
        }
        Ok(Self { c1, c2 })
    }
}

pub fn robust_prior(p: usize, spec: &RobustPriorSpec) -> Result<NiwPrior> {
    if p < 2 {
        return Err(Error::Domain(format!("robust prior needs p >= 2, got {p}")));
    }
    let pf = p as f64;
    NiwPrior::isotropic(p, 0.0, spec.c1 * pf.sqrt(), spec.c2 * pf, pf * pf)
}

/// Fixed dimension-naive prior: `κ₀ = 1`, `ν₀ = p + 2`, `Λ₀ = I`, `μ₀ = 0`.
pub fn naive_prior(p: usize) -> Result<NiwPrior> {
    NiwPrior::isotropic(p, 0.0, 1.0, p as f64 + 2.0, 1.0)
}

/// `ỹᵢ = Λ₀^{-1/2}(yᵢ − μ₀)` with the symmetric square root.
pub fn transform_data(y: &Matrix, prior: &NiwPrior) -> Result<Matrix> {
    check_dim(y, prior)?;
    let mu = prior.mu0();
    match prior.lambda0() {
        ScaleMatrix::Scalar { value, .. } => {
            let s = value.sqrt();
            Ok(Matrix::from_fn(y.rows(), y.cols(), |i, j| {
                (y.get(i, j) - mu[j]) / s
            }))
        }
        ScaleMatrix::Full { matrix, .. } => {
            let p = matrix.dim();
            let eig = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_row_slice(
                p,
                p,
                matrix.as_slice(),
            ));
            if let Some((i, &l)) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .find(|(_, &l)| !(l > 0.0))
            {
                return Err(Error::NotPositiveDefinite { index: i, pivot: l });
            }
            let inv_sqrt = nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(-0.5)));
            let t = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
            let mut out = Matrix::zeros(y.rows(), p);
            for i in 0..y.rows() {
                let r = y.row(i);
                let dst = out.row_mut(i);
                for (a, d) in dst.iter_mut().enumerate() {
                    // T is symmetric up to rounding; use the (a, ·) row
                    *d = (0..p).map(|b| t[(a, b)] * (r[b] - mu[b])).sum();
                }
            }
            Ok(out)
        }
    }
}

/// Centers each row and scales it to unit sample variance (divisor `p − 1`).
pub fn row_standardize(y: &Matrix) -> Result<Matrix> {
    let p = y.cols();
    if p < 2 {
        return Err(Error::Domain("row standardization needs p >= 2".into()));
    }
    let mut out = y.clone();
    for i in 0..y.rows() {
        let r = out.row_mut(i);
        let mean = r.iter().sum::<f64>() / p as f64;
        r.iter_mut().for_each(|v| *v -= mean);
        let ss: f64 = r.iter().map(|v| v * v).sum();
        let sd = (ss / (p as f64 - 1.0)).sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::ConstantRow { row: i });
        }
        r.iter_mut().for_each(|v| *v /= sd);
    }
    Ok(out)
}

/// Cached sufficient statistics of a cluster.
#[derive(Clone, Debug, PartialEq)]
pub enum ClusterStats {
    /// `S = Σ (y − ȳ)(y − ȳ)ᵀ`, `p × p`.
    Scatter(SymMatrix),
    /// Raw row Gram `Y Yᵀ`, `n × n`.
    Gram(SymMatrix),
}

/// A cluster's observations plus cached mean and scatter or Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterView {
    rows: Matrix,
    mean: Vec<f64>,
    stats: ClusterStats,
}

impl ClusterView {
    /// Caches a Gram matrix when `p > 4n`, a scatter matrix otherwise.
    pub fn new(rows: Matrix) -> Self {
        if rows.cols() > 4 * rows.rows() {
            Self::with_gram(rows)
        } else {
            Self::with_scatter(rows)
        }
    }

    pub fn with_scatter(rows: Matrix) -> Self {
        let mean = column_mean(&rows);
        let stats = ClusterStats::Scatter(scatter(&rows, &mean));
        Self { rows, mean, stats }
    }

    pub fn with_gram(rows: Matrix) -> Self {
        let mean = column_mean(&rows);
        let stats = ClusterStats::Gram(rows.gram());
        Self { rows, mean, stats }
    }

    pub fn empty(p: usize) -> Self {
        Self::with_gram(Matrix::zeros(0, p))
    }

    pub fn from_indices(data: &Matrix, idx: &[usize]) -> Self {
        Self::new(data.select_rows(idx))
    }

    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn stats(&self) -> &ClusterStats {
        &self.stats
    }

    /// Scatter matrix, from the cache when available.
    pub fn scatter(&self) -> Cow<'_, SymMatrix> {
        match &self.stats {
            ClusterStats::Scatter(s) => Cow::Borrowed(s),
            ClusterStats::Gram(_) => Cow::Owned(scatter(&self.rows, &self.mean)),
        }
    }

    /// Largest absolute deviation between cached and recomputed statistics.
    pub fn cache_error(&self) -> f64 {
        let mean = column_mean(&self.rows);
        let mut err = mean
            .iter()
            .zip(&self.mean)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let (cached, fresh) = match &self.stats {
            ClusterStats::Scatter(s) => (s, scatter(&self.rows, &mean)),
            ClusterStats::Gram(g) => (g, self.rows.gram()),
        };
        for (a, b) in cached.as_slice().iter().zip(fresh.as_slice()) {
            err = err.max((a - b).abs());
        }
        err
    }

    /// Whitened Gram `(Y − 1μ₀ᵀ) Λ₀⁻¹ (Y − 1μ₀ᵀ)ᵀ`.
    pub fn whitened_gram(&self, prior: &NiwPrior) -> Result<SymMatrix> {
        check_dim(&self.rows, prior)?;
        if let (ClusterStats::Gram(g), Some(lambda)) = (&self.stats, prior.lambda0().as_scalar()) {
            if prior.mu0_is_zero() {
                let mut w = g.clone();
                w.scale(1.0 / lambda);
                return Ok(w);
            }
        }
        Ok(whitened_gram(&self.rows, prior))
    }
}

fn column_mean(rows: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; rows.cols()];
    if rows.rows() == 0 {
        return mean;
    }
    for r in rows.row_iter() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    let n = rows.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn scatter(rows: &Matrix, mean: &[f64]) -> SymMatrix {
    let centered = Matrix::from_fn(rows.rows(), rows.cols(), |i, j| rows.get(i, j) - mean[j]);
    centered.cross()
}

fn check_dim(y: &Matrix, prior: &NiwPrior) -> Result<()> {
    if y.cols() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            got: y.cols(),
        });
    }
    Ok(())
}

/// Whitened Gram of the rows of `y` under `prior`.
pub fn whitened_gram(y: &Matrix, prior: &NiwPrior) -> SymMatrix {
    let mu = prior.mu0();
    let white: Vec<Vec<f64>> = y
        .row_iter()
        .map(|r| {
            let z: Vec<f64> = r.iter().zip(mu).map(|(a, b)| a - b).collect();
            prior.lambda0().whiten(&z)
        })
        .collect();
    SymMatrix::from_fn(white.len(), |i, j| dot(&white[i], &white[j]))
}

/// Terms of the dual determinant factorization for one cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualParts {
    pub n: usize,
    /// `ln |I_n + ỸỸᵀ|` (equal to `ln |I_p + ỸᵀỸ|`).
    pub log_det_gram: f64,
    /// `ln[1 − 1ᵀỸ(I_p+ỸᵀỸ)⁻¹Ỹᵀ1/(n+κ₀)] = ln[(κ₀ + 1ᵀ(I_n+ỸỸᵀ)⁻¹1)/(n+κ₀)]`.
    pub log_scalar: f64,
}

impl DualParts {
    pub fn from_whitened_gram(g: &SymMatrix, kappa0: f64) -> Result<Self> {
        let n = g.dim();
        if n == 0 {
            return Ok(Self {
                n,
                log_det_gram: 0.0,
                log_scalar: 0.0,
            });
        }
        let mut a = g.clone();
        a.add_diag(1.0);
        let f = cholesky(&a)?;
        let z = f.solve_lower(&vec![1.0; n]);
        Ok(Self::from_factor(n, f.log_det(), dot(&z, &z), kappa0))
    }

    /// From `ln|I+G|` and `q = 1ᵀ(I+G)⁻¹1`.
    pub fn from_factor(n: usize, log_det_gram: f64, q: f64, kappa0: f64) -> Self {
        let nf = n as f64;
        Self {
            n,
            log_det_gram,
            log_scalar: ((kappa0 + q) / (nf + kappa0)).ln(),
        }
    }

    /// `ln|Λₙ| − ln|Λ₀|` for the cluster's posterior scale `Λₙ`.
    pub fn relative_log_det(&self) -> f64 {
        self.log_det_gram + self.log_scalar
    }
}

/// Log marginal from the posterior-to-prior scale determinant ratio.
///
/// `−np/2 ln π + ln Γ_p((ν₀+n)/2)/Γ_p(ν₀/2) + p/2 ln(κ₀/(κ₀+n))
///  − n/2 ln|Λ₀| − (ν₀+n)/2 (ln|Λₙ| − ln|Λ₀|)`.
pub fn assemble_log_marginal(prior: &NiwPrior, n: usize, relative_log_det: f64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let p = prior.dim();
    let (pf, nf) = (p as f64, n as f64);
    let k = prior.kappa0();
    let nu = prior.nu0();
    let gamma = log_multigamma_ratio(&GammaRatioSpec::new(p, nu, n, 0)?)?;
    Ok(-nf * pf / 2.0 * PI.ln() + gamma + pf / 2.0 * (k / (k + nf)).ln()
        - nf / 2.0 * prior.lambda0().log_det()
        - (nu + nf) / 2.0 * relative_log_det)
}

/// Primal (`p × p`) log marginal likelihood of a cluster.
pub fn cluster_log_marginal(c: &ClusterView, prior: &NiwPrior) -> Result<f64> {
    check_dim(c.rows(), prior)?;
    let n = c.len();
    if n == 0 {
        return Ok(0.0);
    }
    let p = prior.dim();
    let (pf, nf) = (p as f64, n as f64);
    let k = prior.kappa0();
    let nu = prior.nu0();
    let d: Vec<f64> = c.mean().iter().zip(prior.mu0()).map(|(a, b)| a - b).collect();
    let mut inner = prior.lambda0().to_dense();
    inner.add_scaled(1.0, &c.scatter());
    inner.add_outer(nf * k / (nf + k), &d);
    let log_det_inner = crate::linalg::log_det(&inner)?;
    let gamma = log_multigamma_ratio(&GammaRatioSpec::new(p, nu, n, 0)?)?;
    Ok(-nf * pf / 2.0 * PI.ln() + gamma + pf / 2.0 * (k / (k + nf)).ln()
        + nu / 2.0 * prior.lambda0().log_det()
        - (nu + nf) / 2.0 * log_det_inner)
}

/// Dual (`n × n`) log marginal likelihood of a cluster.
pub fn cluster_log_marginal_dual(c: &ClusterView, prior: &NiwPrior) -> Result<f64> {
    if c.is_empty() {
        check_dim(c.rows(), prior)?;
        return Ok(0.0);
    }
    let parts = DualParts::from_whitened_gram(&c.whitened_gram(prior)?, prior.kappa0())?;
    assemble_log_marginal(prior, c.len(), parts.relative_log_det())
}

/// Picks the dual form when `p > 4n` and `Λ₀` is scalar, primal otherwise.
pub fn log_marginal(c: &ClusterView, prior: &NiwPrior) -> Result<f64> {
    if prior.dim() > 4 * c.len() && prior.lambda0().as_scalar().is_some() {
        cluster_log_marginal_dual(c, prior)
    } else {
        cluster_log_marginal(c, prior)
    }
}
