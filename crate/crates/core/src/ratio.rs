//! The merge ratio `Π(Ψ|Y)/Π(Ψ′|Y)` and its large-`p` behavior.
//!
//! `Ψ′` is `Ψ` with clusters `h1` and `h2` joined. In log space the
//! likelihood part splits exactly into four terms:
//!
//! | term            | depends on                              |
//! |-----------------|-----------------------------------------|
//! | `term_gamma`    | `p, ν₀, n₁, n₂` (four `Γ_p` values)      |
//! | `term_kappa`    | `p, κ₀, n₁, n₂`                          |
//! | `term_det_kappa`| data, through the dual scalar factors   |
//! | `term_det_gram` | data, through `ln |I + ỸỸᵀ|`             |
//!
//! The `π` and `|Λ₀|` factors cancel because `n₁ + n₂ = n′`.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, spectral_norm, Matrix, SymMatrix};
use crate::niw::{whitened_gram, ClusterView, DualParts, NiwPrior, RobustPriorSpec};
use crate::partition::{Partition, PartitionPrior};
use crate::special::{gamma_term_log, gamma_term_log_limit};

/// Log-space decomposition of one merge ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeRatioBreakdown {
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub term_gamma: f64,
    pub term_kappa: f64,
    /// Exact data-dependent scalar-factor term.
    pub term_det_kappa: f64,
    /// Closed form the scalar-factor term takes when every cluster's factor
    /// equals `κ₀/(κ₀+n)` (see [`det_kappa_term_log`]).
    pub det_kappa_asymptotic: f64,
    pub term_det_gram: f64,
    pub total_likelihood: f64,
    pub eppf: f64,
    pub total_posterior: f64,
}

/// Analytic `p → ∞` limits of each term under the robust prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermLimits {
    pub gamma_limit: f64,
    pub kappa_limit: f64,
    pub det_kappa_limit: f64,
    pub det_gram_limit: f64,
    pub total_limit: f64,
}

/// `−(p/2)·ln(1 + n₁n₂/(κ₀² + (n₁+n₂)κ₀))`.
pub fn kappa_term_log(p: usize, kappa0: f64, n1: usize, n2: usize) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    -(p as f64) / 2.0 * (a * b / (kappa0 * kappa0 + (a + b) * kappa0)).ln_1p()
}

/// Log of
/// `{(1+n₂/(κ₀+n₁))^{−n₁} (1+n₁/(κ₀+n₂))^{−n₂} (1+n₁n₂/(κ₀²+κ₀n′))^{ν₀}}^{1/2}`,
/// the scalar-factor ratio obtained when each cluster's factor is replaced by
/// `κ₀/(κ₀+n)`.
pub fn det_kappa_term_log(_p: usize, kappa0: f64, nu0: f64, n1: usize, n2: usize) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    let k = kappa0;
    0.5 * (-a * (b / (k + a)).ln_1p() - b * (a / (k + b)).ln_1p()
        + nu0 * (a * b / (k * k + k * (a + b))).ln_1p())
}

/// Closed-form limits of the four terms for `κ₀ = c1√p`, `ν₀ = c2·p`.
pub fn analytic_limits(spec: &RobustPriorSpec, n1: usize, n2: usize) -> Result<TermLimits> {
    let gamma_limit = gamma_term_log_limit(spec.c2, n1, n2)?;
    let nn = (n1 * n2) as f64;
    let c1sq = spec.c1 * spec.c1;
    let kappa_limit = -nn / (2.0 * c1sq);
    let det_kappa_limit = spec.c2 * nn / (2.0 * c1sq);
    let det_gram_limit = 0.0;
    Ok(TermLimits {
        gamma_limit,
        kappa_limit,
        det_kappa_limit,
        det_gram_limit,
        total_limit: gamma_limit + kappa_limit + det_kappa_limit + det_gram_limit,
    })
}

struct MergeParts {
    first: DualParts,
    second: DualParts,
    merged: DualParts,
}

fn merge_parts(
    data: &Matrix,
    part: &Partition,
    h1: usize,
    h2: usize,
    prior: &NiwPrior,
) -> Result<MergeParts> {
    if data.rows() != part.n() {
        return Err(Error::DimensionMismatch {
            expected: part.n(),
            got: data.rows(),
        });
    }
    if data.cols() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            got: data.cols(),
        });
    }
    if h1 == h2 {
        return Err(Error::SameLabel(h1));
    }
    let a = part.members(h1)?;
    let b = part.members(h2)?;
    let union: Vec<usize> = a.iter().chain(&b).copied().collect();
    let g = whitened_gram(&data.select_rows(&union), prior);
    let first_idx: Vec<usize> = (0..a.len()).collect();
    let second_idx: Vec<usize> = (a.len()..union.len()).collect();
    let k = prior.kappa0();
    Ok(MergeParts {
        first: DualParts::from_whitened_gram(&g.submatrix(&first_idx), k)?,
        second: DualParts::from_whitened_gram(&g.submatrix(&second_idx), k)?,
        merged: DualParts::from_whitened_gram(&g, k)?,
    })
}

/// Exact log merge ratio with its term breakdown.
pub fn merge_log_ratio(
    data: &Matrix,
    part: &Partition,
    h1: usize,
    h2: usize,
    prior: &NiwPrior,
    partition_prior: &impl PartitionPrior,
) -> Result<MergeRatioBreakdown> {
    let parts = merge_parts(data, part, h1, h2, prior)?;
    let (n1, n2) = (parts.first.n, parts.second.n);
    let p = prior.dim();
    let nu = prior.nu0();
    let k = prior.kappa0();
    let w = |d: &DualParts| (nu + d.n as f64) / 2.0;
    let term_gamma = gamma_term_log(p, nu, n1, n2)?;
    let term_kappa = kappa_term_log(p, k, n1, n2);
    let term_det_kappa = w(&parts.merged) * parts.merged.log_scalar
        - w(&parts.first) * parts.first.log_scalar
        - w(&parts.second) * parts.second.log_scalar;
    let term_det_gram = w(&parts.merged) * parts.merged.log_det_gram
        - w(&parts.first) * parts.first.log_det_gram
        - w(&parts.second) * parts.second.log_det_gram;
    let total_likelihood = term_gamma + term_kappa + term_det_kappa + term_det_gram;
    let eppf = partition_prior.merge_log_ratio(n1, n2);
    Ok(MergeRatioBreakdown {
        p,
        n1,
        n2,
        term_gamma,
        term_kappa,
        term_det_kappa,
        det_kappa_asymptotic: det_kappa_term_log(p, k, nu, n1, n2),
        term_det_gram,
        total_likelihood,
        eppf,
        total_posterior: eppf + total_likelihood,
    })
}

/// Exact `|I + ỸỸᵀ|`-power part of the merge ratio.
pub fn det_gram_term_log(
    data: &Matrix,
    part: &Partition,
    h1: usize,
    h2: usize,
    prior: &NiwPrior,
) -> Result<f64> {
    let parts = merge_parts(data, part, h1, h2, prior)?;
    let nu = prior.nu0();
    let w = |d: &DualParts| (nu + d.n as f64) / 2.0;
    Ok(w(&parts.merged) * parts.merged.log_det_gram
        - w(&parts.first) * parts.first.log_det_gram
        - w(&parts.second) * parts.second.log_det_gram)
}

/// `((ν₀+n)/2)·ln|I + ỸỸᵀ|` for one cluster.
pub fn det_gram_log(c: &ClusterView, prior: &NiwPrior) -> Result<f64> {
    if c.is_empty() {
        return Ok(0.0);
    }
    let parts = DualParts::from_whitened_gram(&c.whitened_gram(prior)?, prior.kappa0())?;
    Ok((prior.nu0() + c.len() as f64) / 2.0 * parts.log_det_gram)
}

/// Trace approximation `((ν₀+n)/2)·ln(1 + tr((Y−μ₀)ᵀ(Y−μ₀))/λ)` of
/// [`det_gram_log`] for `Λ₀ = λI`.
pub fn trace_approx_log(c: &ClusterView, prior: &NiwPrior) -> Result<f64> {
    if c.is_empty() {
        return Ok(0.0);
    }
    let lambda = prior
        .lambda0()
        .as_scalar()
        .ok_or_else(|| Error::Domain("trace approximation needs a scalar Λ₀".into()))?;
    let mu = prior.mu0();
    let trace: f64 = c
        .rows()
        .row_iter()
        .map(|r| r.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    Ok((prior.nu0() + c.len() as f64) / 2.0 * (trace / lambda).ln_1p())
}

/// `‖Y(I_p + YᵀY)⁻¹Yᵀ − I_n‖₂`, evaluated as `‖(I_n + YYᵀ)⁻¹‖₂`.
pub fn projector_residual(y: &Matrix) -> Result<f64> {
    if y.rows() == 0 {
        return Err(Error::Domain("projector residual needs at least one row".into()));
    }
    let mut a: SymMatrix = y.gram();
    a.add_diag(1.0);
    let inv = cholesky(&a)?.inverse();
    match spectral_norm(&inv.to_matrix()) {
        Ok(v) => Ok(v),
        Err(Error::NoConvergence { estimate, .. }) => Ok(estimate),
        Err(e) => Err(e),
    }
}
