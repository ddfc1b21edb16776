//! Collapsed Gibbs sampler for the Dirichlet-process Gaussian mixture.
//!
//! Observation `i` moves to existing cluster `c` with weight
//! `n₋ᵢ,c · exp[m(c ∪ {i}) − m(c)]` and to a new cluster with weight
//! `α · exp[m({i})]`, where `m` is the NIW log marginal likelihood. Items are
//! visited in index order.
//!
//! Each cluster keeps a Cholesky factor so a candidate costs one triangular
//! solve:
//!
//! * primal engine: factor of `B = Λ₀ + κ₀μ₀μ₀ᵀ + Σ yyᵀ` (`p × p`), using
//!   `Λₙ = B − ssᵀ/(κ₀+n)` with `s = κ₀μ₀ + Σ y`;
//! * dual engine: factor of `I + G` for the cluster's block of the global
//!   whitened Gram matrix (`n_c × n_c`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, rank1_update, CholFactor, Matrix, Sign, SymMatrix};
use crate::niw::{assemble_log_marginal, log_marginal, whitened_gram, ClusterView, NiwPrior};
use crate::partition::{CrpPrior, Partition};

/// Starting partition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Init {
    #[default]
    SingleCluster,
    Singletons,
}

/// Per-cluster cache layout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EngineChoice {
    /// Dual when `p > 4n`, primal otherwise.
    #[default]
    Auto,
    Primal,
    Dual,
}

#[derive(Clone, Debug)]
enum Engine {
    Primal { base: CholFactor },
    Dual { gram: SymMatrix },
}

#[derive(Clone, Debug)]
struct Cluster {
    members: Vec<usize>,
    chol: CholFactor,
    /// Primal: `s = κ₀μ₀ + Σ y`. Unused by the dual engine.
    sum: Vec<f64>,
    /// Primal: `L⁻¹s`. Dual: `L⁻¹1`.
    aux: Vec<f64>,
    log_det: f64,
    log_m: f64,
}

/// Sampler state borrowing the data read-only.
#[derive(Clone, Debug)]
pub struct SamplerState<'a> {
    data: &'a Matrix,
    prior: NiwPrior,
    crp: CrpPrior,
    rng: ChaCha8Rng,
    engine: Engine,
    /// Log marginal of a cluster of size `n` with `ln|Λₙ| = ln|Λ₀|`.
    lm_const: Vec<f64>,
    singleton_log_m: Vec<f64>,
    clusters: Vec<Cluster>,
    assign: Vec<usize>,
    sweep_index: usize,
}

impl<'a> SamplerState<'a> {
    pub fn new(
        data: &'a Matrix,
        prior: NiwPrior,
        crp: CrpPrior,
        init: Init,
        engine: EngineChoice,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let (n, p) = (data.rows(), data.cols());
        if n == 0 {
            return Err(Error::InvalidConfig("no observations".into()));
        }
        if p != prior.dim() {
            return Err(Error::DimensionMismatch {
                expected: prior.dim(),
                got: p,
            });
        }
        let use_dual = match engine {
            EngineChoice::Auto => p > 4 * n,
            EngineChoice::Primal => false,
            EngineChoice::Dual => true,
        };
        let engine = if use_dual {
            Engine::Dual {
                gram: whitened_gram(data, &prior),
            }
        } else {
            let mut b = prior.lambda0().to_dense();
            b.add_outer(prior.kappa0(), prior.mu0());
            Engine::Primal { base: cholesky(&b)? }
        };
        let lm_const = (0..=n)
            .map(|m| assemble_log_marginal(&prior, m, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let mut state = Self {
            data,
            prior,
            crp,
            rng,
            engine,
            lm_const,
            singleton_log_m: Vec::with_capacity(n),
            clusters: Vec::new(),
            assign: vec![0; n],
            sweep_index: 0,
        };
        for i in 0..n {
            let c = state.build(vec![i])?;
            state.singleton_log_m.push(c.log_m);
            if init == Init::Singletons {
                state.assign[i] = i;
                state.clusters.push(c);
            }
        }
        if init == Init::SingleCluster {
            let all = state.build((0..n).collect())?;
            state.clusters.push(all);
        }
        Ok(state)
    }

    /// Dual-or-primal choice that was actually made.
    pub fn is_dual(&self) -> bool {
        matches!(self.engine, Engine::Dual { .. })
    }

    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.assign)
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn sweep_index(&self) -> usize {
        self.sweep_index
    }

    pub fn prior(&self) -> &NiwPrior {
        &self.prior
    }

    pub fn crp(&self) -> &CrpPrior {
        &self.crp
    }

    /// Sum of cached cluster log marginals.
    pub fn log_likelihood(&self) -> f64 {
        self.clusters.iter().map(|c| c.log_m).sum()
    }

    fn log_m_from(&self, n: usize, rel_log_det: f64) -> f64 {
        self.lm_const[n] - (self.prior.nu0() + n as f64) / 2.0 * rel_log_det
    }

    fn primal_rel(&self, log_det_b: f64, q: f64, n: usize) -> f64 {
        let k = self.prior.kappa0();
        log_det_b + (-q / (k + n as f64)).ln_1p() - self.prior.lambda0().log_det()
    }

    fn dual_rel(&self, log_det: f64, q: f64, n: usize) -> f64 {
        let k = self.prior.kappa0();
        log_det + ((k + q) / (k + n as f64)).ln()
    }

    fn build(&self, members: Vec<usize>) -> Result<Cluster> {
        let n = members.len();
        match &self.engine {
            Engine::Primal { base } => {
                let mut chol = base.clone();
                let mut sum: Vec<f64> = self.prior.mu0().iter().map(|m| self.prior.kappa0() * m).collect();
                for &i in &members {
                    let y = self.data.row(i);
                    chol.update_in_place(y, Sign::Plus)?;
                    sum.iter_mut().zip(y).for_each(|(s, v)| *s += v);
                }
                let aux = chol.solve_lower(&sum);
                let log_det = chol.log_det();
                let log_m = self.log_m_from(n, self.primal_rel(log_det, dot(&aux, &aux), n));
                Ok(Cluster {
                    members,
                    chol,
                    sum,
                    aux,
                    log_det,
                    log_m,
                })
            }
            Engine::Dual { gram } => {
                let mut a = gram.submatrix(&members);
                a.add_diag(1.0);
                let chol = cholesky(&a)?;
                let aux = chol.solve_lower(&vec![1.0; n]);
                let log_det = chol.log_det();
                let log_m = self.log_m_from(n, self.dual_rel(log_det, dot(&aux, &aux), n));
                Ok(Cluster {
                    members,
                    chol,
                    sum: Vec::new(),
                    aux,
                    log_det,
                    log_m,
                })
            }
        }
    }

    /// Dual bordering pieces for appending item `i`: `(b, c, L⁻¹b, d²)`.
    fn dual_border(&self, gram: &SymMatrix, c: &Cluster, i: usize) -> (Vec<f64>, f64, Vec<f64>, f64) {
        let b: Vec<f64> = c.members.iter().map(|&m| gram.get(m, i)).collect();
        let diag = 1.0 + gram.get(i, i);
        let l = c.chol.solve_lower(&b);
        let d2 = diag - dot(&l, &l);
        (b, diag, l, d2)
    }

    /// Log marginal of `c ∪ {i}`.
    fn candidate(&self, c: &Cluster, i: usize) -> Result<f64> {
        let n = c.members.len() + 1;
        match &self.engine {
            Engine::Primal { .. } => {
                let u = c.chol.solve_lower(self.data.row(i));
                let a = 1.0 + dot(&u, &u);
                let w: Vec<f64> = c.aux.iter().zip(&u).map(|(x, y)| x + y).collect();
                let uw = dot(&u, &w);
                let q = dot(&w, &w) - uw * uw / a;
                Ok(self.log_m_from(n, self.primal_rel(c.log_det + a.ln(), q, n)))
            }
            Engine::Dual { gram } => {
                let (_, _, l, d2) = self.dual_border(gram, c, i);
                if !(d2 > 0.0) {
                    return Err(Error::NotPositiveDefinite {
                        index: c.members.len(),
                        pivot: d2,
                    });
                }
                let zn = (1.0 - dot(&l, &c.aux)) / d2.sqrt();
                let q = dot(&c.aux, &c.aux) + zn * zn;
                Ok(self.log_m_from(n, self.dual_rel(c.log_det + d2.ln(), q, n)))
            }
        }
    }

    fn add(&self, c: &mut Cluster, i: usize) -> Result<()> {
        let n = c.members.len() + 1;
        match &self.engine {
            Engine::Primal { .. } => {
                let y = self.data.row(i);
                c.members.push(i);
                if c.chol.update_in_place(y, Sign::Plus).is_err() {
                    *c = self.build(std::mem::take(&mut c.members))?;
                    return Ok(());
                }
                c.sum.iter_mut().zip(y).for_each(|(s, v)| *s += v);
                c.aux = c.chol.solve_lower(&c.sum);
                c.log_det = c.chol.log_det();
                c.log_m = self.log_m_from(n, self.primal_rel(c.log_det, dot(&c.aux, &c.aux), n));
            }
            Engine::Dual { gram } => {
                let (b, diag, l, _) = self.dual_border(gram, c, i);
                let chol = c.chol.append(&b, diag)?;
                let d = chol.get(n - 1, n - 1);
                c.aux.push((1.0 - dot(&l, &c.aux)) / d);
                c.chol = chol;
                c.members.push(i);
                c.log_det += 2.0 * d.ln();
                c.log_m = self.log_m_from(n, self.dual_rel(c.log_det, dot(&c.aux, &c.aux), n));
            }
        }
        Ok(())
    }

    /// Removes `i` from a cluster that keeps at least one other member.
    fn remove(&self, c: &mut Cluster, i: usize) -> Result<()> {
        let pos = c
            .members
            .iter()
            .position(|&m| m == i)
            .ok_or_else(|| Error::InvalidPartition(format!("item {i} not in its cluster")))?;
        c.members.remove(pos);
        match &self.engine {
            Engine::Primal { .. } => {
                let y = self.data.row(i);
                match rank1_update(&c.chol, y, Sign::Minus) {
                    Ok(chol) => {
                        let n = c.members.len();
                        c.chol = chol;
                        c.sum.iter_mut().zip(y).for_each(|(s, v)| *s -= v);
                        c.aux = c.chol.solve_lower(&c.sum);
                        c.log_det = c.chol.log_det();
                        c.log_m = self.log_m_from(n, self.primal_rel(c.log_det, dot(&c.aux, &c.aux), n));
                    }
                    Err(_) => *c = self.build(std::mem::take(&mut c.members))?,
                }
            }
            Engine::Dual { .. } => *c = self.build(std::mem::take(&mut c.members))?,
        }
        Ok(())
    }

    fn sweep_inner(&mut self) -> Result<()> {
        let ln_alpha = self.crp.alpha().ln();
        let mut logw = Vec::new();
        for i in 0..self.assign.len() {
            let c = self.assign[i];
            if self.clusters[c].members.len() == 1 {
                self.clusters.remove(c);
                self.assign.iter_mut().filter(|a| **a > c).for_each(|a| *a -= 1);
            } else {
                let ph = self.placeholder();
                let mut cl = std::mem::replace(&mut self.clusters[c], ph);
                let r = self.remove(&mut cl, i);
                self.clusters[c] = cl;
                r?;
            }
            logw.clear();
            for cl in &self.clusters {
                let cand = self.candidate(cl, i)?;
                logw.push((cl.members.len() as f64).ln() + cand - cl.log_m);
            }
            logw.push(ln_alpha + self.singleton_log_m[i]);
            let pick = sample_log_weights(&logw, &mut self.rng)?;
            if pick == self.clusters.len() {
                let c = self.build(vec![i])?;
                self.clusters.push(c);
            } else {
                let ph = self.placeholder();
                let mut cl = std::mem::replace(&mut self.clusters[pick], ph);
                let r = self.add(&mut cl, i);
                self.clusters[pick] = cl;
                r?;
            }
            self.assign[i] = pick;
        }
        Ok(())
    }

    fn placeholder(&self) -> Cluster {
        Cluster {
            members: Vec::new(),
            chol: match &self.engine {
                Engine::Primal { base } => base.clone(),
                Engine::Dual { .. } => cholesky(&SymMatrix::identity(1)).expect("identity is PD"),
            },
            sum: Vec::new(),
            aux: Vec::new(),
            log_det: 0.0,
            log_m: 0.0,
        }
    }

    /// One full scan. On error the state is rolled back to its value before
    /// the sweep, including the generator.
    pub fn sweep(&mut self) -> Result<()> {
        let clusters = self.clusters.clone();
        let assign = self.assign.clone();
        let rng = self.rng.clone();
        if let Err(e) = self.sweep_inner() {
            self.clusters = clusters;
            self.assign = assign;
            self.rng = rng;
            return Err(e);
        }
        self.canonicalize();
        self.sweep_index += 1;
        Ok(())
    }

    /// Orders clusters by their smallest member.
    fn canonicalize(&mut self) {
        self.clusters
            .sort_by_key(|c| c.members.iter().copied().min().unwrap_or(usize::MAX));
        for (h, c) in self.clusters.iter().enumerate() {
            for &m in &c.members {
                self.assign[m] = h;
            }
        }
    }

    /// Largest relative gap between cached cluster log marginals and a fresh
    /// evaluation through [`log_marginal`]. Infinite if the membership lists
    /// and the assignment vector disagree.
    pub fn cache_discrepancy(&self) -> Result<f64> {
        let mut seen = vec![false; self.assign.len()];
        let mut worst = 0.0_f64;
        for (h, c) in self.clusters.iter().enumerate() {
            if c.members.is_empty() {
                return Ok(f64::INFINITY);
            }
            for &m in &c.members {
                if self.assign[m] != h || seen[m] {
                    return Ok(f64::INFINITY);
                }
                seen[m] = true;
            }
            let mut idx = c.members.clone();
            idx.sort_unstable();
            let fresh = log_marginal(&ClusterView::from_indices(self.data, &idx), &self.prior)?;
            worst = worst.max((fresh - c.log_m).abs() / fresh.abs().max(1.0));
        }
        if seen.iter().any(|s| !s) {
            return Ok(f64::INFINITY);
        }
        Ok(worst)
    }
}

/// One sweep over all observations.
pub fn gibbs_sweep(state: &mut SamplerState<'_>) -> Result<()> {
    state.sweep()
}

/// Categorical draw from unnormalized log weights. The lowest index wins ties
/// at the sampled point.
pub fn sample_log_weights(logw: &[f64], rng: &mut impl Rng) -> Result<usize> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Domain(format!("no finite predictive weight (max {max})")));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (j, x) in w.iter().enumerate() {
        acc += x;
        if u < acc {
            return Ok(j);
        }
    }
    Ok(w.iter().rposition(|&x| x > 0.0).unwrap_or(0))
}

/// Chain settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConfig {
    pub sweeps: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Generator stream, for running independent chains off one seed.
    pub stream: u64,
    pub init: Init,
    pub engine: EngineChoice,
    /// Recompute every cluster's marginal after each sweep and fail on drift
    /// above `1e-8`.
    pub verify_caches: bool,
}

impl ChainConfig {
    pub fn new(sweeps: usize, burnin: usize, seed: u64) -> Self {
        Self {
            sweeps,
            burnin,
            seed,
            stream: 0,
            init: Init::SingleCluster,
            engine: EngineChoice::Auto,
            verify_caches: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burnin {
            return Err(Error::InvalidConfig(format!(
                "sweeps ({}) must exceed burnin ({})",
                self.sweeps, self.burnin
            )));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Post-burnin summary of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    /// Fraction of kept sweeps in which `i` and `j` share a cluster.
    pub co_clustering: SymMatrix,
    /// Cluster count after every sweep, burn-in included.
    pub k_trace: Vec<usize>,
    /// Most frequent post-burnin `k` (smallest on ties).
    pub k_mode: usize,
    /// Post-burnin fraction with `k = 1`.
    pub frac_single_cluster: f64,
    /// Post-burnin fraction with `k = n`.
    pub frac_singletons: f64,
    /// Kept partition closest to `co_clustering` in squared error.
    pub point_estimate: Partition,
}

/// Runs one chain and summarizes it.
pub fn run_chain(
    data: &Matrix,
    prior: &NiwPrior,
    crp: &CrpPrior,
    cfg: &ChainConfig,
) -> Result<PosteriorSummary> {
    cfg.validate()?;
    let n = data.rows();
    let mut state = SamplerState::new(data, prior.clone(), *crp, cfg.init, cfg.engine, cfg.rng())?;
    let mut k_trace = Vec::with_capacity(cfg.sweeps);
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(cfg.sweeps - cfg.burnin);
    let mut counts = vec![0usize; n * n];
    for s in 0..cfg.sweeps {
        state.sweep()?;
        if cfg.verify_caches {
            let d = state.cache_discrepancy()?;
            if !(d <= 1e-8) {
                return Err(Error::Domain(format!("cache drift {d:e} after sweep {s}")));
            }
        }
        k_trace.push(state.k());
        if s >= cfg.burnin {
            let labels = state.assign.clone();
            for i in 0..n {
                for j in 0..=i {
                    if labels[i] == labels[j] {
                        counts[i * n + j] += 1;
                    }
                }
            }
            kept.push(labels);
        }
    }
    let m = kept.len() as f64;
    let co = SymMatrix::from_fn(n, |i, j| {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        counts[a * n + b] as f64 / m
    });
    let post = &k_trace[cfg.burnin..];
    let mut freq = vec![0usize; n + 1];
    for &k in post {
        freq[k] += 1;
    }
    let k_mode = (1..=n).max_by_key(|&k| (freq[k], std::cmp::Reverse(k))).unwrap_or(1);
    let binder = |labels: &[usize]| -> f64 {
        let mut loss = 0.0;
        for i in 0..n {
            for j in 0..i {
                let same = if labels[i] == labels[j] { 1.0 } else { 0.0 };
                loss += (same - co.get(i, j)).powi(2);
            }
        }
        loss
    };
    let mut best = (f64::INFINITY, 0usize);
    for (t, labels) in kept.iter().enumerate() {
        let l = binder(labels);
        if l < best.0 {
            best = (l, t);
        }
    }
    Ok(PosteriorSummary {
        co_clustering: co,
        frac_single_cluster: freq[1] as f64 / m,
        frac_singletons: freq[n] as f64 / m,
        k_trace,
        k_mode,
        point_estimate: Partition::from_labels(&kept[best.1]),
    })
}
