//! Subcommand implementations.
//!
//! Work items run in parallel; results are collected in grid order so the
//! output bytes do not depend on scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use hdmix::csvio::{parse_csv, read_csv, render_csv, Table};
use hdmix::datagen::{generate, GenKind, GenSpec, GENERATOR};
use hdmix::metrics::adjusted_rand_index;
use hdmix::niw::{naive_prior, robust_prior, NiwPrior, RobustPriorSpec};
use hdmix::partition::{CrpPrior, Partition};
use hdmix::ratio::{analytic_limits, merge_log_ratio, projector_residual};
use hdmix::sampler::{run_chain, ChainConfig, Init};
use hdmix::{Error, Matrix};
use rayon::prelude::*;

use crate::plots::{k_trace_chart, limits_chart, median, projector_chart, sweep_chart};
use crate::{ClusterArgs, InitArg, LimitsArgs, ProjectorArgs, ReplotArgs, SweepArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidSpec(_) => CliError::Config(e.to_string()),
            Error::Io(_) | Error::Parse { .. } | Error::RaggedRows { .. } => CliError::Io(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn check_grid(grid: &[usize], min: usize) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::Config("p grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(format!("p grid must be strictly increasing: {grid:?}")));
    }
    if grid[0] < min {
        return Err(CliError::Config(format!("p grid values must be >= {min}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(CliError::Config(format!("{name} must be >= 1")));
    }
    Ok(())
}

fn robust_spec(c1: f64, c2: f64) -> CliResult<RobustPriorSpec> {
    RobustPriorSpec::new(c1, c2).map_err(|e| CliError::Config(e.to_string()))
}

fn crp(alpha: f64) -> CliResult<CrpPrior> {
    CrpPrior::new(alpha).map_err(|e| CliError::Config(e.to_string()))
}

/// Stream id for grid point `g`, replicate `r`.
fn stream(g: usize, r: usize) -> u64 {
    ((g as u64) << 32) | r as u64
}

fn metadata(command: &str, config: String, seed: u64) -> Vec<String> {
    vec![
        format!("hdmix {}", env!("CARGO_PKG_VERSION")),
        format!("command: {command}"),
        format!("config: {config}"),
        format!("seed: {seed}"),
        format!("generator: {GENERATOR}"),
        "streams: (grid_index << 32) | replicate".to_string(),
    ]
}

fn grid_str(g: &[usize]) -> String {
    g.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn table(names: &[&str], rows: Vec<Vec<f64>>) -> CliResult<Table> {
    let cols = names.len();
    let n = rows.len();
    let data = Matrix::from_vec(n, cols, rows.into_iter().flatten().collect())?;
    Ok(Table::new(Some(names.iter().map(|s| s.to_string()).collect()), data))
}

type ChartFn = fn(&Table) -> CliResult<crate::svg::Chart>;

/// Writes `stem.csv` and, when a chart is given, `stem.svg` rendered from the
/// re-parsed CSV text.
fn emit(dir: &Path, stem: &str, t: &Table, comments: &[String], chart: Option<ChartFn>) -> CliResult<()> {
    let text = render_csv(t, comments)?;
    write_text(&dir.join(format!("{stem}.csv")), &text)?;
    if let Some(f) = chart {
        let parsed = parse_csv(&text)?;
        write_text(&dir.join(format!("{stem}.svg")), &f(&parsed)?.render())?;
    }
    Ok(())
}

pub fn limits(a: &LimitsArgs) -> CliResult<()> {
    check_grid(&a.p_grid, 2)?;
    check_positive("replicates", a.replicates)?;
    check_positive("n1", a.n1)?;
    check_positive("n2", a.n2)?;
    let spec = robust_spec(a.c1, a.c2)?;
    let crp = crp(a.alpha)?;
    let lim = analytic_limits(&spec, a.n1, a.n2)?;
    ensure_dir(&a.outdir)?;
    let n = a.n1 + a.n2;
    let labels: Vec<usize> = (0..n).map(|i| if i < a.n1 { 1 } else { 2 }).collect();
    let part = Partition::from_labels(&labels);
    let tasks: Vec<(usize, usize, usize)> = a
        .p_grid
        .iter()
        .enumerate()
        .flat_map(|(g, &p)| (0..a.replicates).map(move |r| (g, p, r)))
        .collect();
    let rows: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(g, p, r)| -> CliResult<Vec<f64>> {
            let mut gs = GenSpec::new(GenKind::SingleGaussian, n, p, a.seed);
            gs.replicate = stream(g, r);
            gs.standardize = true;
            let (data, _) = generate(&gs)?;
            let prior = robust_prior(p, &spec)?;
            let b = merge_log_ratio(&data, &part, 1, 2, &prior, &crp)?;
            Ok(vec![
                p as f64,
                r as f64,
                b.term_gamma,
                b.term_kappa,
                b.term_det_kappa,
                b.term_det_gram,
                b.total_likelihood,
                lim.gamma_limit,
                lim.kappa_limit,
                lim.det_kappa_limit,
                lim.total_limit,
                lim.det_gram_limit,
                b.det_kappa_asymptotic,
                b.eppf,
                b.total_posterior,
            ])
        })
        .collect::<CliResult<_>>()?;
    for &p in &a.p_grid {
        let mut tot: Vec<f64> = rows.iter().filter(|r| r[0] == p as f64).map(|r| r[6]).collect();
        eprintln!(
            "p={p}: median total {:.6} (limit {:.6})",
            median(&mut tot),
            lim.total_limit
        );
    }
    let t = table(
        &[
            "p",
            "replicate",
            "term_gamma",
            "term_kappa",
            "term_det_kappa",
            "term_det_gram",
            "total",
            "gamma_limit",
            "kappa_limit",
            "det_kappa_limit",
            "total_limit",
            "det_gram_limit",
            "det_kappa_asymptotic",
            "eppf",
            "total_posterior",
        ],
        rows,
    )?;
    let config = format!(
        "p_grid={} c1={} c2={} alpha={} n1={} n2={} replicates={} data=single_gaussian,row-standardized",
        grid_str(&a.p_grid),
        a.c1,
        a.c2,
        a.alpha,
        a.n1,
        a.n2,
        a.replicates
    );
    emit(&a.outdir, "limits", &t, &metadata("limits", config, a.seed), Some(limits_chart))
}

pub fn projector(a: &ProjectorArgs) -> CliResult<()> {
    check_grid(&a.p_grid, 2)?;
    check_positive("replicates", a.replicates)?;
    if a.n < 2 {
        return Err(CliError::Config("n must be >= 2".into()));
    }
    ensure_dir(&a.outdir)?;
    let mut rows = Vec::new();
    for (g, &p) in a.p_grid.iter().enumerate() {
        let mut res: Vec<f64> = (0..a.replicates)
            .into_par_iter()
            .map(|r| -> CliResult<f64> {
                let mut gs = GenSpec::new(GenKind::SingleGaussian, a.n, p, a.seed);
                gs.replicate = stream(g, r);
                let (data, _) = generate(&gs)?;
                Ok(projector_residual(&data)?)
            })
            .collect::<CliResult<_>>()?;
        let below = res.iter().filter(|&&v| v < 0.05).count() as f64 / res.len() as f64;
        let max = res.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let med = median(&mut res);
        eprintln!("p={p}: median residual {med:.6}");
        rows.push(vec![p as f64, a.replicates as f64, med, max, below]);
    }
    let t = table(
        &["p", "replicates", "median_residual", "max_residual", "fraction_below_0.05"],
        rows,
    )?;
    let config = format!(
        "p_grid={} n={} replicates={} data=iid N(0,1) entries",
        grid_str(&a.p_grid),
        a.n,
        a.replicates
    );
    emit(&a.outdir, "projector", &t, &metadata("projector", config, a.seed), Some(projector_chart))
}

fn init(i: InitArg) -> Init {
    match i {
        InitArg::Single => Init::SingleCluster,
        InitArg::Singletons => Init::Singletons,
    }
}

fn chain_config(sweeps: usize, burnin: usize, seed: u64, s: u64, i: InitArg) -> CliResult<ChainConfig> {
    let mut cfg = ChainConfig::new(sweeps, burnin, seed);
    cfg.stream = s;
    cfg.init = init(i);
    cfg.validate()?;
    Ok(cfg)
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    check_grid(&a.p_grid, 2)?;
    check_positive("replicates", a.replicates)?;
    let spec = robust_spec(a.c1, a.c2)?;
    let crp = crp(a.alpha)?;
    chain_config(a.sweeps, a.burnin, a.seed, 0, a.init)?;
    if a.n < 2 {
        return Err(CliError::Config("n must be >= 2".into()));
    }
    ensure_dir(&a.outdir)?;
    let tasks: Vec<(usize, usize, usize, usize)> = a
        .p_grid
        .iter()
        .enumerate()
        .flat_map(|(g, &p)| (0..a.replicates).flat_map(move |r| [(g, p, r, 0), (g, p, r, 1)]))
        .collect();
    let rows: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(g, p, r, which)| -> CliResult<Vec<f64>> {
            let mut gs = GenSpec::new(GenKind::TwoClusterMixture, a.n, p, a.seed);
            gs.separation = a.separation;
            gs.replicate = stream(g, r);
            let (data, truth) = generate(&gs)?;
            let prior = if which == 0 { robust_prior(p, &spec)? } else { naive_prior(p)? };
            let cfg = chain_config(a.sweeps, a.burnin, a.seed, stream(g, r), a.init)?;
            let s = run_chain(&data, &prior, &crp, &cfg)?;
            let ari = adjusted_rand_index(s.point_estimate.labels(), truth.labels())?;
            Ok(vec![
                p as f64,
                r as f64,
                which as f64,
                s.frac_single_cluster,
                s.frac_singletons,
                s.frac_single_cluster + s.frac_singletons,
                s.k_mode as f64,
                ari,
            ])
        })
        .collect::<CliResult<_>>()?;
    for &p in &a.p_grid {
        for (code, name) in [(0.0, "robust"), (1.0, "naive")] {
            let sel = |c: usize| -> Vec<f64> {
                rows.iter().filter(|r| r[0] == p as f64 && r[2] == code).map(|r| r[c]).collect()
            };
            eprintln!(
                "p={p} {name}: median degenerate fraction {:.3}, median k_mode {}, median ARI {:.3}",
                median(&mut sel(5)),
                median(&mut sel(6)),
                median(&mut sel(7))
            );
        }
    }
    let t = table(
        &[
            "p",
            "replicate",
            "prior",
            "frac_k1",
            "frac_kn",
            "degenerate_fraction",
            "k_mode",
            "ari",
        ],
        rows,
    )?;
    let config = format!(
        "p_grid={} n={} separation={} c1={} c2={} alpha={} replicates={} sweeps={} burnin={} init={:?} prior_codes=0:robust,1:naive(kappa0=1,nu0=p+2,lambda0=I)",
        grid_str(&a.p_grid),
        a.n,
        a.separation,
        a.c1,
        a.c2,
        a.alpha,
        a.replicates,
        a.sweeps,
        a.burnin,
        a.init
    );
    emit(&a.outdir, "sweep", &t, &metadata("sweep", config, a.seed), Some(sweep_chart))
}

/// `robust`, `naive` or `custom:<file>` with `key = value` lines for `mu0`,
/// `kappa0`, `nu0` and `lambda0_scale`.
fn parse_prior(arg: &str, p: usize, spec: &RobustPriorSpec) -> CliResult<NiwPrior> {
    let cfg = |e: Error| CliError::Config(e.to_string());
    match arg {
        "robust" => robust_prior(p, spec).map_err(cfg),
        "naive" => naive_prior(p).map_err(cfg),
        _ => {
            let path = arg
                .strip_prefix("custom:")
                .ok_or_else(|| CliError::Config(format!("unknown prior {arg:?}")))?;
            let text = fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e))?;
            let (mut mu0, mut kappa0, mut nu0, mut lambda) = (0.0, None, None, None);
            for (ln, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("{path}:{}: expected key=value", ln + 1)))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|e| CliError::Config(format!("{path}:{}: {e}", ln + 1)))?;
                match k.trim() {
                    "mu0" => mu0 = v,
                    "kappa0" => kappa0 = Some(v),
                    "nu0" => nu0 = Some(v),
                    "lambda0_scale" => lambda = Some(v),
                    other => return Err(CliError::Config(format!("{path}: unknown key {other:?}"))),
                }
            }
            let need = |o: Option<f64>, name: &str| o.ok_or_else(|| CliError::Config(format!("{path}: missing {name}")));
            NiwPrior::isotropic(p, mu0, need(kappa0, "kappa0")?, need(nu0, "nu0")?, need(lambda, "lambda0_scale")?)
                .map_err(cfg)
        }
    }
}

fn read_truth(path: &Path, n: usize) -> CliResult<Vec<usize>> {
    let t = read_csv(path)?;
    if t.data.cols() != 1 || t.data.rows() != n {
        return Err(CliError::Config(format!(
            "{}: expected one column of {n} labels, got {}x{}",
            path.display(),
            t.data.rows(),
            t.data.cols()
        )));
    }
    t.data
        .as_slice()
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::Config(format!("{}: label {v} is not a non-negative integer", path.display())))
            }
        })
        .collect()
}

pub fn cluster(a: &ClusterArgs) -> CliResult<()> {
    let crp = crp(a.alpha)?;
    let spec = robust_spec(a.c1, a.c2)?;
    let cfg = chain_config(a.sweeps, a.burnin, a.seed, 0, a.init)?;
    let (mut data, truth, source) = match &a.input {
        Some(path) => {
            let t = read_csv(path)?;
            let truth = a.truth.as_ref().map(|tp| read_truth(tp, t.data.rows())).transpose()?;
            (t.data, truth, format!("input={}", file_name(path)))
        }
        None => {
            if a.truth.is_some() {
                return Err(CliError::Config("--truth requires --input".into()));
            }
            let mut gs = GenSpec::new(GenKind::TwoClusterMixture, a.n, a.p, a.seed);
            gs.separation = a.separation;
            let (d, t) = generate(&gs)?;
            let src = format!("generated two_cluster_mixture n={} p={} separation={}", a.n, a.p, a.separation);
            (d, Some(t.labels().to_vec()), src)
        }
    };
    if data.rows() == 0 {
        return Err(CliError::Config("no observations".into()));
    }
    if a.standardize {
        data = hdmix::niw::row_standardize(&data)?;
    }
    let prior = parse_prior(&a.prior, data.cols(), &spec)?;
    ensure_dir(&a.outdir)?;
    let s = run_chain(&data, &prior, &crp, &cfg)?;
    let ari = truth
        .as_ref()
        .map(|t| adjusted_rand_index(s.point_estimate.labels(), t))
        .transpose()?;
    let n = data.rows();
    let config = format!(
        "{source} standardize={} prior={} c1={} c2={} alpha={} sweeps={} burnin={} init={:?}",
        a.standardize, a.prior, a.c1, a.c2, a.alpha, a.sweeps, a.burnin, a.init
    );
    let meta = metadata("cluster", config, a.seed);
    let names: Vec<String> = (1..=n).map(|i| format!("obs{i}")).collect();
    let co = Table::new(Some(names), s.co_clustering.to_matrix());
    emit(&a.outdir, "co_clustering", &co, &meta, None)?;
    let kt = table(
        &["sweep", "k"],
        s.k_trace.iter().enumerate().map(|(i, &k)| vec![(i + 1) as f64, k as f64]).collect(),
    )?;
    emit(&a.outdir, "k_trace", &kt, &meta, Some(k_trace_chart))?;
    let est = table(
        &["observation", "label"],
        s.point_estimate.labels().iter().enumerate().map(|(i, &l)| vec![(i + 1) as f64, l as f64]).collect(),
    )?;
    emit(&a.outdir, "point_estimate", &est, &meta, None)?;
    let summary = table(
        &["k_mode", "ari", "frac_k1", "frac_kn", "n", "p"],
        vec![vec![
            s.k_mode as f64,
            ari.unwrap_or(f64::NAN),
            s.frac_single_cluster,
            s.frac_singletons,
            n as f64,
            data.cols() as f64,
        ]],
    )?;
    emit(&a.outdir, "summary", &summary, &meta, None)?;
    match ari {
        Some(v) => println!("k_mode={} ari={v:.4}", s.k_mode),
        None => println!("k_mode={}", s.k_mode),
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}

pub fn replot(a: &ReplotArgs) -> CliResult<()> {
    let charts: [(&str, ChartFn); 4] = [
        ("limits", limits_chart),
        ("projector", projector_chart),
        ("sweep", sweep_chart),
        ("k_trace", k_trace_chart),
    ];
    let mut done = 0;
    for (stem, f) in charts {
        let csv: PathBuf = a.outdir.join(format!("{stem}.csv"));
        if !csv.exists() {
            continue;
        }
        let t = read_csv(&csv)?;
        write_text(&a.outdir.join(format!("{stem}.svg")), &f(&t)?.render())?;
        eprintln!("replotted {stem}.svg");
        done += 1;
    }
    if done == 0 {
        return Err(CliError::Io(format!("no plottable CSV in {}", a.outdir.display())));
    }
    Ok(())
}
