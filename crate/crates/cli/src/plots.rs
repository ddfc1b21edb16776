//! Charts built from the parsed output tables.

use hdmix::csvio::Table;

use crate::commands::CliError;
use crate::svg::{Chart, Series, PALETTE};

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn col(t: &Table, name: &str) -> Result<usize, CliError> {
    t.column(name)
        .ok_or_else(|| CliError::Io(format!("table has no column {name:?}")))
}

/// Distinct values of column `key` in first-seen order.
fn groups(t: &Table, key: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in t.data.row_iter() {
        if !out.contains(&r[key]) {
            out.push(r[key]);
        }
    }
    out
}

/// Median of `value` over rows where every `(column, value)` filter matches.
fn median_where(t: &Table, value: usize, filters: &[(usize, f64)]) -> f64 {
    let mut v: Vec<f64> = t
        .data
        .row_iter()
        .filter(|r| filters.iter().all(|&(c, x)| r[c] == x))
        .map(|r| r[value])
        .collect();
    median(&mut v)
}

pub fn limits_chart(t: &Table) -> Result<Chart, CliError> {
    let p = col(t, "p")?;
    let ps = groups(t, p);
    let pairs = [
        ("term_gamma", "gamma_limit"),
        ("term_kappa", "kappa_limit"),
        ("term_det_kappa", "det_kappa_limit"),
        ("term_det_gram", "det_gram_limit"),
        ("total", "total_limit"),
    ];
    let mut series = Vec::new();
    for (k, (term, limit)) in pairs.iter().enumerate() {
        let (ct, cl) = (col(t, term)?, col(t, limit)?);
        series.push(Series {
            name: format!("{term} (median)"),
            color: PALETTE[k],
            dashed: false,
            points: ps.iter().map(|&x| (x, median_where(t, ct, &[(p, x)]))).collect(),
        });
        series.push(Series {
            name: (*limit).to_string(),
            color: PALETTE[k],
            dashed: true,
            points: ps.iter().map(|&x| (x, median_where(t, cl, &[(p, x)]))).collect(),
        });
    }
    Ok(Chart {
        title: "Merge log-ratio terms vs analytic limits".into(),
        x_label: "p (log scale)".into(),
        y_label: "log ratio".into(),
        log_x: true,
        series,
    })
}

pub fn projector_chart(t: &Table) -> Result<Chart, CliError> {
    let (p, m) = (col(t, "p")?, col(t, "median_residual")?);
    Ok(Chart {
        title: "Projector residual ‖(I + YYᵀ)⁻¹‖₂".into(),
        x_label: "p (log scale)".into(),
        y_label: "median residual".into(),
        log_x: true,
        series: vec![Series {
            name: "median".into(),
            color: PALETTE[0],
            dashed: false,
            points: t.data.row_iter().map(|r| (r[p], r[m])).collect(),
        }],
    })
}

pub fn sweep_chart(t: &Table) -> Result<Chart, CliError> {
    let p = col(t, "p")?;
    let prior = col(t, "prior")?;
    let degen = col(t, "degenerate_fraction")?;
    let ari = col(t, "ari")?;
    let ps = groups(t, p);
    let mut series = Vec::new();
    for (k, (code, name)) in [(0.0, "robust"), (1.0, "naive")].iter().enumerate() {
        series.push(Series {
            name: format!("{name}: k in {{1,n}}"),
            color: PALETTE[k],
            dashed: false,
            points: ps.iter().map(|&x| (x, median_where(t, degen, &[(p, x), (prior, *code)]))).collect(),
        });
        series.push(Series {
            name: format!("{name}: ARI"),
            color: PALETTE[k],
            dashed: true,
            points: ps.iter().map(|&x| (x, median_where(t, ari, &[(p, x), (prior, *code)]))).collect(),
        });
    }
    Ok(Chart {
        title: "Degenerate-k fraction and ARI (medians over replicates)".into(),
        x_label: "p (log scale)".into(),
        y_label: "fraction / ARI".into(),
        log_x: true,
        series,
    })
}

pub fn k_trace_chart(t: &Table) -> Result<Chart, CliError> {
    let (s, k) = (col(t, "sweep")?, col(t, "k")?);
    Ok(Chart {
        title: "Number of clusters per sweep".into(),
        x_label: "sweep".into(),
        y_label: "k".into(),
        log_x: false,
        series: vec![Series {
            name: "k".into(),
            color: PALETTE[0],
            dashed: false,
            points: t.data.row_iter().map(|r| (r[s], r[k])).collect(),
        }],
    })
}
