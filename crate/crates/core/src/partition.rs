//! Partitions of `n` items and the prior-side EPPF ratio.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Cluster labels `c₁…cₙ` in canonical form: labels are `1..=k`, numbered by
/// first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Canonicalizes arbitrary labels.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = HashMap::new();
        let mut sizes = Vec::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = map.len() + 1;
                let c = *map.entry(l).or_insert(next);
                if c > sizes.len() {
                    sizes.push(0);
                }
                sizes[c - 1] += 1;
                c
            })
            .collect();
        Self { labels, sizes }
    }

    pub fn single_cluster(n: usize) -> Self {
        Self::from_labels(&vec![1; n])
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn size_of(&self, label: usize) -> Result<usize> {
        self.check_label(label)?;
        Ok(self.sizes[label - 1])
    }

    /// Item indices in cluster `label`, ascending.
    pub fn members(&self, label: usize) -> Result<Vec<usize>> {
        self.check_label(label)?;
        Ok(self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect())
    }

    /// Item indices of every cluster, in label order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l - 1].push(i);
        }
        out
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label == 0 || label > self.k() {
            return Err(Error::UnknownLabel(label));
        }
        Ok(())
    }

    /// Partition with clusters `h1` and `h2` joined, relabeled canonically.
    pub fn merge(&self, h1: usize, h2: usize) -> Result<Partition> {
        self.check_label(h1)?;
        self.check_label(h2)?;
        if h1 == h2 {
            return Err(Error::SameLabel(h1));
        }
        let raw: Vec<usize> = self
            .labels
            .iter()
            .map(|&l| if l == h2 { h1 } else { l })
            .collect();
        Ok(Partition::from_labels(&raw))
    }
}

/// A partition prior exposing its exchangeable partition probability function.
pub trait PartitionPrior {
    /// `ln Π(sizes)`.
    fn log_eppf(&self, sizes: &[usize]) -> f64;

    /// `ln[Π(Ψ)/Π(Ψ′)]` where `Ψ′` joins two clusters of sizes `n1` and `n2`.
    fn merge_log_ratio(&self, n1: usize, n2: usize) -> f64;
}

/// Chinese restaurant process with concentration `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrpPrior {
    alpha: f64,
}

impl CrpPrior {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

fn lg(n: usize) -> f64 {
    // sizes are >= 1 here, so the argument is always valid
    ln_gamma(n as f64).unwrap_or(f64::NAN)
}

impl PartitionPrior for CrpPrior {
    fn log_eppf(&self, sizes: &[usize]) -> f64 {
        let n: usize = sizes.iter().sum();
        let a = self.alpha;
        sizes.len() as f64 * a.ln() + ln_gamma(a).unwrap_or(f64::NAN)
            - ln_gamma(a + n as f64).unwrap_or(f64::NAN)
            + sizes.iter().map(|&s| lg(s)).sum::<f64>()
    }

    fn merge_log_ratio(&self, n1: usize, n2: usize) -> f64 {
        self.alpha.ln() + lg(n1) + lg(n2) - lg(n1 + n2)
    }
}

/// `ln[Π(Ψ)/Π(Ψ′)]` for the merge of `h1` and `h2` in `part`.
pub fn eppf_log_ratio(
    part: &Partition,
    h1: usize,
    h2: usize,
    prior: &impl PartitionPrior,
) -> Result<f64> {
    if h1 == h2 {
        part.check_label(h1)?;
        return Err(Error::SameLabel(h1));
    }
    Ok(prior.merge_log_ratio(part.size_of(h1)?, part.size_of(h2)?))
}

/// All set partitions of `n` items in canonical (restricted-growth) form.
pub fn enumerate_partitions(n: usize) -> Vec<Partition> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition::from_labels(prefix));
            return;
        }
        for l in 1..=max + 1 {
            prefix.push(l);
            rec(prefix, max.max(l), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(&mut Vec::with_capacity(n), 0, n, &mut out);
    out
}
