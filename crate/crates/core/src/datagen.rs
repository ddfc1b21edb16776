//! Synthetic data for the experiments.
//!
//! Every generator draws from a ChaCha8 stream keyed by `(seed, replicate)`,
//! with normals from `rand_distr::StandardNormal` (ziggurat). The pair is
//! named in [`GENERATOR`] so outputs can record it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::niw::row_standardize;
use crate::partition::Partition;

pub const GENERATOR: &str =
    "rand_chacha::ChaCha8Rng::seed_from_u64(seed).set_stream(stream) + rand_distr::StandardNormal";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GenKind {
    /// `N(0, I)`: one component.
    SingleGaussian,
    /// Equal-weight mixture of `N(±(separation/2)·1, I)`.
    TwoClusterMixture,
    /// Equal-weight mixture of `k` unit-covariance components whose means are
    /// `separation` apart along `1`, centered on the origin.
    KClusterMixture { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub p: usize,
    pub separation: f64,
    pub seed: u64,
    pub replicate: u64,
    pub standardize: bool,
}

impl GenSpec {
    pub fn new(kind: GenKind, n: usize, p: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            p,
            separation: 2.0,
            seed,
            replicate: 0,
            standardize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 2 {
            return Err(Error::InvalidSpec(format!(
                "need n >= 2 and p >= 2, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "separation must be finite and >= 0, got {}",
                self.separation
            )));
        }
        if let GenKind::KClusterMixture { k } = self.kind {
            if k == 0 || k > self.n {
                return Err(Error::InvalidSpec(format!("k = {k} must lie in 1..=n")));
            }
        }
        Ok(())
    }

    fn components(&self) -> usize {
        match self.kind {
            GenKind::SingleGaussian => 1,
            GenKind::TwoClusterMixture => 2,
            GenKind::KClusterMixture { k } => k,
        }
    }
}

/// Deterministic stream for `(seed, replicate)`.
pub fn stream_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Draws the data matrix and the component labels.
///
/// Component sizes are balanced (they differ by at most one) and the
/// assignment order is a uniform random permutation.
pub fn generate(spec: &GenSpec) -> Result<(Matrix, Partition)> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, spec.replicate);
    let k = spec.components();
    let mut comp: Vec<usize> = (0..spec.n).map(|i| i % k).collect();
    comp.shuffle(&mut rng);
    let center = (k as f64 - 1.0) / 2.0;
    let mut data = Matrix::zeros(spec.n, spec.p);
    for (i, &c) in comp.iter().enumerate() {
        let shift = spec.separation * (c as f64 - center);
        for v in data.row_mut(i) {
            *v = shift + rng.sample::<f64, _>(StandardNormal);
        }
    }
    if spec.standardize {
        data = row_standardize(&data)?;
    }
    Ok((data, Partition::from_labels(&comp)))
}
