//! Dense linear algebra in log space.
//!
//! Everything here is small and row-major. Determinants are only ever
//! produced as logarithms through a Cholesky factor: the cluster marginals
//! raise determinants to powers of order `p`, so raw determinants overflow
//! long before the dimensions of interest.

use crate::error::{Error, Result};

/// Relative pivot threshold for declaring a matrix numerically singular.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Dense rectangular matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `Mᵀ v`.
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.row_iter().zip(v) {
            axpy(vi, r, &mut out);
        }
        out
    }

    /// Row Gram matrix `M Mᵀ` (rows × rows).
    pub fn gram(&self) -> SymMatrix {
        let n = self.rows;
        let mut g = SymMatrix::zeros(n);
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..=i {
                let v = dot(ri, self.row(j));
                g.set_sym(i, j, v);
            }
        }
        g
    }

    /// Column cross-product `Mᵀ M` (cols × cols).
    pub fn cross(&self) -> SymMatrix {
        let p = self.cols;
        let mut c = SymMatrix::zeros(p);
        for r in self.row_iter() {
            for i in 0..p {
                let ri = r[i];
                if ri == 0.0 {
                    continue;
                }
                let dst = &mut c.data[i * p..i * p + i + 1];
                for (d, &rj) in dst.iter_mut().zip(&r[..=i]) {
                    *d += ri * rj;
                }
            }
        }
        c.mirror_lower();
        c
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Square symmetric matrix stored in full row-major form.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = s;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Accepts a row-major buffer only if it is exactly symmetric.
    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::Domain(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Fills the lower triangle from `f` and mirrors it.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set_sym(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn mirror_lower(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in 0..i {
                self.data[j * n + i] = self.data[i * n + j];
            }
        }
    }

    /// `self += s · v vᵀ`.
    pub fn add_outer(&mut self, s: f64, v: &[f64]) {
        let n = self.dim;
        for i in 0..n {
            let a = s * v[i];
            for j in 0..=i {
                self.data[i * n + j] += a * v[j];
            }
        }
        self.mirror_lower();
    }

    pub fn add_scaled(&mut self, s: f64, other: &SymMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add_diag(&mut self, s: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += s;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    /// Principal submatrix on the listed indices.
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim).fold(0.0_f64, |m, i| m.max(self.get(i, i)))
    }

    /// Scalar `c` when the matrix equals `c·I` exactly.
    pub fn as_scalar(&self) -> Option<f64> {
        let c = self.get(0, 0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { c } else { 0.0 };
                if self.get(i, j) != want {
                    return None;
                }
            }
        }
        Some(c)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CholFactor {
    dim: usize,
    // row-major, upper triangle kept at zero
    l: Vec<f64>,
}

/// Direction of a rank-one modification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    /// Forward substitution: `L⁻¹ b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s = dot(row, &x[..i]);
            x[i] = (x[i] - s) / self.l[i * n + i];
        }
        x
    }

    /// Back substitution: `L⁻ᵀ b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in j..n {
                inv.set_sym(i, j, col[i]);
            }
        }
        inv
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn(n, |i, j| {
            let k = j.min(i) + 1;
            dot(&self.l[i * n..i * n + k], &self.l[j * n..j * n + k])
        })
    }

    /// Extends the factor of `A` to the factor of `[[A, b], [bᵀ, c]]`.
    pub fn append(&self, b: &[f64], c: f64) -> Result<CholFactor> {
        let n = self.dim;
        let w = self.solve_lower(b);
        let d2 = c - dot(&w, &w);
        if !(d2 > PD_TOLERANCE * c.abs().max(self.max_diag_sq())) {
            return Err(Error::NotPositiveDefinite {
                index: n,
                pivot: d2,
            });
        }
        let m = n + 1;
        let mut l = vec![0.0; m * m];
        for i in 0..n {
            l[i * m..i * m + i + 1].copy_from_slice(&self.l[i * n..i * n + i + 1]);
        }
        l[n * m..n * m + n].copy_from_slice(&w);
        l[n * m + n] = d2.sqrt();
        Ok(CholFactor { dim: m, l })
    }

    fn max_diag_sq(&self) -> f64 {
        (0..self.dim).fold(0.0_f64, |m, i| m.max(self.get(i, i).powi(2)))
    }

    /// In-place rank-one update (`Plus`) or downdate (`Minus`).
    pub fn update_in_place(&mut self, v: &[f64], sign: Sign) -> Result<()> {
        let n = self.dim;
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let mut x = v.to_vec();
        for k in 0..n {
            let lkk = self.l[k * n + k];
            let r2 = lkk * lkk + s * x[k] * x[k];
            if !(r2 > PD_TOLERANCE * lkk * lkk) {
                return Err(Error::DowndateBreaksPD { index: k });
            }
            let r = r2.sqrt();
            let c = r / lkk;
            let sn = x[k] / lkk;
            self.l[k * n + k] = r;
            for i in k + 1..n {
                let lik = (self.l[i * n + k] + s * sn * x[i]) / c;
                self.l[i * n + k] = lik;
                x[i] = c * x[i] - sn * lik;
            }
        }
        Ok(())
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
pub fn cholesky(m: &SymMatrix) -> Result<CholFactor> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Domain("cholesky of an empty matrix".into()));
    }
    let tol = PD_TOLERANCE * m.max_diag();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let rowj = &l[j * n..j * n + j];
        let d = m.get(j, j) - dot(rowj, rowj);
        if !(d > tol) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let s = m.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = s / ljj;
        }
    }
    Ok(CholFactor { dim: n, l })
}

/// `log |m|` through the Cholesky diagonal.
pub fn log_det(m: &SymMatrix) -> Result<f64> {
    Ok(cholesky(m)?.log_det())
}

/// Factor of `L Lᵀ ± v vᵀ`.
pub fn rank1_update(f: &CholFactor, v: &[f64], sign: Sign) -> Result<CholFactor> {
    let mut out = f.clone();
    out.update_in_place(v, sign)?;
    Ok(out)
}

/// Largest singular value by power iteration on the smaller Gram matrix.
///
/// Stops once the Rayleigh quotient changes by less than `1e-8` relative.
/// When the iteration cap is hit, the error carries the best estimate.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("spectral norm of non-finite matrix".into()));
    }
    if m.rows() == 0 || m.cols() == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let g = if m.rows() <= m.cols() {
        m.gram()
    } else {
        m.cross()
    };
    let dim = g.dim();
    let cap = (10 * dim).max(100);
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    // a constant start vector can be orthogonal to the top eigenvector
    for (i, x) in v.iter_mut().enumerate() {
        *x *= 1.0 + 1e-3 * ((i * 7919 % 101) as f64);
    }
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..cap {
        let w = g.mul_vec(&v);
        let next = dot(&v, &w);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= 1e-8 * next.abs() {
            return Ok(next.max(0.0).sqrt());
        }
        lambda = next;
    }
    Err(Error::NoConvergence {
        iterations: cap,
        estimate: lambda.max(0.0).sqrt(),
    })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = b.gram();
        a.add_diag(1.0);
        a
    }

    fn rel_frob(a: &SymMatrix, b: &SymMatrix) -> f64 {
        let mut d = a.clone();
        d.add_scaled(-1.0, b);
        d.frobenius() / b.frobenius()
    }

    #[test]
    fn cholesky_identity() {
        let f = cholesky(&SymMatrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn cholesky_two_by_two() {
        let m = SymMatrix::from_vec(2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let f = cholesky(&m).unwrap();
        assert_relative_eq!(f.get(0, 0), 2.0);
        assert_relative_eq!(f.get(1, 0), 1.0);
        assert_eq!(f.get(0, 1), 0.0);
        assert_relative_eq!(f.get(1, 1), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let a = random_spd(50, 1);
        let f = cholesky(&a).unwrap();
        assert!(rel_frob(&f.reconstruct(), &a) < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_singular() {
        let m = SymMatrix::from_vec(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            cholesky(&m),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let singular = SymMatrix::from_vec(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(cholesky(&singular).is_err());
    }

    #[test]
    fn asymmetric_buffer_rejected() {
        assert!(SymMatrix::from_vec(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
    }

    #[test]
    fn log_det_simple() {
        assert_eq!(log_det(&SymMatrix::identity(5)).unwrap(), 0.0);
        assert_relative_eq!(
            log_det(&SymMatrix::diag(&[2.0, 2.0, 2.0])).unwrap(),
            3.0 * 2f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let a = random_spd(30, 2);
        let na = nalgebra::DMatrix::from_row_slice(30, 30, a.as_slice());
        let eig = nalgebra::SymmetricEigen::new(na);
        let want: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        assert_relative_eq!(log_det(&a).unwrap(), want, max_relative = 1e-8);
    }

    #[test]
    fn log_det_of_inverse_cancels() {
        let a = random_spd(20, 3);
        let inv = cholesky(&a).unwrap().inverse();
        let s = log_det(&a).unwrap() + log_det(&inv).unwrap();
        assert!(s.exp() - 1.0 < 1e-8 && 1.0 - s.exp() < 1e-8);
    }

    #[test]
    fn rank1_update_identity() {
        let f = cholesky(&SymMatrix::identity(2)).unwrap();
        let g = rank1_update(&f, &[1.0, 0.0], Sign::Plus).unwrap();
        let want = cholesky(&SymMatrix::diag(&[2.0, 1.0])).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(g.get(i, j), want.get(i, j), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rank1_update_then_downdate_restores() {
        let f = cholesky(&random_spd(10, 4)).unwrap();
        let v: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let g = rank1_update(&f, &v, Sign::Plus).unwrap();
        let h = rank1_update(&g, &v, Sign::Minus).unwrap();
        for i in 0..10 {
            for j in 0..=i {
                assert!((h.get(i, j) - f.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sequential_updates_match_refactorization() {
        let mut a = random_spd(15, 5);
        let mut f = cholesky(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let v: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
            f.update_in_place(&v, Sign::Plus).unwrap();
            a.add_outer(1.0, &v);
        }
        let fresh = cholesky(&a).unwrap();
        assert!(rel_frob(&f.reconstruct(), &fresh.reconstruct()) < 1e-9);
    }

    #[test]
    fn downdate_that_breaks_pd_is_rejected() {
        let f = cholesky(&SymMatrix::identity(2)).unwrap();
        assert!(matches!(
            rank1_update(&f, &[2.0, 0.0], Sign::Minus),
            Err(Error::DowndateBreaksPD { index: 0 })
        ));
    }

    #[test]
    fn append_matches_full_factorization() {
        let a = random_spd(6, 7);
        let idx: Vec<usize> = (0..5).collect();
        let f = cholesky(&a.submatrix(&idx)).unwrap();
        let b: Vec<f64> = (0..5).map(|i| a.get(5, i)).collect();
        let g = f.append(&b, a.get(5, 5)).unwrap();
        assert!(rel_frob(&g.reconstruct(), &a) < 1e-13);
        assert_relative_eq!(g.log_det(), log_det(&a).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn spectral_norm_simple() {
        let d = Matrix::from_rows(&[[3.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_relative_eq!(spectral_norm(&d).unwrap(), 3.0, max_relative = 1e-8);
        assert_eq!(spectral_norm(&Matrix::zeros(3, 4)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let m = Matrix::from_fn(10, 10, |_, _| rng.gen_range(-1.0..1.0));
            let na = nalgebra::DMatrix::from_row_slice(10, 10, m.as_slice());
            let want = na.singular_values().max();
            assert_relative_eq!(spectral_norm(&m).unwrap(), want, max_relative = 1e-6);
        }
    }

    #[test]
    fn spectral_norm_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = Matrix::from_fn(4, 12, |_, _| rng.gen_range(-1.0..1.0));
        let na = nalgebra::DMatrix::from_row_slice(4, 12, m.as_slice());
        let want = na.singular_values().max();
        assert_relative_eq!(spectral_norm(&m).unwrap(), want, max_relative = 1e-6);
        assert_relative_eq!(
            spectral_norm(&m.transpose()).unwrap(),
            want,
            max_relative = 1e-6
        );
    }

    proptest! {
        #[test]
        fn spectral_norm_bounds_every_probe(
            entries in prop::collection::vec(-5.0f64..5.0, 12),
            probe in prop::collection::vec(-1.0f64..1.0, 4),
        ) {
            let m = Matrix::from_vec(3, 4, entries).unwrap();
            let pn = dot(&probe, &probe).sqrt();
            prop_assume!(pn > 1e-6);
            let mu = m.mul_vec(&probe);
            let ratio = dot(&mu, &mu).sqrt() / pn;
            let s = match spectral_norm(&m) {
                Ok(s) => s,
                Err(Error::NoConvergence { estimate, .. }) => estimate,
                Err(e) => panic!("{e}"),
            };
            prop_assert!(s >= ratio * (1.0 - 1e-6) - 1e-12);
        }

        #[test]
        fn update_downdate_is_identity(
            v in prop::collection::vec(-2.0f64..2.0, 5),
            seed in 0u64..1000,
        ) {
            let f = cholesky(&random_spd(5, seed)).unwrap();
            let h = rank1_update(&rank1_update(&f, &v, Sign::Plus).unwrap(), &v, Sign::Minus).unwrap();
            let d = rel_frob(&h.reconstruct(), &f.reconstruct());
            prop_assert!(d < 1e-9);
        }
    }
}
