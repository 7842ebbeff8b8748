//! Dense row-major matrices, Toeplitz helpers and a blocked Cholesky
//! factorization with triangular solves.
//!
//! The blocked routines split their work into row panels that go through
//! [`Execution`], so the same code path serves the sequential and the rayon
//! build.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;

/// Column block width for the factorization and the solves.
const NB: usize = 128;
/// Rows of the right-hand side handled by one parallel task in a solve.
const SOLVE_PANEL_ROWS: usize = 64;
/// Rows of the trailing matrix handled by one parallel task.
const UPDATE_PANEL_ROWS: usize = 16;

/// Relative diagonal jitter used when a PSD matrix fails to factor.
pub const PSD_JITTER_START: f64 = 1e-12;
/// Largest relative jitter tried before giving up.
pub const PSD_JITTER_MAX: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
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

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += v;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Real matrix times complex vector.
    pub fn matvec_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, x) in self.row(i).iter().zip(v) {
                    acc += x * a;
                }
                acc
            })
            .collect()
    }

    /// `self * other^T`, both row-major.
    pub fn mul_transpose(&self, other: &Matrix, exec: Execution) -> Matrix {
        assert_eq!(self.cols, other.cols);
        let k = self.cols;
        let m = other.rows;
        let mut out = Matrix::zeros(self.rows, m);
        let panel = UPDATE_PANEL_ROWS;
        exec.for_each_chunk_mut(&mut out.data, panel * m.max(1), |ci, chunk| {
            let r0 = ci * panel;
            let nrows = chunk.len() / m.max(1);
            let a_rows: Vec<&[f64]> = (r0..r0 + nrows).map(|i| self.row(i)).collect();
            let b_rows: Vec<&[f64]> = (0..m).map(|j| other.row(j)).collect();
            tile_dots(&a_rows, &b_rows, 0..k, |r, j, v| chunk[r * m + j] = v);
        });
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric Toeplitz matrix stored by its first row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricToeplitz {
    first_row: Vec<f64>,
}

impl SymmetricToeplitz {
    pub fn new(first_row: Vec<f64>) -> Self {
        Self { first_row }
    }

    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.first_row[m.abs_diff(n)]
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| self.get(i, j))
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T = A + jitter * I`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
    jitter: f64,
}

impl Cholesky {
    /// Strict factorization: fails on the first non-positive pivot.
    pub fn factor(a: &Matrix, exec: Execution) -> Result<Self> {
        check_square(a)?;
        let mut l = a.clone();
        cholesky_in_place(&mut l, exec).map_err(|(row, pivot)| Error::NotPsd {
            row,
            pivot,
            jitter: 0.0,
        })?;
        Ok(Self { l, jitter: 0.0 })
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn into_l(self) -> Matrix {
        self.l
    }

    /// Absolute diagonal jitter that was added (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    /// Solves `L x = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for i in 0..n {
            let row = self.l.row(i);
            let s = b[i] - dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `L^T x = b` in place.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for i in (0..n).rev() {
            b[i] /= self.l[(i, i)];
            let xi = b[i];
            let row = self.l.row(i);
            for (bj, lij) in b[..i].iter_mut().zip(&row[..i]) {
                *bj -= lij * xi;
            }
        }
    }

    /// Solves `(L L^T) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    pub fn solve_complex(&self, b: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = b.iter().map(|z| z.re).collect();
        let im: Vec<f64> = b.iter().map(|z| z.im).collect();
        let re = self.solve(&re);
        let im = self.solve(&im);
        re.into_iter()
            .zip(im)
            .map(|(r, i)| Complex64::new(r, i))
            .collect()
    }

    /// Replaces every row `y` of `rhs` by `L^{-1} y`, i.e. `rhs <- rhs L^{-T}`.
    /// Leading zeros in a row panel are detected and skipped.
    pub fn forward_rows(&self, rhs: &mut Matrix, exec: Execution) -> Result<()> {
        let n = self.dim();
        if rhs.cols != n {
            return Err(Error::Dimension {
                expected: n,
                got: rhs.cols,
            });
        }
        let l = &self.l;
        exec.for_each_chunk_mut(&mut rhs.data, SOLVE_PANEL_ROWS * n.max(1), |_, chunk| {
            forward_panel(l, chunk, n);
        });
        Ok(())
    }

    /// `B A^{-1}` for symmetric `A = L L^T` (row-wise full solves).
    pub fn solve_right(&self, b: &Matrix, exec: Execution) -> Result<Matrix> {
        let n = self.dim();
        if b.cols != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.cols,
            });
        }
        let mut out = b.clone();
        exec.for_each_chunk_mut(&mut out.data, n.max(1), |_, row| {
            self.forward_in_place(row);
            self.backward_in_place(row);
        });
        Ok(out)
    }

    /// `trace(A^{-1}) = ||L^{-1}||_F^2`.
    pub fn trace_inverse(&self, exec: Execution) -> f64 {
        let mut y = Matrix::identity(self.dim());
        self.forward_rows(&mut y, exec)
            .expect("identity has matching dimension");
        y.frobenius_norm_sq()
    }

    /// `A^{-1}` as a dense matrix.
    pub fn inverse(&self, exec: Execution) -> Matrix {
        let mut y = Matrix::identity(self.dim());
        self.forward_rows(&mut y, exec)
            .expect("identity has matching dimension");
        // rows of y are columns of L^{-1}: A^{-1} = L^{-T} L^{-1} = y y^T
        y.mul_transpose(&y, exec)
    }
}

/// Cholesky factor of a symmetric positive semidefinite matrix. Only the lower
/// triangle is read. Failed factorizations are retried with diagonal jitter
/// `eps * max(diag)` for `eps` from 1e-12 up to 1e-8.
pub fn cholesky_psd(a: &Matrix, exec: Execution) -> Result<Cholesky> {
    check_square(a)?;
    let scale = a.diagonal().into_iter().fold(0.0f64, f64::max);
    if !(scale > 0.0) {
        return Err(Error::NotPsd {
            row: 0,
            pivot: scale,
            jitter: 0.0,
        });
    }
    let mut last;
    let mut eps = 0.0;
    loop {
        let jitter = eps * scale;
        let mut l = a.clone();
        l.add_diagonal(jitter);
        match cholesky_in_place(&mut l, exec) {
            Ok(()) => {
                if jitter > 0.0 {
                    log::debug!("cholesky_psd: added diagonal jitter {jitter:e}");
                }
                return Ok(Cholesky { l, jitter });
            }
            Err(fail) => last = fail,
        }
        eps = if eps == 0.0 { PSD_JITTER_START } else { eps * 10.0 };
        if eps > PSD_JITTER_MAX * 1.000_001 {
            return Err(Error::NotPsd {
                row: last.0,
                pivot: last.1,
                jitter: PSD_JITTER_MAX * scale,
            });
        }
    }
}

/// Convenience for Toeplitz inputs.
pub fn cholesky_psd_toeplitz(t: &SymmetricToeplitz, exec: Execution) -> Result<Cholesky> {
    cholesky_psd(&t.to_dense(), exec)
}

fn check_square(a: &Matrix) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(invalid(
            "matrix",
            format!("expected square matrix, got {}x{}", a.rows, a.cols),
        ))
    }
}

/// Right-looking blocked Cholesky on the lower triangle. Returns the failing
/// row and pivot on a non-positive (or NaN) pivot.
fn cholesky_in_place(a: &mut Matrix, exec: Execution) -> std::result::Result<(), (usize, f64)> {
    let n = a.rows;
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + NB).min(n);
        let kb = k1 - k0;

        // Diagonal block.
        for i in k0..k1 {
            for j in k0..=i {
                let s = {
                    let ri = &a.data[i * n + k0..i * n + j];
                    let rj = &a.data[j * n + k0..j * n + j];
                    a.data[i * n + j] - dot(ri, rj)
                };
                if i == j {
                    if !(s > 0.0) {
                        return Err((i, s));
                    }
                    a.data[i * n + i] = s.sqrt();
                } else {
                    a.data[i * n + j] = s / a.data[j * n + j];
                }
            }
        }
        if k1 == n {
            break;
        }

        let lkk = Matrix::from_fn(kb, kb, |i, j| {
            if j <= i {
                a.data[(k0 + i) * n + k0 + j]
            } else {
                0.0
            }
        });

        // Panel below the diagonal block.
        let (_, below) = a.data.split_at_mut(k1 * n);
        exec.for_each_chunk_mut(below, UPDATE_PANEL_ROWS * n, |_, chunk| {
            for row in chunk.chunks_mut(n) {
                let seg = &mut row[k0..k1];
                for j in 0..kb {
                    let s = seg[j] - dot(&seg[..j], &lkk.row(j)[..j]);
                    seg[j] = s / lkk[(j, j)];
                }
            }
        });

        // Pack the panel and update the trailing lower triangle.
        let m = n - k1;
        let mut panel = vec![0.0; m * kb];
        for r in 0..m {
            panel[r * kb..(r + 1) * kb].copy_from_slice(&a.data[(k1 + r) * n + k0..(k1 + r) * n + k1]);
        }
        let prow = |r: usize| &panel[r * kb..(r + 1) * kb];
        let (_, trailing) = a.data.split_at_mut(k1 * n);
        exec.for_each_chunk_mut(trailing, UPDATE_PANEL_ROWS * n, |ci, chunk| {
            let r0 = ci * UPDATE_PANEL_ROWS;
            let nrows = chunk.len() / n;
            let a_rows: Vec<&[f64]> = (r0..r0 + nrows).map(prow).collect();
            let b_rows: Vec<&[f64]> = (0..(r0 + nrows)).map(prow).collect();
            tile_dots(&a_rows, &b_rows, 0..kb, |r, j, v| {
                if j <= r0 + r {
                    chunk[r * n + k1 + j] -= v;
                }
            });
        });
        k0 = k1;
    }
    for i in 0..n {
        for j in i + 1..n {
            a.data[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Forward substitution for a panel of right-hand-side rows stored
/// contiguously in `chunk` (row length `n`).
fn forward_panel(l: &Matrix, chunk: &mut [f64], n: usize) {
    if n == 0 {
        return;
    }
    let nrows = chunk.len() / n;
    let first_nz = chunk
        .chunks(n)
        .map(|r| r.iter().position(|&x| x != 0.0).unwrap_or(n))
        .min()
        .unwrap_or(n);
    let start = (first_nz / NB) * NB;
    let mut ib = start;
    while ib < n {
        let i1 = (ib + NB).min(n);
        if ib > start {
            let mut updates = vec![0.0; nrows * (i1 - ib)];
            {
                let y_rows: Vec<&[f64]> = chunk.chunks(n).collect();
                let g_rows: Vec<&[f64]> = (ib..i1).map(|i| l.row(i)).collect();
                let w = i1 - ib;
                tile_dots(&y_rows, &g_rows, start..ib, |r, j, v| updates[r * w + j] = v);
            }
            for (r, row) in chunk.chunks_mut(n).enumerate() {
                let w = i1 - ib;
                for (dst, u) in row[ib..i1].iter_mut().zip(&updates[r * w..(r + 1) * w]) {
                    *dst -= u;
                }
            }
        }
        for row in chunk.chunks_mut(n) {
            for i in ib..i1 {
                let li = l.row(i);
                let s = row[i] - dot(&row[ib..i], &li[ib..i]);
                row[i] = s / li[i];
            }
        }
        ib = i1;
    }
}

/// For every pair `(r, j)` computes `dot(a[r][k], b[j][k])` over the column
/// range and hands it to `sink(r, j, value)`. Pairs with `j` beyond the last
/// row of `b` are never produced.
fn tile_dots(
    a: &[&[f64]],
    b: &[&[f64]],
    k: std::ops::Range<usize>,
    mut sink: impl FnMut(usize, usize, f64),
) {
    if k.is_empty() {
        for r in 0..a.len() {
            for j in 0..b.len() {
                sink(r, j, 0.0);
            }
        }
        return;
    }
    let mut r = 0;
    while r < a.len() {
        let rb = (a.len() - r).min(4);
        let mut j = 0;
        while j < b.len() {
            let jb = (b.len() - j).min(4);
            if rb == 4 && jb == 4 {
                let av = [
                    &a[r][k.clone()],
                    &a[r + 1][k.clone()],
                    &a[r + 2][k.clone()],
                    &a[r + 3][k.clone()],
                ];
                let bv = [
                    &b[j][k.clone()],
                    &b[j + 1][k.clone()],
                    &b[j + 2][k.clone()],
                    &b[j + 3][k.clone()],
                ];
                let t = dot4x4(av, bv);
                for (x, row) in t.iter().enumerate() {
                    for (y, &v) in row.iter().enumerate() {
                        sink(r + x, j + y, v);
                    }
                }
            } else {
                for x in 0..rb {
                    for y in 0..jb {
                        sink(r + x, j + y, dot(&a[r + x][k.clone()], &b[j + y][k.clone()]));
                    }
                }
            }
            j += jb;
        }
        r += rb;
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline(always)]
fn dot4x4_body(a: [&[f64]; 4], b: [&[f64]; 4]) -> [[f64; 4]; 4] {
    let n = a[0].len();
    let mut acc = [[[0.0f64; 4]; 4]; 4];
    let full = n / 4 * 4;
    let mut k = 0;
    while k < full {
        let av: [[f64; 4]; 4] = std::array::from_fn(|x| {
            let s = &a[x][k..k + 4];
            [s[0], s[1], s[2], s[3]]
        });
        let bv: [[f64; 4]; 4] = std::array::from_fn(|y| {
            let s = &b[y][k..k + 4];
            [s[0], s[1], s[2], s[3]]
        });
        for x in 0..4 {
            for y in 0..4 {
                for l in 0..4 {
                    acc[x][y][l] += av[x][l] * bv[y][l];
                }
            }
        }
        k += 4;
    }
    let mut out = [[0.0; 4]; 4];
    for x in 0..4 {
        for y in 0..4 {
            let v = &acc[x][y];
            let mut s = (v[0] + v[2]) + (v[1] + v[3]);
            for kk in full..n {
                s += a[x][kk] * b[y][kk];
            }
            out[x][y] = s;
        }
    }
    out
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn dot4x4_avx2(a: [&[f64]; 4], b: [&[f64]; 4]) -> [[f64; 4]; 4] {
    dot4x4_body(a, b)
}

fn dot4x4(a: [&[f64]; 4], b: [&[f64]; 4]) -> [[f64; 4]; 4] {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
            // SAFETY: the required CPU features were detected at runtime.
            return unsafe { dot4x4_avx2(a, b) };
        }
    }
    dot4x4_body(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut a = b.mul_transpose(&b, Execution::Sequential);
        a.add_diagonal(n as f64 * 0.1);
        a
    }

    fn naive_cholesky(a: &Matrix) -> Matrix {
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut s = a[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)];
            }
            l[(j, j)] = s.sqrt();
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / l[(j, j)];
            }
        }
        l
    }

    #[test]
    fn small_examples() {
        let id = Matrix::identity(2);
        let c = cholesky_psd(&id, Execution::Sequential).unwrap();
        assert_eq!(c.l(), &id);
        let m = Matrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]]);
        let c = cholesky_psd(&m, Execution::Sequential).unwrap();
        assert_eq!(c.jitter(), 0.0);
        assert!((c.l()[(1, 0)] - 0.5).abs() < 1e-15);
        assert!((c.l()[(1, 1)] - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.l()[(0, 1)], 0.0);
    }

    #[test]
    fn rank_one_needs_jitter() {
        let m = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(Cholesky::factor(&m, Execution::Sequential).is_err());
        let c = cholesky_psd(&m, Execution::Sequential).unwrap();
        assert!(c.jitter() > 0.0 && c.jitter() <= PSD_JITTER_MAX);
        let want = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(c.l().max_abs_diff(&want) < 1e-4);
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            cholesky_psd(&m, Execution::Sequential),
            Err(Error::NotPsd { .. })
        ));
        assert!(cholesky_psd(&Matrix::zeros(2, 3), Execution::Sequential).is_err());
    }

    #[test]
    fn blocked_matches_naive_and_round_trips() {
        for (n, seed) in [(1, 1), (5, 2), (63, 3), (64, 4), (65, 5), (130, 6), (257, 7)] {
            let a = random_spd(n, seed);
            for exec in [Execution::Sequential, Execution::Workers(3)] {
                let c = Cholesky::factor(&a, exec).unwrap();
                let naive = naive_cholesky(&a);
                assert!(c.l().max_abs_diff(&naive) < 1e-10, "n={n}");
                let back = c.l().mul_transpose(c.l(), exec);
                let rel = back.sub(&a).frobenius_norm_sq().sqrt() / a.frobenius_norm_sq().sqrt();
                assert!(rel < 1e-13, "n={n} rel={rel}");
            }
        }
    }

    #[test]
    fn solves_agree() {
        let n = 150;
        let a = random_spd(n, 11);
        let c = Cholesky::factor(&a, Execution::Sequential).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = c.solve(&b);
        let r = a.matvec(&x);
        assert!(r.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-10));

        // forward_rows against per-row forward substitution
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rhs = Matrix::from_fn(70, n, |i, j| if j < i { 0.0 } else { rng.random_range(-1.0..1.0) });
        let orig = rhs.clone();
        c.forward_rows(&mut rhs, Execution::Workers(2)).unwrap();
        for i in 0..70 {
            let mut v = orig.row(i).to_vec();
            c.forward_in_place(&mut v);
            let d = v.iter().zip(rhs.row(i)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-10);
        }

        let inv = c.inverse(Execution::Sequential);
        let eye = a.matmul(&inv);
        assert!(eye.max_abs_diff(&Matrix::identity(n)) < 1e-10);
        assert!((c.trace_inverse(Execution::Sequential) - inv.trace()).abs() < 1e-10);

        let b = Matrix::from_fn(3, n, |i, j| ((i + 1) * (j + 2)) as f64 * 1e-2);
        let x = c.solve_right(&b, Execution::Sequential).unwrap();
        assert!(x.matmul(&a).max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn toeplitz_indexing() {
        let t = SymmetricToeplitz::new(vec![3.0, 2.0, 1.0]);
        let d = t.to_dense();
        assert_eq!(d.row(0), &[3.0, 2.0, 1.0]);
        assert_eq!(d.row(2), &[1.0, 2.0, 3.0]);
        assert!(d.is_symmetric(0.0));
    }

    #[test]
    fn complex_solve() {
        let a = random_spd(6, 9);
        let c = Cholesky::factor(&a, Execution::Sequential).unwrap();
        let b: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let x = c.solve_complex(&b);
        let back = a.matvec_complex(&x);
        assert!(back.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-12));
    }
}
