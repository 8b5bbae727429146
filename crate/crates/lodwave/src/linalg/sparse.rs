//! Compressed sparse row storage with a triplet-based builder.

use crate::{Error, Result};

/// Sparse matrix in compressed row storage. Column indices are sorted and
/// unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates (row, col, value) triplets; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        Self { rows, cols, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn build(mut self) -> SparseMatrix {
        self.entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix { rows: self.rows, cols: self.cols, row_ptr, col_idx, values }
    }
}

impl SparseMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 1.0);
        }
        b.build()
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        TripletBuilder::new(rows, cols).build()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Iterate all stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals.iter()).map(move |(&c, &v)| (i, c, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                y[*c] += v * x[i];
            }
        }
        y
    }

    /// u' A v.
    pub fn quadratic_form(&self, u: &[f64], v: &[f64]) -> f64 {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        let mut acc = 0.0;
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (c, val) in cols.iter().zip(vals) {
                row_acc += val * v[*c];
            }
            acc += u[i] * row_acc;
        }
        acc
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                let (_, vals) = self.row(i);
                vals.iter().sum()
            })
            .collect()
    }

    /// self + alpha * other, matching shapes required.
    pub fn add_scaled(&self, other: &SparseMatrix, alpha: f64) -> SparseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut b = TripletBuilder::with_capacity(self.rows, self.cols, self.nnz() + other.nnz());
        for (i, j, v) in self.iter() {
            b.push(i, j, v);
        }
        for (i, j, v) in other.iter() {
            b.push(i, j, alpha * v);
        }
        b.build()
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= alpha;
        }
        m
    }

    /// Submatrix with the given (global) row and column index sets, in order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.cols];
        for (local, &c) in cols.iter().enumerate() {
            col_map[c] = local;
        }
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for (local_r, &r) in rows.iter().enumerate() {
            let (cs, vs) = self.row(r);
            for (c, v) in cs.iter().zip(vs) {
                let lc = col_map[*c];
                if lc != usize::MAX {
                    b.push(local_r, lc, *v);
                }
            }
        }
        b.build()
    }

    /// Materialize all columns as dense vectors.
    pub fn dense_columns(&self) -> Vec<Vec<f64>> {
        let mut cols = vec![vec![0.0; self.rows]; self.cols];
        for (i, j, v) in self.iter() {
            cols[j][i] = v;
        }
        cols
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.iter() {
            d[i][j] = v;
        }
        d
    }

    pub fn from_dense(d: &[Vec<f64>], cols: usize) -> SparseMatrix {
        let mut b = TripletBuilder::new(d.len(), cols);
        for (i, row) in d.iter().enumerate() {
            assert_eq!(row.len(), cols);
            for (j, &v) in row.iter().enumerate() {
                b.push(i, j, v);
            }
        }
        b.build()
    }

    /// Check |A_ij - A_ji| <= tol * max(|A_ij|, |A_ji|, 1) for all entries.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        self.iter().all(|(i, j, v)| {
            let w = self.get(j, i);
            (v - w).abs() <= tol * v.abs().max(w.abs()).max(1.0)
        })
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        if self.is_symmetric(tol) {
            Ok(())
        } else {
            Err(Error::Linalg("matrix is not symmetric".into()))
        }
    }

    /// Upper triangle (row <= col) in compressed column form, as consumed by
    /// the LDL' factorization. Returns (col_ptr, row_idx, values).
    pub(crate) fn upper_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut counts = vec![0usize; n + 1];
        for (i, j, _) in self.iter() {
            if i <= j {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut next = col_ptr.clone();
        // rows are visited ascending, so each column stays sorted by row
        for (i, j, v) in self.iter() {
            if i <= j {
                let p = next[j];
                row_idx[p] = i;
                vals[p] = v;
                next[j] += 1;
            }
        }
        (col_ptr, row_idx, vals)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_sums_duplicates_and_sorts() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 2, 3.0);
        b.push(0, 0, -1.0);
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 4.0);
        assert_eq!(m.get(0, 0), -1.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(0, 2), 0.0);
        let (cols, _) = m.row(0);
        assert_eq!(cols, &[0, 1]);
    }

    #[test]
    fn matvec_and_transpose() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(0, 0, 1.0);
        b.push(0, 2, 2.0);
        b.push(1, 1, 3.0);
        let m = b.build();
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0]);
        assert_eq!(m.matvec_transpose(&[1.0, 2.0]), vec![1.0, 6.0, 2.0]);
    }

    #[test]
    fn submatrix_picks_rows_cols() {
        let mut b = TripletBuilder::new(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                b.push(i, j, (3 * i + j) as f64);
            }
        }
        let m = b.build();
        let s = m.submatrix(&[2, 0], &[1, 2]);
        assert_eq!(s.to_dense(), vec![vec![7.0, 8.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn symmetry_check() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0 + 1e-16);
        b.push(0, 0, 2.0);
        b.push(1, 1, 2.0);
        let m = b.build();
        assert!(m.is_symmetric(1e-14));
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 1, 1.0);
        let m = b.build();
        assert!(!m.is_symmetric(1e-14));
    }

    #[test]
    fn upper_csc_extraction() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 4.0);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        b.push(1, 1, 5.0);
        let m = b.build();
        let (cp, ri, vx) = m.upper_csc();
        assert_eq!(cp, vec![0, 1, 3]);
        assert_eq!(ri, vec![0, 0, 1]);
        assert_eq!(vx, vec![4.0, 1.0, 5.0]);
    }
}
