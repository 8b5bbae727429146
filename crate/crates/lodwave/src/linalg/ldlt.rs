//! Up-looking sparse LDL' factorization without pivoting (Davis' LDL
//! algorithm, natural ordering).
//!
//! Works on the upper triangle of a symmetric matrix. For positive definite
//! input all pivots are positive; for symmetric quasi-definite input (as
//! assembled for constrained saddle-point solves) the pivots are nonzero
//! with a fixed sign pattern, so the unpivoted factorization is well
//! defined.

use super::sparse::SparseMatrix;

/// Offending pivot reported by [`SparseLdlt::factor`].
#[derive(Debug, Clone, Copy)]
pub struct PivotFailure {
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SparseLdlt {
    n: usize,
    // L in compressed column form, unit diagonal not stored
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl SparseLdlt {
    /// Factor A = L D L'. If `require_positive` is set, any pivot <= 0 is
    /// reported; otherwise only pivots that vanish relative to their column
    /// scale are.
    pub fn factor(a: &SparseMatrix, require_positive: bool) -> Result<Self, PivotFailure> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let (ap, ai, ax) = a.upper_csc();

        // symbolic: elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let mut i = ai[p];
                while i < k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }

        // numeric
        let nnz_l = lp[n];
        let mut li = vec![0usize; nnz_l];
        let mut lx = vec![0.0f64; nnz_l];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lfill = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut col_scale = vec![0.0f64; n];

        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let i0 = ai[p];
                debug_assert!(i0 <= k);
                y[i0] += ax[p];
                col_scale[k] = col_scale[k].max(ax[p].abs());
                let mut len = 0usize;
                let mut i = i0;
                while i < k && flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for s in top..n {
                let i = pattern[s];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lfill[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lfill[i] += 1;
            }
            let bad = if require_positive {
                d[k] <= 0.0
            } else {
                d[k].abs() <= 1e-13 * col_scale[k] || d[k] == 0.0
            };
            if bad {
                return Err(PivotFailure { index: k, value: d[k] });
            }
        }

        Ok(Self { n, lp, li, lx, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Solve L D L' x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        for j in 0..self.n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut acc = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[j] = acc;
        }
        x
    }
}
