//! Sparse symmetric linear algebra: assembly-friendly storage, direct
//! factorization with reuse, and constrained saddle-point solves for the
//! corrector problems.

mod dense;
mod ldlt;
mod sparse;

pub use dense::{DenseLu, DenseMatrix};
pub use ldlt::SparseLdlt;
pub use sparse::{axpy, dot, norm2, norm_inf, SparseMatrix, TripletBuilder};

use crate::{Error, Result};

/// Reusable solve handle for a fixed matrix. Direct factorizations only;
/// repeated solves never refactorize.
#[derive(Debug, Clone)]
pub enum Factorization {
    Ldlt(SparseLdlt),
    DenseLu(DenseLu),
}

impl Factorization {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factorization::Ldlt(f) => f.solve(b),
            Factorization::DenseLu(f) => f.solve(b),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Factorization::Ldlt(f) => f.n(),
            Factorization::DenseLu(_) => usize::MAX,
        }
    }
}

/// Factor a symmetric positive definite matrix. Nonpositive pivots are
/// reported as indefinite/singular input.
pub fn factorize(a: &SparseMatrix) -> Result<Factorization> {
    a.check_symmetric(1e-12)?;
    match SparseLdlt::factor(a, true) {
        Ok(f) => Ok(Factorization::Ldlt(f)),
        Err(p) => Err(Error::Linalg(format!(
            "matrix is indefinite or singular: pivot {:.3e} at index {}",
            p.value, p.index
        ))),
    }
}

/// Factor a general square matrix: unpivoted LDL' when symmetric, dense LU
/// with partial pivoting otherwise (nonsymmetric coarse systems are small).
pub fn factorize_general(a: &SparseMatrix) -> Result<Factorization> {
    if a.is_symmetric(1e-12) {
        if let Ok(f) = SparseLdlt::factor(a, false) {
            return Ok(Factorization::Ldlt(f));
        }
    }
    if a.rows() > 20_000 {
        return Err(Error::Linalg(format!(
            "dense fallback refused for dimension {}",
            a.rows()
        )));
    }
    let d = DenseMatrix::from_rows(&a.to_dense());
    Ok(Factorization::DenseLu(d.lu()?))
}

/// Solve the constrained problem: find w with C w = 0 and w' A v = b' v for
/// all v in ker(C), realized as the KKT system [[A, C'],[C, 0]].
///
/// A must be symmetric and positive definite on ker(C); C must have full row
/// rank. A may be singular on a complement of ker(C) (periodic cell
/// problems), which is handled by a retry with a tiny diagonal shift plus
/// iterative refinement against the unshifted system.
pub fn solve_constrained(a: &SparseMatrix, c: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    assert_eq!(c.cols(), n);
    let m = c.rows();
    if m == 0 {
        let f = factorize_general(a)?;
        return Ok(f.solve(b));
    }

    let kkt = assemble_kkt(a, c, 0.0);
    let factor = match SparseLdlt::factor(&kkt, false) {
        Ok(f) => f,
        Err(p) if p.index < n => {
            // semidefinite A block (e.g. periodic stiffness); shift and refine
            let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(0.0f64, f64::max);
            let shift = 1e-12 * max_diag.max(1e-30);
            let kkt_shifted = assemble_kkt(a, c, shift);
            SparseLdlt::factor(&kkt_shifted, false).map_err(|p2| {
                if p2.index >= n {
                    redundant_rows_error(p2.index - n)
                } else {
                    Error::Linalg(format!(
                        "constrained system singular at dof {} (pivot {:.3e})",
                        p2.index, p2.value
                    ))
                }
            })?
        }
        Err(p) => return Err(redundant_rows_error(p.index - n)),
    };

    // refine against the exact (unshifted) KKT operator
    let mut rhs = vec![0.0; n + m];
    rhs[..n].copy_from_slice(b);
    let scale = norm_inf(b).max(1.0);
    let mut x = factor.solve(&rhs);
    let mut res_prev = f64::INFINITY;
    for _ in 0..25 {
        let kx = kkt.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&kx).map(|(bi, ki)| bi - ki).collect();
        let res = norm_inf(&r);
        if res <= 1e-15 * scale || res >= 0.5 * res_prev {
            if res > 1e-8 * scale {
                eprintln!(
                    "warning: constrained solve residual {:.3e} exceeds 1e-8 (dim {}, {} constraints)",
                    res / scale,
                    n,
                    m
                );
            }
            break;
        }
        res_prev = res;
        let dx = factor.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }

    x.truncate(n);
    Ok(x)
}

fn assemble_kkt(a: &SparseMatrix, c: &SparseMatrix, shift: f64) -> SparseMatrix {
    let n = a.rows();
    let m = c.rows();
    let mut b = TripletBuilder::with_capacity(n + m, n + m, a.nnz() + 2 * c.nnz() + m);
    for (i, j, v) in a.iter() {
        b.push(i, j, v);
    }
    if shift > 0.0 {
        for i in 0..n {
            b.push(i, i, shift);
        }
    }
    for (r, j, v) in c.iter() {
        b.push(n + r, j, v);
        b.push(j, n + r, v);
    }
    if shift > 0.0 {
        for r in 0..m {
            b.push(n + r, n + r, -shift);
        }
    }
    b.build()
}

fn redundant_rows_error(row: usize) -> Error {
    Error::Linalg(format!(
        "constraint matrix is rank deficient: row {row} is redundant on this patch"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorize_identity() {
        let a = SparseMatrix::identity(3);
        let f = factorize(&a).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn factorize_diagonal() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 2.0);
        b.push(1, 1, 4.0);
        let f = factorize(&b.build()).unwrap();
        assert_eq!(f.solve(&[2.0, 4.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn factorize_rejects_indefinite() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 1.0);
        b.push(1, 1, -1.0);
        assert!(factorize(&b.build()).is_err());
    }

    #[test]
    fn factorize_rejects_nonsymmetric() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 1.0);
        b.push(0, 1, 1.0);
        b.push(1, 1, 1.0);
        assert!(factorize(&b.build()).is_err());
    }

    /// 1D P1 stiffness on n=4 interior dofs, b = M 1; frozen from the dense
    /// Gaussian elimination oracle (continuous solution of -u'' = 1 is
    /// x(1-x)/2, nodally exact for P1).
    #[test]
    fn stiffness_solve_matches_dense_oracle() {
        let mut bld = TripletBuilder::new(3, 3);
        for i in 0..3 {
            bld.push(i, i, 8.0);
            if i + 1 < 3 {
                bld.push(i, i + 1, -4.0);
                bld.push(i + 1, i, -4.0);
            }
        }
        let a = bld.build();
        let b = vec![0.25, 0.25, 0.25];

        // dense elimination oracle on the 3x3 system
        let mut m = a.to_dense();
        let mut y = b.clone();
        for k in 0..3 {
            for i in k + 1..3 {
                let f = m[i][k] / m[k][k];
                for j in k..3 {
                    m[i][j] -= f * m[k][j];
                }
                y[i] -= f * y[k];
            }
        }
        let mut x_ref = [0.0; 3];
        for i in (0..3).rev() {
            let mut acc = y[i];
            for j in i + 1..3 {
                acc -= m[i][j] * x_ref[j];
            }
            x_ref[i] = acc / m[i][i];
        }
        for (got, want) in x_ref.iter().zip([0.09375, 0.125, 0.09375]) {
            assert!((got - want).abs() <= 1e-14);
        }

        let f = factorize(&a).unwrap();
        let x = f.solve(&b);
        for (xi, want) in x.iter().zip(x_ref) {
            assert!((xi - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn reuse_is_bit_identical() {
        let mut b = TripletBuilder::new(3, 3);
        for i in 0..3 {
            b.push(i, i, 2.0 + i as f64);
            if i + 1 < 3 {
                b.push(i, i + 1, -0.5);
                b.push(i + 1, i, -0.5);
            }
        }
        let f = factorize(&b.build()).unwrap();
        let rhs = [0.3, -1.7, 2.9];
        assert_eq!(f.solve(&rhs), f.solve(&rhs));
    }

    #[test]
    fn constrained_kernel_vector_passes_through() {
        // A = I2, C = [1, 1], b = (1, -1) already in ker(C): w = b (3x3 KKT
        // by hand: w = b - C' lambda with lambda = 0)
        let a = SparseMatrix::identity(2);
        let mut cb = TripletBuilder::new(1, 2);
        cb.push(0, 0, 1.0);
        cb.push(0, 1, 1.0);
        let w = solve_constrained(&a, &cb.build(), &[1.0, -1.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constrained_zero_rhs_gives_zero() {
        let a = SparseMatrix::identity(2);
        let mut cb = TripletBuilder::new(1, 2);
        cb.push(0, 0, 1.0);
        cb.push(0, 1, 1.0);
        let w = solve_constrained(&a, &cb.build(), &[0.0, 0.0]).unwrap();
        assert_eq!(w, vec![0.0, 0.0]);
    }

    #[test]
    fn constrained_projects_onto_kernel() {
        // A = I2, C = [1, 0]: kernel is span{e2}, so w = (0, b2) (3x3 KKT by
        // hand: row 3 forces w1 = 0, row 2 gives w2 = 2, lambda = 5)
        let a = SparseMatrix::identity(2);
        let mut cb = TripletBuilder::new(1, 2);
        cb.push(0, 0, 1.0);
        let w = solve_constrained(&a, &cb.build(), &[5.0, 2.0]).unwrap();
        assert!(w[0].abs() < 1e-12 && (w[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constrained_reports_redundant_rows() {
        let a = SparseMatrix::identity(2);
        let mut cb = TripletBuilder::new(2, 2);
        cb.push(0, 0, 1.0);
        cb.push(1, 0, 1.0); // duplicate of row 0
        let err = solve_constrained(&a, &cb.build(), &[1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("rank deficient"));
    }

    #[test]
    fn constrained_handles_singular_block() {
        // A = graph Laplacian of a path (kernel = constants), C = mean row
        let mut ab = TripletBuilder::new(3, 3);
        let lap = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                ab.push(i, j, lap[i][j]);
            }
        }
        let mut cb = TripletBuilder::new(1, 3);
        for j in 0..3 {
            cb.push(0, j, 1.0);
        }
        let c = cb.build();
        let b = [1.0, 0.0, -1.0]; // orthogonal to constants
        let w = solve_constrained(&ab.build(), &c, &b).unwrap();
        let mean: f64 = w.iter().sum();
        assert!(mean.abs() < 1e-10, "mean = {mean}");
        // L (1, 0, -1)' = (1, 0, -1)' = b and the vector has zero mean
        assert!((w[0] - 1.0).abs() < 1e-10 && w[1].abs() < 1e-10 && (w[2] + 1.0).abs() < 1e-10);
    }
}
