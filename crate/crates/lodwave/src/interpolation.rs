//! Quasi-interpolation from the fine to the coarse space: the composition
//! of an element-wise L2 projection (optionally weighted by the coefficient)
//! with vertex averaging, materialized as an explicit sparse matrix.
//!
//! The kernel of this matrix defines the fine-scale space W_h; its rows
//! restricted to a patch are the constraint blocks of the corrector
//! problems.

use crate::coefficients::Coefficient;
use crate::fem;
use crate::linalg::{DenseMatrix, SparseMatrix, TripletBuilder};
use crate::mesh::{fine_elements_in_coarse, Patch, TensorMesh};
use crate::{Error, Result};

/// Explicit interpolation matrix (coarse interior rows, fine interior
/// columns). Row z is supported on the fine dofs of the node patch of z.
#[derive(Debug, Clone)]
pub struct InterpolationMatrix {
    pub matrix: SparseMatrix,
    pub weighted: bool,
    pub coarse: TensorMesh,
    pub fine: TensorMesh,
}

/// Rows of the interpolation matrix restricted to the fine dofs of a patch;
/// only coarse rows whose support meets the patch are kept.
#[derive(Debug, Clone)]
pub struct ConstraintRows {
    pub matrix: SparseMatrix,
    /// Coarse interior row indices the rows came from.
    pub coarse_rows: Vec<usize>,
}

/// Element-local (weighted) L2 projection data for one coarse element:
/// the fine nodes of the element and the matrix mapping their values to the
/// Q1 corner coefficients of the projection.
struct LocalProjection {
    fine_nodes: Vec<usize>,
    /// 2^d x fine_nodes.len()
    coeffs: Vec<Vec<f64>>,
}

fn local_projection(
    coarse: &TensorMesh,
    fine: &TensorMesh,
    weight: Option<&Coefficient>,
    k: usize,
) -> Result<LocalProjection> {
    let dim = coarse.dim();
    let nb = 1 << dim;
    let h = fine.h();
    let big_h = coarse.h();
    let vol = h.powi(dim as i32);
    let fels = fine_elements_in_coarse(coarse, fine, k);

    // local fine node numbering over the closed coarse element
    let mut fine_nodes: Vec<usize> = fels.iter().flat_map(|&e| fine.element_nodes(e)).collect();
    fine_nodes.sort_unstable();
    fine_nodes.dedup();
    let col_of = |node: usize| fine_nodes.binary_search(&node).unwrap();

    let k_origin = {
        let m = coarse.element_multi(k);
        [m[0] as f64 * big_h, m[1] as f64 * big_h]
    };

    let mut gram = DenseMatrix::zeros(nb, nb);
    let mut b = vec![vec![0.0; fine_nodes.len()]; nb];
    let gauss = fem::gauss_points_unit(dim);
    for &e in &fels {
        let w_e = weight.map_or(1.0, |c| c.value(e));
        let nodes = fine.element_nodes(e);
        let e_origin = fine.node_point(nodes[0]);
        for (xi, w) in &gauss {
            let x = [e_origin[0] + xi[0] * h, e_origin[1] + xi[1] * h];
            let xi_k = [(x[0] - k_origin[0]) / big_h, (x[1] - k_origin[1]) / big_h];
            let psi = fem::shape_values_at(dim, xi_k);
            let phi = fem::shape_values_at(dim, *xi);
            for p in 0..nb {
                let base = w * vol * w_e * psi[p];
                for q in 0..nb {
                    gram.add(p, q, base * psi[q]);
                }
                for (q, &node) in nodes.iter().enumerate() {
                    b[p][col_of(node)] += base * phi[q];
                }
            }
        }
    }

    let lu = gram
        .lu()
        .map_err(|_| Error::Linalg("singular local Gram matrix in element projection".into()))?;
    // columns of coeffs = G^{-1} B column-wise
    let mut coeffs = vec![vec![0.0; fine_nodes.len()]; nb];
    let mut col = vec![0.0; nb];
    for j in 0..fine_nodes.len() {
        for p in 0..nb {
            col[p] = b[p][j];
        }
        let sol = lu.solve(&col);
        for p in 0..nb {
            coeffs[p][j] = sol[p];
        }
    }
    Ok(LocalProjection { fine_nodes, coeffs })
}

/// L2(K)-best Q1 approximation (optionally aeps-weighted) of a fine-mesh
/// function on one coarse element; `v` is indexed by global fine node and
/// the result holds the values at the element corners (local order).
pub fn elementwise_projection(
    coarse: &TensorMesh,
    fine: &TensorMesh,
    weight: Option<&Coefficient>,
    k: usize,
    v: &dyn Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let lp = local_projection(coarse, fine, weight, k)?;
    let nb = 1 << coarse.dim();
    let mut out = vec![0.0; nb];
    for (j, &node) in lp.fine_nodes.iter().enumerate() {
        let vj = v(node);
        for (p, o) in out.iter_mut().enumerate() {
            *o += lp.coeffs[p][j] * vj;
        }
    }
    Ok(out)
}

/// Vertex averaging: arithmetic mean of the element-wise values over the
/// elements sharing each interior vertex (boundary vertices dropped).
/// `elem_corner_values[e][p]` holds the value of element e at its corner p.
pub fn averaging(coarse: &TensorMesh, elem_corner_values: &[Vec<f64>]) -> Vec<f64> {
    let card = (1 << coarse.dim()) as f64;
    let mut out = vec![0.0; coarse.interior_node_count()];
    for e in 0..coarse.element_count() {
        let nodes = coarse.element_nodes(e);
        for (p, &node) in nodes.iter().enumerate() {
            if let Some(zi) = coarse.interior_index(node) {
                out[zi] += elem_corner_values[e][p] / card;
            }
        }
    }
    out
}

/// Assemble the interpolation matrix I = E_H o Pi_H (or E_H o Pi_{H,a} when
/// `weighted`); ker(I) defines the fine-scale space W_h.
pub fn build_interpolation(
    coarse: &TensorMesh,
    fine: &TensorMesh,
    coeff: &Coefficient,
    weighted: bool,
) -> Result<InterpolationMatrix> {
    if coarse.dim() != fine.dim() || fine.cells_per_axis() % coarse.cells_per_axis() != 0 {
        return Err(Error::Mesh("interpolation requires a nested refinement".into()));
    }
    let dim = coarse.dim();
    let nb = 1 << dim;
    let card = nb as f64;
    let weight = if weighted { Some(coeff) } else { None };
    let mut b = TripletBuilder::new(coarse.interior_node_count(), fine.interior_node_count());
    for k in 0..coarse.element_count() {
        let lp = local_projection(coarse, fine, weight, k)?;
        let corners = coarse.element_nodes(k);
        for (p, &z) in corners.iter().enumerate() {
            if let Some(zi) = coarse.interior_index(z) {
                for (j, &node) in lp.fine_nodes.iter().enumerate() {
                    if let Some(fj) = fine.interior_index(node) {
                        let v = lp.coeffs[p][j] / card;
                        if v != 0.0 {
                            b.push(zi, fj, v);
                        }
                    }
                }
            }
        }
    }
    Ok(InterpolationMatrix { matrix: b.build(), weighted, coarse: *coarse, fine: *fine })
}

impl InterpolationMatrix {
    pub fn apply(&self, fine_dofs: &[f64]) -> Vec<f64> {
        self.matrix.matvec(fine_dofs)
    }

    /// Constraint rows for W_h(U_m(K)): rows of I restricted to the fine
    /// dofs of the patch, keeping the coarse rows with support meeting it.
    pub fn kernel_constraint_rows(&self, patch: &Patch) -> Result<ConstraintRows> {
        let dofs = patch.fine_interior_dofs(&self.coarse, &self.fine);
        self.kernel_constraint_rows_for(&dofs)
    }

    /// Same as [`Self::kernel_constraint_rows`] with the patch dofs already
    /// computed (they are reused by the corrector assembly).
    pub fn kernel_constraint_rows_for(&self, patch_dofs: &[usize]) -> Result<ConstraintRows> {
        if patch_dofs.is_empty() {
            return Err(Error::Mesh("patch has no interior fine dofs".into()));
        }
        let mut col_map = vec![usize::MAX; self.matrix.cols()];
        for (local, &c) in patch_dofs.iter().enumerate() {
            col_map[c] = local;
        }
        let mut coarse_rows = Vec::new();
        let mut b = TripletBuilder::new(self.matrix.rows(), patch_dofs.len());
        let mut selected = 0usize;
        for z in 0..self.matrix.rows() {
            let (cols, vals) = self.matrix.row(z);
            let mut any = false;
            for (c, v) in cols.iter().zip(vals) {
                let lc = col_map[*c];
                if lc != usize::MAX {
                    b.push(selected, lc, *v);
                    any = true;
                }
            }
            if any {
                coarse_rows.push(z);
                selected += 1;
            }
        }
        let full = b.build();
        let rows: Vec<usize> = (0..selected).collect();
        let cols: Vec<usize> = (0..patch_dofs.len()).collect();
        Ok(ConstraintRows { matrix: full.submatrix(&rows, &cols), coarse_rows })
    }

    /// Measured stability constant: max over random fine vectors of
    /// ||P I v||_A / ||v||_A (diagnostic only; the bound is assumed, not
    /// proved, for the weighted variant).
    pub fn measured_stability_constant(
        &self,
        p: &SparseMatrix,
        a_fine: &SparseMatrix,
        samples: usize,
        seed: u64,
    ) -> f64 {
        let mut rng = crate::coefficients::SplitMix64::new(seed);
        let nf = self.matrix.cols();
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let v: Vec<f64> =
                (0..nf).map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect();
            let iv = self.matrix.matvec(&v);
            let piv = p.matvec(&iv);
            let num = a_fine.quadratic_form(&piv, &piv);
            let den = a_fine.quadratic_form(&v, &v);
            if den > 0.0 {
                worst = worst.max((num / den).sqrt());
            }
        }
        worst
    }
}

/// Diagnostic estimate of the weighted Poincare constant C_P with
/// ||v|| <= C_P ||sqrt(a) grad v||: power iteration for the largest
/// generalized eigenvalue of M v = mu A v, C_P = sqrt(mu).
pub fn weighted_poincare_estimate(
    a_weighted: &SparseMatrix,
    m_unweighted: &SparseMatrix,
    iters: usize,
) -> Result<f64> {
    let f = crate::linalg::factorize(a_weighted)?;
    let n = a_weighted.rows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618).sin()).collect();
    let mut mu = 0.0;
    for _ in 0..iters {
        let mv = m_unweighted.matvec(&v);
        let w = f.solve(&mv);
        let norm = crate::linalg::norm2(&w);
        if norm == 0.0 {
            break;
        }
        v = w.iter().map(|x| x / norm).collect();
        let num = m_unweighted.quadratic_form(&v, &v);
        let den = a_weighted.quadratic_form(&v, &v);
        mu = num / den;
    }
    Ok(mu.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{periodic_inclusion, Coefficient};
    use crate::fem::prolongation_matrix;
    use crate::linalg::norm_inf;
    use crate::mesh::{build_mesh, build_patch};

    #[test]
    fn projection_reproduces_constants() {
        let coarse = build_mesh(2, 2).unwrap();
        let fine = build_mesh(2, 8).unwrap();
        let coeff = periodic_inclusion(&fine, 0.5, 1e-3).unwrap();
        for weight in [None, Some(&coeff)] {
            let c = elementwise_projection(&coarse, &fine, weight, 0, &|_| 3.25).unwrap();
            for v in c {
                assert!((v - 3.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_weight_matches_unweighted() {
        let coarse = build_mesh(1, 2).unwrap();
        let fine = build_mesh(1, 8).unwrap();
        let w = Coefficient::constant(&fine, 7.5).unwrap();
        let v = |node: usize| (node as f64 * 0.7).sin();
        let a = elementwise_projection(&coarse, &fine, None, 1, &v).unwrap();
        let b = elementwise_projection(&coarse, &fine, Some(&w), 1, &v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    /// 2x2 Gram oracle: projecting the fine hat at the midpoint of
    /// K = (0, 1/2) with h = H/2 gives the constant 1/2 (G = H [[1/3,1/6],
    /// [1/6,1/3]], b = (1/8, 1/8), solved by hand).
    #[test]
    fn hat_projection_matches_gram_oracle() {
        let coarse = build_mesh(1, 2).unwrap();
        let fine = build_mesh(1, 4).unwrap();
        let g = [[0.5 / 3.0, 0.5 / 6.0], [0.5 / 6.0, 0.5 / 3.0]];
        let b = [0.125, 0.125];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let oracle = [
            (g[1][1] * b[0] - g[0][1] * b[1]) / det,
            (g[0][0] * b[1] - g[1][0] * b[0]) / det,
        ];
        assert!((oracle[0] - 0.5).abs() < 1e-14 && (oracle[1] - 0.5).abs() < 1e-14);

        // fine hat at node 1 (x = 1/4), the midpoint of coarse element 0
        let v = |node: usize| if node == 1 { 1.0 } else { 0.0 };
        let proj = elementwise_projection(&coarse, &fine, None, 0, &v).unwrap();
        for (got, want) in proj.iter().zip(oracle) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn averaging_means() {
        let m1 = build_mesh(1, 2).unwrap();
        // interior vertex 1 shared by elements 0 (corner 1) and 1 (corner 0)
        let vals = vec![vec![9.0, 0.0], vec![1.0, 9.0]];
        let avg = averaging(&m1, &vals);
        assert_eq!(avg, vec![0.5]);

        let m2 = build_mesh(2, 2).unwrap();
        // interior vertex is corner 3 of el 0, corner 2 of el 1, corner 1
        // of el 2, corner 0 of el 3
        let mut vals = vec![vec![0.0; 4]; 4];
        vals[0][3] = 1.0;
        vals[1][2] = 2.0;
        vals[2][1] = 3.0;
        vals[3][0] = 4.0;
        let avg = averaging(&m2, &vals);
        assert_eq!(avg, vec![2.5]);

        // all elements agree at the vertex
        let vals = vec![vec![7.0; 4]; 4];
        assert_eq!(averaging(&m2, &vals), vec![7.0]);
    }

    fn setup(dim: usize, nc: usize, nf: usize) -> (TensorMesh, TensorMesh, Coefficient) {
        let coarse = build_mesh(dim, nc).unwrap();
        let fine = build_mesh(dim, nf).unwrap();
        let coeff = periodic_inclusion(&fine, 0.25, 1e-4).unwrap();
        (coarse, fine, coeff)
    }

    #[test]
    fn interpolation_is_projection_onto_coarse() {
        for dim in [1, 2] {
            let (coarse, fine, coeff) = setup(dim, 4, 16);
            let p = prolongation_matrix(&coarse, &fine).unwrap();
            for weighted in [false, true] {
                let i = build_interpolation(&coarse, &fine, &coeff, weighted).unwrap();
                for z in 0..coarse.interior_node_count() {
                    let mut hat = vec![0.0; coarse.interior_node_count()];
                    hat[z] = 1.0;
                    let fine_hat = p.matvec(&hat);
                    let back = i.apply(&fine_hat);
                    for (k, &v) in back.iter().enumerate() {
                        let want = if k == z { 1.0 } else { 0.0 };
                        assert!((v - want).abs() < 1e-12, "dim={dim} weighted={weighted}");
                    }
                }
            }
        }
    }

    #[test]
    fn interpolation_zero_maps_to_zero() {
        let (coarse, fine, coeff) = setup(1, 4, 16);
        let i = build_interpolation(&coarse, &fine, &coeff, false).unwrap();
        let out = i.apply(&vec![0.0; fine.interior_node_count()]);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_with_constant_coefficient_equals_unweighted() {
        let coarse = build_mesh(2, 2).unwrap();
        let fine = build_mesh(2, 8).unwrap();
        let c = Coefficient::constant(&fine, 0.125).unwrap();
        let a = build_interpolation(&coarse, &fine, &c, false).unwrap();
        let b = build_interpolation(&coarse, &fine, &c, true).unwrap();
        for (i, j, v) in a.matrix.iter() {
            assert!((v - b.matrix.get(i, j)).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolation_row_locality() {
        let (coarse, fine, coeff) = setup(2, 4, 16);
        let i = build_interpolation(&coarse, &fine, &coeff, true).unwrap();
        let r = fine.cells_per_axis() / coarse.cells_per_axis();
        for zi in 0..coarse.interior_node_count() {
            let zm = coarse.node_multi(coarse.interior_to_node(zi));
            let (cols, _) = i.matrix.row(zi);
            for &c in cols {
                let fm = fine.node_multi(fine.interior_to_node(c));
                for a in 0..2 {
                    let lo = (zm[a] as i64 - 1) * r as i64;
                    let hi = (zm[a] as i64 + 1) * r as i64;
                    let g = fm[a] as i64;
                    assert!(g >= lo && g <= hi, "row {zi} reaches outside its node patch");
                }
            }
        }
    }

    #[test]
    fn constraint_rows_selection() {
        let coarse = build_mesh(1, 8).unwrap();
        let fine = build_mesh(1, 32).unwrap();
        let coeff = Coefficient::constant(&fine, 1.0).unwrap();
        let i = build_interpolation(&coarse, &fine, &coeff, false).unwrap();
        let patch = build_patch(&coarse, 3, 1);
        let c = i.kernel_constraint_rows(&patch).unwrap();
        // coarse nodes with support meeting elements {2,3,4}: z in {2,..,5}
        assert_eq!(c.coarse_rows, vec![1, 2, 3, 4]); // interior indices of nodes 2..5
        assert_eq!(c.matrix.rows(), 4);
        assert_eq!(c.matrix.cols(), patch.fine_interior_dofs(&coarse, &fine).len());

        // whole-domain patch keeps every row and column of I
        let full = build_patch(&coarse, 3, 8);
        let cf = i.kernel_constraint_rows(&full).unwrap();
        assert_eq!(cf.matrix.rows(), i.matrix.rows());
        assert_eq!(cf.matrix.cols(), i.matrix.cols());
        for (r, j, v) in cf.matrix.iter() {
            assert_eq!(v, i.matrix.get(r, j));
        }
    }

    #[test]
    fn idempotence_i_times_p_is_identity() {
        for weighted in [false, true] {
            let (coarse, fine, coeff) = setup(2, 4, 16);
            let i = build_interpolation(&coarse, &fine, &coeff, weighted).unwrap();
            let p = prolongation_matrix(&coarse, &fine).unwrap();
            let nc = coarse.interior_node_count();
            for z in 0..nc {
                let mut e = vec![0.0; nc];
                e[z] = 1.0;
                let col = i.apply(&p.matvec(&e));
                let mut want = vec![0.0; nc];
                want[z] = 1.0;
                let diff: Vec<f64> = col.iter().zip(&want).map(|(a, b)| a - b).collect();
                assert!(norm_inf(&diff) < 1e-12);
            }
        }
    }

    #[test]
    fn stability_constant_is_finite_and_reported() {
        let (coarse, fine, coeff) = setup(1, 8, 64);
        let p = prolongation_matrix(&coarse, &fine).unwrap();
        let a = crate::fem::assemble_stiffness(&fine, &coeff);
        for weighted in [false, true] {
            let i = build_interpolation(&coarse, &fine, &coeff, weighted).unwrap();
            let c = i.measured_stability_constant(&p, &a, 50, 99);
            assert!(c.is_finite() && c > 0.0);
        }
    }

    #[test]
    fn poincare_estimate_close_to_exact_for_unit_coefficient() {
        // -u'' eigenvalues (pi k)^2: C_P = 1/pi
        let mesh = build_mesh(1, 64).unwrap();
        let one = Coefficient::constant(&mesh, 1.0).unwrap();
        let a = crate::fem::assemble_stiffness(&mesh, &one);
        let m = crate::fem::assemble_mass(&mesh, None);
        let cp = weighted_poincare_estimate(&a, &m, 200).unwrap();
        assert!((cp - 1.0 / std::f64::consts::PI).abs() < 1e-3, "cp = {cp}");
    }
}
