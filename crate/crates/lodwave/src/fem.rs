//! Q1 finite element assembly on tensor meshes (P1 in 1D): stiffness and
//! mass matrices with piecewise-constant coefficients, load vectors, nodal
//! interpolation, and norm evaluation.
//!
//! Homogeneous Dirichlet conditions are built in by dof elimination: the
//! `assemble_*` functions return interior-node systems, with `*_all_nodes`
//! variants exposing the full matrices. Quadrature is 2-point Gauss per
//! axis, which is exact for every integrand assembled here except general
//! load fields.

use std::fmt;
use std::sync::Arc;

use crate::coefficients::Coefficient;
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::TensorMesh;
use crate::{Error, Result};

/// Scalar field on the closed unit box, evaluable at any point.
#[derive(Clone)]
pub enum Field {
    Zero,
    Constant(f64),
    /// exp(-sum_a (x_a - c_a)^2 / sigma^2)
    Gaussian { center: [f64; 2], sigma: f64 },
    /// prod_a x_a (x_a - 1)
    PolyBubble,
    /// `value` outside the open box, 0 inside.
    OutsideBox { lo: [f64; 2], hi: [f64; 2], value: f64 },
    /// base + t * slope, evaluated pointwise.
    Affine { base: Box<Field>, slope: Box<Field>, t: f64 },
    Custom(Arc<dyn Fn([f64; 2], usize) -> f64 + Send + Sync>),
}

impl Field {
    pub fn gaussian_centered(dim: usize, sigma: f64) -> Field {
        let c = if dim == 1 { [0.5, 0.0] } else { [0.5, 0.5] };
        Field::Gaussian { center: c, sigma }
    }

    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Constant(c) => *c,
            Field::Gaussian { center, sigma } => {
                let mut s = 0.0;
                for a in 0..dim {
                    let d = x[a] - center[a];
                    s += d * d;
                }
                (-s / (sigma * sigma)).exp()
            }
            Field::PolyBubble => (0..dim).map(|a| x[a] * (x[a] - 1.0)).product(),
            Field::OutsideBox { lo, hi, value } => {
                let inside = (0..dim).all(|a| x[a] > lo[a] && x[a] < hi[a]);
                if inside {
                    0.0
                } else {
                    *value
                }
            }
            Field::Affine { base, slope, t } => base.eval(x, dim) + t * slope.eval(x, dim),
            Field::Custom(f) => f(x, dim),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Field::Zero)
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Zero => write!(f, "Zero"),
            Field::Constant(c) => write!(f, "Constant({c})"),
            Field::Gaussian { center, sigma } => {
                write!(f, "Gaussian(center={center:?}, sigma={sigma})")
            }
            Field::PolyBubble => write!(f, "PolyBubble"),
            Field::OutsideBox { lo, hi, value } => {
                write!(f, "OutsideBox(lo={lo:?}, hi={hi:?}, value={value})")
            }
            Field::Affine { base, slope, t } => write!(f, "Affine({base:?} + {t} * {slope:?})"),
            Field::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Coefficient vector over the interior nodes of a mesh (homogeneous
/// Dirichlet values are implicit zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector {
    pub mesh: TensorMesh,
    pub values: Vec<f64>,
}

impl DofVector {
    pub fn new(mesh: TensorMesh, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.interior_node_count());
        Self { mesh, values }
    }

    pub fn zeros(mesh: TensorMesh) -> Self {
        Self { mesh, values: vec![0.0; mesh.interior_node_count()] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

// 2-point Gauss on [0,1]: nodes (1 -/+ 1/sqrt(3))/2, weights 1/2.
const GAUSS_PTS: [f64; 2] = [0.5 - 0.5 / 1.7320508075688772, 0.5 + 0.5 / 1.7320508075688772];
const GAUSS_WTS: [f64; 2] = [0.5, 0.5];

/// Reference basis values at a point of the unit element, local
/// lexicographic order (axis 0 fastest).
fn shape_values(dim: usize, xi: [f64; 2]) -> Vec<f64> {
    let l = |b: usize, t: f64| if b == 0 { 1.0 - t } else { t };
    if dim == 1 {
        vec![l(0, xi[0]), l(1, xi[0])]
    } else {
        vec![
            l(0, xi[0]) * l(0, xi[1]),
            l(1, xi[0]) * l(0, xi[1]),
            l(0, xi[0]) * l(1, xi[1]),
            l(1, xi[0]) * l(1, xi[1]),
        ]
    }
}

/// Reference gradients (d/dxi) at a point, one [f64; 2] per basis function.
fn shape_gradients(dim: usize, xi: [f64; 2]) -> Vec<[f64; 2]> {
    let l = |b: usize, t: f64| if b == 0 { 1.0 - t } else { t };
    let dl = |b: usize| if b == 0 { -1.0 } else { 1.0 };
    if dim == 1 {
        vec![[dl(0), 0.0], [dl(1), 0.0]]
    } else {
        vec![
            [dl(0) * l(0, xi[1]), l(0, xi[0]) * dl(0)],
            [dl(1) * l(0, xi[1]), l(1, xi[0]) * dl(0)],
            [dl(0) * l(1, xi[1]), l(0, xi[0]) * dl(1)],
            [dl(1) * l(1, xi[1]), l(1, xi[0]) * dl(1)],
        ]
    }
}

fn gauss_points(dim: usize) -> Vec<([f64; 2], f64)> {
    if dim == 1 {
        GAUSS_PTS.iter().zip(GAUSS_WTS).map(|(&p, w)| ([p, 0.0], w)).collect()
    } else {
        let mut pts = Vec::with_capacity(4);
        for (j, &py) in GAUSS_PTS.iter().enumerate() {
            for (i, &px) in GAUSS_PTS.iter().enumerate() {
                pts.push(([px, py], GAUSS_WTS[i] * GAUSS_WTS[j]));
            }
        }
        pts
    }
}

/// Tensorized 2-point Gauss rule on the unit element: (point, weight) pairs
/// with weights summing to one.
pub fn gauss_points_unit(dim: usize) -> Vec<([f64; 2], f64)> {
    gauss_points(dim)
}

/// Reference Q1 basis values at a point of the unit element.
pub fn shape_values_at(dim: usize, xi: [f64; 2]) -> Vec<f64> {
    shape_values(dim, xi)
}

/// Reference Q1 basis gradients (d/dxi) at a point of the unit element.
pub fn shape_gradients_at(dim: usize, xi: [f64; 2]) -> Vec<[f64; 2]> {
    shape_gradients(dim, xi)
}

/// Element stiffness for a constant (possibly matrix-valued) coefficient on
/// a square element of width h: K_pq = int_e (grad phi_p)' A (grad phi_q).
pub fn local_stiffness(dim: usize, h: f64, a: &[[f64; 2]; 2]) -> Vec<Vec<f64>> {
    let nb = 1 << dim;
    let mut k = vec![vec![0.0; nb]; nb];
    let vol = h.powi(dim as i32);
    for (xi, w) in gauss_points(dim) {
        let grads = shape_gradients(dim, xi);
        // physical gradient = reference gradient / h
        for p in 0..nb {
            let gp = [grads[p][0] / h, grads[p][1] / h];
            let agp = [
                a[0][0] * gp[0] + a[0][1] * gp[1],
                a[1][0] * gp[0] + a[1][1] * gp[1],
            ];
            for q in 0..nb {
                let gq = [grads[q][0] / h, grads[q][1] / h];
                let mut dot = agp[0] * gq[0];
                if dim == 2 {
                    dot += agp[1] * gq[1];
                }
                k[p][q] += w * vol * dot;
            }
        }
    }
    k
}

/// Element mass matrix with unit weight: M_pq = int_e phi_p phi_q.
pub fn local_mass(dim: usize, h: f64) -> Vec<Vec<f64>> {
    let nb = 1 << dim;
    let mut m = vec![vec![0.0; nb]; nb];
    let vol = h.powi(dim as i32);
    for (xi, w) in gauss_points(dim) {
        let vals = shape_values(dim, xi);
        for p in 0..nb {
            for q in 0..nb {
                m[p][q] += w * vol * vals[p] * vals[q];
            }
        }
    }
    m
}

fn scalar_tensor(a: f64) -> [[f64; 2]; 2] {
    [[a, 0.0], [0.0, a]]
}

fn assemble_from_local(
    mesh: &TensorMesh,
    local_of: impl Fn(usize) -> Vec<Vec<f64>>,
) -> SparseMatrix {
    let n = mesh.node_count();
    let nb = 1 << mesh.dim();
    let mut b = TripletBuilder::with_capacity(n, n, mesh.element_count() * nb * nb);
    for e in 0..mesh.element_count() {
        let loc = local_of(e);
        let nodes = mesh.element_nodes(e);
        for p in 0..nb {
            for q in 0..nb {
                b.push(nodes[p], nodes[q], loc[p][q]);
            }
        }
    }
    b.build()
}

/// Stiffness matrix over all nodes (no boundary elimination).
pub fn assemble_stiffness_all_nodes(mesh: &TensorMesh, coeff: &Coefficient) -> SparseMatrix {
    assert_eq!(coeff.values().len(), mesh.element_count());
    let unit = local_stiffness(mesh.dim(), mesh.h(), &scalar_tensor(1.0));
    let nb = 1 << mesh.dim();
    assemble_from_local(mesh, |e| {
        let a = coeff.value(e);
        let mut k = unit.clone();
        for p in 0..nb {
            for q in 0..nb {
                k[p][q] *= a;
            }
        }
        k
    })
}

fn interior_submatrix(mesh: &TensorMesh, full: &SparseMatrix) -> SparseMatrix {
    let interior = mesh.interior_nodes();
    full.submatrix(&interior, &interior)
}

/// Stiffness matrix on interior dofs (symmetric positive definite for
/// positive coefficients).
pub fn assemble_stiffness(mesh: &TensorMesh, coeff: &Coefficient) -> SparseMatrix {
    interior_submatrix(mesh, &assemble_stiffness_all_nodes(mesh, coeff))
}

/// Stiffness with a constant matrix coefficient (homogenized references).
pub fn assemble_stiffness_tensor(mesh: &TensorMesh, a: &[[f64; 2]; 2]) -> SparseMatrix {
    let loc = local_stiffness(mesh.dim(), mesh.h(), a);
    interior_submatrix(mesh, &assemble_from_local(mesh, |_| loc.clone()))
}

/// Consistent (non-lumped) mass matrix over all nodes; `weight` gives the
/// per-element factor for the a-weighted L2 inner product.
pub fn assemble_mass_all_nodes(mesh: &TensorMesh, weight: Option<&Coefficient>) -> SparseMatrix {
    let unit = local_mass(mesh.dim(), mesh.h());
    let nb = 1 << mesh.dim();
    assemble_from_local(mesh, |e| {
        let w = weight.map_or(1.0, |c| c.value(e));
        let mut m = unit.clone();
        for p in 0..nb {
            for q in 0..nb {
                m[p][q] *= w;
            }
        }
        m
    })
}

/// Mass matrix on interior dofs.
pub fn assemble_mass(mesh: &TensorMesh, weight: Option<&Coefficient>) -> SparseMatrix {
    interior_submatrix(mesh, &assemble_mass_all_nodes(mesh, weight))
}

/// Load vector (f phi_i) over interior dofs, scaled by `time_scale`;
/// 2-point Gauss per axis (exact for f polynomial of degree <= 3 per axis).
pub fn assemble_load(mesh: &TensorMesh, f: &Field, time_scale: f64) -> DofVector {
    let mut out = DofVector::zeros(*mesh);
    if f.is_zero() || time_scale == 0.0 {
        return out;
    }
    let dim = mesh.dim();
    let h = mesh.h();
    let vol = h.powi(dim as i32);
    let nb = 1 << dim;
    let gauss = gauss_points(dim);
    for e in 0..mesh.element_count() {
        let nodes = mesh.element_nodes(e);
        let base = mesh.node_point(nodes[0]);
        for (xi, w) in &gauss {
            let x = [base[0] + xi[0] * h, base[1] + xi[1] * h];
            let fv = f.eval(x, dim);
            if fv == 0.0 {
                continue;
            }
            let vals = shape_values(dim, *xi);
            for p in 0..nb {
                if let Some(i) = mesh.interior_index(nodes[p]) {
                    out.values[i] += time_scale * w * vol * fv * vals[p];
                }
            }
        }
    }
    out
}

/// Nodal interpolant at interior nodes (boundary values implicitly zero).
pub fn interpolate_field(mesh: &TensorMesh, f: &Field) -> DofVector {
    let values = (0..mesh.interior_node_count())
        .map(|i| f.eval(mesh.interior_node_point(i), mesh.dim()))
        .collect();
    DofVector::new(*mesh, values)
}

fn sqrt_quadratic_form(m: &SparseMatrix, v: &[f64]) -> Result<f64> {
    let q = m.quadratic_form(v, v);
    if q >= 0.0 {
        return Ok(q.sqrt());
    }
    // scale of the positive diagonal part, for the relative tolerance
    let scale: f64 = v
        .iter()
        .enumerate()
        .map(|(i, &vi)| m.get(i, i).abs() * vi * vi)
        .sum::<f64>()
        .max(1e-300);
    if q < -1e-14 * scale {
        return Err(Error::Linalg(format!(
            "negative quadratic form {q:.3e}: matrix is not symmetric PSD"
        )));
    }
    Ok(0.0)
}

/// sqrt(v' M v).
pub fn norm_l2(v: &[f64], m: &SparseMatrix) -> Result<f64> {
    sqrt_quadratic_form(m, v)
}

/// sqrt(v' A v).
pub fn norm_energy(v: &[f64], a: &SparseMatrix) -> Result<f64> {
    sqrt_quadratic_form(a, v)
}

/// Q1 embedding of the coarse space into the fine space: column z holds the
/// fine interior nodal values of the coarse hat function at z.
pub fn prolongation_matrix(coarse: &TensorMesh, fine: &TensorMesh) -> Result<SparseMatrix> {
    if fine.cells_per_axis() % coarse.cells_per_axis() != 0 || coarse.dim() != fine.dim() {
        return Err(Error::Mesh("prolongation requires a nested refinement".into()));
    }
    let r = fine.cells_per_axis() / coarse.cells_per_axis();
    let dim = coarse.dim();
    let hat = |dist: i64| -> f64 {
        // 1D hat value at signed fine-node offset `dist` from the coarse node
        let t = dist.unsigned_abs() as usize;
        if t >= r {
            0.0
        } else {
            1.0 - t as f64 / r as f64
        }
    };
    let mut b = TripletBuilder::new(fine.interior_node_count(), coarse.interior_node_count());
    for zi in 0..coarse.interior_node_count() {
        let zm = coarse.node_multi(coarse.interior_to_node(zi));
        // support: fine node coords in (z - 1, z + 1) coarse cells
        let lo: Vec<i64> = (0..dim).map(|a| (zm[a] as i64 - 1) * r as i64 + 1).collect();
        let hi: Vec<i64> = (0..dim).map(|a| (zm[a] as i64 + 1) * r as i64 - 1).collect();
        if dim == 1 {
            for g in lo[0].max(1)..=hi[0].min(fine.cells_per_axis() as i64 - 1) {
                let v = hat(g - zm[0] as i64 * r as i64);
                if let Some(fi) = fine.interior_index(g as usize) {
                    b.push(fi, zi, v);
                }
            }
        } else {
            let nmax = fine.cells_per_axis() as i64 - 1;
            for gy in lo[1].max(1)..=hi[1].min(nmax) {
                for gx in lo[0].max(1)..=hi[0].min(nmax) {
                    let v = hat(gx - zm[0] as i64 * r as i64) * hat(gy - zm[1] as i64 * r as i64);
                    if v != 0.0 {
                        if let Some(fi) =
                            fine.interior_index(fine.node_index([gx as usize, gy as usize]))
                        {
                            b.push(fi, zi, v);
                        }
                    }
                }
            }
        }
    }
    Ok(b.build())
}
