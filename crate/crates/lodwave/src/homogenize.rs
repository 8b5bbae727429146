//! Classical periodic homogenization: the 1D harmonic average, cell
//! problems and the homogenized tensor in 2D (standard and perforated
//! high-contrast variants), and the 1D high-contrast limit formula.

use crate::coefficients::Coefficient;
use crate::fem::{self, Field};
use crate::linalg::{self, TripletBuilder};
use crate::mesh::TensorMesh;
use crate::timestep::{self, SchemeKind, Trajectory};
use crate::{Error, Result};

/// Effective constant tensor; entries beyond `dim` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogenizedTensor {
    pub dim: usize,
    pub entries: [[f64; 2]; 2],
}

impl HomogenizedTensor {
    pub fn isotropic(dim: usize, value: f64) -> Self {
        let mut entries = [[0.0; 2]; 2];
        for a in 0..dim {
            entries[a][a] = value;
        }
        Self { dim, entries }
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        if self.dim == 1 {
            [self.entries[0][0], self.entries[0][0]]
        } else {
            let tr = self.entries[0][0] + self.entries[1][1];
            let det = self.entries[0][0] * self.entries[1][1]
                - self.entries[0][1] * self.entries[1][0];
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            [tr / 2.0 - disc, tr / 2.0 + disc]
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.push_str(&format!("{i},{j},{}\n", self.entries[i][j]));
            }
        }
        out
    }
}

/// Periodic zero-mean cell correctors, one per direction.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub mesh: TensorMesh,
    /// xi[i] holds the values on the periodic dofs (nodes with coordinates
    /// 0..n-1 per axis, lexicographic).
    pub xi: Vec<Vec<f64>>,
}

/// Closed form of the 1D homogenized coefficient for a two-valued periodic
/// coefficient: a0 / (a0 + (1 - a0)|Sigma|).
pub fn harmonic_average_1d(a0: f64, sigma_fraction: f64) -> f64 {
    debug_assert!(a0 > 0.0 && (0.0..=1.0).contains(&sigma_fraction));
    a0 / (a0 + (1.0 - a0) * sigma_fraction)
}

/// 1D high-contrast limit: u(x, t) = u0(x) + t v0(x).
pub fn limit_solution_1d(u0: &Field, v0: &Field, t: f64) -> Field {
    debug_assert!(t >= 0.0);
    Field::Affine { base: Box::new(u0.clone()), slope: Box::new(v0.clone()), t }
}

fn periodic_dof(mesh: &TensorMesh, node: usize) -> usize {
    let n = mesh.cells_per_axis();
    let m = mesh.node_multi(node);
    if mesh.dim() == 1 {
        m[0] % n
    } else {
        (m[1] % n) * n + (m[0] % n)
    }
}

/// Elements retained by the perforated variant (the complement of the
/// inclusion), or all elements for the standard one.
fn retained_elements(coeff: &Coefficient, perforated: bool) -> Vec<bool> {
    let n = coeff.values().len();
    if !perforated || coeff.a0 == 1.0 {
        return vec![true; n];
    }
    coeff.values().iter().map(|&v| v != coeff.a0).collect()
}

/// Face-adjacency connectivity of the retained elements under periodic
/// identification.
fn check_connected(mesh: &TensorMesh, retained: &[bool]) -> Result<()> {
    let total: usize = retained.iter().filter(|&&r| r).count();
    if total == 0 {
        return Err(Error::Homogenize("perforated cell retains no elements".into()));
    }
    let n = mesh.cells_per_axis();
    let start = retained.iter().position(|&r| r).unwrap();
    let mut seen = vec![false; retained.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut count = 0usize;
    while let Some(e) = stack.pop() {
        count += 1;
        let m = mesh.element_multi(e);
        for a in 0..mesh.dim() {
            for step in [n - 1, 1] {
                let mut nb = m;
                nb[a] = (m[a] + step) % n;
                let ne = mesh.element_index(nb);
                if retained[ne] && !seen[ne] {
                    seen[ne] = true;
                    stack.push(ne);
                }
            }
        }
    }
    if count != total {
        return Err(Error::Homogenize(
            "perforated cell domain is disconnected; the inclusion must be compactly embedded"
                .into(),
        ));
    }
    Ok(())
}

/// Solve the periodic cell problems on the unit cell and assemble the
/// homogenized tensor. With `perforated` set, both the cell problems and
/// the integration are restricted to the complement of the inclusion.
pub fn solve_cell_problems(
    cell_mesh: &TensorMesh,
    cell_coeff: &Coefficient,
    perforated: bool,
) -> Result<(CellSolution, HomogenizedTensor)> {
    assert_eq!(cell_coeff.values().len(), cell_mesh.element_count());
    let dim = cell_mesh.dim();
    let n = cell_mesh.cells_per_axis();
    let npd = n.pow(dim as u32);
    let h = cell_mesh.h();
    let vol = h.powi(dim as i32);
    let nb = 1 << dim;

    let retained = retained_elements(cell_coeff, perforated);
    if perforated {
        check_connected(cell_mesh, &retained)?;
    }

    // periodic stiffness, mass vector, and cell-problem right-hand sides
    let unit_stiff = fem::local_stiffness(dim, h, &[[1.0, 0.0], [0.0, 1.0]]);
    let gauss = fem::gauss_points_unit(dim);
    let mut ab = TripletBuilder::new(npd, npd);
    let mut mass_vec = vec![0.0; npd];
    let mut rhs = vec![vec![0.0; npd]; dim];
    for e in 0..cell_mesh.element_count() {
        if !retained[e] {
            continue;
        }
        let a_e = cell_coeff.value(e);
        let dofs: Vec<usize> =
            cell_mesh.element_nodes(e).iter().map(|&nd| periodic_dof(cell_mesh, nd)).collect();
        for p in 0..nb {
            for q in 0..nb {
                ab.push(dofs[p], dofs[q], a_e * unit_stiff[p][q]);
            }
            // int_e phi_p = vol / 2^dim for Q1 on a cube
            mass_vec[dofs[p]] += vol / nb as f64;
            // -int_e a e_i . grad phi_p, by quadrature
            for (xi_pt, w) in &gauss {
                let grads = fem::shape_gradients_at(dim, *xi_pt);
                for (i, r) in rhs.iter_mut().enumerate().take(dim) {
                    r[dofs[p]] -= a_e * w * vol * grads[p][i] / h;
                }
            }
        }
    }
    let a = ab.build();
    let mut cb = TripletBuilder::new(1, npd);
    for (j, &mv) in mass_vec.iter().enumerate() {
        cb.push(0, j, mv);
    }
    let c = cb.build();

    let mut xi = Vec::with_capacity(dim);
    for rhs_i in rhs.iter().take(dim) {
        xi.push(linalg::solve_constrained(&a, &c, rhs_i)?);
    }

    // homogenized entries: int a (e_i + grad xi_i) . (e_j + grad xi_j)
    let mut entries = [[0.0; 2]; 2];
    for e in 0..cell_mesh.element_count() {
        if !retained[e] {
            continue;
        }
        let a_e = cell_coeff.value(e);
        let dofs: Vec<usize> =
            cell_mesh.element_nodes(e).iter().map(|&nd| periodic_dof(cell_mesh, nd)).collect();
        for (xi_pt, w) in &gauss {
            let grads = fem::shape_gradients_at(dim, *xi_pt);
            let mut corrected = [[0.0f64; 2]; 2]; // corrected[i] = e_i + grad xi_i
            for i in 0..dim {
                corrected[i][i] = 1.0;
                for p in 0..nb {
                    for axis in 0..dim {
                        corrected[i][axis] += xi[i][dofs[p]] * grads[p][axis] / h;
                    }
                }
            }
            for i in 0..dim {
                for j in i..dim {
                    let dot = corrected[i][0] * corrected[j][0] + corrected[i][1] * corrected[j][1];
                    entries[i][j] += w * vol * a_e * dot;
                }
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            entries[i][j] = entries[j][i];
        }
    }

    Ok((CellSolution { mesh: *cell_mesh, xi }, HomogenizedTensor { dim, entries }))
}

/// Solve the constant-tensor wave equation with the fine-scale pipeline
/// (implicit midpoint), returning the displacement trajectory.
pub fn homogenized_reference(
    hat_a: &HomogenizedTensor,
    f: &Field,
    u0: &Field,
    v0: &Field,
    mesh: &TensorMesh,
    tau: f64,
    t_final: f64,
) -> Result<Trajectory> {
    assert_eq!(hat_a.dim, mesh.dim());
    let a = fem::assemble_stiffness_tensor(mesh, &hat_a.entries);
    let m = fem::assemble_mass(mesh, None);
    let z0 = fem::interpolate_field(mesh, u0);
    let e0 = fem::interpolate_field(mesh, v0);
    let load = fem::assemble_load(mesh, f, 1.0);
    timestep::simulate_trajectory(
        &m,
        &a,
        &mut |_| load.values.clone(),
        z0.values,
        e0.values,
        tau,
        t_final,
        SchemeKind::Midpoint,
    )
}
