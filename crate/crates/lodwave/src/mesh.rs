//! Uniform tensor-product meshes on (0,1)^d for d in {1, 2}.
//!
//! All geometry is derived from indices and the mesh width h; meshes are
//! never stored as coordinate lists, so results are bit-exact reproducible.
//! Node and element indices are lexicographic with axis 0 fastest.
//! Only power-of-two resolutions are admitted so that microstructure cells
//! and coarse/fine meshes always align.

use crate::{Error, Result};

/// Uniform axis-aligned grid with `cells_per_axis` elements per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorMesh {
    dim: usize,
    cells_per_axis: usize,
}

/// Union of coarse elements within `m` adjacency layers of a center element
/// (elements sharing at least a vertex). On a tensor grid this is an
/// axis-aligned box of elements, clipped at the domain boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub center_element: usize,
    pub m: usize,
    /// Inclusive element-index range per axis.
    pub lo: [usize; 2],
    pub hi: [usize; 2],
    pub elements: Vec<usize>,
    pub boundary_clipped: bool,
}

/// Build a mesh, rejecting dim not in {1,2} and non-power-of-two resolutions.
pub fn build_mesh(dim: usize, cells_per_axis: usize) -> Result<TensorMesh> {
    if dim != 1 && dim != 2 {
        return Err(Error::Mesh(format!("dim must be 1 or 2, got {dim}")));
    }
    if cells_per_axis < 2 || !cells_per_axis.is_power_of_two() {
        return Err(Error::Mesh(format!(
            "cells_per_axis must be a power of two >= 2, got {cells_per_axis}"
        )));
    }
    Ok(TensorMesh { dim, cells_per_axis })
}

impl TensorMesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Mesh width h = 1 / cells_per_axis.
    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_axis as f64
    }

    pub fn element_count(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    pub fn node_count(&self) -> usize {
        (self.cells_per_axis + 1).pow(self.dim as u32)
    }

    pub fn interior_node_count(&self) -> usize {
        (self.cells_per_axis - 1).pow(self.dim as u32)
    }

    /// Multi-index of an element (second component 0 in 1D).
    pub fn element_multi(&self, e: usize) -> [usize; 2] {
        debug_assert!(e < self.element_count());
        if self.dim == 1 {
            [e, 0]
        } else {
            [e % self.cells_per_axis, e / self.cells_per_axis]
        }
    }

    pub fn element_index(&self, multi: [usize; 2]) -> usize {
        if self.dim == 1 {
            multi[0]
        } else {
            multi[1] * self.cells_per_axis + multi[0]
        }
    }

    pub fn node_multi(&self, node: usize) -> [usize; 2] {
        debug_assert!(node < self.node_count());
        if self.dim == 1 {
            [node, 0]
        } else {
            [node % (self.cells_per_axis + 1), node / (self.cells_per_axis + 1)]
        }
    }

    pub fn node_index(&self, multi: [usize; 2]) -> usize {
        if self.dim == 1 {
            multi[0]
        } else {
            multi[1] * (self.cells_per_axis + 1) + multi[0]
        }
    }

    pub fn node_point(&self, node: usize) -> [f64; 2] {
        let m = self.node_multi(node);
        [m[0] as f64 * self.h(), m[1] as f64 * self.h()]
    }

    pub fn element_midpoint(&self, e: usize) -> [f64; 2] {
        let m = self.element_multi(e);
        let h = self.h();
        [(m[0] as f64 + 0.5) * h, if self.dim == 2 { (m[1] as f64 + 0.5) * h } else { 0.0 }]
    }

    /// Nodes of an element in lexicographic local order (axis 0 fastest);
    /// 2 nodes in 1D, 4 in 2D.
    pub fn element_nodes(&self, e: usize) -> Vec<usize> {
        let m = self.element_multi(e);
        if self.dim == 1 {
            vec![m[0], m[0] + 1]
        } else {
            let np = self.cells_per_axis + 1;
            let base = m[1] * np + m[0];
            vec![base, base + 1, base + np, base + np + 1]
        }
    }

    pub fn is_interior_node(&self, node: usize) -> bool {
        let m = self.node_multi(node);
        (0..self.dim).all(|a| m[a] >= 1 && m[a] <= self.cells_per_axis - 1)
    }

    /// Index of a node within the interior numbering, if interior.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        if !self.is_interior_node(node) {
            return None;
        }
        let m = self.node_multi(node);
        Some(if self.dim == 1 {
            m[0] - 1
        } else {
            (m[1] - 1) * (self.cells_per_axis - 1) + (m[0] - 1)
        })
    }

    pub fn interior_to_node(&self, interior: usize) -> usize {
        debug_assert!(interior < self.interior_node_count());
        if self.dim == 1 {
            interior + 1
        } else {
            let w = self.cells_per_axis - 1;
            let m = [interior % w + 1, interior / w + 1];
            self.node_index(m)
        }
    }

    pub fn interior_node_point(&self, interior: usize) -> [f64; 2] {
        self.node_point(self.interior_to_node(interior))
    }

    /// Full node indices of all interior nodes, in interior order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.interior_node_count()).map(|i| self.interior_to_node(i)).collect()
    }
}

/// Map each coarse element to the fine elements it contains. The images are
/// pairwise disjoint and cover the fine mesh.
pub fn refinement_map(coarse: &TensorMesh, fine: &TensorMesh) -> Result<Vec<Vec<usize>>> {
    if coarse.dim != fine.dim {
        return Err(Error::Mesh("refinement requires equal dimensions".into()));
    }
    if fine.cells_per_axis % coarse.cells_per_axis != 0 {
        return Err(Error::Mesh(format!(
            "fine resolution {} is not a multiple of coarse resolution {}",
            fine.cells_per_axis, coarse.cells_per_axis
        )));
    }
    let r = fine.cells_per_axis / coarse.cells_per_axis;
    let mut map = Vec::with_capacity(coarse.element_count());
    for ce in 0..coarse.element_count() {
        map.push(fine_elements_of(coarse, fine, ce, r));
    }
    Ok(map)
}

fn fine_elements_of(coarse: &TensorMesh, fine: &TensorMesh, ce: usize, r: usize) -> Vec<usize> {
    let cm = coarse.element_multi(ce);
    let mut out = Vec::with_capacity(r.pow(coarse.dim as u32));
    if coarse.dim == 1 {
        for dx in 0..r {
            out.push(cm[0] * r + dx);
        }
    } else {
        for dy in 0..r {
            for dx in 0..r {
                out.push(fine.element_index([cm[0] * r + dx, cm[1] * r + dy]));
            }
        }
    }
    out
}

/// Fine elements contained in one coarse element (refinement ratio checked
/// by the caller through [`refinement_map`] semantics).
pub fn fine_elements_in_coarse(coarse: &TensorMesh, fine: &TensorMesh, ce: usize) -> Vec<usize> {
    let r = fine.cells_per_axis / coarse.cells_per_axis;
    fine_elements_of(coarse, fine, ce, r)
}

/// Grow the element patch U_m(K) by m layers of vertex-touching neighbors,
/// clipped at the domain boundary.
pub fn build_patch(mesh: &TensorMesh, center: usize, m: usize) -> Patch {
    assert!(center < mesh.element_count(), "invalid center element");
    let c = mesh.element_multi(center);
    let n = mesh.cells_per_axis;
    let mut lo = [0usize; 2];
    let mut hi = [0usize; 2];
    let mut clipped = false;
    for a in 0..mesh.dim {
        lo[a] = c[a].saturating_sub(m);
        hi[a] = (c[a] + m).min(n - 1);
        if c[a] < m || c[a] + m > n - 1 {
            clipped = true;
        }
    }
    let mut elements = Vec::new();
    if mesh.dim == 1 {
        elements.extend(lo[0]..=hi[0]);
    } else {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                elements.push(mesh.element_index([i, j]));
            }
        }
    }
    Patch { center_element: center, m, lo, hi, elements, boundary_clipped: clipped }
}

impl Patch {
    pub fn contains_element(&self, mesh: &TensorMesh, e: usize) -> bool {
        let m = mesh.element_multi(e);
        (0..mesh.dim).all(|a| m[a] >= self.lo[a] && m[a] <= self.hi[a])
    }

    /// Fine interior nodes whose basis support lies inside the patch, i.e.
    /// the degrees of freedom of W_h(U_m(K)). Sorted ascending.
    pub fn fine_interior_dofs(&self, coarse: &TensorMesh, fine: &TensorMesh) -> Vec<usize> {
        let r = fine.cells_per_axis() / coarse.cells_per_axis();
        // patch bounds in fine element indices
        let flo: Vec<usize> = (0..coarse.dim()).map(|a| self.lo[a] * r).collect();
        let fhi: Vec<usize> = (0..coarse.dim()).map(|a| (self.hi[a] + 1) * r - 1).collect();
        // a fine node with per-axis coordinate g has support in [flo, fhi]
        // iff g in [flo+1, fhi]
        let mut dofs = Vec::new();
        if fine.dim() == 1 {
            for g in flo[0] + 1..=fhi[0] {
                if let Some(i) = fine.interior_index(g) {
                    dofs.push(i);
                }
            }
        } else {
            for gy in flo[1] + 1..=fhi[1] {
                for gx in flo[0] + 1..=fhi[0] {
                    if let Some(i) = fine.interior_index(fine.node_index([gx, gy])) {
                        dofs.push(i);
                    }
                }
            }
        }
        dofs.sort_unstable();
        dofs
    }
}
