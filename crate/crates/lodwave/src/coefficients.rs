//! Piecewise-constant multiscale coefficients on the fine mesh: periodic
//! inclusions, random checkerboards, and constants.

use crate::mesh::TensorMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    Periodic,
    RandomCheckerboard,
    Constant,
}

/// One value per fine element; for the two-valued kinds every value is
/// either `a0` or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    values: Vec<f64>,
    pub eps: f64,
    pub a0: f64,
    pub kind: CoefficientKind,
}

/// Axis-aligned box, used to restrict checkerboard randomization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Region {
    pub fn whole() -> Self {
        Self { lo: [0.0, 0.0], hi: [1.0, 1.0] }
    }

    pub fn empty() -> Self {
        Self { lo: [0.0, 0.0], hi: [0.0, 0.0] }
    }
}

impl Coefficient {
    pub fn constant(mesh: &TensorMesh, value: f64) -> Result<Self> {
        if value <= 0.0 {
            return Err(Error::Coefficient("coefficient values must be positive".into()));
        }
        Ok(Self {
            values: vec![value; mesh.element_count()],
            eps: 1.0,
            a0: value,
            kind: CoefficientKind::Constant,
        })
    }

    /// Build directly from per-element values (tests and custom cells).
    pub fn from_values(values: Vec<f64>, eps: f64, a0: f64, kind: CoefficientKind) -> Result<Self> {
        if values.iter().any(|&v| v <= 0.0) {
            return Err(Error::Coefficient("coefficient values must be positive".into()));
        }
        Ok(Self { values, eps, a0, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, element: usize) -> f64 {
        self.values[element]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Dump as CSV with columns element_index,value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element_index,value\n");
        for (e, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{e},{v}\n"));
        }
        out
    }
}

/// eps must be an inverse power of two in (0, 1].
fn check_dyadic_eps(eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Coefficient(format!("eps must be in (0,1], got {eps}")));
    }
    let inv = 1.0 / eps;
    if inv.fract() != 0.0 || !(inv as u64).is_power_of_two() {
        return Err(Error::Coefficient(format!("eps must be a power of two reciprocal, got {eps}")));
    }
    Ok(inv as u64)
}

/// Periodic two-valued coefficient: a(y) = a0 on the inclusion
/// Sigma = (1/4, 3/4] in 1D or (1/4, 3/4)^2 in 2D, extended eps-periodically;
/// evaluated at element midpoints.
pub fn periodic_inclusion(fine: &TensorMesh, eps: f64, a0: f64) -> Result<Coefficient> {
    check_dyadic_eps(eps)?;
    if a0 <= 0.0 {
        return Err(Error::Coefficient(format!("a0 must be positive, got {a0}")));
    }
    // fine.h must divide eps/4 so Sigma boundaries align with elements
    let cells_per_quarter = eps * fine.cells_per_axis() as f64 / 4.0;
    if cells_per_quarter.fract() != 0.0 || cells_per_quarter < 1.0 {
        return Err(Error::Coefficient(format!(
            "mesh width 1/{} must divide eps/4 = {}",
            fine.cells_per_axis(),
            eps / 4.0
        )));
    }
    let dim = fine.dim();
    let mut values = Vec::with_capacity(fine.element_count());
    for e in 0..fine.element_count() {
        let mid = fine.element_midpoint(e);
        let inside = (0..dim).all(|a| {
            let y = (mid[a] / eps).fract();
            if dim == 1 {
                y > 0.25 && y <= 0.75
            } else {
                y > 0.25 && y < 0.75
            }
        });
        values.push(if inside { a0 } else { 1.0 });
    }
    Ok(Coefficient { values, eps, a0, kind: CoefficientKind::Periodic })
}

/// Two-valued coefficient with a0 on one axis-aligned box (element-aligned);
/// used for unit-cell geometries with inclusion sizes other than 1/2.
pub fn inclusion_box(fine: &TensorMesh, lo: [f64; 2], hi: [f64; 2], a0: f64) -> Result<Coefficient> {
    if a0 <= 0.0 {
        return Err(Error::Coefficient(format!("a0 must be positive, got {a0}")));
    }
    let h = fine.h();
    for a in 0..fine.dim() {
        for v in [lo[a], hi[a]] {
            if (v / h).fract().abs() > 1e-9 {
                return Err(Error::Coefficient(format!(
                    "box boundary {v} is not aligned with the mesh width {h}"
                )));
            }
        }
    }
    let dim = fine.dim();
    let mut values = Vec::with_capacity(fine.element_count());
    for e in 0..fine.element_count() {
        let mid = fine.element_midpoint(e);
        let inside = (0..dim).all(|a| mid[a] > lo[a] && mid[a] < hi[a]);
        values.push(if inside { a0 } else { 1.0 });
    }
    Ok(Coefficient { values, eps: 1.0, a0, kind: CoefficientKind::Periodic })
}

/// Fully specified 64-bit generator so seeds reproduce across platforms;
/// splitmix64 update, one draw per call.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Fair coin: top bit of the next draw.
    pub fn next_bit(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Random checkerboard: one Bernoulli(1/2) draw per eps-cell inside `region`
/// (value a0 on success, 1 otherwise), value 1 outside the region. Draws are
/// consumed in lexicographic cell order (axis 0 fastest), so the result is a
/// pure function of the arguments.
pub fn random_checkerboard(
    fine: &TensorMesh,
    eps: f64,
    a0: f64,
    seed: u64,
    region: Region,
) -> Result<Coefficient> {
    let inv = check_dyadic_eps(eps)?;
    if a0 <= 0.0 {
        return Err(Error::Coefficient(format!("a0 must be positive, got {a0}")));
    }
    let cells_per_eps = eps * fine.cells_per_axis() as f64;
    if cells_per_eps.fract() != 0.0 || cells_per_eps < 1.0 {
        return Err(Error::Coefficient(format!(
            "mesh width 1/{} must divide eps = {eps}",
            fine.cells_per_axis()
        )));
    }
    let cells = inv as usize; // eps-cells per axis
    let dim = fine.dim();
    for a in 0..dim {
        for v in [region.lo[a], region.hi[a]] {
            if (v / eps).fract().abs() > 1e-9 {
                return Err(Error::Coefficient(format!(
                    "region boundary {v} is not aligned with the eps-cells of size {eps}"
                )));
            }
        }
    }

    // draw per cell, lexicographic
    let n_cells = cells.pow(dim as u32);
    let mut rng = SplitMix64::new(seed);
    let mut cell_value = vec![1.0f64; n_cells];
    for c in 0..n_cells {
        let cm = if dim == 1 { [c, 0] } else { [c % cells, c / cells] };
        let inside = (0..dim).all(|a| {
            let lo = cm[a] as f64 * eps;
            let hi = (cm[a] + 1) as f64 * eps;
            lo >= region.lo[a] - 1e-12 && hi <= region.hi[a] + 1e-12
        });
        if inside {
            cell_value[c] = if rng.next_bit() { a0 } else { 1.0 };
        }
    }

    let mut values = Vec::with_capacity(fine.element_count());
    for e in 0..fine.element_count() {
        let mid = fine.element_midpoint(e);
        let cm: Vec<usize> = (0..dim).map(|a| (mid[a] / eps) as usize).collect();
        let c = if dim == 1 { cm[0] } else { cm[1] * cells + cm[0] };
        values.push(cell_value[c]);
    }
    Ok(Coefficient { values, eps, a0, kind: CoefficientKind::RandomCheckerboard })
}

/// Contrast value a0 = eps^p.
pub fn high_contrast_value(eps: f64, p: f64) -> f64 {
    debug_assert!(eps > 0.0 && eps <= 1.0 && p >= 0.0);
    if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
        eps.powi(p as i32)
    } else {
        eps.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn periodic_inclusion_midpoint_rule() {
        let mesh = build_mesh(1, 16).unwrap();
        let c = periodic_inclusion(&mesh, 0.25, 0.5).unwrap();
        // element 6 has midpoint 0.40625, y = 0.625 in (1/4, 3/4] -> a0
        assert_eq!(c.value(6), 0.5);
        // element 0 has midpoint 0.03125, y = 0.125 -> 1
        assert_eq!(c.value(0), 1.0);
    }

    #[test]
    fn degenerate_contrast_is_constant_one() {
        let mesh = build_mesh(1, 16).unwrap();
        let c = periodic_inclusion(&mesh, 0.25, 1.0).unwrap();
        assert!(c.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn periodic_inclusion_volume_fraction_exact() {
        let m1 = build_mesh(1, 64).unwrap();
        let c1 = periodic_inclusion(&m1, 0.125, 0.25).unwrap();
        let measure: f64 = c1.values().iter().filter(|&&v| v == 0.25).count() as f64 * m1.h();
        assert_eq!(measure, 0.5);

        let m2 = build_mesh(2, 32).unwrap();
        let c2 = periodic_inclusion(&m2, 0.25, 0.25).unwrap();
        let measure: f64 =
            c2.values().iter().filter(|&&v| v == 0.25).count() as f64 * m2.h() * m2.h();
        assert_eq!(measure, 0.25);
    }

    #[test]
    fn periodic_inclusion_rejects_misaligned() {
        let mesh = build_mesh(1, 8).unwrap();
        // h = 1/8 does not divide eps/4 = 1/16
        let err = periodic_inclusion(&mesh, 0.25, 0.5).unwrap_err();
        assert!(err.to_string().contains("divide"));
    }

    #[test]
    fn checkerboard_empty_region_all_ones() {
        let mesh = build_mesh(1, 16).unwrap();
        let c = random_checkerboard(&mesh, 0.25, 0.1, 7, Region::empty()).unwrap();
        assert!(c.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn checkerboard_same_seed_bitwise_equal() {
        let mesh = build_mesh(2, 16).unwrap();
        let a = random_checkerboard(&mesh, 0.25, 1e-4, 42, Region::whole()).unwrap();
        let b = random_checkerboard(&mesh, 0.25, 1e-4, 42, Region::whole()).unwrap();
        assert_eq!(a, b);
        let c = random_checkerboard(&mesh, 0.25, 1e-4, 43, Region::whole()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn checkerboard_fraction_quantized() {
        // 4 eps-cells in 1D: the a0 fraction is k/4 for any seed
        let mesh = build_mesh(1, 16).unwrap();
        for seed in 0..100 {
            let c = random_checkerboard(&mesh, 0.25, 0.5, seed, Region::whole()).unwrap();
            let frac =
                c.values().iter().filter(|&&v| v == 0.5).count() as f64 / c.values().len() as f64;
            let quantized = (frac * 4.0).fract() == 0.0;
            assert!(quantized, "seed {seed}: fraction {frac}");
        }
    }

    #[test]
    fn checkerboard_region_restricts_draws() {
        let mesh = build_mesh(2, 16).unwrap();
        let region = Region { lo: [0.25, 0.25], hi: [0.75, 0.75] };
        let c = random_checkerboard(&mesh, 0.25, 0.5, 3, region).unwrap();
        for e in 0..mesh.element_count() {
            let mid = mesh.element_midpoint(e);
            let inside = (0..2).all(|a| mid[a] > 0.25 && mid[a] < 0.75);
            if !inside {
                assert_eq!(c.value(e), 1.0);
            }
        }
    }

    #[test]
    fn checkerboard_rejects_misaligned_region() {
        let mesh = build_mesh(1, 16).unwrap();
        let region = Region { lo: [0.1, 0.0], hi: [0.9, 1.0] };
        assert!(random_checkerboard(&mesh, 0.25, 0.5, 1, region).is_err());
    }

    #[test]
    fn high_contrast_values() {
        assert_eq!(high_contrast_value(2f64.powi(-5), 2.0), 2f64.powi(-10));
        assert_eq!(high_contrast_value(0.37, 0.0), 1.0);
        assert_eq!(high_contrast_value(2f64.powi(-8), 3.0), 2f64.powi(-24));
    }

    #[test]
    fn csv_dump_format() {
        let mesh = build_mesh(1, 2).unwrap();
        let c = Coefficient::constant(&mesh, 1.5).unwrap();
        assert_eq!(c.to_csv(), "element_index,value\n0,1.5\n1,1.5\n");
    }
}
