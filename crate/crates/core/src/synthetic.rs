//! Synthetic bivariate fields for tests and demos.

use serde::{Deserialize, Serialize};

use crate::geom::{self, Vec3};
use crate::model::{Atom, BivariateField, Molecule, ScalarGrid, StructuredGrid, SubgroupSpec};
use crate::quadrature::{self, CompensatedSum};
use crate::tet::Tetrahedralization;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn unit() -> Self {
        Self::new([0.0; 3], [1.0; 3])
    }

    /// The cube `[lo, hi]³`.
    pub fn cube(lo: f64, hi: f64) -> Self {
        Self::new([lo; 3], [hi; 3])
    }

    pub fn center(&self) -> Vec3 {
        geom::scale(geom::add(self.min, self.max), 0.5)
    }
}

/// Axis-aligned grid with `dims` vertices spanning `bounds`.
pub fn box_grid(dims: [usize; 3], bounds: Aabb) -> Result<StructuredGrid> {
    if dims.iter().any(|&n| n < 2) {
        return Err(Error::InvalidGrid(format!(
            "every axis needs at least 2 vertices, got {dims:?}"
        )));
    }
    let mut axes = [[0.0; 3]; 3];
    for a in 0..3 {
        axes[a][a] = (bounds.max[a] - bounds.min[a]) / (dims[a] - 1) as f64;
    }
    StructuredGrid::new(dims, bounds.min, axes)
}

/// `first(x, y, z) = x`, `second(x, y, z) = y`.
pub fn make_synthetic_xy(dims: [usize; 3], bounds: Aabb) -> Result<BivariateField> {
    let grid = box_grid(dims, bounds)?;
    let first = ScalarGrid::from_fn(grid.clone(), |p| p[0])?;
    let second = ScalarGrid::from_fn(grid, |p| p[1])?;
    BivariateField::new(first, second)
}

/// Isotropic bump `amplitude · exp(-|x - center|² / (2 width²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: Vec3,
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianBump {
    pub fn new(center: Vec3, amplitude: f64, width: f64) -> Self {
        Self {
            center,
            amplitude,
            width,
        }
    }

    #[inline]
    pub fn eval(&self, p: Vec3) -> f64 {
        let d = geom::sub(p, self.center);
        self.amplitude * (-geom::dot(d, d) / (2.0 * self.width * self.width)).exp()
    }

    /// `∫ bump²` over all of R³.
    pub fn l2_mass(&self) -> f64 {
        self.amplitude * self.amplitude * (std::f64::consts::PI * self.width * self.width).powf(1.5)
    }
}

/// Each field is the sum of its bumps sampled at the vertices.
pub fn make_synthetic_gaussians(
    dims: [usize; 3],
    bounds: Aabb,
    first: &[GaussianBump],
    second: &[GaussianBump],
) -> Result<BivariateField> {
    if let Some(b) = first.iter().chain(second).find(|b| !(b.width > 0.0)) {
        return Err(Error::InvalidField(format!(
            "gaussian width must be > 0, got {}",
            b.width
        )));
    }
    let grid = box_grid(dims, bounds)?;
    let sum = |bumps: &[GaussianBump], p: Vec3| bumps.iter().map(|b| b.eval(p)).sum::<f64>();
    let f1 = ScalarGrid::from_fn(grid.clone(), |p| sum(first, p))?;
    let f2 = ScalarGrid::from_fn(grid, |p| sum(second, p))?;
    BivariateField::new(f1, f2)
}

/// `∫ f²` of the piecewise-linear interpolant over the tetrahedralization.
pub fn pl_l2_squared(field: &ScalarGrid, tets: &Tetrahedralization) -> f64 {
    let values = field.values();
    let vol = tets.tet_volume();
    let mut acc = CompensatedSum::default();
    for tet in tets.tets() {
        let v = tet.map(|i| [values[i as usize], 0.0]);
        acc.add(quadrature::integrate_tet(&v, vol, |p| p[0] * p[0]));
    }
    acc.value()
}

/// A field pair plus the molecule it lives around.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub field: BivariateField,
    pub molecule: Molecule,
}

/// Two-subgroup donor/acceptor toy system.
///
/// Atom `A` sits at `(-separation/2, 0, 0)` and carries the hole lobe, atom
/// `B` at `(+separation/2, 0, 0)` carries the particle lobe. Both fields are
/// scaled so that the piecewise-linear `∫ φ²` equals one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtoPairConfig {
    pub dims: [usize; 3],
    pub half_extent: f64,
    pub separation: f64,
    pub width: f64,
}

impl Default for NtoPairConfig {
    fn default() -> Self {
        Self {
            dims: [33, 33, 33],
            half_extent: 3.0,
            separation: 2.2,
            width: std::f64::consts::FRAC_1_SQRT_2 * 0.8,
        }
    }
}

pub fn nto_pair(cfg: &NtoPairConfig) -> Result<SyntheticDataset> {
    let bounds = Aabb::cube(-cfg.half_extent, cfg.half_extent);
    let a = [-cfg.separation / 2.0, 0.0, 0.0];
    let b = [cfg.separation / 2.0, 0.0, 0.0];
    let raw = make_synthetic_gaussians(
        cfg.dims,
        bounds,
        &[GaussianBump::new(a, 1.0, cfg.width)],
        &[GaussianBump::new(b, 1.0, cfg.width)],
    )?;
    let field = normalize_pair(&raw)?;
    let atoms = vec![Atom::with_default_radius(6, a)?, Atom::with_default_radius(6, b)?];
    let molecule = Molecule::new(
        atoms,
        vec![SubgroupSpec::new("A", vec![0]), SubgroupSpec::new("B", vec![1])],
    )?;
    Ok(SyntheticDataset { field, molecule })
}

/// Scales both components to unit piecewise-linear L2 norm.
pub fn normalize_pair(field: &BivariateField) -> Result<BivariateField> {
    let tets = Tetrahedralization::new(field.grid());
    let n1 = pl_l2_squared(field.first(), &tets).sqrt();
    let n2 = pl_l2_squared(field.second(), &tets).sqrt();
    if !(n1 > 0.0 && n2 > 0.0) {
        return Err(Error::InvalidField("cannot normalize an all-zero field".into()));
    }
    BivariateField::new(field.first().scaled(1.0 / n1)?, field.second().scaled(1.0 / n2)?)
}

/// Molecule with one carbon atom at the box center, used when writing
/// synthetic fields to cube files.
pub fn placeholder_molecule(bounds: Aabb) -> Result<Molecule> {
    Molecule::single_group(vec![Atom::with_default_radius(6, bounds.center())?], "ALL")
}
