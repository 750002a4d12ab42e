//! Grids, fields, molecules and range-space geometry.

use serde::{Deserialize, Serialize};

use crate::geom::{self, Vec3};
use crate::{Error, Result};

/// Fractional coordinates closer than this to an integer snap onto the vertex.
const SNAP_EPS: f64 = 1e-9;

/// A structured (possibly sheared) vertex grid: vertex `(i, j, k)` lives at
/// `origin + i·axes[0] + j·axes[1] + k·axes[2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredGrid {
    dims: [usize; 3],
    origin: Vec3,
    axes: [Vec3; 3],
    #[serde(skip)]
    inverse: [Vec3; 3],
}

impl StructuredGrid {
    pub fn new(dims: [usize; 3], origin: Vec3, axes: [Vec3; 3]) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 2 vertices, got {dims:?}"
            )));
        }
        if origin.iter().chain(axes.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite origin or axis".into()));
        }
        // columns of the position map are the axis vectors
        let cols = [
            [axes[0][0], axes[1][0], axes[2][0]],
            [axes[0][1], axes[1][1], axes[2][1]],
            [axes[0][2], axes[1][2], axes[2][2]],
        ];
        let inverse = geom::invert3(cols)
            .ok_or_else(|| Error::InvalidGrid("axis vectors do not span 3D".into()))?;
        Ok(Self {
            dims,
            origin,
            axes,
            inverse,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn axes(&self) -> [Vec3; 3] {
        self.axes
    }

    pub fn vertex_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().map(|n| n - 1).product()
    }

    /// Linear vertex index, x fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn ijk(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let rest = index / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.position_frac([i as f64, j as f64, k as f64])
    }

    #[inline]
    pub fn position_of(&self, index: usize) -> Vec3 {
        let [i, j, k] = self.ijk(index);
        self.position(i, j, k)
    }

    /// Position for fractional grid coordinates.
    #[inline]
    pub fn position_frac(&self, u: Vec3) -> Vec3 {
        let a = self.axes;
        [
            self.origin[0] + u[0] * a[0][0] + u[1] * a[1][0] + u[2] * a[2][0],
            self.origin[1] + u[0] * a[0][1] + u[1] * a[1][1] + u[2] * a[2][1],
            self.origin[2] + u[0] * a[0][2] + u[1] * a[1][2] + u[2] * a[2][2],
        ]
    }

    /// Fractional grid coordinates of a spatial point (not bounds-checked).
    pub fn to_fractional(&self, p: Vec3) -> Vec3 {
        let d = geom::sub(p, self.origin);
        let m = self.inverse;
        [geom::dot(m[0], d), geom::dot(m[1], d), geom::dot(m[2], d)]
    }

    /// Volume of one voxel (parallelepiped spanned by the axes).
    pub fn voxel_volume(&self) -> f64 {
        geom::det3(self.axes[0], self.axes[1], self.axes[2]).abs()
    }

    pub fn volume(&self) -> f64 {
        self.voxel_volume() * self.voxel_count() as f64
    }

    /// Share of the grid volume attributed to a vertex: an eighth of every
    /// incident voxel (halved per boundary axis).
    pub fn vertex_volume_share(&self, index: usize) -> f64 {
        let ijk = self.ijk(index);
        let mut share = self.voxel_volume();
        for axis in 0..3 {
            if ijk[axis] == 0 || ijk[axis] == self.dims[axis] - 1 {
                share *= 0.5;
            }
        }
        share
    }

    /// Component-wise comparison of dims (exact) and geometry (absolute `tol`).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dims == other.dims
            && self
                .origin
                .iter()
                .chain(self.axes.iter().flatten())
                .zip(other.origin.iter().chain(other.axes.iter().flatten()))
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Axis-aligned bounding box of all vertices.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for corner in 0..8 {
            let ijk = [
                (corner & 1) * (self.dims[0] - 1),
                ((corner >> 1) & 1) * (self.dims[1] - 1),
                ((corner >> 2) & 1) * (self.dims[2] - 1),
            ];
            let p = self.position(ijk[0], ijk[1], ijk[2]);
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }
}

/// One scalar value per grid vertex, x-fastest order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    grid: StructuredGrid,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(grid: StructuredGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.vertex_count() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.vertex_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: StructuredGrid, f: impl Fn(Vec3) -> f64) -> Result<Self> {
        let values = (0..grid.vertex_count())
            .map(|i| f(grid.position_of(i)))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}

/// The pair `f = (f1, f2)` on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateField {
    first: ScalarGrid,
    second: ScalarGrid,
}

impl BivariateField {
    pub fn new(first: ScalarGrid, second: ScalarGrid) -> Result<Self> {
        if first.grid != second.grid {
            return Err(Error::GridMismatch(
                "both components must share an identical grid".into(),
            ));
        }
        Ok(Self { first, second })
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.first.grid
    }

    pub fn first(&self) -> &ScalarGrid {
        &self.first
    }

    pub fn second(&self) -> &ScalarGrid {
        &self.second
    }

    /// Range-space image of a vertex.
    #[inline]
    pub fn at(&self, index: usize) -> RangePoint {
        RangePoint::new(self.first.values[index], self.second.values[index])
    }

    /// Trilinear probe of both components.
    pub fn sample(&self, p: Vec3) -> Result<RangePoint> {
        let grid = self.grid();
        let mut u = grid.to_fractional(p);
        let dims = grid.dims();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let max = (dims[a] - 1) as f64;
            if !(u[a] >= -SNAP_EPS && u[a] <= max + SNAP_EPS) {
                return Err(Error::OutOfBounds(p));
            }
            if (u[a] - u[a].round()).abs() < SNAP_EPS {
                u[a] = u[a].round();
            }
            u[a] = u[a].clamp(0.0, max);
            let cell = (u[a].floor() as usize).min(dims[a] - 2);
            base[a] = cell;
            frac[a] = u[a] - cell as f64;
        }
        let mut out = [0.0f64; 2];
        for corner in 0..8usize {
            let bit = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let mut w = 1.0;
            for a in 0..3 {
                w *= if bit[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let idx = grid.index(base[0] + bit[0], base[1] + bit[1], base[2] + bit[2]);
            out[0] += w * self.first.values[idx];
            out[1] += w * self.second.values[idx];
        }
        Ok(RangePoint::new(out[0], out[1]))
    }
}

/// Free-function form of [`BivariateField::sample`].
pub fn sample_field(field: &BivariateField, p: Vec3) -> Result<RangePoint> {
    field.sample(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub atomic_number: u32,
    pub position: Vec3,
    pub radius: f64,
}

impl Atom {
    pub fn new(atomic_number: u32, position: Vec3, radius: f64) -> Result<Self> {
        if atomic_number == 0 {
            return Err(Error::InvalidMolecule("atomic number must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidMolecule(format!("atom radius {radius} must be > 0")));
        }
        Ok(Self {
            atomic_number,
            position,
            radius,
        })
    }

    /// Atom with the bundled covalent radius for its element.
    pub fn with_default_radius(atomic_number: u32, position: Vec3) -> Result<Self> {
        Self::new(
            atomic_number,
            position,
            crate::elements::covalent_radius_bohr(atomic_number),
        )
    }

    /// Power distance `|p - c|² - r²`.
    #[inline]
    pub fn power(&self, p: Vec3) -> f64 {
        let d = geom::sub(p, self.position);
        geom::dot(d, d) - self.radius * self.radius
    }
}

/// Input description of a subgroup (also the subgroup JSON file schema).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub name: String,
    pub atoms: Vec<usize>,
}

impl SubgroupSpec {
    pub fn new(name: impl Into<String>, atoms: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            atoms,
        }
    }
}

pub type Subgroup = SubgroupSpec;

/// Name of the subgroup that collects atoms not listed anywhere else.
pub const REST_SUBGROUP: &str = "REST";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    atoms: Vec<Atom>,
    subgroups: Vec<Subgroup>,
    #[serde(skip)]
    atom_subgroup: Vec<usize>,
}

impl Molecule {
    /// Validates the subgroup partition; unlisted atoms go to a `REST` subgroup.
    pub fn new(atoms: Vec<Atom>, subgroups: Vec<SubgroupSpec>) -> Result<Self> {
        let mut owner: Vec<Option<usize>> = vec![None; atoms.len()];
        let mut names = std::collections::BTreeSet::new();
        for (g, spec) in subgroups.iter().enumerate() {
            if spec.name.is_empty() {
                return Err(Error::InvalidMolecule("subgroup name is empty".into()));
            }
            if !names.insert(spec.name.as_str()) {
                return Err(Error::InvalidMolecule(format!(
                    "duplicate subgroup name `{}`",
                    spec.name
                )));
            }
            for &a in &spec.atoms {
                let slot = owner.get_mut(a).ok_or_else(|| {
                    Error::InvalidMolecule(format!(
                        "subgroup `{}` references atom {a}, molecule has {} atoms",
                        spec.name,
                        atoms.len()
                    ))
                })?;
                if let Some(prev) = *slot {
                    return Err(Error::InvalidMolecule(format!(
                        "atom {a} is in both `{}` and `{}`",
                        subgroups[prev].name, spec.name
                    )));
                }
                *slot = Some(g);
            }
        }
        let rest_taken = names.contains(REST_SUBGROUP);
        let mut subgroups = subgroups;
        let rest: Vec<usize> = (0..atoms.len()).filter(|&a| owner[a].is_none()).collect();
        if !rest.is_empty() {
            if rest_taken {
                return Err(Error::InvalidMolecule(format!(
                    "`{REST_SUBGROUP}` is reserved for unassigned atoms"
                )));
            }
            let g = subgroups.len();
            for &a in &rest {
                owner[a] = Some(g);
            }
            subgroups.push(SubgroupSpec::new(REST_SUBGROUP, rest));
        }
        let atom_subgroup = owner.into_iter().map(|g| g.unwrap_or(0)).collect();
        Ok(Self {
            atoms,
            subgroups,
            atom_subgroup,
        })
    }

    /// All atoms in one named subgroup.
    pub fn single_group(atoms: Vec<Atom>, name: &str) -> Result<Self> {
        let all = (0..atoms.len()).collect();
        Self::new(atoms, vec![SubgroupSpec::new(name, all)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn subgroups(&self) -> &[Subgroup] {
        &self.subgroups
    }

    pub fn subgroup_names(&self) -> Vec<String> {
        self.subgroups.iter().map(|g| g.name.clone()).collect()
    }

    pub fn subgroup_index(&self, name: &str) -> Result<usize> {
        self.subgroups
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::UnknownSubgroup(name.to_string()))
    }

    /// Subgroup id owning `atom`.
    pub fn subgroup_of(&self, atom: usize) -> usize {
        self.atom_subgroup[atom]
    }

    /// Same atoms, new subgroup partition.
    pub fn with_subgroups(&self, subgroups: Vec<SubgroupSpec>) -> Result<Self> {
        Self::new(self.atoms.clone(), subgroups)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangePoint {
    pub s1: f64,
    pub s2: f64,
}

impl RangePoint {
    pub const fn new(s1: f64, s2: f64) -> Self {
        Self { s1, s2 }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 2] {
        [self.s1, self.s2]
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.s1 - other.s1).hypot(self.s2 - other.s2)
    }
}

impl From<[f64; 2]> for RangePoint {
    fn from(p: [f64; 2]) -> Self {
        Self::new(p[0], p[1])
    }
}

/// An ordered range-space polyline, optionally closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangePolyline {
    points: Vec<RangePoint>,
    closed: bool,
}

impl RangePolyline {
    pub fn new(points: Vec<RangePoint>, closed: bool) -> Result<Self> {
        let mut points = points;
        if points
            .iter()
            .any(|p| !(p.s1.is_finite() && p.s2.is_finite()))
        {
            return Err(Error::InvalidPolyline("non-finite coordinate".into()));
        }
        if closed && points.len() > 2 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 2 {
            return Err(Error::InvalidPolyline(format!(
                "needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(w) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidPolyline(format!(
                "points {w} and {} coincide",
                w + 1
            )));
        }
        Ok(Self { points, closed })
    }

    pub fn points(&self) -> &[RangePoint] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Segments in order; a closed polyline adds the last-to-first segment.
    pub fn segments(&self) -> impl Iterator<Item = (RangePoint, RangePoint)> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 2 { n } else { n - 1 };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Euclidean distance from `p` to the nearest segment.
    pub fn distance_to(&self, p: RangePoint) -> f64 {
        self.segments()
            .map(|(a, b)| {
                let d = [b.s1 - a.s1, b.s2 - a.s2];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let t = (((p.s1 - a.s1) * d[0] + (p.s2 - a.s2) * d[1]) / len2).clamp(0.0, 1.0);
                p.distance(RangePoint::new(a.s1 + t * d[0], a.s2 + t * d[1]))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Even-odd point-in-polygon test (treats the polyline as closed).
    pub fn contains(&self, p: RangePoint) -> bool {
        let n = self.points.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            if (a.s2 > p.s2) != (b.s2 > p.s2) {
                let x = a.s1 + (p.s2 - a.s2) / (b.s2 - a.s2) * (b.s1 - a.s1);
                if p.s1 < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[derive(Deserialize)]
struct RawPolyline {
    points: Vec<RangePoint>,
    #[serde(default)]
    closed: bool,
}

impl<'de> Deserialize<'de> for RangePolyline {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPolyline::deserialize(d)?;
        RangePolyline::new(raw.points, raw.closed).map_err(serde::de::Error::custom)
    }
}
