//! Power-diagram segmentation of the grid into atomic regions, aggregated
//! into subgroup segments.
//!
//! Vertices are labeled with the atom minimizing `|v - c|² - r²` (lowest atom
//! index on ties). A tetrahedron belongs to the subgroup of the atom owning
//! its barycenter. Power cells are convex, so when all four vertices share an
//! atom the barycenter does too and the per-cell evaluation is skipped.

use crate::cube::CubeDataset;
use crate::geom::{self, Vec3};
use crate::model::{Molecule, ScalarGrid, StructuredGrid};
use crate::tet::Tetrahedralization;
use crate::{Error, Result};

/// Name that selects the whole domain wherever a segment name is accepted.
pub const WHOLE_DOMAIN: &str = "whole";

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    cell_labels: Vec<u16>,
    subgroup_names: Vec<String>,
    atom_labels: Vec<u32>,
    vertex_subgroups: Vec<u16>,
}

fn nearest_power(mol: &Molecule, p: Vec3) -> u32 {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (a, atom) in mol.atoms().iter().enumerate() {
        let d = atom.power(p);
        if d < best_d {
            best_d = d;
            best = a as u32;
        }
    }
    best
}

/// Per-vertex atom label by power distance.
pub fn power_label_vertices(grid: &StructuredGrid, mol: &Molecule) -> Result<Vec<u32>> {
    if mol.atoms().is_empty() {
        return Err(Error::InvalidMolecule("segmentation needs at least one atom".into()));
    }
    Ok((0..grid.vertex_count())
        .map(|v| nearest_power(mol, grid.position_of(v)))
        .collect())
}

/// Assigns every tetrahedron to the subgroup owning its barycenter.
pub fn segment_cells(
    atom_labels: &[u32],
    grid: &StructuredGrid,
    mol: &Molecule,
    tets: &Tetrahedralization,
) -> Result<Segmentation> {
    if atom_labels.len() != grid.vertex_count() {
        return Err(Error::InvalidField(format!(
            "{} atom labels for {} vertices",
            atom_labels.len(),
            grid.vertex_count()
        )));
    }
    if mol.subgroups().len() > u16::MAX as usize {
        return Err(Error::InvalidMolecule("too many subgroups".into()));
    }
    let group = |atom: u32| mol.subgroup_of(atom as usize) as u16;
    let cell_labels = tets
        .tets()
        .iter()
        .map(|tet| {
            let l0 = atom_labels[tet[0] as usize];
            if tet[1..].iter().all(|&v| atom_labels[v as usize] == l0) {
                return group(l0);
            }
            let mut c = [0.0; 3];
            for &v in tet {
                c = geom::add(c, grid.position_of(v as usize));
            }
            group(nearest_power(mol, geom::scale(c, 0.25)))
        })
        .collect();
    Ok(Segmentation {
        cell_labels,
        subgroup_names: mol.subgroup_names(),
        atom_labels: atom_labels.to_vec(),
        vertex_subgroups: atom_labels.iter().map(|&a| group(a)).collect(),
    })
}

/// Labels vertices and cells in one go.
pub fn segment(
    grid: &StructuredGrid,
    mol: &Molecule,
    tets: &Tetrahedralization,
) -> Result<Segmentation> {
    let labels = power_label_vertices(grid, mol)?;
    segment_cells(&labels, grid, mol, tets)
}

impl Segmentation {
    pub fn cell_labels(&self) -> &[u16] {
        &self.cell_labels
    }

    pub fn atom_labels(&self) -> &[u32] {
        &self.atom_labels
    }

    /// Subgroup id of every vertex (through its atom label).
    pub fn vertex_subgroups(&self) -> &[u16] {
        &self.vertex_subgroups
    }

    pub fn subgroup_names(&self) -> &[String] {
        &self.subgroup_names
    }

    pub fn subgroup_count(&self) -> usize {
        self.subgroup_names.len()
    }

    pub fn subgroup_index(&self, name: &str) -> Result<usize> {
        self.subgroup_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownSubgroup(name.to_string()))
    }

    /// Ascending tetrahedron indices of one subgroup.
    pub fn cells_of(&self, subgroup: usize) -> Vec<usize> {
        self.cell_labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l as usize == subgroup)
            .map(|(t, _)| t)
            .collect()
    }

    /// Cells for a segment name; [`WHOLE_DOMAIN`] yields `None` (all cells).
    pub fn cells_named(&self, name: &str) -> Result<Option<Vec<usize>>> {
        if name == WHOLE_DOMAIN {
            return Ok(None);
        }
        Ok(Some(self.cells_of(self.subgroup_index(name)?)))
    }

    /// Cell count per subgroup.
    pub fn cell_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.subgroup_names.len()];
        for &l in &self.cell_labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Atom labels as a scalar grid, for export to external viewers.
    pub fn label_cube(&self, grid: &StructuredGrid, mol: &Molecule) -> Result<CubeDataset> {
        let values = self.atom_labels.iter().map(|&a| a as f64).collect();
        Ok(CubeDataset {
            molecule: mol.clone(),
            field: ScalarGrid::new(grid.clone(), values)?,
            comments: [
                "power-diagram atom labels".to_string(),
                "value = 0-based atom index".to_string(),
            ],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, SubgroupSpec};
    use crate::synthetic::{box_grid, Aabb};

    fn two_atoms(r0: f64, r1: f64) -> Molecule {
        Molecule::new(
            vec![
                Atom::new(6, [0.0, 0.0, 0.0], r0).unwrap(),
                Atom::new(6, [2.0, 0.0, 0.0], r1).unwrap(),
            ],
            vec![SubgroupSpec::new("A", vec![0]), SubgroupSpec::new("B", vec![1])],
        )
        .unwrap()
    }

    #[test]
    fn equal_radii_split_at_midplane() {
        let m = two_atoms(1.0, 1.0);
        assert_eq!(nearest_power(&m, [0.9, 0.0, 0.0]), 0);
        assert_eq!(nearest_power(&m, [1.1, 0.3, 0.0]), 1);
        // exact tie goes to the lower index
        assert_eq!(nearest_power(&m, [1.0, 0.5, 0.0]), 0);
    }

    #[test]
    fn weighted_boundary_moves() {
        // x² - r0² = (x - 2)² - r1²  with r0² - r1² = 1  →  x = 1.25
        let m = two_atoms(2f64.sqrt(), 1.0);
        assert_eq!(nearest_power(&m, [1.24, 0.0, 0.0]), 0);
        assert_eq!(nearest_power(&m, [1.26, 0.0, 0.0]), 1);
    }

    #[test]
    fn labels_invariant_under_common_radius_shift() {
        let g = box_grid([9, 5, 5], Aabb::new([-1.0, -1.0, -1.0], [3.0, 1.0, 1.0])).unwrap();
        let a = two_atoms(1.3, 0.7);
        // r² + c with c = 2
        let b = two_atoms((1.3f64.powi(2) + 2.0).sqrt(), (0.7f64.powi(2) + 2.0).sqrt());
        assert_eq!(
            power_label_vertices(&g, &a).unwrap(),
            power_label_vertices(&g, &b).unwrap()
        );
    }

    #[test]
    fn single_atom_labels_everything() {
        let g = box_grid([4, 4, 4], Aabb::unit()).unwrap();
        let m = Molecule::single_group(vec![Atom::new(1, [0.2; 3], 0.5).unwrap()], "ALL").unwrap();
        let tets = Tetrahedralization::new(&g);
        let s = segment(&g, &m, &tets).unwrap();
        assert!(s.atom_labels().iter().all(|&l| l == 0));
        assert_eq!(s.cell_counts(), vec![tets.len()]);
        assert_eq!(s.cells_named("ALL").unwrap().unwrap().len(), tets.len());
        assert!(s.cells_named(WHOLE_DOMAIN).unwrap().is_none());
        assert!(matches!(s.cells_named("nope"), Err(Error::UnknownSubgroup(_))));
    }

    #[test]
    fn mirrored_atoms_split_evenly() {
        let g = box_grid([32, 32, 32], Aabb::unit()).unwrap();
        let m = Molecule::new(
            vec![
                Atom::new(6, [0.25, 0.5, 0.5], 0.3).unwrap(),
                Atom::new(6, [0.75, 0.5, 0.5], 0.3).unwrap(),
            ],
            vec![SubgroupSpec::new("A", vec![0]), SubgroupSpec::new("B", vec![1])],
        )
        .unwrap();
        let tets = Tetrahedralization::new(&g);
        let s = segment(&g, &m, &tets).unwrap();
        let c = s.cell_counts();
        let frac = c[0] as f64 / tets.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
        assert_eq!(c[0] + c[1], tets.len());
    }

    #[test]
    fn empty_molecule_rejected() {
        let g = box_grid([2, 2, 2], Aabb::unit()).unwrap();
        let m = Molecule::new(Vec::new(), Vec::new()).unwrap();
        assert!(power_label_vertices(&g, &m).is_err());
    }
}
