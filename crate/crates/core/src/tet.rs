//! Kuhn (Freudenthal) split of every voxel into six tetrahedra.
//!
//! All voxels use the same main diagonal `(0,0,0) → (1,1,1)`, which makes the
//! split conforming across voxel faces. Tetrahedron `t` belongs to voxel `t / 6`.

use crate::model::StructuredGrid;

/// Axis orders of the six Kuhn simplices.
pub const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

#[derive(Debug, Clone)]
pub struct Tetrahedralization {
    tets: Vec<[u32; 4]>,
    tet_volume: f64,
}

impl Tetrahedralization {
    pub fn new(grid: &StructuredGrid) -> Self {
        let [nx, ny, nz] = grid.dims();
        assert!(
            grid.vertex_count() <= u32::MAX as usize,
            "grid too large for 32-bit vertex ids"
        );
        let mut tets = Vec::with_capacity(6 * grid.voxel_count());
        for k in 0..nz - 1 {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    for perm in KUHN_PERMUTATIONS {
                        let mut c = [i, j, k];
                        let mut verts = [0u32; 4];
                        verts[0] = grid.index(c[0], c[1], c[2]) as u32;
                        for (step, &axis) in perm.iter().enumerate() {
                            c[axis] += 1;
                            verts[step + 1] = grid.index(c[0], c[1], c[2]) as u32;
                        }
                        tets.push(verts);
                    }
                }
            }
        }
        Self {
            tets,
            tet_volume: grid.voxel_volume() / 6.0,
        }
    }

    pub fn len(&self) -> usize {
        self.tets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tets.is_empty()
    }

    pub fn tets(&self) -> &[[u32; 4]] {
        &self.tets
    }

    #[inline]
    pub fn tet(&self, t: usize) -> [u32; 4] {
        self.tets[t]
    }

    /// Volume of every tetrahedron (all six Kuhn simplices of a parallelepiped
    /// voxel have equal volume).
    pub fn tet_volume(&self) -> f64 {
        self.tet_volume
    }

    pub fn total_volume(&self) -> f64 {
        self.tet_volume * self.tets.len() as f64
    }

    #[inline]
    pub fn voxel_of(t: usize) -> usize {
        t / 6
    }
}
