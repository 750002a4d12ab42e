//! Fibers and fiber surfaces: preimages of range points and range polylines.
//!
//! Both are computed exactly per tetrahedron under the affine interpolant.
//! A fiber crosses each tetrahedron in a straight segment whose endpoints lie
//! on faces; those endpoints are solved per face from the face's vertices in
//! ascending id order, so neighboring tetrahedra produce bit-identical points.
//!
//! For a fiber surface, each polyline segment `a → b` defines two affine
//! functionals on range space: the offset `D` normal to the segment's
//! supporting line and the parameter `L` along it (`L(a) = 0`, `L(b) = 1`).
//! The surface piece is the `D = 0` level set in each tetrahedron, clipped to
//! `0 ≤ L ≤ 1`.

pub mod export;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geom::{self, Vec3};
use crate::model::{BivariateField, RangePoint, RangePolyline};
use crate::tet::Tetrahedralization;
use crate::{Error, Result};

pub use export::{export_mesh, import_json, MeshFormat};

/// Barycentric slack when testing whether a face solution lies on the face.
const FACE_EPS: f64 = 1e-12;
/// Triangles below this area are dropped.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Line segments in the spatial domain, in tetrahedron order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiberCurve {
    pub segments: Vec<[Vec3; 2]>,
    /// Tetrahedron of each segment.
    pub cells: Vec<u32>,
}

impl FiberCurve {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn length(&self) -> f64 {
        self.segments
            .iter()
            .map(|[a, b]| geom::norm(geom::sub(*b, *a)))
            .sum()
    }

    /// Joins segments sharing bit-identical endpoints into polylines.
    pub fn polylines(&self) -> Vec<Vec<Vec3>> {
        type Key = [u64; 3];
        let key = |p: &Vec3| p.map(f64::to_bits);
        let mut ends: HashMap<Key, Vec<usize>> = HashMap::new();
        for (i, [a, b]) in self.segments.iter().enumerate() {
            ends.entry(key(a)).or_default().push(i);
            ends.entry(key(b)).or_default().push(i);
        }
        let mut used = vec![false; self.segments.len()];
        let mut out = Vec::new();
        let extend = |start: Vec3, used: &mut Vec<bool>, line: &mut Vec<Vec3>| {
            let mut cur = start;
            loop {
                let next = ends[&key(&cur)].iter().copied().find(|&s| !used[s]);
                let Some(s) = next else { break };
                used[s] = true;
                let [a, b] = self.segments[s];
                cur = if key(&a) == key(&cur) { b } else { a };
                line.push(cur);
            }
        };
        // open chains first, starting at degree-1 endpoints
        let mut starts: Vec<usize> = Vec::new();
        for (i, [a, b]) in self.segments.iter().enumerate() {
            if ends[&key(a)].len() == 1 || ends[&key(b)].len() == 1 {
                starts.push(i);
            }
        }
        starts.extend(0..self.segments.len());
        for s in starts {
            if used[s] {
                continue;
            }
            let [a, b] = self.segments[s];
            used[s] = true;
            let (first, second) = if ends[&key(&b)].len() == 1 && ends[&key(&a)].len() != 1 {
                (b, a)
            } else {
                (a, b)
            };
            let mut line = vec![first, second];
            extend(second, &mut used, &mut line);
            let mut back = vec![first];
            extend(first, &mut used, &mut back);
            if back.len() > 1 {
                back.reverse();
                back.pop();
                back.extend(line);
                line = back;
            }
            out.push(line);
        }
        out
    }
}

/// Point on the face `(a, b, c)` mapping to `s`, if any. The vertex ids must
/// be sorted so shared faces give identical arithmetic.
fn solve_face(field: &BivariateField, ids: [usize; 3], s: RangePoint) -> Option<Vec3> {
    let grid = field.grid();
    let f = ids.map(|v| field.at(v).to_array());
    let e1 = [f[1][0] - f[0][0], f[1][1] - f[0][1]];
    let e2 = [f[2][0] - f[0][0], f[2][1] - f[0][1]];
    let r = [s.s1 - f[0][0], s.s2 - f[0][1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    if det == 0.0 {
        return None;
    }
    let lb = (r[0] * e2[1] - r[1] * e2[0]) / det;
    let lc = (e1[0] * r[1] - e1[1] * r[0]) / det;
    if lb < -FACE_EPS || lc < -FACE_EPS || lb + lc > 1.0 + FACE_EPS {
        return None;
    }
    let p = ids.map(|v| grid.position_of(v));
    Some(geom::add(
        p[0],
        geom::add(
            geom::scale(geom::sub(p[1], p[0]), lb),
            geom::scale(geom::sub(p[2], p[0]), lc),
        ),
    ))
}

/// Preimage of one range point, optionally restricted to a cell subset.
pub fn extract_fiber(
    field: &BivariateField,
    tets: &Tetrahedralization,
    s: RangePoint,
    cells: Option<&[usize]>,
) -> FiberCurve {
    let mut out = FiberCurve::default();
    let count = cells.map_or(tets.len(), <[usize]>::len);
    for i in 0..count {
        let t = cells.map_or(i, |c| c[i]);
        let tet = tets.tet(t);
        let f = tet.map(|v| field.at(v as usize));
        let (lo1, hi1) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.s1), b.max(p.s1))
        });
        let (lo2, hi2) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.s2), b.max(p.s2))
        });
        if s.s1 < lo1 || s.s1 > hi1 || s.s2 < lo2 || s.s2 > hi2 {
            continue;
        }
        let mut pts: Vec<Vec3> = Vec::with_capacity(4);
        for skip in 0..4 {
            let mut ids = [0usize; 3];
            let mut n = 0;
            for (k, &v) in tet.iter().enumerate() {
                if k != skip {
                    ids[n] = v as usize;
                    n += 1;
                }
            }
            ids.sort_unstable();
            if let Some(p) = solve_face(field, ids, s) {
                if !pts.contains(&p) {
                    pts.push(p);
                }
            }
        }
        if pts.len() < 2 {
            continue;
        }
        // several hits only when the fiber runs through an edge or vertex
        let (mut ia, mut ib, mut best) = (0, 1, -1.0);
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let d = geom::norm(geom::sub(pts[a], pts[b]));
                if d > best {
                    (ia, ib, best) = (a, b, d);
                }
            }
        }
        if best > 0.0 {
            out.segments.push([pts[ia], pts[ib]]);
            out.cells.push(t as u32);
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiberSurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Range point of each vertex under the interpolant.
    pub range_points: Vec<RangePoint>,
    /// Parameter along the vertex's source segment, in `[0, 1]`.
    pub params: Vec<f64>,
    /// Index of the polyline segment each vertex belongs to.
    pub segment_ids: Vec<u32>,
    /// Tetrahedron each triangle was cut from.
    pub triangle_cells: Vec<u32>,
}

impl FiberSurfaceMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i as usize]);
        0.5 * geom::norm(geom::cross(geom::sub(b, a), geom::sub(c, a)))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Checks array lengths and index bounds.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.range_points.len() != n || self.params.len() != n || self.segment_ids.len() != n {
            return Err(Error::InvalidField("per-vertex attribute length mismatch".into()));
        }
        if self.triangle_cells.len() != self.triangles.len() {
            return Err(Error::InvalidField("per-triangle attribute length mismatch".into()));
        }
        if self.triangles.iter().flatten().any(|&i| i as usize >= n) {
            return Err(Error::InvalidField("triangle index out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum VertexKey {
    /// Crossing of `D = 0` on the edge `(lo, hi)`.
    Edge(u32, u32, u32),
    /// Crossing of `L = plane` on a face of the tetrahedron.
    Clip(u32, [u32; 3], u8),
    /// Not shared with any other cell.
    Loose(u64),
}

#[derive(Clone, Copy)]
struct PolyVertex {
    key: VertexKey,
    pos: Vec3,
    range: [f64; 2],
    l: f64,
    /// Face carrying the edge to the next vertex, if it lies on the boundary.
    next_face: Option<[u32; 3]>,
}

fn lerp_vertex(a: &PolyVertex, b: &PolyVertex, t: f64) -> (Vec3, [f64; 2]) {
    (
        geom::lerp(a.pos, b.pos, t),
        [
            a.range[0] + t * (b.range[0] - a.range[0]),
            a.range[1] + t * (b.range[1] - a.range[1]),
        ],
    )
}

/// Keeps the part with `L >= c` (`keep_above`) or `L <= c`.
fn clip(
    poly: &[PolyVertex],
    seg: u32,
    c: f64,
    plane: u8,
    keep_above: bool,
    loose: &mut u64,
) -> Vec<PolyVertex> {
    let inside = |v: &PolyVertex| if keep_above { v.l >= c } else { v.l <= c };
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        let (ia, ib) = (inside(a), inside(b));
        if ia {
            out.push(*a);
        }
        if ia != ib {
            let t = (c - a.l) / (b.l - a.l);
            let (pos, range) = lerp_vertex(a, b, t);
            let key = match a.next_face {
                Some(f) => VertexKey::Clip(seg, f, plane),
                None => {
                    *loose += 1;
                    VertexKey::Loose(*loose)
                }
            };
            out.push(PolyVertex {
                key,
                pos,
                range,
                l: c,
                // an exit vertex starts an edge along the plane, inside the cell
                next_face: if ib { a.next_face } else { None },
            });
        }
    }
    out
}

fn face_of(a: [u32; 2], b: [u32; 2]) -> Option<[u32; 3]> {
    let mut ids = [a[0], a[1], b[0], b[1]];
    ids.sort_unstable();
    let mut f = [0u32; 3];
    let mut n = 0;
    for (i, &v) in ids.iter().enumerate() {
        if i == 0 || v != ids[i - 1] {
            if n == 3 {
                return None;
            }
            f[n] = v;
            n += 1;
        }
    }
    (n == 3).then_some(f)
}

/// Spatial-hash of polyline segments over range space.
struct SegmentIndex {
    lo: [f64; 2],
    inv: [f64; 2],
    n: usize,
    cells: Vec<Vec<u32>>,
}

impl SegmentIndex {
    fn new(segs: &[(RangePoint, RangePoint)]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for (a, b) in segs {
            for p in [a, b] {
                lo[0] = lo[0].min(p.s1);
                lo[1] = lo[1].min(p.s2);
                hi[0] = hi[0].max(p.s1);
                hi[1] = hi[1].max(p.s2);
            }
        }
        let n = ((segs.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let ext = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let inv = [n as f64 / ext[0], n as f64 / ext[1]];
        let mut idx = Self {
            lo,
            inv,
            n,
            cells: vec![Vec::new(); n * n],
        };
        for (s, (a, b)) in segs.iter().enumerate() {
            let (x0, x1) = idx.span(a.s1.min(b.s1), a.s1.max(b.s1), 0);
            let (y0, y1) = idx.span(a.s2.min(b.s2), a.s2.max(b.s2), 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    idx.cells[x + n * y].push(s as u32);
                }
            }
        }
        idx
    }

    fn span(&self, lo: f64, hi: f64, axis: usize) -> (usize, usize) {
        let c = |v: f64| (((v - self.lo[axis]) * self.inv[axis]).floor().max(0.0) as usize).min(self.n - 1);
        (c(lo), c(hi))
    }

    /// Segments whose cells overlap the box, ascending and unique.
    fn query(&self, lo: [f64; 2], hi: [f64; 2], out: &mut Vec<u32>) {
        out.clear();
        let reach = |lo: f64, hi: f64, axis: usize| {
            let end = self.lo[axis] + self.n as f64 / self.inv[axis];
            hi >= self.lo[axis] && lo <= end
        };
        if !reach(lo[0], hi[0], 0) || !reach(lo[1], hi[1], 1) {
            return;
        }
        let (x0, x1) = self.span(lo[0], hi[0], 0);
        let (y0, y1) = self.span(lo[1], hi[1], 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                out.extend_from_slice(&self.cells[x + self.n * y]);
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// Preimage of a range polyline, optionally restricted to a cell subset.
pub fn extract_fiber_surface(
    field: &BivariateField,
    tets: &Tetrahedralization,
    polyline: &RangePolyline,
    cells: Option<&[usize]>,
) -> FiberSurfaceMesh {
    let segs: Vec<(RangePoint, RangePoint)> = polyline.segments().collect();
    let index = SegmentIndex::new(&segs);
    let frames: Vec<([f64; 2], [f64; 2], [f64; 2])> = segs
        .iter()
        .map(|(a, b)| {
            let d = [b.s1 - a.s1, b.s2 - a.s2];
            let len = d[0].hypot(d[1]);
            let len2 = len * len;
            (a.to_array(), [d[0] / len2, d[1] / len2], [-d[1] / len, d[0] / len])
        })
        .collect();

    let grid = field.grid();
    let mut mesh = FiberSurfaceMesh::default();
    let mut welded: HashMap<VertexKey, u32> = HashMap::new();
    let mut candidates = Vec::new();
    let mut loose = 0u64;
    let count = cells.map_or(tets.len(), <[usize]>::len);

    for i in 0..count {
        let t = cells.map_or(i, |c| c[i]);
        let tet = tets.tet(t);
        let f = tet.map(|v| field.at(v as usize).to_array());
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &f {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        index.query(lo, hi, &mut candidates);
        for &si in &candidates {
            let (a, dl, nrm) = frames[si as usize];
            let rel = f.map(|p| [p[0] - a[0], p[1] - a[1]]);
            let dval = rel.map(|r| r[0] * nrm[0] + r[1] * nrm[1]);
            let lval = rel.map(|r| r[0] * dl[0] + r[1] * dl[1]);
            let pos = dval.map(|d| d >= 0.0);
            let npos = pos.iter().filter(|&&p| p).count();
            if npos == 0 || npos == 4 {
                continue;
            }
            if lval.iter().all(|&l| l < 0.0) || lval.iter().all(|&l| l > 1.0) {
                continue;
            }
            let crossing = |x: usize, y: usize| -> PolyVertex {
                let (x, y) = if tet[x] < tet[y] { (x, y) } else { (y, x) };
                let w = dval[x] / (dval[x] - dval[y]);
                let (px, py) = (grid.position_of(tet[x] as usize), grid.position_of(tet[y] as usize));
                PolyVertex {
                    key: VertexKey::Edge(si, tet[x], tet[y]),
                    pos: geom::lerp(px, py, w),
                    range: [f[x][0] + w * (f[y][0] - f[x][0]), f[x][1] + w * (f[y][1] - f[x][1])],
                    l: lval[x] + w * (lval[y] - lval[x]),
                    next_face: None,
                }
            };
            let mut edges: Vec<(usize, usize)> = Vec::with_capacity(4);
            if npos == 1 || npos == 3 {
                let odd = (0..4).find(|&k| pos[k] == (npos == 1)).unwrap();
                for k in 0..4 {
                    if k != odd {
                        edges.push((odd, k));
                    }
                }
            } else {
                let p: Vec<usize> = (0..4).filter(|&k| pos[k]).collect();
                let q: Vec<usize> = (0..4).filter(|&k| !pos[k]).collect();
                edges.extend([(p[0], q[0]), (p[0], q[1]), (p[1], q[1]), (p[1], q[0])]);
            }
            let mut poly: Vec<PolyVertex> = edges.iter().map(|&(x, y)| crossing(x, y)).collect();
            let m = poly.len();
            for k in 0..m {
                let (e0, e1) = (edges[k], edges[(k + 1) % m]);
                poly[k].next_face = face_of([tet[e0.0], tet[e0.1]], [tet[e1.0], tet[e1.1]]);
            }
            if poly.iter().any(|v| v.l < 0.0) {
                poly = clip(&poly, si, 0.0, 0, true, &mut loose);
            }
            if poly.iter().any(|v| v.l > 1.0) {
                poly = clip(&poly, si, 1.0, 1, false, &mut loose);
            }
            if poly.len() < 3 {
                continue;
            }
            let mut ids: Vec<Option<u32>> = vec![None; poly.len()];
            for k in 1..poly.len() - 1 {
                let tri = [0, k, k + 1];
                let [a, b, c] = tri.map(|j| poly[j].pos);
                let area = 0.5 * geom::norm(geom::cross(geom::sub(b, a), geom::sub(c, a)));
                if !(area >= MIN_TRIANGLE_AREA) {
                    continue;
                }
                let mut out = [0u32; 3];
                for (o, &j) in out.iter_mut().zip(&tri) {
                    *o = *ids[j].get_or_insert_with(|| {
                        let v = &poly[j];
                        *welded.entry(v.key).or_insert_with(|| {
                            mesh.vertices.push(v.pos);
                            mesh.range_points.push(RangePoint::new(v.range[0], v.range[1]));
                            mesh.params.push(v.l.clamp(0.0, 1.0));
                            mesh.segment_ids.push(si);
                            (mesh.vertices.len() - 1) as u32
                        })
                    });
                }
                if out[0] != out[1] && out[1] != out[2] && out[0] != out[2] {
                    mesh.triangles.push(out);
                    mesh.triangle_cells.push(t as u32);
                }
            }
        }
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{make_synthetic_xy, Aabb};

    fn xy(n: usize, lo: f64, hi: f64) -> (BivariateField, Tetrahedralization) {
        let f = make_synthetic_xy([n, n, n], Aabb::cube(lo, hi)).unwrap();
        let t = Tetrahedralization::new(f.grid());
        (f, t)
    }

    #[test]
    fn fiber_is_vertical_line() {
        let (f, t) = xy(17, -1.0, 1.0);
        let c = extract_fiber(&f, &t, RangePoint::new(0.1, -0.3), None);
        assert!(!c.is_empty());
        for [a, b] in &c.segments {
            for p in [a, b] {
                assert!((p[0] - 0.1).abs() < 1e-12 && (p[1] + 0.3).abs() < 1e-12);
            }
        }
        let lines = c.polylines();
        assert_eq!(lines.len(), 1);
        let zs: Vec<f64> = lines[0].iter().map(|p| p[2]).collect();
        let (zmin, zmax) = zs.iter().fold((f64::MAX, f64::MIN), |(a, b), &z| (a.min(z), b.max(z)));
        assert!((zmin + 1.0).abs() < 1e-12 && (zmax - 1.0).abs() < 1e-12);
        assert!((c.length() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fiber_outside_range_is_empty() {
        let (f, t) = xy(5, 0.0, 1.0);
        assert!(extract_fiber(&f, &t, RangePoint::new(2.0, 0.5), None).is_empty());
    }

    #[test]
    fn open_segment_preimage_is_a_rectangle() {
        let (f, t) = xy(9, 0.0, 1.0);
        let pl = RangePolyline::new(vec![[0.2, 0.2].into(), [0.2, 0.8].into()], false).unwrap();
        let m = extract_fiber_surface(&f, &t, &pl, None);
        m.validate().unwrap();
        assert!((m.area() - 0.6).abs() < 1e-9, "{}", m.area());
        for (v, r) in m.vertices.iter().zip(&m.range_points) {
            assert!((v[0] - 0.2).abs() < 1e-12);
            assert!(v[1] >= 0.2 - 1e-12 && v[1] <= 0.8 + 1e-12);
            assert!(pl.distance_to(*r) < 1e-12);
        }
        for &p in &m.params {
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn restricted_extraction_is_a_subset() {
        let (f, t) = xy(9, 0.0, 1.0);
        let pl = RangePolyline::new(vec![[0.3, 0.1].into(), [0.6, 0.9].into()], false).unwrap();
        let full = extract_fiber_surface(&f, &t, &pl, None);
        let half: Vec<usize> = (0..t.len() / 2).collect();
        let part = extract_fiber_surface(&f, &t, &pl, Some(&half));
        let from_full: Vec<[Vec3; 3]> = full
            .triangles
            .iter()
            .zip(&full.triangle_cells)
            .filter(|(_, &c)| (c as usize) < t.len() / 2)
            .map(|(tri, _)| tri.map(|i| full.vertices[i as usize]))
            .collect();
        let from_part: Vec<[Vec3; 3]> = part
            .triangles
            .iter()
            .map(|tri| tri.map(|i| part.vertices[i as usize]))
            .collect();
        assert_eq!(from_full, from_part);
    }

    #[test]
    fn out_of_range_polyline_gives_empty_mesh() {
        let (f, t) = xy(5, 0.0, 1.0);
        let pl = RangePolyline::new(vec![[2.0, 2.0].into(), [3.0, 2.5].into()], false).unwrap();
        assert!(extract_fiber_surface(&f, &t, &pl, None).is_empty());
    }

    #[test]
    fn face_of_shared_vertices() {
        assert_eq!(face_of([1, 5], [1, 9]), Some([1, 5, 9]));
        assert_eq!(face_of([1, 5], [2, 9]), None);
    }
}
