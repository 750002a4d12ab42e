//! Exact deposition of one tetrahedron's pushforward density into bins.
//!
//! Under an affine map to the plane a tetrahedron covers the convex hull of
//! its projected vertices. The pushed-forward density (fiber length over the
//! Jacobian) vanishes on the hull boundary and peaks at an apex: the crossing
//! of the two projected opposite edges, or the vertex that projects inside the
//! triangle. It is linear on each triangle fanning from the apex, so each of
//! those triangles carries mass proportional to its area and is split exactly
//! along bin lines. Footprints collapsed to a segment use the exact
//! volume-fraction CDF along the segment instead.
//!
//! Work happens in bin coordinates, where bin `(i, j)` is `[i, i+1) × [j, j+1)`.
//! The outermost rows and columns extend to infinity, which implements
//! clamping of out-of-window mass.

use super::RangeWindow;
use crate::geom::orient2;

// a triangle cut by two row and two column lines has at most 7 vertices
const MAX_POLY: usize = 8;

/// Convex polygon with a per-vertex density `(u, v, rho)`.
#[derive(Clone, Copy)]
struct Poly {
    n: usize,
    v: [[f64; 3]; MAX_POLY],
}

impl Poly {
    const EMPTY: Poly = Poly {
        n: 0,
        v: [[0.0; 3]; MAX_POLY],
    };

    fn triangle(t: [[f64; 3]; 3]) -> Self {
        let mut p = Self::EMPTY;
        p.v[..3].copy_from_slice(&t);
        p.n = 3;
        p
    }

    #[inline]
    fn push(&mut self, x: [f64; 3]) {
        if self.n < MAX_POLY {
            self.v[self.n] = x;
            self.n += 1;
        }
    }

    fn range(&self, axis: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in &self.v[..self.n] {
            lo = lo.min(x[axis]);
            hi = hi.max(x[axis]);
        }
        (lo, hi)
    }

    /// Splits at `coord[axis] = c` into the parts below and above.
    #[inline]
    fn split(&self, axis: usize, c: f64, lo: &mut Poly, hi: &mut Poly) {
        lo.n = 0;
        hi.n = 0;
        for i in 0..self.n {
            let a = self.v[i];
            let b = self.v[(i + 1) % self.n];
            let da = a[axis] - c;
            let db = b[axis] - c;
            if da <= 0.0 {
                lo.push(a);
            }
            if da >= 0.0 {
                hi.push(a);
            }
            if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
                let t = da / (da - db);
                let mut x = [
                    a[0] + t * (b[0] - a[0]),
                    a[1] + t * (b[1] - a[1]),
                    a[2] + t * (b[2] - a[2]),
                ];
                x[axis] = c;
                lo.push(x);
                hi.push(x);
            }
        }
    }

    /// Integral of the affine density over the polygon.
    fn integral(&self) -> f64 {
        if self.n < 3 {
            return 0.0;
        }
        let p0 = self.v[0];
        let mut acc = 0.0;
        for i in 1..self.n - 1 {
            let a = self.v[i];
            let b = self.v[i + 1];
            let twice_area = orient2([p0[0], p0[1]], [a[0], a[1]], [b[0], b[1]]);
            acc += twice_area * (p0[2] + a[2] + b[2]);
        }
        (acc / 6.0).abs()
    }
}

/// Bin index along one axis with the outer bins unbounded.
#[inline]
fn cell(c: f64, n: usize) -> usize {
    if c < 1.0 {
        0
    } else if c >= (n - 1) as f64 {
        n - 1
    } else {
        c as usize
    }
}

pub(crate) struct Splatter<'a> {
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    inv_size: [f64; 2],
    out: &'a mut [f64],
    clamped: bool,
}

impl<'a> Splatter<'a> {
    pub(crate) fn new(window: &RangeWindow, out: &'a mut [f64]) -> Self {
        let [dx, dy] = window.bin_size();
        Self {
            nx: window.bins[0],
            ny: window.bins[1],
            origin: [window.s1[0], window.s2[0]],
            inv_size: [1.0 / dx, 1.0 / dy],
            out,
            clamped: false,
        }
    }

    pub(crate) fn clamped(&self) -> bool {
        self.clamped
    }

    #[inline]
    fn flat(&self, u: f64, v: f64) -> usize {
        cell(u, self.nx) + self.nx * cell(v, self.ny)
    }

    /// Deposits `volume` spread over the image of a tetrahedron whose vertices
    /// map to the range points `q`.
    pub(crate) fn deposit_tet(&mut self, q: [[f64; 2]; 4], volume: f64) {
        let p = q.map(|r| {
            [
                (r[0] - self.origin[0]) * self.inv_size[0],
                (r[1] - self.origin[1]) * self.inv_size[1],
            ]
        });
        let (nxf, nyf) = (self.nx as f64, self.ny as f64);
        if p.iter().any(|x| x[0] < 0.0 || x[0] > nxf || x[1] < 0.0 || x[1] > nyf) {
            self.clamped = true;
        }
        let b0 = self.flat(p[0][0], p[0][1]);
        if p[1..].iter().all(|x| self.flat(x[0], x[1]) == b0) {
            self.out[b0] += volume;
            return;
        }

        let (hull, k) = convex_hull(&p);
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for x in &p {
            for a in 0..2 {
                lo[a] = lo[a].min(x[a]);
                hi[a] = hi[a].max(x[a]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let area2 = if k >= 3 {
            (1..k - 1)
                .map(|i| orient2(p[hull[0]], p[hull[i]], p[hull[i + 1]]))
                .sum::<f64>()
        } else {
            0.0
        };
        if k < 3 || area2 <= 2e-9 * extent * extent {
            self.deposit_segment(&p, volume);
            return;
        }

        let apex = if k == 4 {
            let [h0, h1, h2, h3] = hull.map(|i| p[i]);
            let d = [h2[0] - h0[0], h2[1] - h0[1]];
            let e = [h3[0] - h1[0], h3[1] - h1[1]];
            let w = [h1[0] - h0[0], h1[1] - h0[1]];
            let alpha = (w[0] * e[1] - w[1] * e[0]) / (d[0] * e[1] - d[1] * e[0]);
            let alpha = alpha.clamp(0.0, 1.0);
            [h0[0] + alpha * d[0], h0[1] + alpha * d[1]]
        } else {
            let inner = (0..4).find(|i| !hull[..3].contains(i)).unwrap_or(0);
            p[inner]
        };

        let mut parts = [0.0; 4];
        let mut total = 0.0;
        for i in 0..k {
            let a = orient2(apex, p[hull[i]], p[hull[(i + 1) % k]]);
            if a > 0.0 {
                parts[i] = a;
                total += a;
            }
        }
        if !(total > 0.0) {
            self.deposit_segment(&p, volume);
            return;
        }
        for i in 0..k {
            if parts[i] > 0.0 {
                let a = p[hull[i]];
                let b = p[hull[(i + 1) % k]];
                self.deposit_triangle(
                    [[apex[0], apex[1], 1.0], [a[0], a[1], 0.0], [b[0], b[1], 0.0]],
                    volume * parts[i] / total,
                );
            }
        }
    }

    fn deposit_triangle(&mut self, tri: [[f64; 3]; 3], mass: f64) {
        let mut poly = Poly::triangle(tri);
        let (u0, u1) = poly.range(0);
        let (v0, v1) = poly.range(1);
        let (ix0, ix1) = (cell(u0, self.nx), cell(u1, self.nx));
        let (iy0, iy1) = (cell(v0, self.ny), cell(v1, self.ny));
        if ix0 == ix1 && iy0 == iy1 {
            self.out[ix0 + self.nx * iy0] += mass;
            return;
        }
        let [p0, p1, p2] = tri;
        let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
        let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let integral = 0.5 * det.abs() * (p0[2] + p1[2] + p2[2]) / 3.0;
        if !(integral > 0.0 && integral.is_finite()) {
            let c = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
            let b = self.flat(c[0], c[1]);
            self.out[b] += mass;
            return;
        }
        let scale = mass / integral;
        // affine density rho(u, v) = p0.rho + gu (u - u0) + gv (v - v0)
        let (d1, d2) = (p1[2] - p0[2], p2[2] - p0[2]);
        let gu = (d1 * e2[1] - d2 * e1[1]) / det;
        let gv = (d2 * e1[0] - d1 * e2[0]) / det;
        let rho = |u: f64, v: f64| p0[2] + gu * (u - p0[0]) + gv * (v - p0[1]);

        // `poly` holds the part above the current row, `strip` the row itself
        let mut strip = Poly::EMPTY;
        let mut above = Poly::EMPTY;
        let mut piece = Poly::EMPTY;
        let mut rest = Poly::EMPTY;
        for iy in iy0..=iy1 {
            if iy < iy1 {
                poly.split(1, (iy + 1) as f64, &mut strip, &mut above);
                std::mem::swap(&mut poly, &mut above);
            } else {
                std::mem::swap(&mut strip, &mut poly);
            }
            if strip.n < 3 {
                continue;
            }
            let (su0, su1) = strip.range(0);
            let (jx0, jx1) = (cell(su0, self.nx), cell(su1, self.nx));
            // columns whose whole cell lies inside the triangle
            let (fa, fb) = if iy >= 1 && iy + 2 <= self.ny {
                full_columns(&tri, iy as f64, self.nx)
            } else {
                (1, 0)
            };
            let row = self.nx * iy;
            let mut ix = jx0;
            while ix <= jx1 {
                if fa <= fb && ix == fa {
                    let vc = iy as f64 + 0.5;
                    for c in fa..=fb {
                        self.out[row + c] += scale * rho(c as f64 + 0.5, vc);
                    }
                    strip.split(0, (fb + 1) as f64, &mut piece, &mut rest);
                    std::mem::swap(&mut strip, &mut rest);
                    ix = fb + 1;
                    continue;
                }
                let m = if ix < jx1 {
                    strip.split(0, (ix + 1) as f64, &mut piece, &mut rest);
                    std::mem::swap(&mut strip, &mut rest);
                    piece.integral()
                } else {
                    strip.integral()
                };
                if m > 0.0 {
                    self.out[row + ix] += scale * m;
                }
                ix += 1;
            }
        }
    }

    /// Degenerate footprint: distributes volume along the segment spanned by
    /// the two farthest points using the exact CDF of the parameter.
    fn deposit_segment(&mut self, p: &[[f64; 2]; 4], volume: f64) {
        let mut best = (0, 1, -1.0);
        for i in 0..4 {
            for j in i + 1..4 {
                let d = (p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (ia, ib, len2) = best;
        if !(len2 > 0.0) {
            let b = self.flat(p[0][0], p[0][1]);
            self.out[b] += volume;
            return;
        }
        let a = p[ia];
        let d = [p[ib][0] - a[0], p[ib][1] - a[1]];
        let g = p.map(|x| (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0));

        let mut breaks: Vec<f64> = Vec::new();
        for (axis, n) in [(0, self.nx), (1, self.ny)] {
            let (s, e) = (a[axis], a[axis] + d[axis]);
            if d[axis] == 0.0 {
                continue;
            }
            let lo = s.min(e).ceil().max(1.0);
            let hi = s.max(e).floor().min((n - 1) as f64);
            let mut k = lo;
            while k <= hi {
                let t = (k - s) / d[axis];
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
                k += 1.0;
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.push(1.0);

        let mut prev_t = 0.0;
        let mut prev_f = 0.0;
        for &t in &breaks {
            if t <= prev_t {
                continue;
            }
            let f = volume_fraction_below(g, t);
            let m = mid(prev_t, t);
            let b = self.flat(a[0] + m * d[0], a[1] + m * d[1]);
            self.out[b] += volume * (f - prev_f);
            prev_t = t;
            prev_f = f;
        }
        // any remainder from the clamped CDF
        if prev_f < 1.0 {
            let b = self.flat(a[0] + d[0], a[1] + d[1]);
            self.out[b] += volume * (1.0 - prev_f);
        }
    }
}

/// Interior columns `fa..=fb` whose cells in row `[y, y + 1]` are covered
/// by the triangle; empty when `fa > fb`. Border columns are excluded since
/// they extend to infinity.
fn full_columns(tri: &[[f64; 3]; 3], y: f64, nx: usize) -> (usize, usize) {
    let span = |c: f64| -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            if (a[1] - c) * (b[1] - c) <= 0.0 && a[1] != b[1] {
                let u = a[0] + (c - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        (lo <= hi).then_some((lo, hi))
    };
    let (Some((l0, r0)), Some((l1, r1))) = (span(y), span(y + 1.0)) else {
        return (1, 0);
    };
    let l = l0.max(l1).ceil().max(1.0);
    let r = r0.min(r1).floor() - 1.0;
    let r = r.min((nx - 2) as f64);
    if r < l {
        return (1, 0);
    }
    (l as usize, r as usize)
}

#[inline]
fn mid(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// Counter-clockwise hull of four points with collinear points dropped.
/// Returns indices and their count (fewer than 3 means degenerate).
fn convex_hull(p: &[[f64; 2]; 4]) -> ([usize; 4], usize) {
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| {
        p[a][0]
            .total_cmp(&p[b][0])
            .then(p[a][1].total_cmp(&p[b][1]))
    });
    let mut h = [0usize; 9];
    let mut k = 0;
    for &i in &idx {
        while k >= 2 && orient2(p[h[k - 2]], p[h[k - 1]], p[i]) <= 0.0 {
            k -= 1;
        }
        h[k] = i;
        k += 1;
    }
    let lower = k + 1;
    for &i in idx.iter().rev().skip(1) {
        while k >= lower && orient2(p[h[k - 2]], p[h[k - 1]], p[i]) <= 0.0 {
            k -= 1;
        }
        h[k] = i;
        k += 1;
    }
    let n = (k - 1).min(4);
    ([h[0], h[1], h[2], h[3]], n)
}

/// Fraction of a tetrahedron's volume on which an affine function with
/// vertex values `g` is at most `t`.
pub(crate) fn volume_fraction_below(g: [f64; 4], t: f64) -> f64 {
    let mut s = g;
    s.sort_by(f64::total_cmp);
    let [a, b, c, d] = s;
    if t <= a {
        return 0.0;
    }
    if t >= d {
        return 1.0;
    }
    if t <= b {
        return (t - a).powi(3) / ((b - a) * (c - a) * (d - a));
    }
    if t >= c {
        return 1.0 - (d - t).powi(3) / ((d - a) * (d - b) * (d - c));
    }
    // b < t < c: the sublevel set is a wedge over the edge v0-v1 of the
    // reference simplex, cut into three tetrahedra
    let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let vals = [a, b, c, d];
    let cut = |i: usize, j: usize| {
        let w = (t - vals[i]) / (vals[j] - vals[i]);
        [
            v[i][0] + w * (v[j][0] - v[i][0]),
            v[i][1] + w * (v[j][1] - v[i][1]),
            v[i][2] + w * (v[j][2] - v[i][2]),
        ]
    };
    let (p02, p03, p12, p13) = (cut(0, 2), cut(0, 3), cut(1, 2), cut(1, 3));
    let det = |a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]| {
        crate::geom::tet_volume(a, b, c, d).abs() * 6.0
    };
    let f = det(v[0], p02, p03, v[1]) + det(p02, p03, v[1], p12) + det(p03, v[1], p12, p13);
    f.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(n: usize) -> RangeWindow {
        RangeWindow::new([0.0, 1.0], [0.0, 1.0], [n, n]).unwrap()
    }

    fn splat(q: [[f64; 2]; 4], n: usize) -> (Vec<f64>, bool) {
        let w = window(n);
        let mut out = vec![0.0; w.bin_count()];
        let mut s = Splatter::new(&w, &mut out);
        s.deposit_tet(q, 1.0);
        let c = s.clamped();
        (out, c)
    }

    /// Dense barycentric sampling of the unit-mass tetrahedron image.
    fn sampled(q: [[f64; 2]; 4], n: usize, k: usize) -> Vec<f64> {
        let w = window(n);
        let mut out = vec![0.0; w.bin_count()];
        let mut count = 0.0;
        let h = 1.0 / k as f64;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    let x = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (l as f64 + 0.5) * h];
                    if x[0] + x[1] + x[2] > 1.0 {
                        continue;
                    }
                    let b = [1.0 - x[0] - x[1] - x[2], x[0], x[1], x[2]];
                    let s1: f64 = (0..4).map(|m| b[m] * q[m][0]).sum();
                    let s2: f64 = (0..4).map(|m| b[m] * q[m][1]).sum();
                    let ((ix, iy), _) = w.bin_of(crate::RangePoint::new(s1, s2));
                    out[w.flat(ix, iy)] += 1.0;
                    count += 1.0;
                }
            }
        }
        out.iter_mut().for_each(|m| *m /= count);
        out
    }

    fn total_variation(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    #[test]
    fn hull_orders_ccw_and_drops_interior() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.2, 0.2], [0.0, 1.0]];
        let (h, k) = convex_hull(&p);
        assert_eq!(k, 3);
        assert!(!h[..3].contains(&2));
        assert!(orient2(p[h[0]], p[h[1]], p[h[2]]) > 0.0);
        let (_, k) = convex_hull(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        assert!(k < 3);
    }

    #[test]
    fn triangle_footprint_matches_sampling() {
        let q = [[0.1, 0.1], [0.9, 0.2], [0.3, 0.35], [0.4, 0.85]];
        let (a, clamped) = splat(q, 8);
        assert!(!clamped);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let b = sampled(q, 8, 200);
        assert!(total_variation(&a, &b) < 0.01, "{}", total_variation(&a, &b));
    }

    #[test]
    fn quad_footprint_matches_sampling() {
        let q = [[0.1, 0.1], [0.8, 0.9], [0.9, 0.15], [0.15, 0.7]];
        let (a, _) = splat(q, 10);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let b = sampled(q, 10, 200);
        assert!(total_variation(&a, &b) < 0.01, "{}", total_variation(&a, &b));
    }

    #[test]
    fn segment_footprint_matches_sampling() {
        let q = [[0.05, 0.05], [0.95, 0.95], [0.3, 0.3], [0.6, 0.6]];
        let (a, _) = splat(q, 10);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let b = sampled(q, 10, 200);
        assert!(total_variation(&a, &b) < 0.01, "{}", total_variation(&a, &b));
    }

    #[test]
    fn clamped_mass_stays_in_border_bins() {
        let q = [[-1.0, 0.5], [2.0, 0.5], [0.5, 3.0], [0.5, 0.6]];
        let (a, clamped) = splat(q, 4);
        assert!(clamped);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn volume_fraction_is_monotone_and_exact() {
        // linear in one barycentric coordinate: F(t) = 1 - (1-t)^3
        let g = [0.0, 0.0, 0.0, 1.0];
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((volume_fraction_below(g, t) - (1.0 - (1.0 - t).powi(3))).abs() < 1e-14);
        }
        let g = [0.1, 0.4, 0.45, 0.9];
        let mut prev = 0.0;
        for i in 0..=100 {
            let f = volume_fraction_below(g, i as f64 / 100.0);
            assert!(f >= prev - 1e-15);
            prev = f;
        }
        // middle branch is continuous with its neighbors
        let below = volume_fraction_below(g, 0.4);
        let just_above = volume_fraction_below(g, 0.4 + 1e-9);
        assert!((below - just_above).abs() < 1e-6);
        let f_c = volume_fraction_below(g, 0.45 - 1e-9);
        assert!((f_c - volume_fraction_below(g, 0.45)).abs() < 1e-6);
        // coordinate sum symmetry: x0 + x1 has the same law as 1 - (x2 + x3)
        let g = [0.0, 1.0, 0.0, 1.0];
        assert!((volume_fraction_below(g, 0.5) - 0.5).abs() < 1e-12);
    }
}
