//! Marching-squares isocontours of a mask, stitched into control polygons.
//!
//! The mask is sampled on `bins_x × bins_y` nodes spanning the window
//! including its border. Contours that reach the border become open
//! polylines; the rest close. Ambiguous saddle cells are resolved by the
//! average of the four corners.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LensMask;
use crate::csp::RangeWindow;
use crate::model::{RangePoint, RangePolyline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPolygon {
    pub polyline: RangePolyline,
    /// Isovalue in mask units.
    pub level: f64,
    /// Name of the mask the contour was taken from.
    pub mask_kind: String,
}

struct NodeGrid {
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    far: [f64; 2],
    step: [f64; 2],
    values: Vec<f64>,
}

impl NodeGrid {
    fn sample(m: &LensMask, w: &RangeWindow) -> Self {
        let [nx, ny] = w.bins;
        let step = [
            (w.s1[1] - w.s1[0]) / (nx - 1) as f64,
            (w.s2[1] - w.s2[0]) / (ny - 1) as f64,
        ];
        let mut g = Self {
            nx,
            ny,
            origin: [w.s1[0], w.s2[0]],
            far: [w.s1[1], w.s2[1]],
            step,
            values: Vec::with_capacity(nx * ny),
        };
        for j in 0..ny {
            for i in 0..nx {
                let [s1, s2] = g.pos(i, j);
                let v = m.eval(RangePoint::new(s1, s2));
                g.values.push(v);
            }
        }
        g
    }

    #[inline]
    fn v(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.nx * j]
    }

    /// Node position; the far border is pinned exactly.
    fn pos(&self, i: usize, j: usize) -> [f64; 2] {
        let at = |a: usize, idx: usize, n: usize| {
            if idx == n - 1 {
                self.far[a]
            } else {
                self.origin[a] + idx as f64 * self.step[a]
            }
        };
        [at(0, i, self.nx), at(1, j, self.ny)]
    }

    /// Edge ids: horizontal `(i,j)-(i+1,j)` is even, vertical `(i,j)-(i,j+1)` odd.
    fn endpoints(&self, edge: u64) -> ((usize, usize), (usize, usize)) {
        let node = (edge / 2) as usize;
        let (i, j) = (node % self.nx, node / self.nx);
        if edge.is_multiple_of(2) {
            ((i, j), (i + 1, j))
        } else {
            ((i, j), (i, j + 1))
        }
    }

    fn crossing(&self, edge: u64, k: f64) -> RangePoint {
        let ((i0, j0), (i1, j1)) = self.endpoints(edge);
        let (va, vb) = (self.v(i0, j0), self.v(i1, j1));
        let t = ((k - va) / (vb - va)).clamp(0.0, 1.0);
        let (a, b) = (self.pos(i0, j0), self.pos(i1, j1));
        RangePoint::new(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    }
}

fn h_edge(nx: usize, i: usize, j: usize) -> u64 {
    2 * (j * nx + i) as u64
}

fn v_edge(nx: usize, i: usize, j: usize) -> u64 {
    2 * (j * nx + i) as u64 + 1
}

/// Isocontours `mask = k` over `window`. Empty when `k` is outside the
/// sampled range.
pub fn contour_mask(m: &LensMask, window: &RangeWindow, k: f64) -> Vec<ControlPolygon> {
    if !k.is_finite() {
        return Vec::new();
    }
    let g = NodeGrid::sample(m, window);
    let (lo, hi) = g
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if k < lo || k > hi {
        return Vec::new();
    }

    let mut adj: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut link = |a: u64, b: u64| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    let nx = g.nx;
    for j in 0..g.ny - 1 {
        for i in 0..nx - 1 {
            let c = [g.v(i, j), g.v(i + 1, j), g.v(i + 1, j + 1), g.v(i, j + 1)];
            let above = c.map(|v| v >= k);
            let case = above
                .iter()
                .enumerate()
                .fold(0u8, |acc, (b, &a)| acc | ((a as u8) << b));
            if case == 0 || case == 15 {
                continue;
            }
            let bottom = h_edge(nx, i, j);
            let right = v_edge(nx, i + 1, j);
            let top = h_edge(nx, i, j + 1);
            let left = v_edge(nx, i, j);
            match case {
                5 | 10 => {
                    let center_above = (c[0] + c[1] + c[2] + c[3]) * 0.25 >= k;
                    // corners 0 and 2 above (case 5) or 1 and 3 (case 10)
                    if (case == 5) == center_above {
                        link(bottom, right);
                        link(top, left);
                    } else {
                        link(bottom, left);
                        link(right, top);
                    }
                }
                _ => {
                    let mut cross = Vec::with_capacity(2);
                    if above[0] != above[1] {
                        cross.push(bottom);
                    }
                    if above[1] != above[2] {
                        cross.push(right);
                    }
                    if above[2] != above[3] {
                        cross.push(top);
                    }
                    if above[3] != above[0] {
                        cross.push(left);
                    }
                    link(cross[0], cross[1]);
                }
            }
        }
    }

    let mut visited: BTreeMap<u64, bool> = adj.keys().map(|&e| (e, false)).collect();
    let mut chains: Vec<(Vec<u64>, bool)> = Vec::new();
    let walk = |start: u64, visited: &mut BTreeMap<u64, bool>| -> (Vec<u64>, bool) {
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut prev = None;
        let mut cur = start;
        loop {
            let next = adj[&cur]
                .iter()
                .copied()
                .find(|&n| Some(n) != prev && !visited[&n]);
            match next {
                Some(n) => {
                    visited.insert(n, true);
                    chain.push(n);
                    prev = Some(cur);
                    cur = n;
                }
                None => {
                    let closed = chain.len() > 2 && adj[&cur].contains(&start);
                    return (chain, closed);
                }
            }
        }
    };
    let ends: Vec<u64> = adj
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    for e in ends {
        if !visited[&e] {
            chains.push(walk(e, &mut visited));
        }
    }
    let rest: Vec<u64> = adj.keys().copied().collect();
    for e in rest {
        if !visited[&e] {
            chains.push(walk(e, &mut visited));
        }
    }

    let name = m.name();
    chains
        .into_iter()
        .filter_map(|(chain, closed)| {
            let mut pts: Vec<RangePoint> = Vec::with_capacity(chain.len());
            for e in chain {
                let p = g.crossing(e, k);
                if pts.last() != Some(&p) {
                    pts.push(p);
                }
            }
            let polyline = RangePolyline::new(pts, closed).ok()?;
            Some(ControlPolygon {
                polyline,
                level: k,
                mask_kind: name.clone(),
            })
        })
        .collect()
}
