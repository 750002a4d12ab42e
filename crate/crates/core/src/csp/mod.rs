//! Continuous scatterplots: the range-space pushforward of tetrahedral volume,
//! binned on a regular grid.
//!
//! Every bin holds *mass* (volume units): the volume of the domain whose
//! image falls into the bin. The sum over all bins equals the volume of the
//! contributing cells. Under the affine interpolant a tetrahedron maps onto a
//! triangle or quadrilateral footprint carrying a piecewise-linear density;
//! [`splat`] integrates that density exactly over the bins it covers.

pub mod export;
pub mod render;
mod splat;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{BivariateField, RangePoint};
use crate::segmentation::Segmentation;
use crate::tet::Tetrahedralization;
use crate::{Error, Result};

pub use render::{csp_png, render_csp, RgbaImage};

/// Default histogram resolution per axis.
pub const DEFAULT_RESOLUTION: usize = 1000;
/// Relative padding of the automatic window.
pub const AUTO_PADDING: f64 = 0.02;

/// Range-space extent and resolution of a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeWindow {
    pub s1: [f64; 2],
    pub s2: [f64; 2],
    pub bins: [usize; 2],
}

impl RangeWindow {
    pub fn new(s1: [f64; 2], s2: [f64; 2], bins: [usize; 2]) -> Result<Self> {
        for (name, r) in [("s1", s1), ("s2", s2)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::InvalidWindow(format!(
                    "{name} range [{}, {}] must satisfy min < max",
                    r[0], r[1]
                )));
            }
        }
        if bins.iter().any(|&b| b < 2) {
            return Err(Error::InvalidWindow(format!(
                "resolution {bins:?} must be at least 2 per axis"
            )));
        }
        Ok(Self { s1, s2, bins })
    }

    /// Tight min/max of the selected cells' vertex values, unpadded.
    pub fn tight(
        field: &BivariateField,
        tets: &Tetrahedralization,
        cells: Option<&[usize]>,
        bins: [usize; 2],
    ) -> Result<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut grow = |p: RangePoint| {
            lo[0] = lo[0].min(p.s1);
            lo[1] = lo[1].min(p.s2);
            hi[0] = hi[0].max(p.s1);
            hi[1] = hi[1].max(p.s2);
        };
        match cells {
            None => (0..field.grid().vertex_count()).for_each(|v| grow(field.at(v))),
            Some(cells) => {
                for &t in cells {
                    for v in tets.tet(t) {
                        grow(field.at(v as usize));
                    }
                }
            }
        }
        if !lo[0].is_finite() {
            // no cells: any valid window will do
            return Self::new([0.0, 1.0], [0.0, 1.0], bins);
        }
        let widen = |lo: f64, hi: f64| {
            if hi > lo {
                [lo, hi]
            } else {
                let pad = 0.5 * lo.abs().max(1e-6);
                [lo - pad, hi + pad]
            }
        };
        Self::new(widen(lo[0], hi[0]), widen(lo[1], hi[1]), bins)
    }

    /// Tight window padded by [`AUTO_PADDING`] of the extent on every side.
    pub fn auto(
        field: &BivariateField,
        tets: &Tetrahedralization,
        cells: Option<&[usize]>,
        bins: [usize; 2],
    ) -> Result<Self> {
        let t = Self::tight(field, tets, cells, bins)?;
        Ok(t.padded(AUTO_PADDING))
    }

    pub fn padded(&self, fraction: f64) -> Self {
        let pad = |r: [f64; 2]| {
            let d = (r[1] - r[0]) * fraction;
            [r[0] - d, r[1] + d]
        };
        Self {
            s1: pad(self.s1),
            s2: pad(self.s2),
            bins: self.bins,
        }
    }

    pub fn with_bins(&self, bins: [usize; 2]) -> Result<Self> {
        Self::new(self.s1, self.s2, bins)
    }

    pub fn bin_count(&self) -> usize {
        self.bins[0] * self.bins[1]
    }

    pub fn bin_size(&self) -> [f64; 2] {
        [
            (self.s1[1] - self.s1[0]) / self.bins[0] as f64,
            (self.s2[1] - self.s2[0]) / self.bins[1] as f64,
        ]
    }

    pub fn bin_area(&self) -> f64 {
        let [dx, dy] = self.bin_size();
        dx * dy
    }

    #[inline]
    pub fn bin_center(&self, ix: usize, iy: usize) -> RangePoint {
        let [dx, dy] = self.bin_size();
        RangePoint::new(
            self.s1[0] + (ix as f64 + 0.5) * dx,
            self.s2[0] + (iy as f64 + 0.5) * dy,
        )
    }

    /// Linear bin index `ix + bins_x · iy`.
    #[inline]
    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        ix + self.bins[0] * iy
    }

    /// Bin containing `p`, clamped to the border; the flag reports clamping.
    pub fn bin_of(&self, p: RangePoint) -> ((usize, usize), bool) {
        let [dx, dy] = self.bin_size();
        let u = (p.s1 - self.s1[0]) / dx;
        let v = (p.s2 - self.s2[0]) / dy;
        let clamp = |c: f64, n: usize| -> (usize, bool) {
            if c < 0.0 {
                (0, true)
            } else if c >= n as f64 {
                // the max edge itself belongs to the last bin
                (n - 1, c > n as f64)
            } else {
                (c as usize, false)
            }
        };
        let (ix, cx) = clamp(u, self.bins[0]);
        let (iy, cy) = clamp(v, self.bins[1]);
        ((ix, iy), cx || cy)
    }

    pub fn contains(&self, p: RangePoint) -> bool {
        p.s1 >= self.s1[0] && p.s1 <= self.s1[1] && p.s2 >= self.s2[0] && p.s2 <= self.s2[1]
    }

    pub fn diagonal(&self) -> f64 {
        (self.s1[1] - self.s1[0]).hypot(self.s2[1] - self.s2[0])
    }
}

/// What a histogram was computed from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    /// `None` for the whole domain.
    pub segment: Option<String>,
    /// Lens applied on top, if any.
    pub lens: Option<String>,
}

impl Provenance {
    pub fn label(&self) -> String {
        let seg = self.segment.as_deref().unwrap_or("whole");
        match &self.lens {
            Some(l) => format!("{seg}/{l}"),
            None => seg.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspHistogram {
    pub window: RangeWindow,
    /// `bins_x · bins_y` masses, x fastest.
    pub mass: Vec<f64>,
    pub provenance: Provenance,
    /// Set when part of the image fell outside the window and was clamped
    /// into border bins.
    pub clamped: bool,
}

impl CspHistogram {
    pub fn zeros(window: RangeWindow) -> Self {
        Self {
            window,
            mass: vec![0.0; window.bin_count()],
            provenance: Provenance::default(),
            clamped: false,
        }
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = crate::quadrature::CompensatedSum::default();
        self.mass.iter().for_each(|&m| acc.add(m));
        acc.value()
    }

    #[inline]
    pub fn mass_at(&self, ix: usize, iy: usize) -> f64 {
        self.mass[self.window.flat(ix, iy)]
    }

    /// Mass per unit range-space area.
    pub fn density_at(&self, ix: usize, iy: usize) -> f64 {
        self.mass_at(ix, iy) / self.window.bin_area()
    }

    /// Iterates `(ix, iy, center, mass)`.
    pub fn bins(&self) -> impl Iterator<Item = (usize, usize, RangePoint, f64)> + '_ {
        let nx = self.window.bins[0];
        self.mass.iter().enumerate().map(move |(i, &m)| {
            let (ix, iy) = (i % nx, i / nx);
            (ix, iy, self.window.bin_center(ix, iy), m)
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.mass.iter_mut().for_each(|m| *m *= factor);
        out
    }

    /// Binwise sum; windows must match.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.window != other.window {
            return Err(Error::InvalidWindow("cannot add histograms over different windows".into()));
        }
        let mut out = self.clone();
        out.mass
            .iter_mut()
            .zip(&other.mass)
            .for_each(|(a, b)| *a += b);
        out.clamped |= other.clamped;
        Ok(out)
    }

    /// Merges `factor × factor` blocks of bins.
    pub fn rebin(&self, factor: usize) -> Result<Self> {
        let [nx, ny] = self.window.bins;
        if factor == 0 || nx % factor != 0 || ny % factor != 0 {
            return Err(Error::InvalidWindow(format!(
                "resolution {nx}x{ny} is not divisible by {factor}"
            )));
        }
        let window = self.window.with_bins([nx / factor, ny / factor])?;
        let mut out = Self::zeros(window);
        for iy in 0..ny {
            for ix in 0..nx {
                out.mass[window.flat(ix / factor, iy / factor)] += self.mass_at(ix, iy);
            }
        }
        out.provenance = self.provenance.clone();
        out.clamped = self.clamped;
        Ok(out)
    }
}

/// Number of partial histograms; fixed so results do not depend on the
/// thread count.
const PARTIALS: usize = 8;
/// Below this many cells a single partial is used.
const MIN_CELLS_PER_PARTIAL: usize = 4096;

/// Pushes the volume of the selected tetrahedra (all when `cells` is `None`)
/// into a histogram over `window`.
pub fn compute_csp(
    field: &BivariateField,
    tets: &Tetrahedralization,
    window: &RangeWindow,
    cells: Option<&[usize]>,
) -> CspHistogram {
    let count = cells.map_or(tets.len(), <[usize]>::len);
    let cell_at = |i: usize| cells.map_or(i, |c| c[i]);
    let parts = if count < MIN_CELLS_PER_PARTIAL { 1 } else { PARTIALS };
    let chunk = count.div_ceil(parts).max(1);
    let vol = tets.tet_volume();

    let partials: Vec<(Vec<f64>, bool)> = (0..parts)
        .into_par_iter()
        .map(|p| {
            let mut mass = vec![0.0; window.bin_count()];
            let mut splatter = splat::Splatter::new(window, &mut mass);
            for i in (p * chunk)..((p + 1) * chunk).min(count) {
                let tet = tets.tet(cell_at(i));
                let q = tet.map(|v| field.at(v as usize).to_array());
                splatter.deposit_tet(q, vol);
            }
            let clamped = splatter.clamped();
            (mass, clamped)
        })
        .collect();

    let mut out = CspHistogram::zeros(*window);
    for (mass, clamped) in partials {
        out.clamped |= clamped;
        out.mass.iter_mut().zip(&mass).for_each(|(a, b)| *a += b);
    }
    out
}

/// CSP of the field restricted to one subgroup's cells.
pub fn peel_csp(
    field: &BivariateField,
    tets: &Tetrahedralization,
    seg: &Segmentation,
    subgroup: &str,
    window: &RangeWindow,
) -> Result<CspHistogram> {
    let cells = seg.cells_named(subgroup)?;
    let mut h = compute_csp(field, tets, window, cells.as_deref());
    if cells.is_some() {
        h.provenance.segment = Some(subgroup.to_string());
    }
    Ok(h)
}
