//! Δ quantification: `Δ = ∫ w(f(x)) dx` per subgroup.
//!
//! Two estimators are reported side by side. The histogram estimator rounds
//! every grid vertex's range value to its bin midpoint and weights it by the
//! vertex's share of cell volume. The exact estimator integrates `w ∘ f`
//! per tetrahedron with a degree-2 rule, exact for polynomial weights of
//! degree ≤ 2 under the affine interpolant.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csp::RangeWindow;
use crate::lens::LensMask;
use crate::model::{BivariateField, RangePoint};
use crate::quadrature::{integrate_tet, CompensatedSum};
use crate::segmentation::{Segmentation, WHOLE_DOMAIN};
use crate::tet::Tetrahedralization;
use crate::{Error, Result};

/// `c0 + c1 s1 + c2 s2 + c11 s1² + c12 s1 s2 + c22 s2²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Poly2 {
    pub c: [f64; 6],
}

impl Poly2 {
    pub const fn new(c: [f64; 6]) -> Self {
        Self { c }
    }

    #[inline]
    pub fn eval(&self, s1: f64, s2: f64) -> f64 {
        let c = &self.c;
        c[0] + c[1] * s1 + c[2] * s2 + c[3] * s1 * s1 + c[4] * s1 * s2 + c[5] * s2 * s2
    }

    #[inline]
    pub fn gradient(&self, s1: f64, s2: f64) -> [f64; 2] {
        let c = &self.c;
        [
            c[1] + 2.0 * c[3] * s1 + c[4] * s2,
            c[2] + c[4] * s1 + 2.0 * c[5] * s2,
        ]
    }

    /// Bound on `|w(p) - w(m)|` for `|p - m|` within half a bin of `m`.
    pub fn rounding_bound(&self, m: RangePoint, h: [f64; 2]) -> f64 {
        let g = self.gradient(m.s1, m.s2);
        let c = &self.c;
        let (a, b) = (0.5 * h[0], 0.5 * h[1]);
        g[0].abs() * a + g[1].abs() * b + c[3].abs() * a * a + c[4].abs() * a * b + c[5].abs() * b * b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Identity,
    Hole,
    Particle,
    /// `s1² - s2²`.
    DonorStrength,
    Poly(Poly2),
    /// Arbitrary mask; histogram estimator only.
    Mask(LensMask),
}

impl Weight {
    pub fn poly(&self) -> Option<Poly2> {
        Some(match self {
            Weight::Identity => Poly2::new([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Weight::Hole => Poly2::new([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            Weight::Particle => Poly2::new([0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            Weight::DonorStrength => Poly2::new([0.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            Weight::Poly(p) => *p,
            Weight::Mask(_) => return None,
        })
    }

    #[inline]
    pub fn eval(&self, p: RangePoint) -> f64 {
        match self {
            Weight::Mask(m) => m.eval(p),
            w => w.poly().map_or(0.0, |q| q.eval(p.s1, p.s2)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Weight::Identity => "identity".into(),
            Weight::Hole => "hole".into(),
            Weight::Particle => "particle".into(),
            Weight::DonorStrength => "donor_strength".into(),
            Weight::Poly(p) => format!(
                "poly:{}",
                p.c.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
            ),
            Weight::Mask(m) => format!("mask:{}", m.name()),
        }
    }
}

impl FromStr for Weight {
    type Err = Error;

    /// `identity`, `hole`, `particle`, `donor_strength`, or
    /// `poly:c0,c1,c2,c11,c12,c22`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Weight::Identity),
            "hole" => Ok(Weight::Hole),
            "particle" => Ok(Weight::Particle),
            "donor_strength" | "donor-strength" => Ok(Weight::DonorStrength),
            _ => {
                let body = s
                    .strip_prefix("poly:")
                    .ok_or_else(|| Error::InvalidLens(format!("unknown weight `{s}`")))?;
                let c: Vec<f64> = body
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidLens(format!("bad coefficient in `{s}`: {e}")))?;
                let c: [f64; 6] = c
                    .try_into()
                    .map_err(|_| Error::InvalidLens("poly weight needs 6 coefficients".into()))?;
                Ok(Weight::Poly(Poly2::new(c)))
            }
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Per-subgroup values (in segmentation order) and the whole-domain value.
#[derive(Debug, Clone, PartialEq)]
pub struct Deltas {
    pub subgroups: Vec<f64>,
    pub whole: f64,
}

/// Exact quadrature of `w ∘ f` per subgroup.
pub fn delta_exact(
    field: &BivariateField,
    tets: &Tetrahedralization,
    seg: &Segmentation,
    weight: &Weight,
) -> Result<Deltas> {
    let poly = weight.poly().ok_or_else(|| {
        Error::Unsupported(format!(
            "weight `{}` is not a polynomial; use the histogram estimator",
            weight.name()
        ))
    })?;
    let vol = tets.tet_volume();
    let labels = seg.cell_labels();
    let mut per = vec![CompensatedSum::default(); seg.subgroup_count()];
    let mut whole = CompensatedSum::default();
    for (t, tet) in tets.tets().iter().enumerate() {
        let q = tet.map(|v| field.at(v as usize).to_array());
        let x = integrate_tet(&q, vol, |s| poly.eval(s[0], s[1]));
        per[labels[t] as usize].add(x);
        whole.add(x);
    }
    Ok(Deltas {
        subgroups: per.iter().map(CompensatedSum::value).collect(),
        whole: whole.value(),
    })
}

/// Histogram estimate for one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramDelta {
    /// Samples rounded to bin midpoints.
    pub rounded: f64,
    /// Samples at their exact vertex values.
    pub vertex: f64,
    /// Bound on `|rounded - vertex|`; absent for non-polynomial weights.
    pub bound: Option<f64>,
}

#[derive(Default, Clone)]
struct HistAcc {
    bins: Vec<(usize, f64)>,
    vertex: CompensatedSum,
    bound: CompensatedSum,
}

impl HistAcc {
    fn finish(mut self, window: &RangeWindow, weight: &Weight, poly: bool) -> HistogramDelta {
        self.bins.sort_by_key(|b| b.0);
        let nx = window.bins[0];
        let mut rounded = CompensatedSum::default();
        let mut i = 0;
        while i < self.bins.len() {
            let b = self.bins[i].0;
            let mut mass = CompensatedSum::default();
            while i < self.bins.len() && self.bins[i].0 == b {
                mass.add(self.bins[i].1);
                i += 1;
            }
            rounded.add(mass.value() * weight.eval(window.bin_center(b % nx, b / nx)));
        }
        HistogramDelta {
            rounded: rounded.value(),
            vertex: self.vertex.value(),
            bound: poly.then(|| self.bound.value()),
        }
    }
}

/// Vertex-sample histogram estimate per subgroup over `window`.
pub fn delta_histogram(
    field: &BivariateField,
    seg: &Segmentation,
    weight: &Weight,
    window: &RangeWindow,
) -> (Vec<HistogramDelta>, HistogramDelta) {
    let grid = field.grid();
    let poly = weight.poly();
    let h = window.bin_size();
    let labels = seg.vertex_subgroups();
    let mut per = vec![HistAcc::default(); seg.subgroup_count()];
    let mut whole = HistAcc::default();
    for v in 0..grid.vertex_count() {
        let p = field.at(v);
        let share = grid.vertex_volume_share(v);
        let ((ix, iy), _) = window.bin_of(p);
        let b = window.flat(ix, iy);
        let exact = share * weight.eval(p);
        let bound = poly.map_or(0.0, |q| share * q.rounding_bound(window.bin_center(ix, iy), h));
        for acc in [&mut per[labels[v] as usize], &mut whole] {
            acc.bins.push((b, share));
            acc.vertex.add(exact);
            acc.bound.add(bound);
        }
    }
    let is_poly = poly.is_some();
    (
        per.into_iter().map(|a| a.finish(window, weight, is_poly)).collect(),
        whole.finish(window, weight, is_poly),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub name: String,
    pub delta_hist: f64,
    pub delta_exact: Option<f64>,
    /// Unrounded vertex-sample value.
    pub delta_vertex: f64,
    /// `delta_hist - delta_exact`.
    pub error: Option<f64>,
    /// `delta_hist - delta_vertex`.
    pub rounding_error: f64,
    pub rounding_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantReport {
    pub weight: String,
    pub resolution: [usize; 2],
    pub window: RangeWindow,
    /// Subgroup rows in segmentation order, then the whole domain.
    pub rows: Vec<DeltaRow>,
}

impl QuantReport {
    pub fn row(&self, name: &str) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn whole(&self) -> &DeltaRow {
        self.rows.last().expect("report has a whole-domain row")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Fixed-width text table.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let header = ["segment", "delta_hist", "delta_exact", "error", "bound"];
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    format!("{:.6}", r.delta_hist),
                    fmt(r.delta_exact),
                    fmt(r.error),
                    fmt(r.rounding_bound),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &body {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut s = String::new();
        let _ = writeln!(
            s,
            "weight {}  resolution {}x{}",
            self.weight, self.resolution[0], self.resolution[1]
        );
        let line = |s: &mut String, cells: &[&str]| {
            for (i, (c, w)) in cells.iter().zip(&width).enumerate() {
                if i == 0 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "  {c:>w$}");
                }
            }
            s.push('\n');
        };
        line(&mut s, &header);
        for row in &body {
            line(&mut s, &row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        s
    }
}

/// Both estimators per subgroup plus the whole domain, on the tight range
/// window of the full field at `resolution` bins per axis.
pub fn quantify(
    field: &BivariateField,
    tets: &Tetrahedralization,
    seg: &Segmentation,
    weight: &Weight,
    resolution: [usize; 2],
) -> Result<QuantReport> {
    let window = RangeWindow::tight(field, tets, None, resolution)?;
    let exact = match delta_exact(field, tets, seg, weight) {
        Ok(d) => Some(d),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let (hist, hist_whole) = delta_histogram(field, seg, weight, &window);
    let row = |name: &str, h: &HistogramDelta, e: Option<f64>| DeltaRow {
        name: name.to_string(),
        delta_hist: h.rounded,
        delta_exact: e,
        delta_vertex: h.vertex,
        error: e.map(|x| h.rounded - x),
        rounding_error: h.rounded - h.vertex,
        rounding_bound: h.bound,
    };
    let mut rows: Vec<DeltaRow> = seg
        .subgroup_names()
        .iter()
        .enumerate()
        .map(|(i, n)| row(n, &hist[i], exact.as_ref().map(|d| d.subgroups[i])))
        .collect();
    rows.push(row(WHOLE_DOMAIN, &hist_whole, exact.as_ref().map(|d| d.whole)));
    Ok(QuantReport {
        weight: weight.name(),
        resolution,
        window,
        rows,
    })
}
