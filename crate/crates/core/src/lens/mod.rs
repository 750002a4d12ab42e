//! Range-space masks and the lens operator.
//!
//! A lens multiplies every bin's mass by a mask evaluated at the bin center.
//! The named masks are built from the squared field values: hole `s1²`,
//! particle `s2²`, and their differences. All masks are damped near the range
//! origin by a radial factor that is 0 inside `r0`, 1 beyond `1.25 r0`, and a
//! smoothstep in between.

pub mod contour;
pub mod expr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csp::{CspHistogram, RangeWindow};
use crate::model::RangePoint;
use crate::quadrature::CompensatedSum;
use crate::{Error, Result};

pub use contour::{contour_mask, ControlPolygon};
pub use expr::Expr;

/// Default origin-exclusion radius as a fraction of the window diagonal.
pub const DEFAULT_R0_FRACTION: f64 = 0.02;
/// Width of the exclusion ramp relative to `r0`.
pub const RAMP_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LensKind {
    Identity,
    Hole,
    Particle,
    ChargeTransfer,
    Donor,
    Acceptor,
    Custom,
}

impl LensKind {
    pub const NAMED: [LensKind; 6] = [
        LensKind::Identity,
        LensKind::Hole,
        LensKind::Particle,
        LensKind::ChargeTransfer,
        LensKind::Donor,
        LensKind::Acceptor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LensKind::Identity => "identity",
            LensKind::Hole => "hole",
            LensKind::Particle => "particle",
            LensKind::ChargeTransfer => "charge_transfer",
            LensKind::Donor => "donor",
            LensKind::Acceptor => "acceptor",
            LensKind::Custom => "custom",
        }
    }
}

impl fmt::Display for LensKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LensKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => LensKind::Identity,
            "hole" => LensKind::Hole,
            "particle" => LensKind::Particle,
            "charge_transfer" | "charge-transfer" => LensKind::ChargeTransfer,
            "donor" => LensKind::Donor,
            "acceptor" => LensKind::Acceptor,
            "custom" => LensKind::Custom,
            _ => return Err(Error::InvalidLens(format!("unknown lens kind `{s}`"))),
        })
    }
}

/// A resolved mask function.
#[derive(Debug, Clone, PartialEq)]
pub struct LensMask {
    kind: LensKind,
    r0: f64,
    expr: Option<Expr>,
}

impl LensMask {
    pub fn new(kind: LensKind, r0: f64) -> Result<Self> {
        if kind == LensKind::Custom {
            return Err(Error::InvalidLens("custom lens needs an expression".into()));
        }
        Self::check_r0(r0)?;
        Ok(Self { kind, r0, expr: None })
    }

    pub fn custom(expr: &str, r0: f64) -> Result<Self> {
        Self::check_r0(r0)?;
        Ok(Self {
            kind: LensKind::Custom,
            r0,
            expr: Some(Expr::parse(expr)?),
        })
    }

    /// Identity without origin exclusion.
    pub fn identity() -> Self {
        Self {
            kind: LensKind::Identity,
            r0: 0.0,
            expr: None,
        }
    }

    fn check_r0(r0: f64) -> Result<()> {
        if r0.is_finite() && r0 >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidLens(format!("r0 must be finite and >= 0, got {r0}")))
        }
    }

    pub fn kind(&self) -> LensKind {
        self.kind
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    /// Name used for provenance and file names.
    pub fn name(&self) -> String {
        match &self.expr {
            Some(e) => format!("custom({e})"),
            None => self.kind.as_str().to_string(),
        }
    }

    /// Mask value before origin exclusion.
    #[inline]
    pub fn raw(&self, s1: f64, s2: f64) -> f64 {
        let (h, p) = (s1 * s1, s2 * s2);
        match self.kind {
            LensKind::Identity => 1.0,
            LensKind::Hole => h,
            LensKind::Particle => p,
            LensKind::ChargeTransfer => (h - p).abs(),
            LensKind::Donor => (h - p).max(0.0),
            LensKind::Acceptor => (p - h).max(0.0),
            LensKind::Custom => self.expr.as_ref().map_or(0.0, |e| e.eval(s1, s2)),
        }
    }

    #[inline]
    pub fn eval(&self, p: RangePoint) -> f64 {
        self.raw(p.s1, p.s2) * origin_factor(p.s1.hypot(p.s2), self.r0)
    }
}

/// Radial damping: 0 for `r <= r0`, 1 for `r >= 1.25 r0`, smoothstep between.
#[inline]
pub fn origin_factor(r: f64, r0: f64) -> f64 {
    if r0 <= 0.0 {
        return 1.0;
    }
    let t = (r - r0) / (RAMP_FRACTION * r0);
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * (3.0 - 2.0 * t)
    }
}

pub fn eval_mask(m: &LensMask, p: RangePoint) -> f64 {
    m.eval(p)
}

/// Serializable lens description; `r0` defaults relative to a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensSpec {
    pub kind: LensKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
}

impl LensSpec {
    pub fn named(kind: LensKind) -> Self {
        Self { kind, r0: None, expr: None }
    }

    pub fn resolve(&self, window: &RangeWindow) -> Result<LensMask> {
        let r0 = self.r0.unwrap_or(DEFAULT_R0_FRACTION * window.diagonal());
        match (self.kind, &self.expr) {
            (LensKind::Custom, Some(e)) => LensMask::custom(e, r0),
            (LensKind::Custom, None) => LensMask::new(LensKind::Custom, r0),
            (_, Some(_)) => Err(Error::InvalidLens(format!(
                "expression given for non-custom lens `{}`",
                self.kind
            ))),
            (k, None) => LensMask::new(k, r0),
        }
    }
}

/// Binwise product of mass and mask at the bin center.
pub fn apply_lens(h: &CspHistogram, m: &LensMask) -> CspHistogram {
    let mut out = h.clone();
    let nx = h.window.bins[0];
    for (i, mass) in out.mass.iter_mut().enumerate() {
        if *mass != 0.0 {
            *mass *= m.eval(h.window.bin_center(i % nx, i / nx));
        }
    }
    out.provenance.lens = Some(m.name());
    out
}

/// `Σ mass · mask(center)`.
pub fn quantify_lens(h: &CspHistogram, m: &LensMask) -> f64 {
    let nx = h.window.bins[0];
    let mut acc = CompensatedSum::default();
    for (i, &mass) in h.mass.iter().enumerate() {
        if mass != 0.0 {
            acc.add(mass * m.eval(h.window.bin_center(i % nx, i / nx)));
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s1: f64, s2: f64) -> RangePoint {
        RangePoint::new(s1, s2)
    }

    #[test]
    fn named_values() {
        let d = LensMask::new(LensKind::Donor, 0.0).unwrap();
        assert_eq!(d.eval(p(0.5, 0.0)), 0.25);
        let a = LensMask::new(LensKind::Acceptor, 0.0).unwrap();
        assert_eq!(a.eval(p(0.5, 0.0)), 0.0);
        let ct = LensMask::new(LensKind::ChargeTransfer, 0.0).unwrap();
        for v in [-2.0, 0.3, 7.0] {
            assert_eq!(ct.eval(p(v, v)), 0.0);
        }
        assert_eq!(LensMask::identity().eval(p(0.0, 0.0)), 1.0);
    }

    #[test]
    fn donor_minus_acceptor_is_difference_of_squares() {
        let d = LensMask::new(LensKind::Donor, 0.0).unwrap();
        let a = LensMask::new(LensKind::Acceptor, 0.0).unwrap();
        for i in -10..=10 {
            for j in -10..=10 {
                let q = p(i as f64 * 0.13, j as f64 * 0.07);
                assert_eq!(d.eval(q) - a.eval(q), q.s1 * q.s1 - q.s2 * q.s2);
            }
        }
    }

    #[test]
    fn origin_ramp() {
        assert_eq!(origin_factor(0.1, 0.1), 0.0);
        assert_eq!(origin_factor(0.125, 0.1), 1.0);
        assert!((origin_factor(0.1125, 0.1) - 0.5).abs() < 1e-12);
        assert_eq!(origin_factor(0.0, 0.0), 1.0);
    }

    #[test]
    fn spec_resolution() {
        let w = RangeWindow::new([0.0, 3.0], [0.0, 4.0], [10, 10]).unwrap();
        let m = LensSpec::named(LensKind::Hole).resolve(&w).unwrap();
        assert!((m.r0() - 0.1).abs() < 1e-12);
        let spec: LensSpec =
            serde_json::from_str(r#"{"kind":"custom","r0":0,"expr":"s1*s2"}"#).unwrap();
        let m = spec.resolve(&w).unwrap();
        assert_eq!(m.eval(p(2.0, 3.0)), 6.0);
        assert_eq!(m.name(), "custom(s1*s2)");
        let bad: LensSpec = serde_json::from_str(r#"{"kind":"donor","expr":"s1"}"#).unwrap();
        assert!(bad.resolve(&w).is_err());
        assert!(LensMask::new(LensKind::Hole, -1.0).is_err());
        assert_eq!("charge_transfer".parse::<LensKind>().unwrap(), LensKind::ChargeTransfer);
        assert!("nope".parse::<LensKind>().is_err());
    }

    #[test]
    fn lens_on_histogram() {
        let w = RangeWindow::new([-1.0, 1.0], [-1.0, 1.0], [4, 4]).unwrap();
        let mut h = CspHistogram::zeros(w);
        h.mass.iter_mut().enumerate().for_each(|(i, m)| *m = i as f64);
        assert_eq!(apply_lens(&h, &LensMask::identity()).mass, h.mass);
        let d = apply_lens(&h, &LensMask::new(LensKind::Donor, 0.1).unwrap());
        let a = apply_lens(&h, &LensMask::new(LensKind::Acceptor, 0.1).unwrap());
        let ct = apply_lens(&h, &LensMask::new(LensKind::ChargeTransfer, 0.1).unwrap());
        for i in 0..16 {
            assert!((d.mass[i] + a.mass[i] - ct.mass[i]).abs() <= 1e-12);
        }
        assert_eq!(d.provenance.lens.as_deref(), Some("donor"));
        let q = quantify_lens(&h, &LensMask::identity());
        assert_eq!(q, 120.0);
        assert_eq!(quantify_lens(&CspHistogram::zeros(w), &LensMask::identity()), 0.0);
    }
}
