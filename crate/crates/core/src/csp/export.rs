//! Tabular and binary histogram export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CspHistogram, Provenance, RangeWindow};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "bin_x,bin_y,s1_center,s2_center,mass";

/// One row per bin, x fastest.
pub fn to_csv(h: &CspHistogram) -> String {
    let mut s = String::with_capacity(h.mass.len() * 48);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for (ix, iy, c, m) in h.bins() {
        let _ = writeln!(s, "{ix},{iy},{},{},{}", c.s1, c.s2, m);
    }
    s
}

/// Sidecar describing the layout of [`to_binary`] output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryHeader {
    pub window: RangeWindow,
    pub dtype: String,
    pub order: String,
    pub provenance: Provenance,
    pub clamped: bool,
    pub total_mass: f64,
}

/// Little-endian `f64` masses plus a JSON sidecar.
pub fn to_binary(h: &CspHistogram) -> (Vec<u8>, String) {
    let mut bytes = Vec::with_capacity(8 * h.mass.len());
    for m in &h.mass {
        bytes.extend_from_slice(&m.to_le_bytes());
    }
    let header = BinaryHeader {
        window: h.window,
        dtype: "f64-le".into(),
        order: "x-fastest".into(),
        provenance: h.provenance.clone(),
        clamped: h.clamped,
        total_mass: h.total_mass(),
    };
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    (bytes, json)
}

pub fn from_binary(bytes: &[u8], sidecar: &str) -> Result<CspHistogram> {
    let header: BinaryHeader = serde_json::from_str(sidecar)?;
    let window = RangeWindow::new(header.window.s1, header.window.s2, header.window.bins)?;
    if bytes.len() != 8 * window.bin_count() {
        return Err(Error::InvalidWindow(format!(
            "{} bytes do not match {} bins",
            bytes.len(),
            window.bin_count()
        )));
    }
    let mass = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(CspHistogram {
        window,
        mass,
        provenance: header.provenance,
        clamped: header.clamped,
    })
}
