//! Density images of histograms.

use super::CspHistogram;
use crate::{Error, Result};

/// Compression constant of the log scale: `t = ln(1 + K d) / ln(1 + K)`.
pub const LOG_SCALE_K: f64 = 1.0e4;

const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// Viridis color for `t` in `[0, 1]`.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    [0, 1, 2].map(|c| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8)
}

/// RGBA8 image, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl RgbaImage {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        let o = 4 * (x + self.width * y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2], self.pixels[o + 3]]
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
            w.write_image_data(&self.pixels)
                .map_err(|e| Error::Png(e.to_string()))?;
        }
        Ok(buf)
    }
}

/// One pixel per bin; the top row holds the largest `s2`. Bins without
/// positive mass are white.
pub fn render_csp(h: &CspHistogram, log_scale: bool) -> RgbaImage {
    let [nx, ny] = h.window.bins;
    let dmax = h.mass.iter().cloned().fold(0.0, f64::max);
    let mut pixels = vec![255u8; 4 * nx * ny];
    if dmax > 0.0 {
        let norm = LOG_SCALE_K.ln_1p();
        for iy in 0..ny {
            let row = ny - 1 - iy;
            for ix in 0..nx {
                let m = h.mass_at(ix, iy);
                if !(m > 0.0) {
                    continue;
                }
                let r = m / dmax;
                let t = if log_scale { (LOG_SCALE_K * r).ln_1p() / norm } else { r };
                let c = colormap(t);
                let o = 4 * (ix + nx * row);
                pixels[o..o + 3].copy_from_slice(&c);
            }
        }
    }
    RgbaImage {
        width: nx,
        height: ny,
        pixels,
    }
}

/// Renders and encodes in one step.
pub fn csp_png(h: &CspHistogram, log_scale: bool) -> Result<Vec<u8>> {
    render_csp(h, log_scale).encode_png()
}
