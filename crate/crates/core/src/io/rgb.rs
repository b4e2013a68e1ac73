use crate::error::{Error, Result};
use crate::raster::{HyperCube, RgbImage};

/// Lower and upper clipping percentiles applied per band.
pub const CLIP_PERCENTILES: (f64, f64) = (2.0, 98.0);

/// Band indices used for the red, green and blue channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RgbBands {
    pub red: usize,
    pub green: usize,
    pub blue: usize,
}

impl RgbBands {
    pub fn new(red: usize, green: usize, blue: usize) -> Self {
        Self { red, green, blue }
    }

    /// Default choice for a cube with `bands` bands: 30%, 15% and 5% of the
    /// way through the band list. A 200-band cube uses (60, 30, 10) and a
    /// 103-band cube (30, 15, 5).
    pub fn default_for(bands: usize) -> Self {
        Self { red: bands * 3 / 10, green: bands * 3 / 20, blue: bands / 20 }
    }
}

/// Linear-interpolated percentile of sorted values (`p` in 0..=100).
pub(crate) fn percentile_sorted(sorted: &[f32], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * frac
}

/// Scales one band to 8 bits after clipping to its 2nd-98th percentile.
/// A band with no spread after clipping maps to mid-grey (128).
fn scale_band(values: &[f32]) -> Vec<u8> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f32::total_cmp);
    let lo = percentile_sorted(&sorted, CLIP_PERCENTILES.0);
    let hi = percentile_sorted(&sorted, CLIP_PERCENTILES.1);
    if hi <= lo {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|&v| {
            let t = ((v as f64).clamp(lo, hi) - lo) / (hi - lo);
            (t * 255.0).round() as u8
        })
        .collect()
}

pub fn cube_to_rgb(cube: &HyperCube, bands: RgbBands) -> Result<RgbImage> {
    for index in [bands.red, bands.green, bands.blue] {
        if index >= cube.bands() {
            return Err(Error::BandOutOfRange { index, bands: cube.bands() });
        }
    }
    let r = scale_band(cube.band(bands.red));
    let g = scale_band(cube.band(bands.green));
    let b = scale_band(cube.band(bands.blue));
    let pixels = (0..r.len()).map(|i| [r[i], g[i], b[i]]).collect();
    RgbImage::new(cube.height(), cube.width(), pixels)
}
