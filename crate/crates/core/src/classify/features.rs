use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Dims, HyperCube, PixelMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Half-width of the square averaging window; 0 keeps the raw spectrum.
    pub patch_radius: usize,
    pub standardize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { patch_radius: 2, standardize: true }
    }
}

impl FeatureConfig {
    pub fn spectral() -> Self {
        Self { patch_radius: 0, standardize: true }
    }

    pub fn validate(&self, dims: Dims) -> Result<()> {
        let limit = dims.height.min(dims.width) / 2;
        if self.patch_radius > limit {
            return Err(Error::InvalidConfig {
                what: "feature config",
                reason: format!(
                    "patch radius {} exceeds {limit} for a {}x{} image",
                    self.patch_radius, dims.height, dims.width
                ),
            });
        }
        Ok(())
    }
}

/// Per-band mean and standard deviation, estimated from training pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStats {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

impl BandStats {
    /// Population statistics over the pixels selected by `mask`.
    /// Zero-variance bands get a standard deviation of 1.
    pub fn from_mask(cube: &HyperCube, mask: &PixelMask) -> Result<Self> {
        cube.dims().check("mask vs. cube", mask.dims())?;
        let pixels: Vec<usize> = mask.indices().collect();
        if pixels.is_empty() {
            return Err(Error::EmptyMask);
        }
        let n = pixels.len() as f64;
        let (mean, std) = (0..cube.bands())
            .into_par_iter()
            .map(|b| {
                let band = cube.band(b);
                let mean = pixels.iter().map(|&p| band[p] as f64).sum::<f64>() / n;
                let var = pixels
                    .iter()
                    .map(|&p| {
                        let d = band[p] as f64 - mean;
                        d * d
                    })
                    .sum::<f64>()
                    / n;
                let std = var.sqrt() as f32;
                (mean as f32, if std > 0.0 && std.is_finite() { std } else { 1.0 })
            })
            .unzip();
        Ok(Self { mean, std })
    }

    /// Statistics over every pixel of the cube.
    pub fn from_all(cube: &HyperCube) -> Result<Self> {
        let d = cube.dims();
        BandStats::from_mask(cube, &PixelMask::new(d.height, d.width, vec![true; d.len()])?)
    }
}

/// Dense row-major matrix with one row per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "feature matrix".into(),
                expected: format!("{rows}x{cols}"),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Mean over the `(2r+1)^2` window around each pixel, clipped at the border.
fn box_mean(values: &[f64], dims: Dims, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return values.to_vec();
    }
    let (h, w) = (dims.height, dims.width);
    let stride = w + 1;
    let mut integral = vec![0.0f64; (h + 1) * stride];
    for r in 0..h {
        let mut row_sum = 0.0;
        for c in 0..w {
            row_sum += values[r * w + c];
            integral[(r + 1) * stride + c + 1] = integral[r * stride + c + 1] + row_sum;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        let r0 = r.saturating_sub(radius);
        let r1 = (r + radius + 1).min(h);
        for c in 0..w {
            let c0 = c.saturating_sub(radius);
            let c1 = (c + radius + 1).min(w);
            let sum = integral[r1 * stride + c1] - integral[r0 * stride + c1] - integral[r1 * stride + c0]
                + integral[r0 * stride + c0];
            out[r * w + c] = sum / ((r1 - r0) * (c1 - c0)) as f64;
        }
    }
    out
}

/// Builds one feature row per pixel: the z-scored spectrum, averaged over
/// the patch window when `patch_radius > 0`.
///
/// Standardization requires `stats`, which should come from training pixels
/// only and be reused unchanged at prediction time.
pub fn extract_features(cube: &HyperCube, config: &FeatureConfig, stats: Option<&BandStats>) -> Result<FeatureMatrix> {
    let dims = cube.dims();
    config.validate(dims)?;
    let bands = cube.bands();
    let stats = match (config.standardize, stats) {
        (false, _) => None,
        (true, Some(s)) => {
            if s.mean.len() != bands || s.std.len() != bands {
                return Err(Error::DimensionMismatch {
                    what: "band statistics".into(),
                    expected: bands.to_string(),
                    found: s.mean.len().to_string(),
                });
            }
            Some(s)
        }
        (true, None) => {
            return Err(Error::InvalidConfig {
                what: "feature config",
                reason: "standardization needs band statistics from the training pixels".into(),
            })
        }
    };

    let planes: Vec<Vec<f64>> = (0..bands)
        .into_par_iter()
        .map(|b| {
            let band = cube.band(b);
            let z: Vec<f64> = match stats {
                Some(s) => {
                    let (m, sd) = (s.mean[b] as f64, s.std[b] as f64);
                    band.iter().map(|&v| (v as f64 - m) / sd).collect()
                }
                None => band.iter().map(|&v| v as f64).collect(),
            };
            box_mean(&z, dims, config.patch_radius)
        })
        .collect();

    let n = dims.len();
    let mut data = vec![0.0f32; n * bands];
    data.par_chunks_mut(bands).enumerate().for_each(|(p, row)| {
        for (b, v) in row.iter_mut().enumerate() {
            *v = planes[b][p] as f32;
        }
    });
    FeatureMatrix::new(n, bands, data)
}
