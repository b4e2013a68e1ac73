//! SLIC: localized k-means over (L, a, b, x, y).
//!
//! With `N` pixels and `n` requested superpixels the grid step is
//! `S = sqrt(N / n)`. The image is cut into a grid of about `n` cells
//! following its aspect ratio, with row boundaries at `floor(i * H / rows)`
//! and likewise for columns; each center starts at its cell's midpoint and moves
//! to the lowest-gradient pixel of the 3x3 neighbourhood (restricted to the
//! cell) when that pixel's gradient is strictly lower than the midpoint's.
//! Each iteration assigns every pixel to the nearest center, under
//! `D^2 = d_lab^2 + (m / S)^2 d_xy^2`, among centers of the surrounding 5x5
//! cells that lie within `S` of the pixel on both axes (ties to the lower
//! center index; pixels with no candidate keep their label), then moves each
//! center to the mean of its pixels.

use rayon::prelude::*;

use super::connectivity::enforce_connectivity;
use super::lab::srgb_to_lab;
use crate::error::{Error, Result};
use crate::raster::{RgbImage, SuperpixelMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicConfig {
    /// Requested number of superpixels.
    pub n: usize,
    pub compactness: f64,
    pub iterations: usize,
    /// Recorded with the run; initialization and updates are deterministic
    /// and do not draw on it.
    pub seed: u64,
}

impl Default for SlicConfig {
    fn default() -> Self {
        Self { n: 10_000, compactness: 10.0, iterations: 10, seed: 0 }
    }
}

impl SlicConfig {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    fn validate(&self, pixels: usize) -> Result<()> {
        if self.n > pixels {
            return Err(Error::TooManySuperpixels { requested: self.n, pixels });
        }
        let bad = |reason: String| Err(Error::InvalidConfig { what: "slic", reason });
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return bad(format!("compactness must be positive, got {}", self.compactness));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Center {
    lab: [f64; 3],
    y: f64,
    x: f64,
}

/// Cell boundaries `floor(i * len / parts)` for `i in 0..=parts`.
fn bounds(len: usize, parts: usize) -> Vec<usize> {
    (0..=parts).map(|i| i * len / parts).collect()
}

/// The shorter axis gets `round(sqrt(n * short / long))` cells and the
/// longer one `round(n / short_cells)`, so the cell count stays close to `n`.
fn grid_shape(n: usize, h: usize, w: usize) -> (usize, usize) {
    let split = |short: usize, long: usize| {
        let a = ((n as f64 * short as f64 / long as f64).sqrt().round() as usize).clamp(1, short);
        let b = ((n as f64 / a as f64).round() as usize).clamp(1, long);
        (a, b)
    };
    if h <= w {
        split(h, w)
    } else {
        let (cols, rows) = split(w, h);
        (rows, cols)
    }
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

pub fn slic(image: &RgbImage, config: &SlicConfig) -> Result<SuperpixelMap> {
    let dims = image.dims();
    let (h, w) = (dims.height, dims.width);
    config.validate(dims.len())?;

    let lab: Vec<[f64; 3]> = image.pixels().par_iter().map(|&p| srgb_to_lab(p)).collect();
    let gradient: Vec<f64> = (0..dims.len())
        .into_par_iter()
        .map(|p| {
            let (r, c) = dims.coords(p);
            let at = |rr: usize, cc: usize| &lab[rr * w + cc];
            let gx = dist2(at(r, (c + 1).min(w - 1)), at(r, c.saturating_sub(1)));
            let gy = dist2(at((r + 1).min(h - 1), c), at(r.saturating_sub(1), c));
            gx + gy
        })
        .collect();

    let step = (dims.len() as f64 / config.n as f64).sqrt();
    let (rows, cols) = grid_shape(config.n, h, w);
    let row_bounds = bounds(h, rows);
    let col_bounds = bounds(w, cols);

    let mut centers = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (r0, r1) = (row_bounds[i], row_bounds[i + 1]);
            let (c0, c1) = (col_bounds[j], col_bounds[j + 1]);
            let mut y = (r0 + r1 - 1) as f64 / 2.0;
            let mut x = (c0 + c1 - 1) as f64 / 2.0;
            let (py, px) = (y.round() as usize, x.round() as usize);
            let mut best = (gradient[py * w + px], py, px);
            let mut moved = false;
            for rr in py.saturating_sub(1).max(r0)..(py + 2).min(r1) {
                for cc in px.saturating_sub(1).max(c0)..(px + 2).min(c1) {
                    if gradient[rr * w + cc] < best.0 {
                        best = (gradient[rr * w + cc], rr, cc);
                        moved = true;
                    }
                }
            }
            if moved {
                y = best.1 as f64;
                x = best.2 as f64;
            }
            centers.push(Center { lab: lab[best.1 * w + best.2], y, x });
        }
    }

    let row_cell: Vec<usize> = (0..h).map(|r| row_bounds.partition_point(|&b| b <= r) - 1).collect();
    let col_cell: Vec<usize> = (0..w).map(|c| col_bounds.partition_point(|&b| b <= c) - 1).collect();
    let mut labels: Vec<u32> = (0..dims.len())
        .map(|p| {
            let (r, c) = dims.coords(p);
            (row_cell[r] * cols + col_cell[c]) as u32
        })
        .collect();

    let spatial_weight = (config.compactness / step).powi(2);
    for _ in 0..config.iterations {
        labels.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
            let ci = row_cell[r];
            for (c, label) in row.iter_mut().enumerate() {
                let cj = col_cell[c];
                let p = r * w + c;
                let mut best = (f64::INFINITY, *label);
                for i in ci.saturating_sub(2)..(ci + 3).min(rows) {
                    for j in cj.saturating_sub(2)..(cj + 3).min(cols) {
                        let k = i * cols + j;
                        let center = &centers[k];
                        let dy = r as f64 - center.y;
                        let dx = c as f64 - center.x;
                        if dy.abs() > step || dx.abs() > step {
                            continue;
                        }
                        let d = dist2(&lab[p], &center.lab) + spatial_weight * (dx * dx + dy * dy);
                        if d < best.0 || (d == best.0 && (k as u32) < best.1) {
                            best = (d, k as u32);
                        }
                    }
                }
                *label = best.1;
            }
        });

        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (p, &k) in labels.iter().enumerate() {
            let (r, c) = dims.coords(p);
            let s = &mut sums[k as usize];
            s[0] += lab[p][0];
            s[1] += lab[p][1];
            s[2] += lab[p][2];
            s[3] += r as f64;
            s[4] += c as f64;
            s[5] += 1.0;
        }
        for (center, s) in centers.iter_mut().zip(&sums) {
            if s[5] > 0.0 {
                center.lab = [s[0] / s[5], s[1] / s[5], s[2] / s[5]];
                center.y = s[3] / s[5];
                center.x = s[4] / s[5];
            }
        }
    }

    let raw = SuperpixelMap::from_arbitrary_ids(h, w, &labels)?;
    Ok(enforce_connectivity(&raw))
}
