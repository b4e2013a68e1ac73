//! Superpixels from a pixel-affinity raster by seeded region growing.
//!
//! Candidate seeds sit at the midpoints (rounded down) of a
//! `ceil(sqrt(n H / W))` by `ceil(sqrt(n W / H))` grid of cells. Only the `n`
//! candidates with the lowest boundary cost are kept, where a pixel's
//! boundary cost is one minus the mean affinity of its 4-neighbour edges
//! (ties to the lower pixel index). Regions then grow from the seeds over
//! the 4-connected graph: the next pixel claimed is always the unassigned
//! pixel reachable over the highest-affinity edge, ties going to the lower
//! pixel index and then the lower segment id.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::raster::{AffinityMap, SuperpixelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffinityConfig {
    pub n: usize,
    /// Recorded with the run; seed placement is deterministic.
    pub seed: u64,
}

impl AffinityConfig {
    pub fn with_n(n: usize) -> Self {
        Self { n, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Frontier {
    affinity: f32,
    pixel: usize,
    segment: u32,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // Max-heap order: highest affinity, then lowest pixel, then lowest segment.
    fn cmp(&self, other: &Self) -> Ordering {
        self.affinity
            .total_cmp(&other.affinity)
            .then_with(|| other.pixel.cmp(&self.pixel))
            .then_with(|| other.segment.cmp(&self.segment))
    }
}

/// One minus the mean affinity of each pixel's edges. A 1x1 image has cost 0.
pub fn boundary_cost(aff: &AffinityMap) -> Vec<f64> {
    let dims = aff.dims();
    (0..dims.len())
        .map(|p| {
            let mut sum = 0.0;
            let mut n = 0;
            dims.for_each_neighbor(p, |q| {
                sum += aff.between(p, q) as f64;
                n += 1;
            });
            if n == 0 {
                0.0
            } else {
                1.0 - sum / n as f64
            }
        })
        .collect()
}

fn seed_positions(aff: &AffinityMap, n: usize) -> Vec<usize> {
    let dims = aff.dims();
    let (h, w) = (dims.height, dims.width);
    let rows = ((n as f64 * h as f64 / w as f64).sqrt().ceil() as usize).clamp(1, h);
    let mut cols = ((n as f64 * w as f64 / h as f64).sqrt().ceil() as usize).clamp(1, w);
    if rows * cols < n {
        cols = n.div_ceil(rows).min(w);
    }
    let mut candidates = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let (r0, r1) = (i * h / rows, (i + 1) * h / rows);
        for j in 0..cols {
            let (c0, c1) = (j * w / cols, (j + 1) * w / cols);
            candidates.push(dims.index((r0 + r1 - 1) / 2, (c0 + c1 - 1) / 2));
        }
    }
    let cost = boundary_cost(aff);
    candidates.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
    candidates.truncate(n);
    candidates.sort_unstable();
    candidates
}

/// Grows one region per seed; segment `k` is the region of `seeds[k]`.
pub fn grow_regions(aff: &AffinityMap, seeds: &[usize]) -> Result<SuperpixelMap> {
    let dims = aff.dims();
    if seeds.is_empty() {
        return Err(Error::InvalidConfig { what: "region growing", reason: "at least one seed is required".into() });
    }
    const UNASSIGNED: u32 = u32::MAX;
    let mut ids = vec![UNASSIGNED; dims.len()];
    let mut heap = BinaryHeap::new();
    for (k, &s) in seeds.iter().enumerate() {
        if s >= dims.len() || ids[s] != UNASSIGNED {
            return Err(Error::InvalidConfig {
                what: "region growing",
                reason: format!("seed {s} is out of range or repeated"),
            });
        }
        ids[s] = k as u32;
    }
    for &s in seeds {
        dims.for_each_neighbor(s, |q| {
            if ids[q] == UNASSIGNED {
                heap.push(Frontier { affinity: aff.between(s, q), pixel: q, segment: ids[s] });
            }
        });
    }
    while let Some(Frontier { pixel, segment, .. }) = heap.pop() {
        if ids[pixel] != UNASSIGNED {
            continue;
        }
        ids[pixel] = segment;
        dims.for_each_neighbor(pixel, |q| {
            if ids[q] == UNASSIGNED {
                heap.push(Frontier { affinity: aff.between(pixel, q), pixel: q, segment });
            }
        });
    }
    debug_assert!(ids.iter().all(|&id| id != UNASSIGNED));
    SuperpixelMap::new(dims.height, dims.width, ids)
}

pub fn affinity_superpixels(aff: &AffinityMap, config: &AffinityConfig) -> Result<SuperpixelMap> {
    let pixels = aff.dims().len();
    if config.n > pixels {
        return Err(Error::TooManySuperpixels { requested: config.n, pixels });
    }
    if config.n == 0 {
        return Err(Error::InvalidConfig { what: "affinity superpixels", reason: "n must be at least 1".into() });
    }
    grow_regions(aff, &seed_positions(aff, config.n))
}
