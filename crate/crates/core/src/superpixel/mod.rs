//! Superpixel generators: SLIC on the RGB rendering, or seeded region
//! growing over a precomputed pixel-affinity raster.

mod connectivity;
mod lab;
mod slic;
mod watershed;

pub use connectivity::enforce_connectivity;
pub use lab::srgb_to_lab;
pub use slic::{slic, SlicConfig};
pub use watershed::{affinity_superpixels, boundary_cost, grow_regions, AffinityConfig};

use crate::error::{Error, Result};
use crate::raster::{AffinityMap, RgbImage};

/// Hand-crafted affinities `exp(-d^2 / (2 sigma^2))` from the L*a*b*
/// distance `d` between neighbouring pixels. A stand-in for learned
/// affinities when none are available.
pub fn affinity_from_rgb(image: &RgbImage, sigma: f64) -> Result<AffinityMap> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig { what: "affinity", reason: format!("sigma must be positive, got {sigma}") });
    }
    let dims = image.dims();
    let lab: Vec<[f64; 3]> = image.pixels().iter().map(|&p| srgb_to_lab(p)).collect();
    let edge = |a: usize, b: usize| {
        let d2: f64 = (0..3).map(|i| (lab[a][i] - lab[b][i]).powi(2)).sum();
        (-d2 / (2.0 * sigma * sigma)).exp() as f32
    };
    let mut right = vec![0.0f32; dims.len()];
    let mut down = vec![0.0f32; dims.len()];
    for p in 0..dims.len() {
        let (r, c) = dims.coords(p);
        if c + 1 < dims.width {
            right[p] = edge(p, p + 1);
        }
        if r + 1 < dims.height {
            down[p] = edge(p, p + dims.width);
        }
    }
    AffinityMap::new(dims.height, dims.width, right, down)
}

#[cfg(test)]
pub(crate) mod testing {
    use std::collections::VecDeque;

    use crate::raster::SuperpixelMap;

    /// Full partition, contiguous ids, and each segment 4-connected (BFS).
    pub fn assert_valid_partition(sp: &SuperpixelMap) {
        let dims = sp.dims();
        let sizes = sp.segment_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), dims.len());
        assert!(sizes.iter().all(|&s| s > 0));
        let mut visited = vec![false; dims.len()];
        let mut seen_segment = vec![false; sp.num_segments()];
        for start in 0..dims.len() {
            if visited[start] {
                continue;
            }
            let id = sp.get(start);
            assert!(!seen_segment[id as usize], "segment {id} is not connected");
            seen_segment[id as usize] = true;
            let mut queue = VecDeque::from([start]);
            visited[start] = true;
            while let Some(p) = queue.pop_front() {
                dims.for_each_neighbor(p, |q| {
                    if !visited[q] && sp.get(q) == id {
                        visited[q] = true;
                        queue.push_back(q);
                    }
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affinity_is_one_on_flat_colour_and_drops_at_edges() {
        let mut pixels = vec![[50, 50, 50]; 6];
        pixels[2] = [250, 10, 10];
        pixels[5] = [250, 10, 10];
        let image = RgbImage::new(2, 3, pixels).unwrap();
        let aff = affinity_from_rgb(&image, 10.0).unwrap();
        assert_eq!(aff.right()[0], 1.0);
        assert!(aff.right()[1] < 1e-6);
        assert_eq!(aff.down()[2], 1.0);
    }
}
