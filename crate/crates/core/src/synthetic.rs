//! Deterministic synthetic hyperspectral scenes.
//!
//! A scene is a Voronoi tiling of the image into fields. Each field is
//! assigned a class (or left as unlabeled background), and labels are placed
//! on the field interiors so that every class gets exactly its requested
//! number of labeled pixels. Spectra are smooth curves shared by a family of
//! related classes plus a small class-specific offset, modulated per field,
//! by spatially correlated nuisance terms and by white noise.

use crate::error::{Error, Result};
use crate::raster::{AffinityMap, Dims, HyperCube, LabelMap};
use crate::rng::SplitMix64;

/// Labeled-pixel counts of the 16 classes of the Indian Pines ground truth.
pub const INDIAN_PINES_CLASS_SIZES: [usize; 16] =
    [46, 1428, 830, 237, 483, 730, 28, 478, 20, 972, 2455, 593, 205, 1265, 386, 93];

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    /// Labeled pixels wanted for classes `1..=len`.
    pub class_sizes: Vec<usize>,
    /// Number of Voronoi fields.
    pub fields: usize,
    /// Classes per spectral family; classes in a family look alike.
    pub family_size: usize,
    /// Spread between classes of one family, relative to the signal range.
    pub class_separation: f64,
    /// Per-field spectral drift, relative to the signal range.
    pub field_variation: f64,
    /// Amplitude of the spatially smooth nuisance terms.
    pub nuisance: f64,
    /// Correlation length of the nuisance terms, in pixels.
    pub nuisance_scale: usize,
    /// Mean white noise standard deviation over the bands, relative to the
    /// signal range.
    pub noise: f64,
    pub seed: u64,
}

impl SceneConfig {
    /// 145 x 145 pixels, 200 bands and the Indian Pines class sizes.
    pub fn indian_pines_like(seed: u64) -> Self {
        Self {
            height: 145,
            width: 145,
            bands: 200,
            class_sizes: INDIAN_PINES_CLASS_SIZES.to_vec(),
            fields: 72,
            family_size: 3,
            class_separation: 0.05,
            field_variation: 0.04,
            nuisance: 0.06,
            nuisance_scale: 6,
            noise: 0.08,
            seed,
        }
    }

    /// A small scene for demos and quick tests. Errors are dominated by
    /// pixel noise, so a few hundred SLIC segments improve a spectral-only map.
    pub fn small(seed: u64) -> Self {
        Self {
            height: 72,
            width: 96,
            bands: 32,
            class_sizes: vec![420, 300, 520, 260, 380, 340],
            fields: 28,
            family_size: 2,
            class_separation: 0.2,
            field_variation: 0.01,
            nuisance: 0.01,
            nuisance_scale: 5,
            noise: 0.1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidConfig { what: "synthetic scene", reason });
        if self.height < 4 || self.width < 4 || self.bands == 0 {
            return bad(format!("{}x{}x{} is too small", self.height, self.width, self.bands));
        }
        if self.class_sizes.is_empty() || self.class_sizes.len() > u16::MAX as usize - 1 {
            return bad("class_sizes must list between 1 and 65534 classes".into());
        }
        if self.class_sizes.contains(&0) {
            return bad("every class needs at least one labeled pixel".into());
        }
        if self.fields < self.class_sizes.len() || self.fields > self.height * self.width {
            return bad(format!("need between {} and {} fields", self.class_sizes.len(), self.height * self.width));
        }
        if self.family_size == 0 || self.nuisance_scale == 0 {
            return bad("family_size and nuisance_scale must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cube: HyperCube,
    pub labels: LabelMap,
    /// Field id of every pixel.
    pub fields: Vec<u32>,
    /// Class of every field, 0 for background.
    pub field_class: Vec<u16>,
}

/// Smooth random curve over `bands` samples: a sum of Gaussian bumps.
fn smooth_curve(rng: &mut SplitMix64, bands: usize, bumps: usize, amplitude: f64) -> Vec<f64> {
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            let center = rng.next_f64();
            let width = 0.05 + 0.15 * rng.next_f64();
            let height = amplitude * (2.0 * rng.next_f64() - 1.0);
            (center, width, height)
        })
        .collect();
    (0..bands)
        .map(|b| {
            let t = if bands > 1 { b as f64 / (bands - 1) as f64 } else { 0.5 };
            params.iter().map(|(c, w, h)| h * (-((t - c) / w).powi(2) / 2.0).exp()).sum()
        })
        .collect()
}

/// Vegetation-like reflectance: low visible response, a red edge, then a
/// plateau with absorption dips. Values roughly in `[0.05, 0.6]`.
fn family_signature(rng: &mut SplitMix64, bands: usize) -> Vec<f64> {
    let base = 0.05 + 0.1 * rng.next_f64();
    let edge_at = 0.15 + 0.2 * rng.next_f64();
    let edge_height = 0.1 + 0.4 * rng.next_f64();
    let slope = 0.1 * (2.0 * rng.next_f64() - 1.0);
    let dips = smooth_curve(rng, bands, 3, 0.08);
    (0..bands)
        .map(|b| {
            let t = if bands > 1 { b as f64 / (bands - 1) as f64 } else { 0.5 };
            let edge = edge_height / (1.0 + (-(t - edge_at) * 40.0).exp());
            (base + edge + slope * t - dips[b].abs()).max(0.01)
        })
        .collect()
}

/// Bilinearly interpolated Gaussian lattice with spacing `scale`.
fn smooth_field(rng: &mut SplitMix64, dims: Dims, scale: usize) -> Vec<f64> {
    let gh = dims.height / scale + 2;
    let gw = dims.width / scale + 2;
    let grid: Vec<f64> = (0..gh * gw).map(|_| rng.next_gaussian()).collect();
    (0..dims.len())
        .map(|p| {
            let (r, c) = dims.coords(p);
            let (y, x) = (r as f64 / scale as f64, c as f64 / scale as f64);
            let (i, j) = (y as usize, x as usize);
            let (fy, fx) = (y - i as f64, x - j as f64);
            let g = |a: usize, b: usize| grid[a * gw + b];
            (1.0 - fy) * ((1.0 - fx) * g(i, j) + fx * g(i, j + 1))
                + fy * ((1.0 - fx) * g(i + 1, j) + fx * g(i + 1, j + 1))
        })
        .collect()
}

fn voronoi(rng: &mut SplitMix64, dims: Dims, count: usize) -> Vec<u32> {
    let seeds: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            let r = rng.next_f64() * dims.height as f64;
            let c = rng.next_f64() * dims.width as f64;
            // Mild anisotropy gives elongated, plot-like fields.
            let stretch = 0.6 + 0.8 * rng.next_f64();
            (r, c, stretch)
        })
        .collect();
    (0..dims.len())
        .map(|p| {
            let (r, c) = dims.coords(p);
            let mut best = (f64::INFINITY, 0u32);
            for (k, &(sr, sc, stretch)) in seeds.iter().enumerate() {
                let d = ((r as f64 - sr) * stretch).powi(2) + ((c as f64 - sc) / stretch).powi(2);
                if d < best.0 {
                    best = (d, k as u32);
                }
            }
            best.1
        })
        .collect()
}

/// Pixels whose 8 neighbours all lie in the same field (image edges count
/// as interior).
fn interior(dims: Dims, fields: &[u32]) -> Vec<bool> {
    (0..dims.len())
        .map(|p| {
            let (r, c) = dims.coords(p);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                    if rr < 0 || cc < 0 || rr >= dims.height as i64 || cc >= dims.width as i64 {
                        continue;
                    }
                    if fields[rr as usize * dims.width + cc as usize] != fields[p] {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

/// Greedy field-to-class assignment, largest classes first. Each class takes
/// the smallest free field that covers its remaining need, or the largest
/// free field when none does.
fn assign_classes(sizes: &[usize], capacity: &[usize]) -> Option<Vec<u16>> {
    let mut field_class = vec![0u16; capacity.len()];
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    for class in order {
        let mut need = sizes[class] as i64;
        while need > 0 {
            let free = || (0..capacity.len()).filter(|&f| field_class[f] == 0 && capacity[f] > 0);
            let pick = free()
                .filter(|&f| capacity[f] as i64 >= need)
                .min_by_key(|&f| (capacity[f], f))
                .or_else(|| free().max_by_key(|&f| (capacity[f], usize::MAX - f)))?;
            field_class[pick] = class as u16 + 1;
            need -= capacity[pick] as i64;
        }
    }
    Some(field_class)
}

pub fn generate_scene(config: &SceneConfig) -> Result<Scene> {
    config.validate()?;
    let dims = Dims::new(config.height, config.width);
    let bands = config.bands;
    let num_classes = config.class_sizes.len();

    let mut layout_rng = SplitMix64::derive(config.seed, 1);
    let fields = voronoi(&mut layout_rng, dims, config.fields);
    let inner = interior(dims, &fields);
    let mut capacity = vec![0usize; config.fields];
    for p in 0..dims.len() {
        if inner[p] {
            capacity[fields[p] as usize] += 1;
        }
    }
    let field_class = assign_classes(&config.class_sizes, &capacity).ok_or_else(|| Error::InvalidConfig {
        what: "synthetic scene",
        reason: "fields are too small for the requested class sizes".into(),
    })?;

    // Field seeds for distance ranking: the mean position of each field.
    let mut centre = vec![(0.0f64, 0.0f64, 0usize); config.fields];
    for (p, &f) in fields.iter().enumerate() {
        let (r, c) = dims.coords(p);
        let e = &mut centre[f as usize];
        e.0 += r as f64;
        e.1 += c as f64;
        e.2 += 1;
    }
    let mut labels = vec![0u16; dims.len()];
    for class in 1..=num_classes as u16 {
        let mut candidates: Vec<(f64, usize)> = (0..dims.len())
            .filter(|&p| inner[p] && field_class[fields[p] as usize] == class)
            .map(|p| {
                let (r, c) = dims.coords(p);
                let e = centre[fields[p] as usize];
                let (cr, cc) = (e.0 / e.2 as f64, e.1 / e.2 as f64);
                ((r as f64 - cr).powi(2) + (c as f64 - cc).powi(2), p)
            })
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, p) in candidates.iter().take(config.class_sizes[class as usize - 1]) {
            labels[p] = class;
        }
    }

    let mut spectral_rng = SplitMix64::derive(config.seed, 2);
    let families = num_classes.div_ceil(config.family_size);
    let family_curves: Vec<Vec<f64>> = (0..families).map(|_| family_signature(&mut spectral_rng, bands)).collect();
    let class_curves: Vec<Vec<f64>> = (0..num_classes)
        .map(|c| {
            let offset = smooth_curve(&mut spectral_rng, bands, 4, config.class_separation);
            family_curves[c / config.family_size].iter().zip(&offset).map(|(a, b)| (a + b).max(0.01)).collect()
        })
        .collect();
    let background_curves: Vec<Vec<f64>> = (0..3).map(|_| family_signature(&mut spectral_rng, bands)).collect();
    let field_curves: Vec<Vec<f64>> = (0..config.fields)
        .map(|f| {
            let base = match field_class[f] {
                0 => &background_curves[f % background_curves.len()],
                c => &class_curves[c as usize - 1],
            };
            let gain = 1.0 + config.field_variation * spectral_rng.next_gaussian();
            let drift = smooth_curve(&mut spectral_rng, bands, 3, config.field_variation);
            base.iter().zip(&drift).map(|(b, d)| (b * gain + d).max(0.0)).collect()
        })
        .collect();

    let mut nuisance_rng = SplitMix64::derive(config.seed, 3);
    let nuisance_shapes: Vec<Vec<f64>> = (0..3).map(|_| smooth_curve(&mut nuisance_rng, bands, 3, 1.0)).collect();
    let nuisance_maps: Vec<Vec<f64>> =
        (0..3).map(|_| smooth_field(&mut nuisance_rng, dims, config.nuisance_scale)).collect();
    let illumination = smooth_field(&mut nuisance_rng, dims, config.nuisance_scale * 3);

    // Sensor noise grows quadratically across the spectrum, from nothing at
    // the first band to three times `noise` at the last, so visible bands stay
    // comparatively clean.
    let noise_gain: Vec<f64> =
        (0..bands).map(|b| if bands > 1 { 3.0 * (b as f64 / (bands - 1) as f64).powi(2) } else { 1.0 }).collect();
    let mut noise_rng = SplitMix64::derive(config.seed, 4);
    let mut data = vec![0.0f32; dims.len() * bands];
    for b in 0..bands {
        for p in 0..dims.len() {
            let mut v = field_curves[fields[p] as usize][b] * (1.0 + 0.5 * config.nuisance * illumination[p]);
            for k in 0..3 {
                v += config.nuisance * nuisance_shapes[k][b] * nuisance_maps[k][p];
            }
            v += config.noise * noise_gain[b] * noise_rng.next_gaussian();
            // Scaled to sensor-like digital numbers.
            data[b * dims.len() + p] = (1000.0 + 8000.0 * v) as f32;
        }
    }

    Ok(Scene {
        cube: HyperCube::new(dims.height, dims.width, bands, data)?,
        labels: LabelMap::new(dims.height, dims.width, labels)?,
        fields,
        field_class,
    })
}

/// Affinities that are high inside fields and low across field borders,
/// jittered by `noise`, the kind a boundary-aware network would emit.
pub fn field_affinity(scene: &Scene, noise: f64, seed: u64) -> Result<AffinityMap> {
    let dims = scene.cube.dims();
    let mut rng = SplitMix64::new(seed);
    let mut edge = |same: bool| {
        let base = if same { 0.9 } else { 0.1 };
        (base + noise * (2.0 * rng.next_f64() - 1.0)).clamp(0.0, 1.0) as f32
    };
    let mut right = vec![0.0f32; dims.len()];
    let mut down = vec![0.0f32; dims.len()];
    for p in 0..dims.len() {
        let (r, c) = dims.coords(p);
        if c + 1 < dims.width {
            right[p] = edge(scene.fields[p] == scene.fields[p + 1]);
        }
        if r + 1 < dims.height {
            down[p] = edge(scene.fields[p] == scene.fields[p + dims.width]);
        }
    }
    AffinityMap::new(dims.height, dims.width, right, down)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indian_pines_like_has_exact_class_sizes() {
        let scene = generate_scene(&SceneConfig::indian_pines_like(7)).unwrap();
        assert_eq!(scene.cube.bands(), 200);
        assert_eq!(scene.cube.dims(), Dims::new(145, 145));
        let hist = scene.labels.class_histogram();
        assert_eq!(&hist[1..], &INDIAN_PINES_CLASS_SIZES);
        assert_eq!(scene.labels.labeled_count(), 10249);
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = generate_scene(&SceneConfig::small(1)).unwrap();
        assert_eq!(a, generate_scene(&SceneConfig::small(1)).unwrap());
        assert_ne!(a.cube, generate_scene(&SceneConfig::small(2)).unwrap().cube);
    }

    #[test]
    fn labels_lie_on_their_fields() {
        let scene = generate_scene(&SceneConfig::small(3)).unwrap();
        for (p, &l) in scene.labels.labels().iter().enumerate() {
            if l > 0 {
                assert_eq!(scene.field_class[scene.fields[p] as usize], l);
            }
        }
    }

    #[test]
    fn assignment_covers_needs() {
        let capacity = [50, 10, 30, 5, 40];
        let fc = assign_classes(&[60, 5, 20], &capacity).unwrap();
        for (class, need) in [(1u16, 60usize), (2, 5), (3, 20)] {
            let got: usize = (0..5).filter(|&f| fc[f] == class).map(|f| capacity[f]).sum();
            assert!(got >= need);
        }
        assert!(assign_classes(&[200], &capacity).is_none());
    }

    #[test]
    fn affinity_drops_across_fields() {
        let scene = generate_scene(&SceneConfig::small(4)).unwrap();
        let aff = field_affinity(&scene, 0.05, 0).unwrap();
        let w = scene.cube.width();
        for p in 0..scene.fields.len() {
            if p % w + 1 < w {
                let same = scene.fields[p] == scene.fields[p + 1];
                assert_eq!(aff.right()[p] > 0.5, same);
            }
        }
    }
}
