//! Domain rasters shared by every stage of the pipeline.
//!
//! All types are immutable once built. Constructors check the invariants,
//! so a value in hand is always valid.

use crate::error::{Error, Result};

/// Height and width of a raster, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub height: usize,
    pub width: usize,
}

impl Dims {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.width, index % self.width)
    }

    pub(crate) fn location(&self, index: usize) -> String {
        let (r, c) = self.coords(index);
        format!("({r}, {c})")
    }

    pub(crate) fn check(&self, what: &str, other: Dims) -> Result<()> {
        if *self != other {
            return Err(Error::dims(what, (self.height, self.width), (other.height, other.width)));
        }
        Ok(())
    }

    /// Calls `f` with every 4-neighbour of `index`, in the order up, left, right, down.
    #[inline]
    pub fn for_each_neighbor(&self, index: usize, mut f: impl FnMut(usize)) {
        let (r, c) = self.coords(index);
        if r > 0 {
            f(index - self.width);
        }
        if c > 0 {
            f(index - 1);
        }
        if c + 1 < self.width {
            f(index + 1);
        }
        if r + 1 < self.height {
            f(index + self.width);
        }
    }

    fn require_nonempty(&self, what: &'static str) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidConfig {
                what,
                reason: format!("dimensions must be at least 1x1, got {}x{}", self.height, self.width),
            });
        }
        Ok(())
    }
}

/// Hyperspectral cube stored band-sequentially: band-major, row-major within a band.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    dims: Dims,
    bands: usize,
    data: Vec<f32>,
}

impl HyperCube {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f32>) -> Result<Self> {
        let dims = Dims::new(height, width);
        dims.require_nonempty("cube")?;
        if bands == 0 {
            return Err(Error::InvalidConfig { what: "cube", reason: "band count must be at least 1".into() });
        }
        let expected = dims.len() * bands;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "cube data length".into(),
                expected: expected.to_string(),
                found: data.len().to_string(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let band = pos / dims.len();
            return Err(Error::NonFiniteValue {
                field: "cube",
                location: format!("band {band}, pixel {}", dims.location(pos % dims.len())),
                value: data[pos],
            });
        }
        Ok(Self { dims, bands, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn band(&self, band: usize) -> &[f32] {
        let n = self.dims.len();
        &self.data[band * n..(band + 1) * n]
    }

    pub fn value(&self, band: usize, row: usize, col: usize) -> f32 {
        self.data[band * self.dims.len() + self.dims.index(row, col)]
    }

    /// Spectrum of one pixel, gathered across bands.
    pub fn spectrum(&self, pixel: usize) -> Vec<f32> {
        let n = self.dims.len();
        (0..self.bands).map(|b| self.data[b * n + pixel]).collect()
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Result<Self> {
        HyperCube::new(self.height(), self.width(), self.bands, self.data.iter().map(|v| v * factor).collect())
    }
}

/// Ground-truth raster. `0` marks an unlabeled pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    dims: Dims,
    labels: Vec<u16>,
    num_classes: u16,
}

impl LabelMap {
    /// `num_classes` is taken to be the largest label present.
    pub fn new(height: usize, width: usize, labels: Vec<u16>) -> Result<Self> {
        let dims = Dims::new(height, width);
        dims.require_nonempty("label map")?;
        if labels.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                what: "label map data length".into(),
                expected: dims.len().to_string(),
                found: labels.len().to_string(),
            });
        }
        let num_classes = labels.iter().copied().max().unwrap_or(0);
        Ok(Self { dims, labels, num_classes })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    pub fn get(&self, pixel: usize) -> u16 {
        self.labels[pixel]
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// Pixel count per class, index 0 holding the unlabeled count.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes as usize + 1];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// Predicted class raster. Every pixel carries a class in `1..=num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    dims: Dims,
    classes: Vec<u16>,
    num_classes: u16,
}

impl ClassMap {
    pub fn new(height: usize, width: usize, classes: Vec<u16>, num_classes: u16) -> Result<Self> {
        let dims = Dims::new(height, width);
        dims.require_nonempty("class map")?;
        if classes.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                what: "class map data length".into(),
                expected: dims.len().to_string(),
                found: classes.len().to_string(),
            });
        }
        if let Some(pos) = classes.iter().position(|&c| c == 0 || c > num_classes) {
            return Err(Error::LabelOutOfRange {
                field: "class map",
                location: dims.location(pos),
                value: classes[pos] as u32,
                max: num_classes as u32,
            });
        }
        Ok(Self { dims, classes, num_classes })
    }

    /// Ground truth used as a prediction. Fails if any pixel is unlabeled.
    pub fn from_labels(labels: &LabelMap) -> Result<Self> {
        ClassMap::new(labels.dims.height, labels.dims.width, labels.labels.clone(), labels.num_classes)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn classes(&self) -> &[u16] {
        &self.classes
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    pub fn get(&self, pixel: usize) -> u16 {
        self.classes[pixel]
    }
}

/// Partition of the raster into segments `0..num_segments`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    dims: Dims,
    segment_ids: Vec<u32>,
    num_segments: usize,
}

impl SuperpixelMap {
    /// Checks that ids are contiguous and every id is used.
    pub fn new(height: usize, width: usize, segment_ids: Vec<u32>) -> Result<Self> {
        let dims = Dims::new(height, width);
        dims.require_nonempty("superpixel map")?;
        if segment_ids.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                what: "superpixel map data length".into(),
                expected: dims.len().to_string(),
                found: segment_ids.len().to_string(),
            });
        }
        let num_segments = segment_ids.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut seen = vec![false; num_segments];
        for &id in &segment_ids {
            seen[id as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::EmptySegment { segment: missing });
        }
        Ok(Self { dims, segment_ids, num_segments })
    }

    /// Renumbers arbitrary ids to `0..k` in order of first appearance.
    pub fn from_arbitrary_ids(height: usize, width: usize, ids: &[u32]) -> Result<Self> {
        let mut remap = std::collections::HashMap::new();
        let compact = ids
            .iter()
            .map(|&id| {
                let next = remap.len() as u32;
                *remap.entry(id).or_insert(next)
            })
            .collect();
        SuperpixelMap::new(height, width, compact)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn segment_ids(&self) -> &[u32] {
        &self.segment_ids
    }

    pub fn num_segments(&self) -> usize {
        self.num_segments
    }

    pub fn get(&self, pixel: usize) -> u32 {
        self.segment_ids[pixel]
    }

    pub fn segment_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_segments];
        for &id in &self.segment_ids {
            sizes[id as usize] += 1;
        }
        sizes
    }
}

/// 8-bit RGB image, interleaved row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    dims: Dims,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        let dims = Dims::new(height, width);
        dims.require_nonempty("rgb image")?;
        if pixels.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                what: "rgb image data length".into(),
                expected: dims.len().to_string(),
                found: pixels.len().to_string(),
            });
        }
        Ok(Self { dims, pixels })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, pixel: usize) -> [u8; 3] {
        self.pixels[pixel]
    }
}

/// Affinities between each pixel and its right and lower neighbours.
///
/// Entries in the last column of `right` and the last row of `down` have no
/// neighbour and are ignored, but must still lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMap {
    dims: Dims,
    right: Vec<f32>,
    down: Vec<f32>,
}

impl AffinityMap {
    pub fn new(height: usize, width: usize, right: Vec<f32>, down: Vec<f32>) -> Result<Self> {
        let dims = Dims::new(height, width);
        dims.require_nonempty("affinity map")?;
        for (name, plane) in [("right affinity", &right), ("down affinity", &down)] {
            if plane.len() != dims.len() {
                return Err(Error::DimensionMismatch {
                    what: format!("{name} plane length"),
                    expected: dims.len().to_string(),
                    found: plane.len().to_string(),
                });
            }
        }
        for (field, plane) in [("right affinity", &right), ("down affinity", &down)] {
            if let Some(pos) = plane.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidConfig {
                    what: "affinity map",
                    reason: format!("{field} {} at {} is outside [0, 1]", plane[pos], dims.location(pos)),
                });
            }
        }
        Ok(Self { dims, right, down })
    }

    /// Uniform affinity everywhere.
    pub fn constant(height: usize, width: usize, value: f32) -> Result<Self> {
        let n = height * width;
        AffinityMap::new(height, width, vec![value; n], vec![value; n])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn right(&self) -> &[f32] {
        &self.right
    }

    pub fn down(&self) -> &[f32] {
        &self.down
    }

    /// Affinity of the edge between two 4-adjacent pixels.
    pub fn between(&self, a: usize, b: usize) -> f32 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi == lo + 1 {
            self.right[lo]
        } else {
            debug_assert_eq!(hi, lo + self.dims.width);
            self.down[lo]
        }
    }
}

/// Boolean selection of pixels, such as a train or test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    dims: Dims,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        let dims = Dims::new(height, width);
        dims.require_nonempty("pixel mask")?;
        if bits.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                what: "mask data length".into(),
                expected: dims.len().to_string(),
                found: bits.len().to_string(),
            });
        }
        Ok(Self { dims, bits })
    }

    pub fn empty(dims: Dims) -> Self {
        Self { dims, bits: vec![false; dims.len()] }
    }

    /// Every labeled pixel of `labels`.
    pub fn labeled(labels: &LabelMap) -> Self {
        Self { dims: labels.dims(), bits: labels.labels().iter().map(|&l| l != 0).collect() }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, pixel: usize) -> bool {
        self.bits[pixel]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub(crate) fn set(&mut self, pixel: usize, value: bool) {
        self.bits[pixel] = value;
    }

    /// Fails if the mask selects any unlabeled pixel.
    pub fn check_labeled(&self, labels: &LabelMap) -> Result<()> {
        labels.dims().check("mask", self.dims)?;
        if let Some(pos) = self.indices().find(|&p| labels.get(p) == 0) {
            return Err(Error::InvalidConfig {
                what: "mask",
                reason: format!("selects unlabeled pixel at {}", self.dims.location(pos)),
            });
        }
        Ok(())
    }
}

/// Checks a cube and its ground truth against each other.
pub fn validate(cube: &HyperCube, labels: &LabelMap) -> Result<()> {
    cube.dims().check("label map vs. cube", labels.dims())?;
    if let Some(pos) = cube.data().iter().position(|v| !v.is_finite()) {
        let n = cube.dims().len();
        return Err(Error::NonFiniteValue {
            field: "cube",
            location: format!("band {}, pixel {}", pos / n, cube.dims().location(pos % n)),
            value: cube.data()[pos],
        });
    }
    if let Some(pos) = labels.labels().iter().position(|&l| l > labels.num_classes()) {
        return Err(Error::LabelOutOfRange {
            field: "label map",
            location: labels.dims().location(pos),
            value: labels.get(pos) as u32,
            max: labels.num_classes() as u32,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_indian_pines_shape() {
        let (h, w, b) = (145, 145, 200);
        let cube = HyperCube::new(h, w, b, vec![0.5; h * w * b]).unwrap();
        let labels: Vec<u16> = (0..h * w).map(|i| (i % 17) as u16).collect();
        let labels = LabelMap::new(h, w, labels).unwrap();
        assert_eq!(labels.num_classes(), 16);
        validate(&cube, &labels).unwrap();
    }

    #[test]
    fn validate_accepts_fully_unlabeled() {
        let cube = HyperCube::new(2, 2, 1, vec![0.0; 4]).unwrap();
        let labels = LabelMap::new(2, 2, vec![0; 4]).unwrap();
        assert_eq!(labels.num_classes(), 0);
        validate(&cube, &labels).unwrap();
    }

    #[test]
    fn validate_rejects_mismatched_dims() {
        let cube = HyperCube::new(2, 2, 1, vec![0.0; 4]).unwrap();
        let labels = LabelMap::new(3, 3, vec![0; 9]).unwrap();
        let err = validate(&cube, &labels).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
    }

    #[test]
    fn cube_rejects_nan_and_names_location() {
        let mut data = vec![0.0; 8];
        data[5] = f32::NAN;
        let err = HyperCube::new(2, 2, 2, data).unwrap_err();
        match err {
            Error::NonFiniteValue { location, .. } => assert_eq!(location, "band 1, pixel (0, 1)"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn class_map_must_be_total() {
        let err = ClassMap::new(1, 2, vec![1, 0], 2).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { value: 0, .. }));
        assert!(ClassMap::new(1, 2, vec![1, 3], 2).is_err());
    }

    #[test]
    fn superpixel_ids_must_be_contiguous() {
        assert!(matches!(SuperpixelMap::new(1, 3, vec![0, 2, 2]).unwrap_err(), Error::EmptySegment { segment: 1 }));
        let sp = SuperpixelMap::from_arbitrary_ids(1, 3, &[7, 2, 7]).unwrap();
        assert_eq!(sp.segment_ids(), &[0, 1, 0]);
        assert_eq!(sp.segment_sizes().iter().sum::<usize>(), 3);
    }

    #[test]
    fn affinity_range_is_checked() {
        assert!(AffinityMap::new(1, 2, vec![0.5, 1.5], vec![0.0, 0.0]).is_err());
        let aff = AffinityMap::new(2, 2, vec![0.1, 0.0, 0.2, 0.0], vec![0.3, 0.4, 0.0, 0.0]).unwrap();
        assert_eq!(aff.between(1, 0), 0.1);
        assert_eq!(aff.between(1, 3), 0.4);
    }

    #[test]
    fn neighbour_order_is_fixed() {
        let d = Dims::new(3, 3);
        let mut seen = vec![];
        d.for_each_neighbor(4, |n| seen.push(n));
        assert_eq!(seen, vec![1, 3, 5, 7]);
        seen.clear();
        d.for_each_neighbor(0, |n| seen.push(n));
        assert_eq!(seen, vec![1, 3]);
    }
}
