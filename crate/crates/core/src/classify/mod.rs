//! Per-pixel classifiers producing a total [`ClassMap`].
//!
//! Two trainable baselines share the feature pipeline in [`features`]; a map
//! produced by any external classifier can enter through [`import_classmap`].

mod centroid;
mod features;
mod model_file;
mod softmax;

use std::path::Path;

use rayon::prelude::*;

pub use centroid::{train_centroid, CentroidModel};
pub use features::{extract_features, BandStats, FeatureConfig, FeatureMatrix};
pub use model_file::{Model, TrainedModel, MODEL_MAGIC};
pub use softmax::{loss_and_gradient, train_softmax, SoftmaxHyper, SoftmaxModel, TrainReport};

use crate::error::{Error, Result};
use crate::io;
use crate::raster::{ClassMap, Dims, LabelMap, PixelMask};

pub trait PixelClassifier {
    fn num_classes(&self) -> u16;
    fn num_features(&self) -> usize;
    /// Class id in `1..=num_classes` for one feature row.
    fn classify_row(&self, row: &[f32]) -> u16;
}

/// `(row, class)` for each training pixel, in raster order.
pub(crate) fn training_rows(
    features: &FeatureMatrix,
    labels: &LabelMap,
    train: &PixelMask,
) -> Result<Vec<(usize, u16)>> {
    labels.dims().check("train mask vs. labels", train.dims())?;
    if features.rows() != labels.dims().len() {
        return Err(Error::DimensionMismatch {
            what: "feature rows vs. pixels".into(),
            expected: labels.dims().len().to_string(),
            found: features.rows().to_string(),
        });
    }
    train.check_labeled(labels)?;
    if labels.num_classes() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(train.indices().map(|p| (p, labels.get(p))).collect())
}

/// Classifies every pixel. Rows are independent, so the result does not
/// depend on how the work is split across threads.
pub fn predict<M: PixelClassifier + Sync + ?Sized>(
    model: &M,
    features: &FeatureMatrix,
    dims: Dims,
) -> Result<ClassMap> {
    if features.cols() != model.num_features() {
        return Err(Error::DimensionMismatch {
            what: "feature width vs. model".into(),
            expected: model.num_features().to_string(),
            found: features.cols().to_string(),
        });
    }
    if features.rows() != dims.len() {
        return Err(Error::DimensionMismatch {
            what: "feature rows vs. pixels".into(),
            expected: dims.len().to_string(),
            found: features.rows().to_string(),
        });
    }
    let classes: Vec<u16> = (0..features.rows()).into_par_iter().map(|p| model.classify_row(features.row(p))).collect();
    ClassMap::new(dims.height, dims.width, classes, model.num_classes())
}

/// Loads an externally produced prediction and checks it against the ground truth grid.
pub fn import_classmap(path: impl AsRef<Path>, labels: &LabelMap) -> Result<ClassMap> {
    let map = io::read_classmap(path)?;
    check_import(&map, labels)?;
    Ok(map)
}

pub(crate) fn check_import(map: &ClassMap, labels: &LabelMap) -> Result<()> {
    labels.dims().check("imported class map vs. labels", map.dims())?;
    let max = labels.num_classes();
    if let Some(pos) = map.classes().iter().position(|&c| c > max) {
        return Err(Error::LabelOutOfRange {
            field: "imported class map",
            location: format!("{:?}", map.dims().coords(pos)),
            value: map.get(pos) as u32,
            max: max as u32,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::HyperCube;

    #[test]
    fn predict_checks_width() {
        let model = CentroidModel::from_centroids(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let f = FeatureMatrix::new(2, 3, vec![0.0; 6]).unwrap();
        assert!(matches!(predict(&model, &f, Dims::new(1, 2)).unwrap_err(), Error::DimensionMismatch { .. }));
    }

    #[test]
    fn pixel_on_centroid() {
        let model = CentroidModel::from_centroids(1, vec![0.0, 10.0, 20.0, 30.0]).unwrap();
        let f = FeatureMatrix::new(3, 1, vec![20.0, 0.0, 29.0]).unwrap();
        assert_eq!(predict(&model, &f, Dims::new(1, 3)).unwrap().classes(), &[3, 1, 4]);
    }

    #[test]
    fn centroid_predictions_ignore_reflectance_scale() {
        let (h, w, b) = (6, 6, 4);
        let data: Vec<f32> = (0..h * w * b).map(|i| ((i * 7919) % 97) as f32 + 1.0).collect();
        let cube = HyperCube::new(h, w, b, data).unwrap();
        let labels: Vec<u16> = (0..h * w).map(|i| (i % 3 + 1) as u16).collect();
        let labels = LabelMap::new(h, w, labels).unwrap();
        let train = PixelMask::new(h, w, (0..h * w).map(|i| i % 2 == 0).collect()).unwrap();
        let config = FeatureConfig { patch_radius: 1, standardize: true };
        let run = |cube: &HyperCube| {
            let stats = BandStats::from_mask(cube, &train).unwrap();
            let f = extract_features(cube, &config, Some(&stats)).unwrap();
            let model = train_centroid(&f, &labels, &train).unwrap();
            predict(&model, &f, cube.dims()).unwrap()
        };
        let base = run(&cube);
        // Powers of two scale f32 values exactly.
        assert_eq!(run(&cube.scaled(4.0).unwrap()), base);
        assert_eq!(run(&cube.scaled(0.125).unwrap()), base);
    }

    #[test]
    fn import_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.hsp");
        let labels = LabelMap::new(2, 2, vec![1, 2, 0, 2]).unwrap();
        let z = ClassMap::new(2, 2, vec![1, 2, 2, 2], 2).unwrap();
        io::write_classmap(&z, &path).unwrap();
        assert_eq!(import_classmap(&path, &labels).unwrap(), z);

        let other = LabelMap::new(1, 4, vec![1, 2, 0, 2]).unwrap();
        assert!(matches!(import_classmap(&path, &other).unwrap_err(), Error::DimensionMismatch { .. }));
        let one_class = LabelMap::new(2, 2, vec![1, 1, 0, 1]).unwrap();
        assert!(matches!(import_classmap(&path, &one_class).unwrap_err(), Error::LabelOutOfRange { value: 2, .. }));
    }
}
