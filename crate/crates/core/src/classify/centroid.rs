use crate::classify::{training_rows, FeatureMatrix, PixelClassifier};
use crate::error::{Error, Result};
use crate::raster::{LabelMap, PixelMask};

/// Nearest-centroid classifier: one mean feature vector per class.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    num_features: usize,
    /// Row `c - 1` is the centroid of class `c`.
    centroids: Vec<f32>,
}

impl CentroidModel {
    pub fn from_centroids(num_features: usize, centroids: Vec<f32>) -> Result<Self> {
        if num_features == 0 || centroids.is_empty() || !centroids.len().is_multiple_of(num_features) {
            return Err(Error::DimensionMismatch {
                what: "centroid table".into(),
                expected: format!("a multiple of {num_features}"),
                found: centroids.len().to_string(),
            });
        }
        Ok(Self { num_features, centroids })
    }

    pub fn centroid(&self, class: u16) -> &[f32] {
        let c = class as usize - 1;
        &self.centroids[c * self.num_features..(c + 1) * self.num_features]
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }
}

impl PixelClassifier for CentroidModel {
    fn num_classes(&self) -> u16 {
        (self.centroids.len() / self.num_features) as u16
    }

    fn num_features(&self) -> usize {
        self.num_features
    }

    /// Smallest squared Euclidean distance; ties go to the smaller class id.
    fn classify_row(&self, row: &[f32]) -> u16 {
        let mut best = (f64::INFINITY, 1u16);
        for (i, centroid) in self.centroids.chunks_exact(self.num_features).enumerate() {
            let d: f64 = row
                .iter()
                .zip(centroid)
                .map(|(&x, &m)| {
                    let diff = x as f64 - m as f64;
                    diff * diff
                })
                .sum();
            if d < best.0 {
                best = (d, i as u16 + 1);
            }
        }
        best.1
    }
}

pub fn train_centroid(features: &FeatureMatrix, labels: &LabelMap, train: &PixelMask) -> Result<CentroidModel> {
    let rows = training_rows(features, labels, train)?;
    let classes = labels.num_classes() as usize;
    let f = features.cols();
    let mut sums = vec![0.0f64; classes * f];
    let mut counts = vec![0usize; classes];
    for &(p, label) in &rows {
        let c = label as usize - 1;
        counts[c] += 1;
        for (s, &x) in sums[c * f..(c + 1) * f].iter_mut().zip(features.row(p)) {
            *s += x as f64;
        }
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass { class: c as u16 + 1 });
    }
    let centroids =
        sums.chunks_exact(f).zip(&counts).flat_map(|(s, &n)| s.iter().map(move |v| (v / n as f64) as f32)).collect();
    CentroidModel::from_centroids(f, centroids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(values: &[f32], labels: &[u16], train: &[bool]) -> (FeatureMatrix, LabelMap, PixelMask) {
        let n = labels.len();
        let f = FeatureMatrix::new(n, values.len() / n, values.to_vec()).unwrap();
        let l = LabelMap::new(1, n, labels.to_vec()).unwrap();
        let m = PixelMask::new(1, n, train.to_vec()).unwrap();
        (f, l, m)
    }

    #[test]
    fn one_pixel_per_class() {
        let (f, l, m) = setup(&[1.0, 2.0, -3.0, 4.0, 9.0, 9.0], &[2, 1, 3], &[true; 3]);
        let model = train_centroid(&f, &l, &m).unwrap();
        assert_eq!(model.centroid(1), &[-3.0, 4.0]);
        assert_eq!(model.centroid(2), &[1.0, 2.0]);
        assert_eq!(model.centroid(3), &[9.0, 9.0]);
    }

    #[test]
    fn duplicated_pixels_change_nothing() {
        let (f1, l1, m1) = setup(&[1.0, 5.0], &[1, 2], &[true; 2]);
        let (f2, l2, m2) = setup(&[1.0, 1.0, 5.0, 5.0], &[1, 1, 2, 2], &[true; 4]);
        assert_eq!(train_centroid(&f1, &l1, &m1).unwrap(), train_centroid(&f2, &l2, &m2).unwrap());
    }

    #[test]
    fn means_by_hand() {
        // class 1: (0,0) and (2,4) -> (1,2); class 2: (1,1) and (3,-1) -> (2,0)
        let (f, l, m) = setup(&[0.0, 0.0, 2.0, 4.0, 1.0, 1.0, 3.0, -1.0], &[1, 1, 2, 2], &[true; 4]);
        let model = train_centroid(&f, &l, &m).unwrap();
        assert_eq!(model.centroid(1), &[1.0, 2.0]);
        assert_eq!(model.centroid(2), &[2.0, 0.0]);
    }

    #[test]
    fn missing_training_class() {
        let (f, l, m) = setup(&[0.0, 1.0, 2.0], &[1, 2, 3], &[true, false, true]);
        assert!(matches!(train_centroid(&f, &l, &m).unwrap_err(), Error::EmptyClass { class: 2 }));
    }

    #[test]
    fn nearest_and_tie_break() {
        let model = CentroidModel::from_centroids(1, vec![10.0, 0.0, 7.0, 20.0, 4.0]).unwrap();
        assert_eq!(model.classify_row(&[7.0]), 3);
        // 2.0 is equidistant from class 2 (0.0) and class 5 (4.0).
        assert_eq!(model.classify_row(&[2.0]), 2);
    }
}
