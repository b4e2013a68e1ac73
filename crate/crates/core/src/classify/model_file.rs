//! `.hsw` model files: one JSON header line with magic `HSW1`, then
//! little-endian f32 values: the band means and standard deviations (only
//! when `feature.standardize` is set), followed by the model weights
//! (`C x F` centroids, or `C x (F + 1)` softmax weights with the bias last).

use std::io::{BufRead, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    extract_features, predict, BandStats, CentroidModel, FeatureConfig, PixelClassifier, SoftmaxHyper, SoftmaxModel,
};
use crate::error::{Error, Result};
use crate::io;
use crate::raster::{ClassMap, HyperCube};

pub const MODEL_MAGIC: &str = "HSW1";

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Centroid(CentroidModel),
    Softmax(SoftmaxModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Centroid(_) => "centroid",
            Model::Softmax(_) => "softmax",
        }
    }

    fn as_classifier(&self) -> &(dyn PixelClassifier + Sync) {
        match self {
            Model::Centroid(m) => m,
            Model::Softmax(m) => m,
        }
    }
}

/// A classifier bundled with the feature pipeline it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub bands: usize,
    pub feature: FeatureConfig,
    pub stats: Option<BandStats>,
    pub model: Model,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    magic: String,
    kind: String,
    bands: usize,
    num_classes: u16,
    num_features: usize,
    feature: FeatureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hyper: Option<SoftmaxHyper>,
    dtype: String,
}

impl TrainedModel {
    pub fn num_classes(&self) -> u16 {
        self.model.as_classifier().num_classes()
    }

    pub fn predict(&self, cube: &HyperCube) -> Result<ClassMap> {
        if cube.bands() != self.bands {
            return Err(Error::DimensionMismatch {
                what: "cube bands vs. model".into(),
                expected: self.bands.to_string(),
                found: cube.bands().to_string(),
            });
        }
        let features = extract_features(cube, &self.feature, self.stats.as_ref())?;
        predict(self.model.as_classifier(), &features, cube.dims())
    }

    pub fn encode(&self) -> Vec<u8> {
        let classifier = self.model.as_classifier();
        let header = ModelHeader {
            magic: MODEL_MAGIC.into(),
            kind: self.model.kind().into(),
            bands: self.bands,
            num_classes: classifier.num_classes(),
            num_features: classifier.num_features(),
            feature: self.feature,
            hyper: match &self.model {
                Model::Softmax(m) => Some(m.hyper),
                Model::Centroid(_) => None,
            },
            dtype: "f32le".into(),
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        let stats = self.stats.iter().flat_map(|s| s.mean.iter().chain(&s.std));
        let weights = match &self.model {
            Model::Centroid(m) => m.centroids(),
            Model::Softmax(m) => m.weights(),
        };
        for v in stats.chain(weights) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode_from<R: BufRead>(reader: &mut R) -> Result<Self> {
        let mut line = Vec::new();
        reader.take(64 * 1024).read_until(b'\n', &mut line).map_err(|e| Error::BadHeader(e.to_string()))?;
        if line.pop() != Some(b'\n') {
            return Err(Error::BadHeader("missing newline-terminated JSON header".into()));
        }
        let header: ModelHeader = serde_json::from_slice(&line).map_err(|e| Error::BadHeader(e.to_string()))?;
        if header.magic != MODEL_MAGIC {
            return Err(Error::BadMagic { expected: MODEL_MAGIC.into(), found: header.magic });
        }
        let (c, f, b) = (header.num_classes as usize, header.num_features, header.bands);
        let stat_len = if header.feature.standardize { 2 * b } else { 0 };
        let weight_len = match header.kind.as_str() {
            "centroid" => c * f,
            "softmax" => c * (f + 1),
            other => return Err(Error::BadHeader(format!("unknown model kind {other:?}"))),
        };
        let expected = ((stat_len + weight_len) * 4) as u64;
        let cap = io::ReadOptions::default().max_payload_bytes;
        if expected > cap {
            return Err(Error::HeaderTooLarge { requested: expected, cap });
        }
        let mut payload = Vec::with_capacity(expected as usize);
        reader.take(expected + 1).read_to_end(&mut payload).map_err(|e| Error::BadHeader(e.to_string()))?;
        let actual = payload.len() as u64;
        if actual < expected {
            return Err(Error::TruncatedPayload { expected, actual });
        }
        if actual > expected {
            return Err(Error::TrailingData { expected, actual });
        }
        let mut values: Vec<f32> =
            payload.chunks_exact(4).map(|ch| f32::from_le_bytes([ch[0], ch[1], ch[2], ch[3]])).collect();
        let weights = values.split_off(stat_len);
        let stats =
            header.feature.standardize.then(|| BandStats { mean: values[..b].to_vec(), std: values[b..].to_vec() });
        let model = match header.kind.as_str() {
            "centroid" => Model::Centroid(CentroidModel::from_centroids(f, weights)?),
            _ => Model::Softmax(SoftmaxModel::from_weights(
                header.num_classes,
                f,
                weights,
                header.hyper.unwrap_or_default(),
            )?),
        };
        Ok(Self { bands: b, feature: header.feature, stats, model })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_bytes(&self.encode(), path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        TrainedModel::decode_from(&mut std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_model_round_trips() {
        let hyper = SoftmaxHyper { seed: 5, ..Default::default() };
        let model = TrainedModel {
            bands: 2,
            feature: FeatureConfig::default(),
            stats: Some(BandStats { mean: vec![0.5, -1.0], std: vec![2.0, 0.25] }),
            model: Model::Softmax(
                SoftmaxModel::from_weights(2, 2, vec![1.0, -2.0, 0.5, 3.0, 0.0, -0.5], hyper).unwrap(),
            ),
        };
        let bytes = model.encode();
        assert!(bytes.starts_with(br#"{"magic":"HSW1","kind":"softmax""#));
        assert_eq!(TrainedModel::decode_from(&mut &bytes[..]).unwrap(), model);
    }

    #[test]
    fn centroid_model_round_trips() {
        let model = TrainedModel {
            bands: 3,
            feature: FeatureConfig { patch_radius: 0, standardize: false },
            stats: None,
            model: Model::Centroid(CentroidModel::from_centroids(3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap()),
        };
        let bytes = model.encode();
        assert_eq!(TrainedModel::decode_from(&mut &bytes[..]).unwrap(), model);
        let truncated = &bytes[..bytes.len() - 2];
        assert!(matches!(TrainedModel::decode_from(&mut &truncated[..]).unwrap_err(), Error::TruncatedPayload { .. }));
    }
}
