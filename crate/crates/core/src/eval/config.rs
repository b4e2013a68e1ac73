//! Experiment configuration, read from JSON or from a key=value file.
//!
//! The key=value form has global keys at the top and one `[dataset NAME]`
//! section per dataset:
//!
//! ```text
//! # comments start with '#'
//! fractions = 0.005, 0.05, 0.20
//! seeds = 0..10
//! classifier = softmax        # softmax | centroid | none
//! patch_radius = 2
//! standardize = true
//! learning_rate = 0.001
//! epochs = 40
//! batch_size = 16
//! l2 = 0.0001
//! min_per_class = 1
//! superpixels = slic          # slic | affinity
//! n = 10000
//! compactness = 10
//! iterations = 10
//! superpixel_seed = 0
//! pin_train = false
//!
//! [dataset indian_pines]
//! cube = indian_pines.hsc
//! labels = indian_pines.hsl
//! affinity = indian_pines.hsa  # required when superpixels = affinity
//! import.ssrn = ssrn_prediction.hsp
//! n = 4000                     # per-dataset superpixel count
//! rgb_bands = 60, 30, 10
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{FeatureConfig, SoftmaxHyper};
use crate::error::{Error, Result};
use crate::io::RgbBands;
use crate::superpixel::SlicConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Softmax,
    Centroid,
    /// Only imported maps are evaluated.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuperpixelMethod {
    Slic,
    Affinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let h = SoftmaxHyper::default();
        Self { learning_rate: h.learning_rate, epochs: h.epochs, batch_size: h.batch_size, l2: h.l2 }
    }
}

impl TrainSettings {
    /// Hyperparameters for one run; the run seed drives the batch order.
    pub fn hyper(&self, seed: u64) -> SoftmaxHyper {
        SoftmaxHyper {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            l2: self.l2,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperpixelSettings {
    pub method: SuperpixelMethod,
    pub n: usize,
    pub compactness: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SuperpixelSettings {
    fn default() -> Self {
        let s = SlicConfig::default();
        Self {
            method: SuperpixelMethod::Slic,
            n: s.n,
            compactness: s.compactness,
            iterations: s.iterations,
            seed: s.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportConfig {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub cube: PathBuf,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affinity: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub imports: Vec<ImportConfig>,
    /// Overrides the global superpixel count for this dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgb_bands: Option<[usize; 3]>,
}

impl DatasetConfig {
    pub fn new(name: impl Into<String>, cube: impl Into<PathBuf>, labels: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            cube: cube.into(),
            labels: labels.into(),
            affinity: None,
            imports: Vec::new(),
            n: None,
            rgb_bands: None,
        }
    }

    pub fn rgb_bands(&self, bands: usize) -> RgbBands {
        match self.rgb_bands {
            Some([r, g, b]) => RgbBands::new(r, g, b),
            None => RgbBands::default_for(bands),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetConfig>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub classifier: ClassifierKind,
    pub feature: FeatureConfig,
    pub softmax: TrainSettings,
    pub min_per_class: usize,
    pub superpixels: SuperpixelSettings,
    /// Replace predictions on training pixels by their labels before voting.
    pub pin_train: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            fractions: vec![0.005, 0.05, 0.20],
            seeds: (0..10).collect(),
            classifier: ClassifierKind::Softmax,
            feature: FeatureConfig::default(),
            softmax: TrainSettings::default(),
            min_per_class: 1,
            superpixels: SuperpixelSettings::default(),
            pin_train: false,
        }
    }
}

fn bad(reason: impl Into<String>) -> Error {
    Error::InvalidConfig { what: "experiment config", reason: reason.into() }
}

impl ExperimentConfig {
    /// Reads a config file; JSON when the first non-blank character is `{`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))
        } else {
            parse_key_value(text)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, dir: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        for d in &mut self.datasets {
            join(&mut d.cube);
            join(&mut d.labels);
            if let Some(a) = &mut d.affinity {
                join(a);
            }
            for i in &mut d.imports {
                join(&mut i.path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(bad("no [dataset] sections"));
        }
        if self.fractions.is_empty() {
            return Err(bad("fractions is empty"));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(bad(format!("fraction {f} is outside (0, 1)")));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds is empty"));
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if self.datasets[..i].iter().any(|o| o.name == d.name) {
                return Err(bad(format!("dataset {:?} is listed twice", d.name)));
            }
            if self.superpixels.method == SuperpixelMethod::Affinity && d.affinity.is_none() {
                return Err(bad(format!("dataset {:?} needs an affinity file", d.name)));
            }
            if self.classifier == ClassifierKind::None && d.imports.is_empty() {
                return Err(bad(format!("dataset {:?} has no classifier and no imported maps", d.name)));
            }
            for (j, imp) in d.imports.iter().enumerate() {
                let reserved = ["raw", "refined"].contains(&imp.name.as_str());
                if reserved || imp.name.contains(['+', ',']) || d.imports[..j].iter().any(|o| o.name == imp.name) {
                    return Err(bad(format!("import name {:?} is reserved, repeated or malformed", imp.name)));
                }
            }
        }
        Ok(())
    }

    /// Method tags reported for a dataset, in report order.
    pub fn methods(&self, dataset: &DatasetConfig) -> Vec<String> {
        let mut methods = Vec::new();
        if self.classifier != ClassifierKind::None {
            methods.push("raw".to_string());
            methods.push("refined".to_string());
        }
        for imp in &dataset.imports {
            methods.push(imp.name.clone());
            methods.push(format!("{}+refined", imp.name));
        }
        methods
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| bad(format!("{key}: cannot parse {s:?}"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(format!("{key}: cannot parse {value:?}")))
}

fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = value.split_once("..") {
        let a: u64 = parse_one("seeds", a.trim())?;
        let b: u64 = parse_one("seeds", b.trim())?;
        return Ok((a..b).collect());
    }
    parse_list("seeds", value)
}

fn parse_key_value(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    let mut current: Option<DatasetConfig> = None;
    let mut cube: Option<PathBuf> = None;
    let mut labels: Option<PathBuf> = None;

    let finish = |config: &mut ExperimentConfig,
                  current: &mut Option<DatasetConfig>,
                  cube: &mut Option<PathBuf>,
                  labels: &mut Option<PathBuf>|
     -> Result<()> {
        if let Some(mut d) = current.take() {
            d.cube = cube.take().ok_or_else(|| bad(format!("dataset {:?} has no cube", d.name)))?;
            d.labels = labels.take().ok_or_else(|| bad(format!("dataset {:?} has no labels", d.name)))?;
            config.datasets.push(d);
        }
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| bad(format!("line {}: {msg}", lineno + 1));
        if let Some(section) = line.strip_prefix('[') {
            let inner = section.strip_suffix(']').ok_or_else(|| at("unterminated section header".into()))?;
            let name = inner
                .strip_prefix("dataset")
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| at(format!("expected [dataset NAME], got [{inner}]")))?;
            finish(&mut config, &mut current, &mut cube, &mut labels)?;
            current = Some(DatasetConfig::new(name, "", ""));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;

        if let Some(d) = current.as_mut() {
            match key {
                "cube" => cube = Some(value.into()),
                "labels" => labels = Some(value.into()),
                "affinity" => d.affinity = Some(value.into()),
                "import" => d.imports.push(ImportConfig { name: "imported".into(), path: value.into() }),
                "n" => d.n = Some(parse_one(key, value)?),
                "rgb_bands" => {
                    let v: Vec<usize> = parse_list(key, value)?;
                    let bands: [usize; 3] = v.try_into().map_err(|_| at("rgb_bands needs three indices".into()))?;
                    d.rgb_bands = Some(bands);
                }
                _ => match key.strip_prefix("import.") {
                    Some(name) => d.imports.push(ImportConfig { name: name.into(), path: value.into() }),
                    None => return Err(at(format!("unknown dataset key {key:?}"))),
                },
            }
            continue;
        }

        match key {
            "fractions" => config.fractions = parse_list(key, value)?,
            "seeds" => config.seeds = parse_seeds(value)?,
            "classifier" => {
                config.classifier = match value {
                    "softmax" => ClassifierKind::Softmax,
                    "centroid" => ClassifierKind::Centroid,
                    "none" => ClassifierKind::None,
                    _ => return Err(at(format!("unknown classifier {value:?}"))),
                }
            }
            "patch_radius" => config.feature.patch_radius = parse_one(key, value)?,
            "standardize" => config.feature.standardize = parse_one(key, value)?,
            "learning_rate" => config.softmax.learning_rate = parse_one(key, value)?,
            "epochs" => config.softmax.epochs = parse_one(key, value)?,
            "batch_size" => config.softmax.batch_size = parse_one(key, value)?,
            "l2" => config.softmax.l2 = parse_one(key, value)?,
            "min_per_class" => config.min_per_class = parse_one(key, value)?,
            "superpixels" => {
                config.superpixels.method = match value {
                    "slic" => SuperpixelMethod::Slic,
                    "affinity" => SuperpixelMethod::Affinity,
                    _ => return Err(at(format!("unknown superpixel method {value:?}"))),
                }
            }
            "n" => config.superpixels.n = parse_one(key, value)?,
            "compactness" => config.superpixels.compactness = parse_one(key, value)?,
            "iterations" => config.superpixels.iterations = parse_one(key, value)?,
            "superpixel_seed" => config.superpixels.seed = parse_one(key, value)?,
            "pin_train" => config.pin_train = parse_one(key, value)?,
            _ => return Err(at(format!("unknown key {key:?}"))),
        }
    }
    finish(&mut config, &mut current, &mut cube, &mut labels)?;
    Ok(config)
}
