//! Multi-seed experiment runner.
//!
//! Every (dataset, fraction, seed) triple is one run: split the labels,
//! train and predict, refine inside the dataset's superpixels, and score
//! each map on the test pixels. Superpixels are built once per dataset.
//! Runs execute in parallel but are collected in configuration order, so
//! the output does not depend on the number of worker threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ClassifierKind, DatasetConfig, ExperimentConfig, SuperpixelMethod};
use super::metrics::{confusion_and_kappa, Confusion};
use crate::classify::{extract_features, import_classmap, predict, train_centroid, train_softmax, BandStats};
use crate::error::{Error, Result};
use crate::io;
use crate::raster::{validate, ClassMap, HyperCube, LabelMap, PixelMask, SuperpixelMap};
use crate::refine::{pin_training_labels, refine};
use crate::sampling::{split, SplitSpec};
use crate::superpixel::{affinity_superpixels, slic, AffinityConfig, SlicConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub method: String,
    pub train_fraction: f64,
    pub seed: u64,
    pub oa: f64,
    pub kappa: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub confusion: Confusion,
}

/// Statistics of one (dataset, method, fraction) group over its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub method: String,
    pub train_fraction: f64,
    pub runs: usize,
    pub oa_mean: f64,
    pub oa_std: f64,
    pub oa_min: f64,
    pub oa_max: f64,
    pub kappa_mean: f64,
    pub kappa_std: f64,
}

/// Mean and sample (n - 1) standard deviation, by Welford's update. A single
/// value has standard deviation 0.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let std = if values.len() > 1 { (m2 / (values.len() - 1) as f64).sqrt() } else { 0.0 };
    (mean, std)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportTable {
    pub rows: Vec<AggregateRow>,
}

impl ReportTable {
    /// Groups records by (dataset, method, fraction) in order of first appearance.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut keys: Vec<(&str, &str, f64)> = Vec::new();
        for r in records {
            let key = (r.dataset.as_str(), r.method.as_str(), r.train_fraction);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let rows = keys
            .into_iter()
            .map(|(dataset, method, fraction)| {
                let group: Vec<&RunRecord> = records
                    .iter()
                    .filter(|r| r.dataset == dataset && r.method == method && r.train_fraction == fraction)
                    .collect();
                let oa: Vec<f64> = group.iter().map(|r| r.oa).collect();
                let kappa: Vec<f64> = group.iter().map(|r| r.kappa).collect();
                let (oa_mean, oa_std) = mean_and_std(&oa);
                let (kappa_mean, kappa_std) = mean_and_std(&kappa);
                AggregateRow {
                    dataset: dataset.to_string(),
                    method: method.to_string(),
                    train_fraction: fraction,
                    runs: group.len(),
                    oa_mean,
                    oa_std,
                    oa_min: oa.iter().copied().fold(f64::INFINITY, f64::min),
                    oa_max: oa.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    kappa_mean,
                    kappa_std,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn get(&self, dataset: &str, method: &str, fraction: f64) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.method == method && r.train_fraction == fraction)
    }

    /// Mean OA of `refined` minus mean OA of `base`.
    pub fn delta(&self, dataset: &str, base: &str, refined: &str, fraction: f64) -> Option<f64> {
        Some(self.get(dataset, refined, fraction)?.oa_mean - self.get(dataset, base, fraction)?.oa_mean)
    }

    /// Plain-text table per dataset: one row per method, one column per
    /// fraction, cells `mean ± std` in percent, followed by refinement deltas.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mut datasets: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !datasets.contains(&r.dataset.as_str()) {
                datasets.push(&r.dataset);
            }
        }
        for dataset in datasets {
            let rows: Vec<&AggregateRow> = self.rows.iter().filter(|r| r.dataset == dataset).collect();
            let mut fractions: Vec<f64> = Vec::new();
            let mut methods: Vec<&str> = Vec::new();
            for r in &rows {
                if !fractions.contains(&r.train_fraction) {
                    fractions.push(r.train_fraction);
                }
                if !methods.contains(&r.method.as_str()) {
                    methods.push(&r.method);
                }
            }
            let runs = rows.first().map_or(0, |r| r.runs);
            let _ = writeln!(out, "{dataset} (OA %, mean ± std over {runs} runs)");
            let _ = write!(out, "{:<24}", "method");
            for f in &fractions {
                let _ = write!(out, "{:>18}", percent_label(*f));
            }
            out.push('\n');
            for m in &methods {
                let _ = write!(out, "{m:<24}");
                for f in &fractions {
                    let cell = match self.get(dataset, m, *f) {
                        Some(r) => format!("{:.2} ± {:.2}", 100.0 * r.oa_mean, 100.0 * r.oa_std),
                        None => "-".into(),
                    };
                    let _ = write!(out, "{cell:>18}");
                }
                out.push('\n');
            }
            for m in &methods {
                let refined = if *m == "raw" {
                    "refined".to_string()
                } else if *m == "refined" || m.ends_with("+refined") {
                    continue;
                } else {
                    format!("{m}+refined")
                };
                if !methods.contains(&refined.as_str()) {
                    continue;
                }
                let _ = write!(out, "{:<24}", format!("delta {refined}"));
                for f in &fractions {
                    let cell = match self.delta(dataset, m, &refined, *f) {
                        Some(d) => format!("{:+.2}", 100.0 * d),
                        None => "-".into(),
                    };
                    let _ = write!(out, "{cell:>18}");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

fn percent_label(fraction: f64) -> String {
    let pct = (fraction * 1e6).round() / 1e4;
    format!("{pct}%")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub table: ReportTable,
}

/// A scored map, handed to the caller's sink as the run produces it.
#[derive(Debug, Clone, Copy)]
pub struct RunMap<'a> {
    pub dataset: &'a str,
    pub method: &'a str,
    pub train_fraction: f64,
    pub seed: u64,
    pub map: &'a ClassMap,
    pub test: &'a PixelMask,
}

/// Inputs shared by all runs on one dataset.
pub struct PreparedDataset {
    pub config: DatasetConfig,
    pub cube: HyperCube,
    pub labels: LabelMap,
    pub superpixels: SuperpixelMap,
    pub imports: Vec<(String, ClassMap)>,
}

impl PreparedDataset {
    pub fn load(experiment: &ExperimentConfig, config: &DatasetConfig) -> Result<Self> {
        let cube = io::read_cube(&config.cube)?;
        let labels = io::read_labels(&config.labels)?;
        validate(&cube, &labels)?;
        let imports = config
            .imports
            .iter()
            .map(|imp| Ok((imp.name.clone(), import_classmap(&imp.path, &labels)?)))
            .collect::<Result<Vec<_>>>()?;
        let superpixels = build_superpixels(experiment, config, &cube)?;
        Ok(Self { config: config.clone(), cube, labels, superpixels, imports })
    }
}

/// The superpixel map used for every run on `dataset`.
pub fn build_superpixels(
    experiment: &ExperimentConfig,
    dataset: &DatasetConfig,
    cube: &HyperCube,
) -> Result<SuperpixelMap> {
    let s = &experiment.superpixels;
    let n = dataset.n.unwrap_or(s.n);
    match s.method {
        SuperpixelMethod::Slic => {
            let rgb = io::cube_to_rgb(cube, dataset.rgb_bands(cube.bands()))?;
            let config = SlicConfig { n, compactness: s.compactness, iterations: s.iterations, seed: s.seed };
            slic(&rgb, &config)
        }
        SuperpixelMethod::Affinity => {
            let path = dataset.affinity.as_ref().ok_or_else(|| Error::InvalidConfig {
                what: "experiment config",
                reason: format!("dataset {:?} needs an affinity file", dataset.name),
            })?;
            let aff = io::read_affinity(path)?;
            cube.dims().check("affinity vs. cube", aff.dims())?;
            affinity_superpixels(&aff, &AffinityConfig { n, seed: s.seed })
        }
    }
}

/// Predicted class map for one split, as `train`/`predict` would produce it.
pub fn classify_run(
    experiment: &ExperimentConfig,
    cube: &HyperCube,
    labels: &LabelMap,
    train: &PixelMask,
    seed: u64,
) -> Result<ClassMap> {
    let stats = if experiment.feature.standardize { Some(BandStats::from_mask(cube, train)?) } else { None };
    let features = extract_features(cube, &experiment.feature, stats.as_ref())?;
    match experiment.classifier {
        ClassifierKind::Softmax => {
            let (model, _) = train_softmax(&features, labels, train, &experiment.softmax.hyper(seed))?;
            predict(&model, &features, cube.dims())
        }
        ClassifierKind::Centroid => {
            let model = train_centroid(&features, labels, train)?;
            predict(&model, &features, cube.dims())
        }
        ClassifierKind::None => {
            Err(Error::InvalidConfig { what: "experiment config", reason: "no classifier configured".into() })
        }
    }
}

fn score(
    data: &PreparedDataset,
    method: &str,
    fraction: f64,
    seed: u64,
    map: &ClassMap,
    test: &PixelMask,
) -> Result<RunRecord> {
    let (confusion, kappa) = confusion_and_kappa(map, &data.labels, test)?;
    Ok(RunRecord {
        dataset: data.config.name.clone(),
        method: method.to_string(),
        train_fraction: fraction,
        seed,
        oa: confusion.overall_accuracy(),
        kappa,
        per_class_accuracy: confusion.per_class_accuracy(),
        confusion,
    })
}

fn one_run<F>(
    experiment: &ExperimentConfig,
    data: &PreparedDataset,
    fraction: f64,
    seed: u64,
    sink: &F,
) -> Result<Vec<RunRecord>>
where
    F: Fn(&RunMap) -> Result<()> + Sync,
{
    let spec = SplitSpec::new(fraction, seed).with_min_per_class(experiment.min_per_class);
    let parts = split(&data.labels, &spec)?;
    let mut maps: Vec<(String, ClassMap)> = Vec::new();
    let mut add_pair = |name: &str, refined_name: String, z: ClassMap| -> Result<()> {
        let voters =
            if experiment.pin_train { pin_training_labels(&z, &data.labels, &parts.train)? } else { z.clone() };
        let y = refine(&voters, &data.superpixels)?;
        maps.push((name.to_string(), z));
        maps.push((refined_name, y));
        Ok(())
    };
    if experiment.classifier != ClassifierKind::None {
        let z = classify_run(experiment, &data.cube, &data.labels, &parts.train, seed)?;
        add_pair("raw", "refined".into(), z)?;
    }
    for (name, z) in &data.imports {
        add_pair(name, format!("{name}+refined"), z.clone())?;
    }
    maps.iter()
        .map(|(method, map)| {
            sink(&RunMap {
                dataset: &data.config.name,
                method,
                train_fraction: fraction,
                seed,
                map,
                test: &parts.test,
            })?;
            score(data, method, fraction, seed, map, &parts.test)
        })
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with(config, |_| Ok(()))
}

/// Runs the experiment and passes every produced map to `sink`. The sink may
/// be called from several threads and in any order.
pub fn run_experiment_with<F>(config: &ExperimentConfig, sink: F) -> Result<ExperimentOutput>
where
    F: Fn(&RunMap) -> Result<()> + Sync,
{
    config.validate()?;
    let prepared = config.datasets.iter().map(|d| PreparedDataset::load(config, d)).collect::<Result<Vec<_>>>()?;
    run_prepared(config, &prepared, sink)
}

/// Like [`run_experiment_with`] over datasets already in memory.
pub fn run_prepared<F>(config: &ExperimentConfig, prepared: &[PreparedDataset], sink: F) -> Result<ExperimentOutput>
where
    F: Fn(&RunMap) -> Result<()> + Sync,
{
    let jobs: Vec<(usize, f64, u64)> = (0..prepared.len())
        .flat_map(|d| config.fractions.iter().flat_map(move |&f| config.seeds.iter().map(move |&s| (d, f, s))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(d, fraction, seed)| {
            one_run(config, &prepared[d], fraction, seed, &sink).map_err(|e| Error::Run {
                fraction,
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let flat: Vec<RunRecord> = results.into_iter().flatten().collect();

    // Report order: dataset, method, fraction, seed.
    let mut records = Vec::with_capacity(flat.len());
    for data in prepared {
        for method in config.methods(&data.config) {
            for &f in &config.fractions {
                records.extend(
                    flat.iter()
                        .filter(|r| r.dataset == data.config.name && r.method == method && r.train_fraction == f)
                        .cloned(),
                );
            }
        }
    }
    let table = ReportTable::from_records(&records);
    Ok(ExperimentOutput { records, table })
}
