use std::io::Write;
use std::path::Path;

use hsi_refine::classify::{
    extract_features, train_centroid, train_softmax, BandStats, FeatureConfig, Model, SoftmaxHyper, TrainedModel,
};
use hsi_refine::eval::{confusion_and_kappa, run_experiment_with, ExperimentConfig, RunMap};
use hsi_refine::io::{self, report, RgbBands};
use hsi_refine::refine::{pin_training_labels, refine, refinement_delta};
use hsi_refine::sampling::{split, SplitSpec};
use hsi_refine::superpixel::{affinity_superpixels, slic, AffinityConfig, SlicConfig};
use hsi_refine::synthetic::{field_affinity, generate_scene, SceneConfig};
use hsi_refine::{validate, Error, HyperCube, PixelMask};
use serde_json::{json, Value};

use crate::args::*;
use crate::{at, Failure};

type Outcome = Result<(), Failure>;

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print(value: &Value) {
    emit(&(serde_json::to_string_pretty(value).expect("JSON value") + "\n"));
}

fn write_file(bytes: &[u8], path: &Path) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::from(Error::Io { path: path.to_path_buf(), source: e }))
}

fn rgb_bands(cube: &HyperCube, bands: Option<[usize; 3]>) -> RgbBands {
    match bands {
        Some([r, g, b]) => RgbBands::new(r, g, b),
        None => RgbBands::default_for(cube.bands()),
    }
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::ConvertCheck(a) => convert_check(a),
        Command::Split(a) => split_cmd(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Superpixels(a) => superpixels(a),
        Command::Refine(a) => refine_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Render(a) => render(a),
        Command::Experiment(a) => experiment(a),
        Command::Synth(a) => synth(a),
    }
}

fn convert_check(a: ConvertCheckArgs) -> Outcome {
    let mut report = serde_json::Map::new();
    let mut cube = None;
    let mut labels = None;
    if let Some(path) = &a.cube {
        let (header, c) = io::read_cube_with_header(path).map_err(at(path))?;
        let (min, max) =
            c.data().iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        report.insert(
            "cube".into(),
            json!({
                "path": path.display().to_string(),
                "height": c.height(), "width": c.width(), "bands": c.bands(),
                "name": header.name, "min": min, "max": max,
            }),
        );
        cube = Some(c);
    }
    if let Some(path) = &a.labels {
        let l = io::read_labels(path).map_err(at(path))?;
        report.insert(
            "labels".into(),
            json!({
                "path": path.display().to_string(),
                "height": l.dims().height, "width": l.dims().width,
                "num_classes": l.num_classes(), "labeled": l.labeled_count(),
                "histogram": l.class_histogram(),
            }),
        );
        labels = Some(l);
    }
    if let (Some(c), Some(l)) = (&cube, &labels) {
        validate(c, l)?;
    }
    if let Some(path) = &a.classmap {
        let m = io::read_classmap(path).map_err(at(path))?;
        report.insert(
            "classmap".into(),
            json!({"path": path.display().to_string(), "height": m.dims().height, "width": m.dims().width, "num_classes": m.num_classes()}),
        );
    }
    if let Some(path) = &a.superpixels {
        let s = io::read_superpixels(path).map_err(at(path))?;
        report.insert(
            "superpixels".into(),
            json!({"path": path.display().to_string(), "height": s.dims().height, "width": s.dims().width, "num_segments": s.num_segments()}),
        );
    }
    if let Some(path) = &a.affinity {
        let s = io::read_affinity(path).map_err(at(path))?;
        report.insert(
            "affinity".into(),
            json!({"path": path.display().to_string(), "height": s.dims().height, "width": s.dims().width}),
        );
    }
    if let Some(path) = &a.mask {
        let m = io::read_mask(path).map_err(at(path))?;
        report.insert(
            "mask".into(),
            json!({"path": path.display().to_string(), "height": m.dims().height, "width": m.dims().width, "selected": m.count()}),
        );
    }
    if report.is_empty() {
        return Err(Failure::usage("convert-check needs at least one input file"));
    }
    report.insert("ok".into(), true.into());
    print(&Value::Object(report));
    Ok(())
}

fn split_cmd(a: SplitArgs) -> Outcome {
    let labels = io::read_labels(&a.labels).map_err(at(&a.labels))?;
    let mut spec = SplitSpec::new(a.fraction, a.seed).with_min_per_class(a.min_per_class);
    if a.unstratified {
        spec = spec.unstratified();
    }
    let parts = split(&labels, &spec)?;
    io::write_mask(&parts.train, &a.train_out)?;
    io::write_mask(&parts.test, &a.test_out)?;
    let mut per_class = vec![0usize; labels.num_classes() as usize];
    for p in parts.train.indices() {
        per_class[labels.get(p) as usize - 1] += 1;
    }
    print(&json!({
        "labeled": labels.labeled_count(),
        "train": parts.train.count(),
        "test": parts.test.count(),
        "train_per_class": per_class,
    }));
    Ok(())
}

fn train(a: TrainArgs) -> Outcome {
    let cube = io::read_cube(&a.cube).map_err(at(&a.cube))?;
    let labels = io::read_labels(&a.labels).map_err(at(&a.labels))?;
    let mask = io::read_mask(&a.train_mask).map_err(at(&a.train_mask))?;
    validate(&cube, &labels)?;
    let feature = FeatureConfig { patch_radius: a.patch_radius, standardize: !a.no_standardize };
    let stats = if feature.standardize { Some(BandStats::from_mask(&cube, &mask)?) } else { None };
    let features = extract_features(&cube, &feature, stats.as_ref())?;
    let (model, losses) = match a.model {
        ModelKind::Centroid => (Model::Centroid(train_centroid(&features, &labels, &mask)?), None),
        ModelKind::Softmax => {
            let hyper = SoftmaxHyper {
                learning_rate: a.lr,
                epochs: a.epochs,
                batch_size: a.batch_size,
                l2: a.l2,
                seed: a.seed,
            };
            let (m, report) = train_softmax(&features, &labels, &mask, &hyper)?;
            (Model::Softmax(m), Some((report.initial_loss(), report.final_loss())))
        }
    };
    let trained = TrainedModel { bands: cube.bands(), feature, stats, model };
    trained.save(&a.output)?;
    let mut out = json!({
        "model": trained.model.kind(),
        "num_classes": trained.num_classes(),
        "num_features": features.cols(),
        "train_pixels": mask.count(),
    });
    if let Some((initial, last)) = losses {
        out["initial_loss"] = initial.into();
        out["final_loss"] = last.into();
    }
    print(&out);
    Ok(())
}

fn predict(a: PredictArgs) -> Outcome {
    let model = TrainedModel::load(&a.model).map_err(at(&a.model))?;
    let cube = io::read_cube(&a.cube).map_err(at(&a.cube))?;
    let map = model.predict(&cube)?;
    io::write_classmap(&map, &a.output)?;
    print(&json!({"height": cube.height(), "width": cube.width(), "num_classes": map.num_classes()}));
    Ok(())
}

fn superpixels(a: SuperpixelArgs) -> Outcome {
    let (sp, rgb) = match a.method {
        SuperpixelKind::Slic => {
            let path = a.cube.as_ref().ok_or_else(|| Failure::usage("--cube is required for slic"))?;
            let cube = io::read_cube(path).map_err(at(path))?;
            let rgb = io::cube_to_rgb(&cube, rgb_bands(&cube, a.rgb_bands))?;
            let config = SlicConfig { n: a.n, compactness: a.compactness, iterations: a.iters, seed: a.seed };
            (slic(&rgb, &config)?, Some(rgb))
        }
        SuperpixelKind::Affinity => {
            let path = a.affinity.as_ref().ok_or_else(|| Failure::usage("--affinity is required for affinity"))?;
            let aff = io::read_affinity(path).map_err(at(path))?;
            (affinity_superpixels(&aff, &AffinityConfig { n: a.n, seed: a.seed })?, None)
        }
    };
    io::write_superpixels(&sp, &a.output)?;
    if let Some(overlay) = &a.overlay {
        let rgb =
            rgb.ok_or_else(|| Failure::usage("--overlay needs the slic method; use `render --cube --superpixels`"))?;
        write_file(&io::render_boundaries(&rgb, &sp, [255, 255, 0])?, overlay)?;
    }
    print(&json!({"requested": a.n, "segments": sp.num_segments()}));
    Ok(())
}

fn refine_cmd(a: RefineArgs) -> Outcome {
    let z = io::read_classmap(&a.classmap).map_err(at(&a.classmap))?;
    let sp = io::read_superpixels(&a.superpixels).map_err(at(&a.superpixels))?;
    let labels = match &a.labels {
        Some(path) => Some(io::read_labels(path).map_err(at(path))?),
        None => None,
    };
    let voters = match (&a.pin_train, &labels) {
        (Some(path), Some(l)) => {
            let mask = io::read_mask(path).map_err(at(path))?;
            pin_training_labels(&z, l, &mask)?
        }
        _ => z.clone(),
    };
    let y = refine(&voters, &sp)?;
    io::write_classmap(&y, &a.output)?;

    let changed = z.classes().iter().zip(y.classes()).filter(|(a, b)| a != b).count();
    let mut out = json!({
        "pixels": z.dims().len(),
        "segments": sp.num_segments(),
        "pixels_changed": changed,
        "pinned": a.pin_train.is_some(),
    });
    if let (Some(path), Some(l)) = (&a.test_mask, &labels) {
        let test = io::read_mask(path).map_err(at(path))?;
        let delta = refinement_delta(&z, &y, &sp, l, &test)?;
        out["test_pixels"] = delta.test_pixels.into();
        out["oa_before"] = delta.oa_before.into();
        out["oa_after"] = delta.oa_after.into();
        out["delta"] = delta.delta().into();
        out["net_fixed"] = delta.net_fixed().into();
        out["flips"] = serde_json::to_value(&delta.flips).expect("flips serialize");
    }
    if let Some(path) = &a.report {
        let text = serde_json::to_string_pretty(&out).expect("JSON value") + "\n";
        write_file(text.as_bytes(), path)?;
    }
    print(&out);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Outcome {
    let z = io::read_classmap(&a.classmap).map_err(at(&a.classmap))?;
    let labels = io::read_labels(&a.labels).map_err(at(&a.labels))?;
    let mask = match &a.mask {
        Some(path) => io::read_mask(path).map_err(at(path))?,
        None => PixelMask::labeled(&labels),
    };
    let (confusion, kappa) = confusion_and_kappa(&z, &labels, &mask)?;
    let k = confusion.num_classes();
    let rows: Vec<&[u64]> = confusion.counts().chunks(k).collect();
    print(&json!({
        "test_pixels": confusion.total(),
        "oa": confusion.overall_accuracy(),
        "kappa": kappa,
        "per_class_accuracy": confusion.per_class_accuracy(),
        "confusion": rows,
    }));
    Ok(())
}

fn render(a: RenderArgs) -> Outcome {
    let png = if let Some(path) = &a.cube {
        let cube = io::read_cube(path).map_err(at(path))?;
        let rgb = io::cube_to_rgb(&cube, rgb_bands(&cube, a.rgb_bands))?;
        match &a.superpixels {
            Some(sp_path) => {
                let sp = io::read_superpixels(sp_path).map_err(at(sp_path))?;
                io::render_boundaries(&rgb, &sp, [255, 255, 0])?
            }
            None => io::render_rgb(&rgb)?,
        }
    } else if let Some(path) = &a.labels {
        let labels = io::read_labels(path).map_err(at(path))?;
        io::render_label_map(&labels, &io::DEFAULT_PALETTE)?
    } else if let Some(path) = &a.classmap {
        let map = io::read_classmap(path).map_err(at(path))?;
        io::render_class_map(&map, io::default_class_palette())?
    } else {
        return Err(Failure::usage("render needs --cube, --labels or --classmap"));
    };
    write_file(&png, &a.output)
}

fn map_file_name(map: &RunMap) -> String {
    format!("{}_{}_f{}_s{}.png", map.dataset, map.method.replace('+', "-"), map.train_fraction, map.seed)
}

fn experiment(a: ExperimentArgs) -> Outcome {
    let config = ExperimentConfig::load(&a.config).map_err(at(&a.config))?;
    let maps_dir = a.out.join("maps");
    std::fs::create_dir_all(if a.maps { &maps_dir } else { &a.out })
        .map_err(|e| Error::Io { path: a.out.clone(), source: e })?;
    let output = run_experiment_with(&config, |m| {
        if a.maps {
            let png = io::render_class_map(m.map, io::default_class_palette())?;
            let path = maps_dir.join(map_file_name(m));
            std::fs::write(&path, png).map_err(|e| Error::Io { path, source: e })?;
        }
        Ok(())
    })?;
    report::save_runs_csv(&output.records, a.out.join("runs.csv"))?;
    report::save_aggregate_csv(&output.table, a.out.join("aggregate.csv"))?;
    emit(&output.table.render_text());
    Ok(())
}

fn synth(a: SynthArgs) -> Outcome {
    let (config, name) = match a.preset {
        Preset::IndianPines => (SceneConfig::indian_pines_like(a.seed), "synthetic-indian-pines"),
        Preset::Small => (SceneConfig::small(a.seed), "synthetic-small"),
    };
    let scene = generate_scene(&config)?;
    let prefix = a.out_prefix.display().to_string();
    let (cube_path, labels_path, aff_path) =
        (format!("{prefix}.hsc"), format!("{prefix}.hsl"), format!("{prefix}.hsa"));
    io::write_named_cube(&scene.cube, name, &cube_path)?;
    io::write_labels(&scene.labels, &labels_path)?;
    io::write_affinity(&field_affinity(&scene, 0.05, a.seed)?, &aff_path)?;
    print(&json!({
        "cube": cube_path, "labels": labels_path, "affinity": aff_path,
        "height": scene.cube.height(), "width": scene.cube.width(), "bands": scene.cube.bands(),
        "histogram": scene.labels.class_histogram(),
    }));
    Ok(())
}
