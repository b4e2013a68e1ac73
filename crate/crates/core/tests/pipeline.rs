use std::path::Path;

use hsi_refine::eval::{
    build_superpixels, classify_run, overall_accuracy, run_experiment, DatasetConfig, ExperimentConfig,
    SuperpixelMethod,
};
use hsi_refine::io;
use hsi_refine::io::report::{read_aggregate_csv, read_runs_csv, save_aggregate_csv, save_runs_csv};
use hsi_refine::refine::refine;
use hsi_refine::sampling::{split, SplitSpec};
use hsi_refine::synthetic::{field_affinity, generate_scene, Scene, SceneConfig};
use hsi_refine::{ClassMap, PixelMask, SuperpixelMap};

fn small_scene() -> Scene {
    generate_scene(&SceneConfig::small(3)).unwrap()
}

fn write_scene(scene: &Scene, dir: &Path) {
    io::write_cube(&scene.cube, dir.join("scene.hsc")).unwrap();
    io::write_labels(&scene.labels, dir.join("scene.hsl")).unwrap();
    io::write_affinity(&field_affinity(scene, 0.05, 1).unwrap(), dir.join("scene.hsa")).unwrap();
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let text = format!(
        "fractions = 0.05, 0.2\nseeds = 0..3\npatch_radius = 0\nn = 300\n{extra}\n\
         [dataset small]\ncube = scene.hsc\nlabels = scene.hsl\naffinity = scene.hsa\n"
    );
    let path = dir.join("experiment.conf");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn rasters_survive_a_disk_round_trip() {
    let scene = small_scene();
    let dir = tempfile::tempdir().unwrap();
    write_scene(&scene, dir.path());
    assert_eq!(io::read_cube(dir.path().join("scene.hsc")).unwrap(), scene.cube);
    assert_eq!(io::read_labels(dir.path().join("scene.hsl")).unwrap(), scene.labels);

    let parts = split(&scene.labels, &SplitSpec::new(0.1, 4)).unwrap();
    io::write_mask(&parts.train, dir.path().join("train.hsm")).unwrap();
    assert_eq!(io::read_mask(dir.path().join("train.hsm")).unwrap(), parts.train);
}

#[test]
fn experiment_reports_the_full_grid_and_reproduces() {
    let scene = small_scene();
    let dir = tempfile::tempdir().unwrap();
    write_scene(&scene, dir.path());
    let config = ExperimentConfig::load(write_config(dir.path(), "")).unwrap();

    let first = run_experiment(&config).unwrap();
    assert_eq!(first.records.len(), 2 * 2 * 3);
    assert_eq!(first.table.rows.len(), 2 * 2);
    for row in &first.table.rows {
        assert_eq!(row.runs, 3);
        assert!(row.oa_min <= row.oa_mean && row.oa_mean <= row.oa_max);
    }

    let second = run_experiment(&config).unwrap();
    let save = |out: &hsi_refine::eval::ExperimentOutput, tag: &str| {
        let runs = dir.path().join(format!("runs-{tag}.csv"));
        let agg = dir.path().join(format!("aggregate-{tag}.csv"));
        save_runs_csv(&out.records, &runs).unwrap();
        save_aggregate_csv(&out.table, &agg).unwrap();
        (std::fs::read(runs).unwrap(), std::fs::read(agg).unwrap())
    };
    let (a, b) = (save(&first, "a"), save(&second, "b"));
    assert_eq!(a, b);
    assert_eq!(read_runs_csv(a.0.as_slice()).unwrap().len(), first.records.len());
    assert_eq!(read_aggregate_csv(a.1.as_slice()).unwrap(), first.table.rows);
}

#[test]
fn step_by_step_pipeline_matches_the_experiment_record() {
    let scene = small_scene();
    let dir = tempfile::tempdir().unwrap();
    write_scene(&scene, dir.path());
    let config = ExperimentConfig::load(write_config(dir.path(), "")).unwrap();
    let out = run_experiment(&config).unwrap();

    let dataset = &config.datasets[0];
    let sp = build_superpixels(&config, dataset, &scene.cube).unwrap();
    let (fraction, seed) = (0.2, 1);
    let parts = split(&scene.labels, &SplitSpec::new(fraction, seed)).unwrap();
    let z = classify_run(&config, &scene.cube, &scene.labels, &parts.train, seed).unwrap();
    let y = refine(&z, &sp).unwrap();

    let find = |method: &str| {
        out.records.iter().find(|r| r.method == method && r.train_fraction == fraction && r.seed == seed).unwrap().oa
    };
    assert_eq!(overall_accuracy(&z, &scene.labels, &parts.test).unwrap(), find("raw"));
    assert_eq!(overall_accuracy(&y, &scene.labels, &parts.test).unwrap(), find("refined"));
}

#[test]
fn field_aligned_affinities_help_refinement() {
    let scene = small_scene();
    let dir = tempfile::tempdir().unwrap();
    write_scene(&scene, dir.path());
    let mut config = ExperimentConfig::load(write_config(dir.path(), "superpixels = affinity")).unwrap();
    assert_eq!(config.superpixels.method, SuperpixelMethod::Affinity);
    config.fractions = vec![0.2];
    let out = run_experiment(&config).unwrap();
    let delta = out.table.delta("small", "raw", "refined", 0.2).unwrap();
    assert!(delta > 0.0, "delta {delta}");
}

#[test]
fn field_constant_map_is_fixed_by_field_superpixels() {
    let scene = small_scene();
    let dims = scene.labels.dims();
    let classes: Vec<u16> = scene.fields.iter().map(|&f| scene.field_class[f as usize].max(1)).collect();
    let z = ClassMap::new(dims.height, dims.width, classes, scene.labels.num_classes()).unwrap();
    let sp = SuperpixelMap::from_arbitrary_ids(dims.height, dims.width, &scene.fields).unwrap();
    let y = refine(&z, &sp).unwrap();
    assert_eq!(y, z);
    let labeled = PixelMask::labeled(&scene.labels);
    assert_eq!(overall_accuracy(&y, &scene.labels, &labeled).unwrap(), 1.0);
}

#[test]
fn dataset_overrides_apply() {
    let scene = small_scene();
    let mut config = ExperimentConfig::default();
    let mut dataset = DatasetConfig::new("small", "unused", "unused");
    dataset.n = Some(50);
    dataset.rgb_bands = Some([3, 2, 1]);
    config.datasets.push(dataset.clone());
    let sp = build_superpixels(&config, &dataset, &scene.cube).unwrap();
    assert!((40..=60).contains(&sp.num_segments()), "{}", sp.num_segments());
}
