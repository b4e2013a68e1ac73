use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "hsi-refine",
    version,
    about = "Classify hyperspectral pixels and refine the map by majority vote inside superpixels",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.\n\
                  Errors are printed to stderr as one JSON object per line."
)]
pub struct Cli {
    /// Worker threads; outputs do not depend on this value.
    #[arg(long, global = true, env = "HSI_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate converted input files and print a summary.
    ConvertCheck(ConvertCheckArgs),
    /// Split labeled pixels into train and test masks.
    Split(SplitArgs),
    /// Train a classifier on the pixels of a train mask.
    Train(TrainArgs),
    /// Predict a class map with a trained model.
    Predict(PredictArgs),
    /// Build a superpixel map with SLIC or from an affinity raster.
    Superpixels(SuperpixelArgs),
    /// Rewrite every superpixel with its dominant class.
    Refine(RefineArgs),
    /// Score a class map against ground truth.
    Evaluate(EvaluateArgs),
    /// Render a cube, label map, class map or superpixel overlay to PNG.
    Render(RenderArgs),
    /// Run a multi-seed experiment from a config file.
    Experiment(ExperimentArgs),
    /// Write a synthetic scene (cube, labels and affinities).
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ConvertCheckArgs {
    /// Hyperspectral cube (.hsc).
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// Ground-truth labels (.hsl).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Class map (.hsp).
    #[arg(long)]
    pub classmap: Option<PathBuf>,
    /// Superpixel map (.hss).
    #[arg(long)]
    pub superpixels: Option<PathBuf>,
    /// Affinity raster (.hsa).
    #[arg(long)]
    pub affinity: Option<PathBuf>,
    /// Pixel mask (.hsm).
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// Fraction of labeled pixels used for training, in (0, 1).
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum training pixels per class, when the class is large enough.
    #[arg(long, default_value_t = 1)]
    pub min_per_class: usize,
    /// Sample without regard to class.
    #[arg(long)]
    pub unstratified: bool,
    /// Output train mask (.hsm).
    #[arg(long)]
    pub train_out: PathBuf,
    /// Output test mask (.hsm).
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Centroid,
    Softmax,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Train mask (.hsm) from `split`.
    #[arg(long)]
    pub train_mask: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Softmax)]
    pub model: ModelKind,
    /// Half-width of the patch-mean window; 0 uses spectra only.
    #[arg(long, default_value_t = 2)]
    pub patch_radius: usize,
    /// Skip per-band z-scoring.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Seed of the batch order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model file (.hsw).
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub cube: PathBuf,
    /// Output class map (.hsp).
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuperpixelKind {
    Slic,
    Affinity,
}

#[derive(Debug, Args)]
pub struct SuperpixelArgs {
    #[arg(long, value_enum, default_value_t = SuperpixelKind::Slic)]
    pub method: SuperpixelKind,
    /// Cube to render for SLIC.
    #[arg(long, required_if_eq("method", "slic"))]
    pub cube: Option<PathBuf>,
    /// Affinity raster (.hsa) for the affinity method.
    #[arg(long, required_if_eq("method", "affinity"))]
    pub affinity: Option<PathBuf>,
    /// Band indices for the RGB rendering, e.g. 60,30,10.
    #[arg(long, value_parser = parse_bands)]
    pub rgb_bands: Option<[usize; 3]>,
    /// Requested number of superpixels.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 10.0)]
    pub compactness: f64,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    /// Recorded only; both methods are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output superpixel map (.hss).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write a PNG with segment boundaries over the RGB rendering (SLIC only).
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Class map to refine (.hsp).
    #[arg(long)]
    pub classmap: PathBuf,
    #[arg(long)]
    pub superpixels: PathBuf,
    /// Output refined class map (.hsp).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Ground truth, for the delta report and for --pin-train.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Test mask for the delta report.
    #[arg(long, requires = "labels")]
    pub test_mask: Option<PathBuf>,
    /// Extension: replace predictions on this train mask with known labels before voting.
    #[arg(long, requires = "labels")]
    pub pin_train: Option<PathBuf>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub classmap: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Pixels to score; defaults to all labeled pixels.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["cube", "labels", "classmap"]))]
pub struct RenderArgs {
    /// Render the cube as RGB (with --superpixels, as a boundary overlay).
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// Render a ground-truth map; unlabeled pixels are black.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Render a class map.
    #[arg(long)]
    pub classmap: Option<PathBuf>,
    #[arg(long, requires = "cube")]
    pub superpixels: Option<PathBuf>,
    #[arg(long, value_parser = parse_bands)]
    pub rgb_bands: Option<[usize; 3]>,
    /// Output PNG.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Config file, key=value or JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for runs.csv and aggregate.csv.
    #[arg(long, default_value = "experiment-out")]
    pub out: PathBuf,
    /// Also write PNG class maps of every run to OUT/maps.
    #[arg(long)]
    pub maps: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 145 x 145 x 200 with the Indian Pines class sizes.
    IndianPines,
    /// 72 x 96 x 32 with six classes.
    Small,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::IndianPines)]
    pub preset: Preset,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Writes PREFIX.hsc, PREFIX.hsl and PREFIX.hsa.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

fn parse_bands(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> =
        s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated band indices".to_string())
}
