use hsi_refine::classify::{extract_features, predict, train_softmax, BandStats, FeatureConfig, SoftmaxHyper};
use hsi_refine::eval::confusion_and_kappa;
use hsi_refine::io::{self, RgbBands};
use hsi_refine::refine::{pin_training_labels, refine, refinement_delta};
use hsi_refine::sampling::{split, Split, SplitSpec};
use hsi_refine::superpixel::{affinity_superpixels, slic, AffinityConfig, SlicConfig};
use hsi_refine::synthetic::{field_affinity, generate_scene, Scene, SceneConfig};
use hsi_refine::{AffinityMap, ClassMap, Error, Result, RgbImage, SuperpixelMap};

const BOUNDARY: [u8; 3] = [255, 255, 0];

/// Scores of one classify-and-refine round on the test pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub oa_raw: f64,
    pub oa_refined: f64,
    pub kappa_raw: f64,
    pub kappa_refined: f64,
    pub pixels_changed: usize,
    pub fixed: usize,
    pub broken: usize,
}

struct Classified {
    parts: Split,
    raw: ClassMap,
}

/// Demo state: a synthetic scene, its current superpixels and class maps.
pub struct Session {
    scene: Scene,
    rgb: RgbImage,
    affinity: AffinityMap,
    superpixels: SuperpixelMap,
    classified: Option<Classified>,
    refined: Option<ClassMap>,
}

impl Session {
    pub fn new(preset: &str, seed: u64) -> Result<Self> {
        let config = match preset {
            "small" => SceneConfig::small(seed),
            "indian-pines" => SceneConfig::indian_pines_like(seed),
            other => return Err(Error::InvalidConfig { what: "demo", reason: format!("unknown preset {other:?}") }),
        };
        let scene = generate_scene(&config)?;
        let rgb = io::cube_to_rgb(&scene.cube, RgbBands::default_for(scene.cube.bands()))?;
        let affinity = field_affinity(&scene, 0.05, seed)?;
        let dims = scene.labels.dims();
        let superpixels = SuperpixelMap::new(dims.height, dims.width, vec![0; dims.len()])?;
        Ok(Self { scene, rgb, affinity, superpixels, classified: None, refined: None })
    }

    pub fn width(&self) -> usize {
        self.rgb.dims().width
    }

    pub fn height(&self) -> usize {
        self.rgb.dims().height
    }

    /// Rebuilds the superpixels; `method` is `slic` or `affinity`.
    pub fn segment(&mut self, method: &str, n: usize, compactness: f64) -> Result<usize> {
        self.superpixels = match method {
            "slic" => slic(&self.rgb, &SlicConfig { n, compactness, ..SlicConfig::default() })?,
            "affinity" => affinity_superpixels(&self.affinity, &AffinityConfig::with_n(n))?,
            other => {
                return Err(Error::InvalidConfig {
                    what: "demo",
                    reason: format!("unknown superpixel method {other:?}"),
                })
            }
        };
        self.refined = None;
        Ok(self.superpixels.num_segments())
    }

    /// Trains a softmax classifier on a stratified split and predicts every
    /// pixel. Returns the raw overall accuracy on the test pixels.
    pub fn classify(&mut self, fraction: f64, seed: u64, patch_radius: usize) -> Result<f64> {
        let cube = &self.scene.cube;
        let labels = &self.scene.labels;
        let parts = split(labels, &SplitSpec::new(fraction, seed))?;
        let feature = FeatureConfig { patch_radius, ..FeatureConfig::default() };
        let stats = BandStats::from_mask(cube, &parts.train)?;
        let features = extract_features(cube, &feature, Some(&stats))?;
        let hyper = SoftmaxHyper { seed, ..SoftmaxHyper::default() };
        let (model, _) = train_softmax(&features, labels, &parts.train, &hyper)?;
        let raw = predict(&model, &features, cube.dims())?;
        let (confusion, _) = confusion_and_kappa(&raw, labels, &parts.test)?;
        self.classified = Some(Classified { parts, raw });
        self.refined = None;
        Ok(confusion.overall_accuracy())
    }

    /// Votes the raw map inside the current superpixels and scores both maps.
    pub fn refine(&mut self, pin_train: bool) -> Result<Scores> {
        let c = self
            .classified
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig { what: "demo", reason: "classify before refining".into() })?;
        let labels = &self.scene.labels;
        let voters = if pin_train { pin_training_labels(&c.raw, labels, &c.parts.train)? } else { c.raw.clone() };
        let refined = refine(&voters, &self.superpixels)?;
        let delta = refinement_delta(&c.raw, &refined, &self.superpixels, labels, &c.parts.test)?;
        let (_, kappa_raw) = confusion_and_kappa(&c.raw, labels, &c.parts.test)?;
        let (_, kappa_refined) = confusion_and_kappa(&refined, labels, &c.parts.test)?;
        let scores = Scores {
            oa_raw: delta.oa_before,
            oa_refined: delta.oa_after,
            kappa_raw,
            kappa_refined,
            pixels_changed: delta.pixels_changed,
            fixed: delta.flips.iter().map(|f| f.fixed as usize).sum(),
            broken: delta.flips.iter().map(|f| f.broken as usize).sum(),
        };
        self.refined = Some(refined);
        Ok(scores)
    }

    pub fn rgb_png(&self) -> Result<Vec<u8>> {
        io::render_rgb(&self.rgb)
    }

    pub fn overlay_png(&self) -> Result<Vec<u8>> {
        io::render_boundaries(&self.rgb, &self.superpixels, BOUNDARY)
    }

    pub fn labels_png(&self) -> Result<Vec<u8>> {
        io::render_label_map(&self.scene.labels, io::default_class_palette())
    }

    /// The raw class map, or an empty vector before `classify`.
    pub fn raw_png(&self) -> Result<Vec<u8>> {
        match &self.classified {
            Some(c) => io::render_class_map(&c.raw, io::default_class_palette()),
            None => Ok(Vec::new()),
        }
    }

    /// The refined class map, or an empty vector before `refine`.
    pub fn refined_png(&self) -> Result<Vec<u8>> {
        match &self.refined {
            Some(map) => io::render_class_map(map, io::default_class_palette()),
            None => Ok(Vec::new()),
        }
    }
}
