//! WebAssembly bindings for the browser demo in `www/`.
//!
//! One [`Demo`] holds a synthetic scene. The page drives three operations:
//! building superpixels, classifying from a training split, and refining the
//! class map by majority vote. Images come back as PNG bytes.

mod session;

pub use session::{Scores, Session};

use wasm_bindgen::prelude::*;

fn js(err: hsi_refine::Error) -> JsError {
    JsError::new(&err.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    /// `preset` is `small` or `indian-pines`.
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, seed: u32) -> Result<Demo, JsError> {
        Ok(Self { session: Session::new(preset, seed as u64).map_err(js)? })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.session.width()
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.session.height()
    }

    /// Returns the number of segments.
    pub fn segment(&mut self, method: &str, n: usize, compactness: f64) -> Result<usize, JsError> {
        self.session.segment(method, n, compactness).map_err(js)
    }

    /// Returns the raw overall accuracy on the test pixels.
    pub fn classify(&mut self, fraction: f64, seed: u32, patch_radius: usize) -> Result<f64, JsError> {
        self.session.classify(fraction, seed as u64, patch_radius).map_err(js)
    }

    pub fn refine(&mut self, pin_train: bool) -> Result<RefineScores, JsError> {
        self.session.refine(pin_train).map(RefineScores).map_err(js)
    }

    pub fn rgb_png(&self) -> Result<Vec<u8>, JsError> {
        self.session.rgb_png().map_err(js)
    }

    pub fn overlay_png(&self) -> Result<Vec<u8>, JsError> {
        self.session.overlay_png().map_err(js)
    }

    pub fn labels_png(&self) -> Result<Vec<u8>, JsError> {
        self.session.labels_png().map_err(js)
    }

    pub fn raw_png(&self) -> Result<Vec<u8>, JsError> {
        self.session.raw_png().map_err(js)
    }

    pub fn refined_png(&self) -> Result<Vec<u8>, JsError> {
        self.session.refined_png().map_err(js)
    }
}

#[wasm_bindgen]
pub struct RefineScores(Scores);

#[wasm_bindgen]
impl RefineScores {
    #[wasm_bindgen(getter)]
    pub fn oa_raw(&self) -> f64 {
        self.0.oa_raw
    }

    #[wasm_bindgen(getter)]
    pub fn oa_refined(&self) -> f64 {
        self.0.oa_refined
    }

    #[wasm_bindgen(getter)]
    pub fn kappa_raw(&self) -> f64 {
        self.0.kappa_raw
    }

    #[wasm_bindgen(getter)]
    pub fn kappa_refined(&self) -> f64 {
        self.0.kappa_refined
    }

    #[wasm_bindgen(getter)]
    pub fn pixels_changed(&self) -> usize {
        self.0.pixels_changed
    }

    /// Test pixels the vote corrected.
    #[wasm_bindgen(getter)]
    pub fn fixed(&self) -> usize {
        self.0.fixed
    }

    /// Test pixels the vote made wrong.
    #[wasm_bindgen(getter)]
    pub fn broken(&self) -> usize {
        self.0.broken
    }
}
