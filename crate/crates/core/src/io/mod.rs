//! Reading and writing rasters, reports and rendered images.

mod format;
mod render;
pub mod report;
mod rgb;

pub use format::*;
pub use render::{
    default_class_palette, encode_png, render_boundaries, render_class_map, render_label_map, render_rgb,
    DEFAULT_PALETTE,
};
pub use rgb::{cube_to_rgb, RgbBands, CLIP_PERCENTILES};
