//! Hyperspectral pixel classification with superpixel majority-vote refinement.
//!
//! The pipeline: read a cube and its ground truth ([`io`]), split labeled
//! pixels into train and test sets ([`sampling`]), classify every pixel
//! ([`classify`]), over-segment an RGB rendering into superpixels
//! ([`superpixel`]), rewrite each superpixel with its dominant class
//! ([`refine`]) and score the maps ([`eval`]).
//!
//! ```
//! use hsi_refine::{refine::refine, ClassMap, SuperpixelMap};
//!
//! let z = ClassMap::new(1, 4, vec![1, 2, 2, 3], 3)?;
//! let sp = SuperpixelMap::new(1, 4, vec![0, 0, 0, 1])?;
//! assert_eq!(refine(&z, &sp)?.classes(), &[2, 2, 2, 3]);
//! # Ok::<(), hsi_refine::Error>(())
//! ```

pub mod classify;
pub mod error;
pub mod eval;
pub mod io;
pub mod raster;
pub mod refine;
pub mod rng;
pub mod sampling;
pub mod superpixel;
pub mod synthetic;

pub use error::{Error, Result};
pub use raster::{validate, AffinityMap, ClassMap, Dims, HyperCube, LabelMap, PixelMask, RgbImage, SuperpixelMap};
