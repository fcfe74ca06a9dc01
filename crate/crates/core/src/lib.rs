//! Haar wavelet gradient estimation, total-variation estimates and
//! coefficient-domain TV denoising for 1-3D volumes.
//!
//! The pipeline is `Volume -> pad_to_dyadic -> forward -> shrink -> inverse
//! -> crop_to_origin`. Every stage is generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix the common instantiations.
//!
//! ```
//! use haartv::{haar, gradient, Volume64};
//!
//! let v = Volume64::from_fn(vec![8, 8], |i| (i[0] + i[1]) as f64).unwrap();
//! let pyr = haar::forward(&v).unwrap();
//! let tv = gradient::tv_estimate_level(&pyr, 2).unwrap();
//! assert!(tv > 0.0);
//! ```

pub mod cli;
pub mod error;
pub mod gradient;
pub mod grid;
pub mod haar;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod scalar;
pub mod shrink;
mod sum;

pub use error::{Error, Result};
pub use gradient::{GradientField, GradientMode, GradientSample, LevelWeights};
pub use grid::{Volume, VoxelIndex};
pub use haar::{WaveletPyramid, WaveletType};
pub use metrics::TvReport;
pub use scalar::Real;
pub use shrink::{ShrinkConfig, ShrinkMode};

pub type Volume64 = Volume<f64>;
pub type Volume32 = Volume<f32>;
pub type Pyramid64 = WaveletPyramid<f64>;
pub type Pyramid32 = WaveletPyramid<f32>;
pub type GradientField64 = GradientField<f64>;
pub type LevelWeights64 = LevelWeights<f64>;
pub type ShrinkConfig64 = ShrinkConfig<f64>;
