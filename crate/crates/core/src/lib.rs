//! Whispering-gallery modes of strain-tuned silica microspheres.
//!
//! Forward models (resonance frequencies, strain and thermal tuning, laser-scan
//! traces) and the inverse problems on top of them (dip fitting, tuning slope
//! extraction, mode assignment, strain calibration). All numerical code is
//! generic over [`Real`] (`f32` or `f64`); the aliases at the crate root fix it
//! to `f64`.

pub mod analysis;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod material;
pub mod mode;
pub mod modes;
pub mod numeric;
pub mod scalar;
pub mod special;
pub mod spectroscopy;
pub mod tuning;

pub use error::{Result, WgmError};
pub use mode::{ModeId, Polarization};
pub use scalar::Real;

pub type Material = material::OpticalMaterial<f64>;
pub type Geometry = geometry::SpheroidGeometry<f64>;
pub type Line = mode::ModeLine<f64>;
