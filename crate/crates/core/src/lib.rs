//! Photosynthetically active radiation (PAR) interception in virtual maize
//! canopies.
//!
//! Plant meshes (loaded from PLY or generated procedurally) are replicated
//! into a periodic field, lit by a clear-sky sun and sky, and traced
//! backwards from every surface element toward the light sources. Multiple
//! scattering between leaves uses a fixed number of Lambertian bounces.
//! Absorbed PAR is integrated over the day and the season, and scenario
//! sweeps compare leaf orientations, planting densities, and row directions.

pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod output;
pub mod plantgen;
pub mod radiation;
pub mod rng;
pub mod simdriver;
pub mod solar;
pub mod validate;

pub use error::{Error, Result};
