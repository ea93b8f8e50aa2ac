//! Simulation and extraction of the noncyclic relative phase and visibility
//! of partially polarized spin-½ beams in an SU(2) polarimeter.
//!
//! The crate is organised bottom-up:
//!
//! - [`spinops`]: 2×2 complex algebra, density operators and SU(2) matrices.
//! - [`theory`]: closed-form phases and visibilities, geodesic paths and
//!   solid angles.
//! - [`polarimeter`]: the flipper/guide-field/analyzer measurement chain,
//!   intensity sweeps, extrema location and counting noise.
//! - [`extraction`]: inversion of measured extreme intensities into cos²Φ,
//!   visibility and degree of polarization.

pub mod error;
pub mod extraction;
pub mod polarimeter;
pub mod spinops;
pub mod theory;
pub mod vec3;

pub use error::{Error, Result};
