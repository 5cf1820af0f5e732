//! Vorticity solver for 2D Navier-Stokes on the periodic half-plane with Navier-slip walls.

pub mod biot_savart;
pub mod error;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod ns;
pub mod oracle;
pub mod semigroup;
pub mod spectral;
pub mod stokes_green;

pub use error::{Error, Result};
pub use grid::{GridSpec, ZGrid};
pub use spectral::{from_modes, to_modes, Axis, RealField, SpectralField};
