//! Displacement initializers.

pub mod dp;
pub mod ncc;

pub use dp::{dp_initialize, DpParams};
pub use ncc::{ncc_track, NccParams};
