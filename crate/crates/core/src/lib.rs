//! Regularized ultrasound speckle tracking.
//!
//! The crate estimates axial and lateral displacement between a pre- and a
//! post-deformation RF frame by minimizing an energy that combines a data
//! term, first- and second-order continuity penalties and, optionally, a
//! mechanical prior tying lateral strain to axial strain through a
//! per-sample effective Poisson's ratio (EPR). Quadratic (`soul`,
//! `mechsoul`) and smoothed-L1 (`l1_soul`, `l1_mechsoul`) penalties are
//! supported.
//!
//! Around the solvers sit a synthetic phantom generator with exact ground
//! truth, dynamic-programming and NCC initializers, least-squares strain
//! estimation, evaluation metrics, binary file formats and image rendering.

pub mod error;
pub mod filters;
pub mod init;
pub mod interp;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod render;
pub mod solver;
pub mod strain;
pub mod types;

pub use error::{Error, Result};
pub use types::{DisplacementField, EprField, Geometry, Mask, NuBounds, RfFrame, StrainTensorField};
