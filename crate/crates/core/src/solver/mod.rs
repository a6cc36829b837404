//! Regularized displacement estimation.

mod atoms;
pub mod cost;
pub mod linearize;
pub mod params;
pub mod pipeline;
pub mod sparse;
pub mod system;

pub use cost::{evaluate_cost, evaluate_cost_terms, CostBreakdown};
pub use linearize::{warp_and_linearize, Linearization};
pub use params::{BiasState, Method, SolverParams, Variant};
pub use pipeline::{run_tracking, update_epr, TrackingResult};
pub use sparse::{solve_sparse, SparseSolver};
pub use system::{assemble_system_l1, assemble_system_l2, LinearSystem, Pattern};

/// Stacks a displacement field into the solver's interleaved unknown
/// vector: sample `(i, j)` of an `m`-row grid contributes its axial
/// component at `2 (j m + i)` and its lateral one right after.
pub fn stack_displacement(d: &crate::types::DisplacementField) -> Vec<f64> {
    atoms::pack(d)
}

/// Inverse of [`stack_displacement`].
pub fn unstack_displacement(v: &[f64], dim: (usize, usize)) -> crate::Result<crate::types::DisplacementField> {
    if v.len() != 2 * dim.0 * dim.1 {
        return Err(crate::Error::Param(format!(
            "vector of length {} does not match a {}x{} grid",
            v.len(),
            dim.0,
            dim.1
        )));
    }
    let d = atoms::unpack(v, dim);
    crate::types::DisplacementField::new(d.axial, d.lateral)
}
