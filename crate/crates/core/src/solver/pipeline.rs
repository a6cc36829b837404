use crate::error::{Error, Result};
use crate::filters::mean;
use crate::init::dp_initialize;
use crate::interp::CubicSampler;
use crate::solver::atoms::{build_atoms, pack, unpack, Atom};
use crate::solver::cost::{data_term, penalty_terms};
use crate::solver::linearize::warp_and_linearize;
use crate::solver::params::{BiasState, Method, SolverParams, Variant};
use crate::solver::sparse::SparseSolver;
use crate::solver::system::{assemble, Pattern};
use crate::strain::{compute_strains, epr_map, EprOptions};
use crate::types::{DisplacementField, EprField, RfFrame, StrainTensorField};

const LINE_SEARCH_HALVINGS: usize = 10;

/// Re-estimates the EPR from strains: guarded ratio, clamp, then a median
/// filter of radius `epr_median_radius`.
pub fn update_epr(strains: &StrainTensorField, params: &SolverParams, previous: &EprField) -> Result<EprField> {
    let opts = EprOptions {
        s_floor: params.s_floor,
        bounds: params.nu_bounds(),
        median_radius: Some(params.epr_median_radius),
    };
    epr_map(strains, previous, &opts)
}

#[derive(Clone, Debug)]
pub struct TrackingResult {
    pub displacement: DisplacementField,
    /// Strains from the reporting windows.
    pub strains: StrainTensorField,
    /// EPR estimated from the reported strains.
    pub epr: EprField,
    /// EPR field used by the last iteration.
    pub solver_nu: EprField,
    pub bias: BiasState,
    /// Objective value before the first iteration and after each one.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Objective<'a> {
    pre: &'a RfFrame,
    sampler: CubicSampler<'a>,
}

impl Objective<'_> {
    fn value(&self, d: &DisplacementField, atoms: &[Atom]) -> Result<f64> {
        let (reg, mech) = penalty_terms(atoms, &pack(d));
        let total = data_term(self.pre, &self.sampler, d) + reg + mech;
        if !total.is_finite() {
            return Err(Error::Numerical(format!("objective became {total}")));
        }
        Ok(total)
    }
}

/// Mean forward differences of the axial displacement along the beam and of
/// the lateral displacement across it.
fn bias_from(d: &DisplacementField) -> BiasState {
    let (m, n) = d.dim();
    let a = d.axial();
    let l = d.lateral();
    let eps_a = if m > 1 {
        mean((0..n).flat_map(|j| (0..m - 1).map(move |i| a[[i + 1, j]] - a[[i, j]])))
    } else {
        0.0
    };
    let eps_l = if n > 1 {
        mean((0..m).flat_map(|i| (0..n - 1).map(move |j| l[[i, j + 1]] - l[[i, j]])))
    } else {
        0.0
    };
    BiasState { eps_a, eps_l }
}

/// Estimates the displacement between `pre` and `post` with `method`.
///
/// Each outer iteration linearizes the data term at the current estimate,
/// solves the normal equations, and takes the longest step among
/// `1, 1/2, 1/4, ...` that does not increase the objective. The strain
/// biases and the EPR field are then re-estimated and kept only if they do
/// not increase the objective either, so the recorded cost trace never
/// increases.
pub fn run_tracking(
    pre: &RfFrame,
    post: &RfFrame,
    method: Method,
    params: &SolverParams,
    init: Option<&DisplacementField>,
) -> Result<TrackingResult> {
    params.validate()?;
    pre.ensure_trackable()?;
    let dim = pre.dim();
    if post.dim() != dim {
        return Err(Error::Shape {
            expected: dim,
            got: post.dim(),
        });
    }
    let p = params.for_method(method);
    let variant: Variant = method.variant();
    let mut d = match init {
        Some(d0) if d0.dim() != dim => {
            return Err(Error::Shape {
                expected: dim,
                got: d0.dim(),
            })
        }
        Some(d0) => d0.clone(),
        None => dp_initialize(pre, post, &p.dp)?,
    };
    let mut nu = EprField::constant(dim, p.nu_init);
    let mut bias = BiasState::default();

    let objective = Objective {
        pre,
        sampler: CubicSampler::new(post.samples().view()),
    };
    let mut atoms = build_atoms(dim, &p, variant, &nu, bias);
    let pattern = Pattern::new(dim, &atoms);
    let mut solver = SparseSolver::new();
    let mut cost = objective.value(&d, &atoms)?;
    let mut trace = vec![cost];
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=p.outer_iterations {
        iterations = it;
        let lin = warp_and_linearize(pre, post, &d)?;
        let packed = pack(&d);
        let sys = assemble(&lin, &packed, &atoms, &pattern)?;
        let delta = solver.solve(&sys, p.linear_solver_tolerance)?;
        let delta_max = delta.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));

        let mut moved = 0.0;
        let mut step = 1.0;
        for _ in 0..=LINE_SEARCH_HALVINGS {
            if delta_max == 0.0 {
                break;
            }
            let candidate: Vec<f64> = packed.iter().zip(&delta).map(|(x, dx)| x + step * dx).collect();
            let cd = unpack(&candidate, dim);
            let c = objective.value(&cd, &atoms)?;
            if c <= cost {
                d = cd;
                cost = c;
                moved = step * delta_max;
                break;
            }
            step *= 0.5;
        }

        if p.update_bias {
            let new_bias = bias_from(&d);
            let new_atoms = build_atoms(dim, &p, variant, &nu, new_bias);
            let c = objective.value(&d, &new_atoms)?;
            if c <= cost {
                bias = new_bias;
                atoms = new_atoms;
                cost = c;
            }
        }
        if it >= p.epr_update_from_iteration {
            let strains = compute_strains(&d, &p.internal_strain);
            let new_nu = update_epr(&strains, &p, &nu)?;
            let new_atoms = build_atoms(dim, &p, variant, &new_nu, bias);
            let c = objective.value(&d, &new_atoms)?;
            if c <= cost {
                nu = new_nu;
                atoms = new_atoms;
                cost = c;
            }
        }
        trace.push(cost);
        if moved < p.step_tolerance {
            converged = true;
            break;
        }
    }
    if let [.., before, after] = trace[..] {
        converged |= before - after <= p.cost_tolerance * before.abs();
    }

    let strains = compute_strains(&d, &p.report_strain);
    let epr = update_epr(&strains, &p, &nu)?;
    Ok(TrackingResult {
        displacement: d,
        strains,
        epr,
        solver_nu: nu,
        bias,
        cost_trace: trace,
        iterations,
        converged,
    })
}
