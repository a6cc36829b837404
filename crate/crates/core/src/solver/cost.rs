use crate::error::Result;
use crate::interp::CubicSampler;
use crate::solver::atoms::{build_atoms, pack, Atom, Family};
use crate::solver::linearize::{check_shapes, inside};
use crate::solver::params::{BiasState, SolverParams, Variant};
use crate::types::{DisplacementField, EprField, RfFrame};

/// Objective value split by term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub data: f64,
    pub regularization: f64,
    pub mechanical: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.data + self.regularization + self.mechanical
    }
}

/// Sum of squared intensity mismatches over samples whose displaced
/// position lies inside the post frame.
pub(crate) fn data_term(pre: &RfFrame, sampler: &CubicSampler<'_>, d: &DisplacementField) -> f64 {
    let dim = pre.dim();
    let mut acc = 0.0;
    for ((i, j), &i1) in pre.samples().indexed_iter() {
        let y = i as f64 + d.axial[[i, j]];
        let x = j as f64 + d.lateral[[i, j]];
        if inside(y, x, dim) {
            let r = i1 - sampler.sample(y, x);
            acc += r * r;
        }
    }
    acc
}

pub(crate) fn penalty_terms(atoms: &[Atom], packed: &[f64]) -> (f64, f64) {
    let (mut reg, mut mech) = (0.0, 0.0);
    for atom in atoms {
        let v = atom.penalty(atom.argument(packed));
        match atom.family {
            Family::Regularization => reg += v,
            Family::Mechanical => mech += v,
        }
    }
    (reg, mech)
}

/// Evaluates one of the four objectives at total displacement `d`, with the
/// exact (non-linearized) data term.
pub fn evaluate_cost_terms(
    pre: &RfFrame,
    post: &RfFrame,
    d: &DisplacementField,
    params: &SolverParams,
    nu: &EprField,
    bias: BiasState,
    variant: Variant,
) -> Result<CostBreakdown> {
    check_shapes(pre, post, d)?;
    let sampler = CubicSampler::new(post.samples().view());
    let atoms = build_atoms(pre.dim(), params, variant, nu, bias);
    let (regularization, mechanical) = penalty_terms(&atoms, &pack(d));
    Ok(CostBreakdown {
        data: data_term(pre, &sampler, d),
        regularization,
        mechanical,
    })
}

pub fn evaluate_cost(
    pre: &RfFrame,
    post: &RfFrame,
    d: &DisplacementField,
    params: &SolverParams,
    nu: &EprField,
    bias: BiasState,
    variant: Variant,
) -> Result<f64> {
    evaluate_cost_terms(pre, post, d, params, nu, bias, variant).map(|c| c.total())
}
