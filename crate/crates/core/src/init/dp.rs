//! Integer displacement initialization by dynamic programming.
//!
//! Each A-line is solved independently as a shortest path over rows whose
//! states are integer displacement pairs `(da, dl)`. The node cost is the
//! sum of squared differences between an axial patch of the pre frame and
//! the displaced patch of the post frame; moving between states on
//! consecutive rows costs `transition_weight` per unit of L1 distance. The
//! per-line solutions are then fused with a 3x3 median.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::median_filter;
use crate::types::{DisplacementField, RfFrame};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpParams {
    /// Axial search range `[-A, A]` in samples.
    pub axial_search: usize,
    /// Lateral search range `[-L, L]` in A-lines.
    pub lateral_search: usize,
    pub transition_weight: f64,
    /// Half-width of the axial similarity patch.
    pub patch_half_width: usize,
}

impl Default for DpParams {
    fn default() -> Self {
        Self {
            axial_search: 8,
            lateral_search: 2,
            transition_weight: 4.0,
            patch_half_width: 5,
        }
    }
}

impl DpParams {
    pub fn validate(&self, dim: (usize, usize)) -> Result<()> {
        if self.axial_search < 1 {
            return Err(Error::Param("axial_search must be at least 1".into()));
        }
        if !(self.transition_weight >= 0.0 && self.transition_weight.is_finite()) {
            return Err(Error::Param("transition_weight must be non-negative".into()));
        }
        let margin = self.axial_search + self.patch_half_width;
        if dim.0 <= 2 * margin {
            return Err(Error::Param(format!(
                "axial search {} with patch half-width {} does not fit in {} rows",
                self.axial_search, self.patch_half_width, dim.0
            )));
        }
        Ok(())
    }

    /// Search states in row-major order over `(da, dl)`.
    pub fn states(&self) -> Vec<(isize, isize)> {
        let (a, l) = (self.axial_search as isize, self.lateral_search as isize);
        (-a..=a).flat_map(|da| (-l..=l).map(move |dl| (da, dl))).collect()
    }
}

fn l1(a: (isize, isize), b: (isize, isize)) -> f64 {
    ((a.0 - b.0).abs() + (a.1 - b.1).abs()) as f64
}

/// Total cost of a state path through a node-cost table.
pub fn path_cost(node: &Array2<f64>, states: &[(isize, isize)], weight: f64, path: &[usize]) -> f64 {
    let mut cost = 0.0;
    for (r, &s) in path.iter().enumerate() {
        cost += node[[r, s]];
        if r > 0 {
            cost += weight * l1(states[path[r - 1]], states[s]);
        }
    }
    cost
}

/// Minimum-cost state path through `node` (rows x states). Ties go to the
/// state closest to zero displacement.
pub fn solve_line(node: &Array2<f64>, states: &[(isize, isize)], weight: f64) -> Vec<usize> {
    let (rows, count) = node.dim();
    if rows == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&s| (states[s].0.abs() + states[s].1.abs(), states[s].0.abs(), states[s]));

    let mut back = Array2::<usize>::zeros((rows, count));
    let mut acc: Vec<f64> = node.row(0).to_vec();
    let mut next = vec![0.0; count];
    for r in 1..rows {
        for s in 0..count {
            let mut best = f64::INFINITY;
            let mut arg = order[0];
            for &p in &order {
                let c = acc[p] + weight * l1(states[p], states[s]);
                if c < best {
                    best = c;
                    arg = p;
                }
            }
            next[s] = best + node[[r, s]];
            back[[r, s]] = arg;
        }
        std::mem::swap(&mut acc, &mut next);
    }

    let mut end = order[0];
    for &s in &order {
        if acc[s] < acc[end] {
            end = s;
        }
    }
    let mut path = vec![end; rows];
    for r in (1..rows).rev() {
        path[r - 1] = back[[r, path[r]]];
    }
    path
}

fn node_costs(pre: &Array2<f64>, post: &Array2<f64>, j: usize, p: &DpParams, states: &[(isize, isize)]) -> Array2<f64> {
    let (m, n) = pre.dim();
    let margin = p.axial_search + p.patch_half_width;
    let h = p.patch_half_width as isize;
    let rows = m - 2 * margin;
    Array2::from_shape_fn((rows, states.len()), |(r, s)| {
        let i = (r + margin) as isize;
        let (da, dl) = states[s];
        let jj = j as isize + dl;
        if jj < 0 || jj >= n as isize {
            return f64::INFINITY;
        }
        (-h..=h)
            .map(|k| {
                let diff = pre[[(i + k) as usize, j]] - post[[(i + k + da) as usize, jj as usize]];
                diff * diff
            })
            .sum()
    })
}

/// Coarse integer displacement between two frames.
pub fn dp_initialize(pre: &RfFrame, post: &RfFrame, p: &DpParams) -> Result<DisplacementField> {
    let dim = pre.dim();
    if post.dim() != dim {
        return Err(Error::Shape {
            expected: dim,
            got: post.dim(),
        });
    }
    p.validate(dim)?;
    let (m, n) = dim;
    let states = p.states();
    let margin = p.axial_search + p.patch_half_width;
    let solve = |j: usize| -> Vec<usize> {
        let node = node_costs(pre.samples(), post.samples(), j, p, &states);
        solve_line(&node, &states, p.transition_weight)
    };
    #[cfg(feature = "parallel")]
    let paths: Vec<Vec<usize>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(solve).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let paths: Vec<Vec<usize>> = (0..n).map(solve).collect();

    let mut axial = Array2::zeros(dim);
    let mut lateral = Array2::zeros(dim);
    for (j, path) in paths.iter().enumerate() {
        for i in 0..m {
            let r = i.clamp(margin, m - 1 - margin) - margin;
            let (da, dl) = states[path[r]];
            axial[[i, j]] = da as f64;
            lateral[[i, j]] = dl as f64;
        }
    }
    DisplacementField::new(median_filter(&axial, 1), median_filter(&lateral, 1))
}
