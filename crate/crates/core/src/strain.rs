//! Least-squares strain estimation and effective Poisson's ratio maps.

use ndarray::{Array2, Axis as NdAxis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::median_filter;
use crate::types::{DisplacementField, EprField, NuBounds, StrainTensorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Axial,
    Lateral,
}

/// Least-squares differentiation window lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsqParams {
    pub window_axial: usize,
    pub window_lateral: usize,
}

impl Default for LsqParams {
    fn default() -> Self {
        Self {
            window_axial: 43,
            window_lateral: 9,
        }
    }
}

impl LsqParams {
    /// Short windows used between solver iterations.
    pub fn internal() -> Self {
        Self {
            window_axial: 11,
            window_lateral: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("window_axial", self.window_axial), ("window_lateral", self.window_lateral)] {
            if w < 3 || w % 2 == 0 {
                return Err(Error::Param(format!("{name} must be odd and at least 3, got {w}")));
            }
        }
        Ok(())
    }
}

/// OLS slope of `values[lo..=hi]` against their indices.
fn slope(values: &[f64], lo: usize, hi: usize) -> f64 {
    let count = (hi - lo + 1) as f64;
    let x_mean = (lo + hi) as f64 / 2.0;
    let y_mean = values[lo..=hi].iter().sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &y) in values[lo..=hi].iter().enumerate() {
        let dx = (lo + k) as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn differentiate_line(values: &[f64], window: usize, out: &mut [f64]) {
    let len = values.len();
    let half = window / 2;
    let min_points = 3.min(len);
    for (k, o) in out.iter_mut().enumerate() {
        let mut lo = k.saturating_sub(half);
        let mut hi = (k + half).min(len - 1);
        while hi - lo + 1 < min_points {
            if lo > 0 {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        *o = slope(values, lo, hi);
    }
}

/// Slope of a straight-line least-squares fit in a window centred on each
/// sample along `axis`. Windows are truncated at the borders but always
/// span at least three samples when the field allows it.
pub fn ls_differentiate(field: &Array2<f64>, axis: Axis, window: usize) -> Array2<f64> {
    let nd_axis = match axis {
        Axis::Axial => NdAxis(0),
        Axis::Lateral => NdAxis(1),
    };
    let mut out = Array2::zeros(field.dim());
    let mut line = Vec::new();
    let mut result = Vec::new();
    for (src, mut dst) in field.lanes(nd_axis).into_iter().zip(out.lanes_mut(nd_axis)) {
        line.clear();
        line.extend(src.iter().copied());
        result.clear();
        result.resize(line.len(), 0.0);
        differentiate_line(&line, window, &mut result);
        dst.iter_mut().zip(&result).for_each(|(d, &r)| *d = r);
    }
    out
}

/// Axial strain from the axial displacement and lateral strain from the
/// lateral displacement.
pub fn compute_strains(d: &DisplacementField, p: &LsqParams) -> StrainTensorField {
    StrainTensorField {
        s_yy: ls_differentiate(d.axial(), Axis::Axial, p.window_axial),
        s_xx: ls_differentiate(d.lateral(), Axis::Lateral, p.window_lateral),
    }
}

/// Guards applied when dividing lateral by axial strain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EprOptions {
    /// Samples with `|s_yy|` below this keep their previous value.
    pub s_floor: f64,
    pub bounds: NuBounds,
    /// Radius of a median filter applied after clamping; `None` disables it.
    pub median_radius: Option<usize>,
}

impl Default for EprOptions {
    fn default() -> Self {
        Self {
            s_floor: 1e-5,
            bounds: NuBounds::default(),
            median_radius: None,
        }
    }
}

/// Per-sample `-s_xx / s_yy`, clamped to the configured bounds. Where the
/// axial strain is too small to divide by, the value from `previous` is
/// kept.
pub fn epr_map(strains: &StrainTensorField, previous: &EprField, opts: &EprOptions) -> Result<EprField> {
    if previous.dim() != strains.dim() {
        return Err(Error::Shape {
            expected: strains.dim(),
            got: previous.dim(),
        });
    }
    let mut nu = Array2::zeros(strains.dim());
    Zip::from(&mut nu)
        .and(strains.s_yy())
        .and(strains.s_xx())
        .and(previous.nu())
        .for_each(|v, &syy, &sxx, &prev| {
            let raw = if syy.abs() >= opts.s_floor { -sxx / syy } else { prev };
            *v = opts.bounds.clamp(raw);
        });
    if let Some(r) = opts.median_radius {
        nu = median_filter(&nu, r);
    }
    EprField::with_bounds(nu, opts.bounds)
}
