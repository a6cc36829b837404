//! Windowed normalized cross-correlation tracking on upsampled frames.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::CubicSampler;
use crate::types::{DisplacementField, RfFrame};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NccParams {
    pub upsample_factor: usize,
    /// Axial window length in RF wavelengths at the original sampling.
    pub window_wavelengths: f64,
    /// Lateral window width in A-lines (odd).
    pub window_lateral_lines: usize,
    /// Axial overlap between consecutive windows.
    pub overlap_fraction: f64,
    /// Integer search half-ranges at the original resolution.
    pub axial_search: usize,
    pub lateral_search: usize,
    pub subsample_fit: bool,
}

impl Default for NccParams {
    fn default() -> Self {
        Self {
            upsample_factor: 3,
            window_wavelengths: 5.0,
            window_lateral_lines: 5,
            overlap_fraction: 0.86,
            axial_search: 8,
            lateral_search: 2,
            subsample_fit: true,
        }
    }
}

impl NccParams {
    fn window_rows(&self, wavelength: f64) -> usize {
        (self.window_wavelengths * wavelength).round().max(3.0) as usize
    }

    pub fn validate(&self, dim: (usize, usize), wavelength: f64) -> Result<()> {
        if self.upsample_factor == 0 {
            return Err(Error::Param("upsample_factor must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Param("overlap_fraction must be in [0, 1)".into()));
        }
        if self.window_lateral_lines == 0 || self.window_lateral_lines % 2 == 0 {
            return Err(Error::Param("window_lateral_lines must be odd".into()));
        }
        let rows = self.window_rows(wavelength);
        if rows >= dim.0 || self.window_lateral_lines > dim.1 {
            return Err(Error::Param(format!(
                "NCC window {rows}x{} does not fit in a {}x{} frame",
                self.window_lateral_lines, dim.0, dim.1
            )));
        }
        Ok(())
    }
}

/// Separable Catmull-Rom upsampling; output sample `u` sits at `u / factor`.
pub fn upsample(data: &Array2<f64>, factor: usize) -> Array2<f64> {
    let (m, n) = data.dim();
    let sampler = CubicSampler::new(data.view());
    let f = factor as f64;
    Array2::from_shape_fn(((m - 1) * factor + 1, (n - 1) * factor + 1), |(u, v)| {
        sampler.sample(u as f64 / f, v as f64 / f)
    })
}

struct Window<'a> {
    post: &'a Array2<f64>,
    r0: usize,
    c0: usize,
    rows: usize,
    cols: usize,
    centred: Vec<f64>,
    energy: f64,
}

impl<'a> Window<'a> {
    fn new(pre: &'a Array2<f64>, post: &'a Array2<f64>, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut centred = Vec::with_capacity(rows * cols);
        for r in r0..r0 + rows {
            centred.extend(pre.row(r).iter().skip(c0).take(cols).copied());
        }
        let mean = centred.iter().sum::<f64>() / centred.len() as f64;
        centred.iter_mut().for_each(|v| *v -= mean);
        let energy = centred.iter().map(|v| v * v).sum();
        Self {
            post,
            r0,
            c0,
            rows,
            cols,
            centred,
            energy,
        }
    }

    /// NCC with the post window offset by `(da, dl)` upsampled samples;
    /// `None` when the offset window leaves the frame.
    fn ncc(&self, da: isize, dl: isize) -> Option<f64> {
        let (pm, pn) = self.post.dim();
        let r = self.r0 as isize + da;
        let c = self.c0 as isize + dl;
        if r < 0 || c < 0 || r as usize + self.rows > pm || c as usize + self.cols > pn {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        let (mut cross, mut sum, mut sq) = (0.0, 0.0, 0.0);
        let mut k = 0;
        for rr in r..r + self.rows {
            let row = self.post.row(rr);
            for q in row.iter().skip(c).take(self.cols) {
                cross += self.centred[k] * q;
                sum += q;
                sq += q * q;
                k += 1;
            }
        }
        let var = sq - sum * sum / k as f64;
        if var <= 0.0 || self.energy <= 0.0 {
            return Some(0.0);
        }
        Some((cross / (self.energy * var).sqrt()).clamp(-1.0, 1.0))
    }
}

fn parabolic(minus: Option<f64>, centre: f64, plus: Option<f64>) -> f64 {
    match (minus, plus) {
        (Some(a), Some(b)) => {
            let denom = a - 2.0 * centre + b;
            if denom < 0.0 {
                (0.5 * (a - b) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}

/// Estimate at one window: `(axial, lateral)` in upsampled samples, or
/// `None` for a degenerate window.
fn track_window(w: &Window<'_>, p: &NccParams) -> Option<(f64, f64)> {
    if w.energy <= 0.0 {
        return None;
    }
    let f = p.upsample_factor as isize;
    let (sa, sl) = (p.axial_search as isize, p.lateral_search as isize);
    let mut best: Option<(f64, isize, isize)> = None;
    let consider = |da: isize, dl: isize, best: &mut Option<(f64, isize, isize)>| {
        if let Some(c) = w.ncc(da, dl) {
            if best.is_none_or(|(b, _, _)| c > b) {
                *best = Some((c, da, dl));
            }
        }
    };
    for da in -sa..=sa {
        for dl in -sl..=sl {
            consider(da * f, dl * f, &mut best);
        }
    }
    let (_, ca, cl) = best?;
    for da in ca - f..=ca + f {
        for dl in cl - f..=cl + f {
            consider(da, dl, &mut best);
        }
    }
    let (peak, ba, bl) = best?;
    if !p.subsample_fit || peak >= 1.0 - 1e-12 {
        return Some((ba as f64, bl as f64));
    }
    let fa = parabolic(w.ncc(ba - 1, bl), peak, w.ncc(ba + 1, bl));
    let fl = parabolic(w.ncc(ba, bl - 1), peak, w.ncc(ba, bl + 1));
    Some((ba as f64 + fa, bl as f64 + fl))
}

fn infill(values: &mut Array2<Option<(f64, f64)>>) -> Array2<(f64, f64)> {
    let (rows, cols) = values.dim();
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        if let Some(v) = values[[r, c]] {
            return v;
        }
        let mut a = Vec::new();
        let mut l = Vec::new();
        for rr in r.saturating_sub(1)..(r + 2).min(rows) {
            for cc in c.saturating_sub(1)..(c + 2).min(cols) {
                if let Some((va, vl)) = values[[rr, cc]] {
                    a.push(va);
                    l.push(vl);
                }
            }
        }
        let median = |v: &mut Vec<f64>| {
            if v.is_empty() {
                return 0.0;
            }
            v.sort_by(f64::total_cmp);
            v[(v.len() - 1) / 2]
        };
        (median(&mut a), median(&mut l))
    })
}

/// Linear interpolation of `values` sampled at `centres` (ascending),
/// constant beyond the outermost centres.
fn interp_axis(centres: &[f64], x: f64) -> (usize, usize, f64) {
    let last = centres.len() - 1;
    if x <= centres[0] || last == 0 {
        return (0, 0, 0.0);
    }
    if x >= centres[last] {
        return (last, last, 0.0);
    }
    let k = centres.partition_point(|&c| c <= x) - 1;
    let t = (x - centres[k]) / (centres[k + 1] - centres[k]);
    (k, k + 1, t)
}

/// Tracks `post` against `pre` with NCC block matching.
pub fn ncc_track(pre: &RfFrame, post: &RfFrame, p: &NccParams) -> Result<DisplacementField> {
    let dim = pre.dim();
    if post.dim() != dim {
        return Err(Error::Shape {
            expected: dim,
            got: post.dim(),
        });
    }
    let wavelength = pre.geometry().wavelength_samples();
    p.validate(dim, wavelength)?;
    let (m, n) = dim;
    let f = p.upsample_factor;
    let up_pre = upsample(pre.samples(), f);
    let up_post = upsample(post.samples(), f);

    let win_rows = p.window_rows(wavelength);
    let half_rows = win_rows / 2;
    let step = ((win_rows as f64 * (1.0 - p.overlap_fraction)).round() as usize).max(1);
    let half_cols = p.window_lateral_lines / 2;
    let row_centres: Vec<usize> = (half_rows..m - (win_rows - half_rows)).step_by(step).collect();
    let row_centres = if row_centres.is_empty() { vec![m / 2] } else { row_centres };
    let col_centres: Vec<usize> = (half_cols..n - half_cols).collect();

    let up_rows = (win_rows - 1) * f + 1;
    let up_cols = (p.window_lateral_lines - 1) * f + 1;
    let jobs: Vec<(usize, usize)> = row_centres
        .iter()
        .flat_map(|&r| col_centres.iter().map(move |&c| (r, c)))
        .collect();
    let run = |&(r, c): &(usize, usize)| {
        let r0 = (r - half_rows) * f;
        let c0 = (c - half_cols) * f;
        let w = Window::new(&up_pre, &up_post, r0, c0, up_rows, up_cols);
        track_window(&w, p)
    };
    #[cfg(feature = "parallel")]
    let estimates: Vec<Option<(f64, f64)>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let estimates: Vec<Option<(f64, f64)>> = jobs.iter().map(run).collect();

    let mut grid = Array2::from_shape_vec((row_centres.len(), col_centres.len()), estimates)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let filled = infill(&mut grid);

    // Window centres sit at the middle of each window, in original samples.
    let rc: Vec<f64> = row_centres.iter().map(|&r| (r - half_rows) as f64 + (win_rows - 1) as f64 / 2.0).collect();
    let cc: Vec<f64> = col_centres.iter().map(|&c| c as f64).collect();
    let scale = 1.0 / f as f64;
    let mut axial = Array2::zeros(dim);
    let mut lateral = Array2::zeros(dim);
    for i in 0..m {
        let (r0, r1, ty) = interp_axis(&rc, i as f64);
        for j in 0..n {
            let (c0, c1, tx) = interp_axis(&cc, j as f64);
            let blend = |g: fn(&(f64, f64)) -> f64| {
                let top = g(&filled[[r0, c0]]) * (1.0 - tx) + g(&filled[[r0, c1]]) * tx;
                let bottom = g(&filled[[r1, c0]]) * (1.0 - tx) + g(&filled[[r1, c1]]) * tx;
                (top * (1.0 - ty) + bottom * ty) * scale
            };
            axial[[i, j]] = blend(|v| v.0);
            lateral[[i, j]] = blend(|v| v.1);
        }
    }
    DisplacementField::new(axial, lateral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_speckle, generate_speckle_moved, PhantomSpec};

    fn spec() -> PhantomSpec {
        PhantomSpec {
            rows: 160,
            cols: 32,
            seed: 21,
            ..PhantomSpec::default()
        }
    }

    #[test]
    fn identical_frames_give_zero() {
        let pre = generate_speckle(&spec()).unwrap();
        let d = ncc_track(&pre, &pre, &NccParams::default()).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn integer_shift_recovered() {
        let pre = generate_speckle(&spec()).unwrap();
        let s = pre.samples();
        let (m, n) = s.dim();
        let post = Array2::from_shape_fn((m, n), |(i, j)| {
            let si = (i as isize - 4).clamp(0, m as isize - 1) as usize;
            let sj = (j as isize - 1).clamp(0, n as isize - 1) as usize;
            s[[si, sj]]
        });
        let post = RfFrame::new(post, *pre.geometry()).unwrap();
        let d = ncc_track(&pre, &post, &NccParams::default()).unwrap();
        for i in 40..120 {
            for j in 6..26 {
                assert_eq!(d.axial()[[i, j]], 4.0, "({i},{j})");
                assert_eq!(d.lateral()[[i, j]], 1.0, "({i},{j})");
            }
        }
    }

    #[test]
    fn half_sample_shift() {
        let pre = generate_speckle(&spec()).unwrap();
        let post = generate_speckle_moved(&spec(), |_, _| (0.5, 0.0)).unwrap();
        let d = ncc_track(&pre, &post, &NccParams::default()).unwrap();
        let mean = d.axial().slice(ndarray::s![30..130, 4..28]).mean().unwrap();
        assert!((mean - 0.5).abs() <= 0.1, "{mean}");
    }

    #[test]
    fn degenerate_windows_are_infilled() {
        let pre = generate_speckle(&spec()).unwrap();
        let mut flat = pre.samples().clone();
        flat.slice_mut(ndarray::s![60..110, 10..20]).fill(0.0);
        let flat = RfFrame::new(flat, *pre.geometry()).unwrap();
        let d = ncc_track(&flat, &flat, &NccParams::default()).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn window_must_fit() {
        let pre = RfFrame::new(Array2::zeros((30, 8)), Default::default()).unwrap();
        assert!(ncc_track(&pre, &pre, &NccParams::default()).is_err());
    }

    #[test]
    fn upsample_keeps_original_samples() {
        let pre = generate_speckle(&spec()).unwrap();
        let up = upsample(pre.samples(), 3);
        for ((i, j), &v) in pre.samples().indexed_iter() {
            assert_eq!(up[[3 * i, 3 * j]], v);
        }
    }
}
