//! Synthetic speckle phantoms with exact ground truth.
//!
//! Frames are built by convolving randomly placed point scatterers with a
//! separable point-spread function: a Gaussian-windowed cosine along the
//! beam and a Gaussian across it. Deformations are analytic strain profiles
//! (uniform compression, a soft/hard inclusion, an inclusion with a
//! different Poisson's ratio) integrated into displacements, and the
//! post-deformation frame is synthesized by warping the pre frame.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{bilinear, CubicSampler};
use crate::types::{DisplacementField, EprField, Geometry, Mask, RfFrame, StrainTensorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub rows: usize,
    pub cols: usize,
    /// Mean number of scatterers per sample cell.
    pub scatterer_density: f64,
    /// RF carrier period along the beam, in samples.
    pub wavelength_samples: f64,
    /// Standard deviation of the axial pulse envelope, in samples.
    pub axial_sigma_samples: f64,
    /// Standard deviation of the lateral beam profile, in A-lines.
    pub lateral_sigma_lines: f64,
    pub seed: u64,
    /// Additive white Gaussian noise level relative to the frame RMS.
    pub noise_snr_db: Option<f64>,
    pub geometry: Geometry,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            rows: 256,
            cols: 128,
            scatterer_density: 0.5,
            wavelength_samples: 10.0,
            axial_sigma_samples: 6.0,
            lateral_sigma_lines: 1.5,
            seed: 1,
            noise_snr_db: None,
            geometry: Geometry::default(),
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Param(format!("phantom shape {}x{} is empty", self.rows, self.cols)));
        }
        if !(self.scatterer_density > 0.0 && self.scatterer_density.is_finite()) {
            return Err(Error::Param("scatterer_density must be positive".into()));
        }
        if !(self.wavelength_samples >= 2.0 && self.wavelength_samples.is_finite()) {
            return Err(Error::Param("wavelength_samples must be at least 2".into()));
        }
        if !(self.axial_sigma_samples > 0.0 && self.lateral_sigma_lines > 0.0) {
            return Err(Error::Param("pulse sigmas must be positive".into()));
        }
        if let Some(snr) = self.noise_snr_db {
            if !snr.is_finite() {
                return Err(Error::Param("noise_snr_db must be finite".into()));
            }
        }
        self.geometry.validate()
    }
}

struct Scatterer {
    y: f64,
    x: f64,
    amplitude: f64,
}

fn draw_scatterers(spec: &PhantomSpec) -> Result<(Vec<Scatterer>, f64, f64)> {
    let margin_y = 4.0 * spec.axial_sigma_samples;
    let margin_x = 4.0 * spec.lateral_sigma_lines;
    let height = spec.rows as f64 - 1.0 + 2.0 * margin_y;
    let width = spec.cols as f64 - 1.0 + 2.0 * margin_x;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let poisson = Poisson::new(spec.scatterer_density * height * width)
        .map_err(|e| Error::Param(format!("scatterer count: {e}")))?;
    let count = poisson.sample(&mut rng) as usize;
    let scatterers = (0..count)
        .map(|_| Scatterer {
            y: rng.random::<f64>() * height - margin_y,
            x: rng.random::<f64>() * width - margin_x,
            amplitude: rng.random_range(-1.0..=1.0),
        })
        .collect();
    Ok((scatterers, margin_y, margin_x))
}

fn render_scatterers<I>(spec: &PhantomSpec, scatterers: I, reach_y: f64, reach_x: f64) -> Array2<f64>
where
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    let (m, n) = (spec.rows, spec.cols);
    let k = 2.0 * PI / spec.wavelength_samples;
    let inv_ay = 1.0 / (2.0 * spec.axial_sigma_samples.powi(2));
    let inv_ax = 1.0 / (2.0 * spec.lateral_sigma_lines.powi(2));
    let mut out = Array2::<f64>::zeros((m, n));
    let mut lateral = Vec::new();
    for (y, x, amplitude) in scatterers {
        let r0 = (y - reach_y).ceil().max(0.0) as usize;
        let r1 = (y + reach_y).floor().min(m as f64 - 1.0);
        let c0 = (x - reach_x).ceil().max(0.0) as usize;
        let c1 = (x + reach_x).floor().min(n as f64 - 1.0);
        if r1 < 0.0 || c1 < 0.0 || r0 as f64 > r1 || c0 as f64 > c1 {
            continue;
        }
        let (r1, c1) = (r1 as usize, c1 as usize);
        lateral.clear();
        lateral.extend((c0..=c1).map(|c| {
            let dx = c as f64 - x;
            (-dx * dx * inv_ax).exp()
        }));
        for r in r0..=r1 {
            let dy = r as f64 - y;
            let axial = amplitude * (k * dy).cos() * (-dy * dy * inv_ay).exp();
            let mut row = out.row_mut(r);
            for (c, w) in (c0..=c1).zip(&lateral) {
                row[c] += axial * w;
            }
        }
    }
    out
}

/// Mean and RMS-about-the-mean of a frame; the RMS of an all-zero frame is
/// reported as one so normalization leaves it untouched.
fn frame_stats(samples: &Array2<f64>) -> (f64, f64) {
    let mean = samples.mean().unwrap_or(0.0);
    let rms = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    (mean, if rms > 0.0 { rms } else { 1.0 })
}

fn normalize(mut samples: Array2<f64>, (mean, rms): (f64, f64)) -> Array2<f64> {
    samples.mapv_inplace(|v| (v - mean) / rms);
    samples
}

/// Synthesizes a zero-mean, unit-RMS speckle frame; deterministic in
/// `spec.seed`.
pub fn generate_speckle(spec: &PhantomSpec) -> Result<RfFrame> {
    spec.validate()?;
    let (scatterers, reach_y, reach_x) = draw_scatterers(spec)?;
    let samples = render_scatterers(
        spec,
        scatterers.iter().map(|s| (s.y, s.x, s.amplitude)),
        reach_y,
        reach_x,
    );
    let stats = frame_stats(&samples);
    let frame = RfFrame::new(normalize(samples, stats), spec.geometry)?;
    match spec.noise_snr_db {
        Some(snr) => add_noise(&frame, snr, spec.seed),
        None => Ok(frame),
    }
}

/// Synthesizes the frame produced by the same scatterers as
/// [`generate_speckle`] after each one moved by `motion(y, x)`, returned as
/// `(dy, dx)` in samples and A-lines. The result is scaled exactly like the
/// unmoved frame. No noise is added.
pub fn generate_speckle_moved<F>(spec: &PhantomSpec, motion: F) -> Result<RfFrame>
where
    F: Fn(f64, f64) -> (f64, f64),
{
    spec.validate()?;
    let (scatterers, reach_y, reach_x) = draw_scatterers(spec)?;
    let still = render_scatterers(spec, scatterers.iter().map(|s| (s.y, s.x, s.amplitude)), reach_y, reach_x);
    let moved = scatterers.iter().map(|s| {
        let (dy, dx) = motion(s.y, s.x);
        (s.y + dy, s.x + dx, s.amplitude)
    });
    let samples = render_scatterers(spec, moved, reach_y, reach_x);
    RfFrame::new(normalize(samples, frame_stats(&still)), spec.geometry)
}

/// Adds white Gaussian noise at `snr_db` below the frame's RMS amplitude.
pub fn add_noise(frame: &RfFrame, snr_db: f64, seed: u64) -> Result<RfFrame> {
    let samples = frame.samples();
    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt();
    let sigma = rms / 10f64.powf(snr_db / 20.0);
    if sigma == 0.0 {
        return Ok(frame.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Param(format!("noise: {e}")))?;
    let noisy = samples.mapv(|v| v + normal.sample(&mut rng));
    RfFrame::new(noisy, *frame.geometry())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeformationKind {
    UniformCompression,
    Inclusion,
    DifferentPr,
    LateralBoundary,
}

/// Elliptical inclusion, in sample units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InclusionSpec {
    pub center_row: f64,
    pub center_col: f64,
    pub radius_rows: f64,
    pub radius_cols: f64,
    /// Background strain divided by inclusion strain (2 for a twice-as-stiff
    /// inclusion).
    pub strain_contrast: f64,
    pub nu: f64,
    /// Width of the raised-cosine edge, in axial samples.
    pub transition_width: f64,
}

impl Default for InclusionSpec {
    fn default() -> Self {
        Self {
            center_row: 128.0,
            center_col: 64.0,
            radius_rows: 48.0,
            radius_cols: 16.0,
            strain_contrast: 2.0,
            nu: 0.49,
            transition_width: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformationSpec {
    pub kind: DeformationKind,
    /// Applied axial strain; positive values compress.
    pub applied_strain: f64,
    pub background_nu: f64,
    pub inclusion: InclusionSpec,
}

impl Default for DeformationSpec {
    fn default() -> Self {
        Self {
            kind: DeformationKind::UniformCompression,
            applied_strain: 0.02,
            background_nu: 0.49,
            inclusion: InclusionSpec::default(),
        }
    }
}

impl DeformationSpec {
    pub fn uniform(applied_strain: f64, nu: f64) -> Self {
        Self {
            kind: DeformationKind::UniformCompression,
            applied_strain,
            background_nu: nu,
            ..Self::default()
        }
    }

    fn uses_inclusion(&self) -> bool {
        matches!(self.kind, DeformationKind::Inclusion | DeformationKind::DifferentPr)
    }

    pub fn validate(&self, dim: (usize, usize)) -> Result<()> {
        if !(self.applied_strain.abs() <= 0.1) {
            return Err(Error::Param(format!(
                "applied strain {} outside the small-strain range |e| <= 0.1",
                self.applied_strain
            )));
        }
        let nu_ok = |v: f64| (0.0..0.5).contains(&v);
        if !nu_ok(self.background_nu) {
            return Err(Error::Param(format!("background_nu {} outside [0, 0.5)", self.background_nu)));
        }
        if self.uses_inclusion() {
            let inc = &self.inclusion;
            if !nu_ok(inc.nu) {
                return Err(Error::Param(format!("inclusion nu {} outside [0, 0.5)", inc.nu)));
            }
            if !(inc.strain_contrast > 0.0 && inc.strain_contrast.is_finite()) {
                return Err(Error::Param("strain_contrast must be positive".into()));
            }
            if !(inc.radius_rows > 0.0 && inc.radius_cols > 0.0 && inc.transition_width >= 0.0) {
                return Err(Error::Param("inclusion radii must be positive".into()));
            }
            let half = inc.transition_width / 2.0;
            let (m, n) = (dim.0 as f64, dim.1 as f64);
            let col_reach = (inc.radius_rows + half) * inc.radius_cols / inc.radius_rows;
            let inside = inc.center_row - inc.radius_rows - half >= 0.0
                && inc.center_row + inc.radius_rows + half <= m - 1.0
                && inc.center_col - col_reach >= 0.0
                && inc.center_col + col_reach <= n - 1.0;
            if !inside {
                return Err(Error::Param("inclusion is not fully inside the grid".into()));
            }
        }
        Ok(())
    }

    /// Weight in `[0, 1]`: one inside the inclusion, zero outside, with a
    /// raised-cosine edge.
    pub fn inclusion_weight(&self, y: f64, x: f64) -> f64 {
        if !self.uses_inclusion() {
            return 0.0;
        }
        let inc = &self.inclusion;
        let r = (((y - inc.center_row) / inc.radius_rows).powi(2) + ((x - inc.center_col) / inc.radius_cols).powi(2)).sqrt();
        let s = (r - 1.0) * inc.radius_rows;
        let half = inc.transition_width / 2.0;
        if s <= -half {
            1.0
        } else if s >= half {
            0.0
        } else {
            0.5 * (1.0 + (PI * (s + half) / inc.transition_width).cos())
        }
    }

    /// Analytic `(s_yy, nu)` at a continuous position.
    fn strain_and_nu(&self, y: f64, x: f64) -> (f64, f64) {
        let eps = self.applied_strain;
        match self.kind {
            DeformationKind::UniformCompression | DeformationKind::LateralBoundary => (-eps, self.background_nu),
            DeformationKind::Inclusion => {
                let b = self.inclusion_weight(y, x);
                let s_yy = -eps * ((1.0 - b) + b / self.inclusion.strain_contrast);
                (s_yy, (1.0 - b) * self.background_nu + b * self.inclusion.nu)
            }
            DeformationKind::DifferentPr => {
                let b = self.inclusion_weight(y, x);
                (-eps, (1.0 - b) * self.background_nu + b * self.inclusion.nu)
            }
        }
    }

    fn s_xx(&self, y: f64, x: f64) -> f64 {
        let (s_yy, nu) = self.strain_and_nu(y, x);
        -nu * s_yy
    }
}

const SIMPSON_PANELS: usize = 16;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h = (b - a) / SIMPSON_PANELS as f64;
    let mut acc = f(a) + f(b);
    for k in 1..SIMPSON_PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Ground-truth displacement, strains, and effective Poisson's ratio.
pub struct GroundTruth {
    pub displacement: DisplacementField,
    pub strain: StrainTensorField,
    pub epr: EprField,
}

/// Builds the analytic deformation on an `m x n` grid.
///
/// The top row is held fixed axially and the lateral centre line (the left
/// edge for [`DeformationKind::LateralBoundary`]) is held fixed laterally;
/// displacements are the integrals of the strain profile from there.
pub fn analytic_displacement(def: &DeformationSpec, dim: (usize, usize)) -> Result<GroundTruth> {
    def.validate(dim)?;
    let (m, n) = dim;
    let eps = def.applied_strain;
    let nu_bg = def.background_nu;
    let lateral_origin = match def.kind {
        DeformationKind::LateralBoundary => 0.0,
        _ => (n as f64 - 1.0) / 2.0,
    };

    let mut s_yy = Array2::zeros(dim);
    let mut s_xx = Array2::zeros(dim);
    let mut nu = Array2::zeros(dim);
    for ((i, j), v) in s_yy.indexed_iter_mut() {
        let (syy, nu_ij) = def.strain_and_nu(i as f64, j as f64);
        *v = syy;
        s_xx[[i, j]] = -nu_ij * syy;
        nu[[i, j]] = nu_ij;
    }

    let (axial, lateral) = match def.kind {
        DeformationKind::UniformCompression | DeformationKind::LateralBoundary => (
            Array2::from_shape_fn(dim, |(i, _)| -eps * i as f64),
            Array2::from_shape_fn(dim, |(_, j)| nu_bg * eps * (j as f64 - lateral_origin)),
        ),
        DeformationKind::Inclusion | DeformationKind::DifferentPr => {
            let mut axial = Array2::zeros(dim);
            for j in 0..n {
                let x = j as f64;
                for i in 1..m {
                    let y0 = (i - 1) as f64;
                    axial[[i, j]] = axial[[i - 1, j]] + simpson(|y| def.strain_and_nu(y, x).0, y0, y0 + 1.0);
                }
            }
            let mut lateral = Array2::zeros(dim);
            for i in 0..m {
                let y = i as f64;
                let mut cumulative = vec![0.0; n];
                for j in 1..n {
                    let x0 = (j - 1) as f64;
                    cumulative[j] = cumulative[j - 1] + simpson(|x| def.s_xx(y, x), x0, x0 + 1.0);
                }
                let k = (lateral_origin.floor() as usize).min(n - 1);
                let at_origin = cumulative[k] + simpson(|x| def.s_xx(y, x), k as f64, lateral_origin);
                for j in 0..n {
                    lateral[[i, j]] = cumulative[j] - at_origin;
                }
            }
            (axial, lateral)
        }
    };

    // EPR reported exactly as -s_xx / s_yy wherever the axial strain is
    // non-zero.
    Zip::from(&mut nu).and(&s_yy).and(&s_xx).for_each(|v, &syy, &sxx| {
        if syy != 0.0 {
            *v = -sxx / syy;
        }
    });

    Ok(GroundTruth {
        displacement: DisplacementField::new(axial, lateral)?,
        strain: StrainTensorField::new(s_yy, s_xx)?,
        epr: EprField::new(nu)?,
    })
}

/// Post-deformation frame and the samples whose source lies inside the
/// pre frame.
pub struct WarpedFrame {
    pub frame: RfFrame,
    pub valid: Mask,
}

pub const DEFAULT_WARP_ITERATIONS: usize = 5;

/// Synthesizes `I2` with `I2(i + a(i,j), j + l(i,j)) = I1(i,j)`.
///
/// For every output sample the forward map is inverted by fixed-point
/// iteration and the pre frame is sampled there with Catmull-Rom
/// interpolation. Samples whose source falls outside the pre frame are set
/// to zero and marked invalid.
pub fn warp_frame(pre: &RfFrame, truth: &DisplacementField, iterations: usize) -> Result<WarpedFrame> {
    let dim = pre.dim();
    if truth.dim() != dim {
        return Err(Error::Shape {
            expected: dim,
            got: truth.dim(),
        });
    }
    let (m, n) = dim;
    let limit = m.min(n) as f64 / 4.0;
    if truth.max_abs() >= limit {
        return Err(Error::Param(format!(
            "displacement magnitude {:.2} exceeds warp limit {limit:.2}",
            truth.max_abs()
        )));
    }
    let sampler = CubicSampler::new(pre.samples().view());
    let (ax, lat) = (truth.axial().view(), truth.lateral().view());
    let mut out = Array2::zeros(dim);
    let mut valid = Mask::from_elem(dim, false);
    let mut worst_update = 0.0_f64;
    for p in 0..m {
        for q in 0..n {
            let (mut y, mut x) = (p as f64, q as f64);
            let mut update = 0.0;
            for _ in 0..iterations.max(1) {
                let ny = p as f64 - bilinear(ax, y, x);
                let nx = q as f64 - bilinear(lat, y, x);
                update = (ny - y).abs().max((nx - x).abs());
                y = ny;
                x = nx;
            }
            worst_update = worst_update.max(update);
            if (0.0..=(m - 1) as f64).contains(&y) && (0.0..=(n - 1) as f64).contains(&x) {
                out[[p, q]] = sampler.sample(y, x);
                valid[[p, q]] = true;
            }
        }
    }
    if worst_update > 0.5 {
        return Err(Error::WarpDiverged(worst_update));
    }
    Ok(WarpedFrame {
        frame: RfFrame::new(out, *pre.geometry())?,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> PhantomSpec {
        PhantomSpec {
            rows: 96,
            cols: 48,
            seed,
            ..PhantomSpec::default()
        }
    }

    #[test]
    fn empty_medium_is_zero() {
        let spec = PhantomSpec {
            scatterer_density: 1e-15,
            ..small_spec(3)
        };
        let f = generate_speckle(&spec).unwrap();
        assert!(f.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_frame() {
        let a = generate_speckle(&small_spec(11)).unwrap();
        let b = generate_speckle(&small_spec(11)).unwrap();
        let c = generate_speckle(&small_spec(12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.samples().mean().unwrap().abs() < 1e-12);
    }

    #[test]
    fn autocorrelation_period_matches_wavelength() {
        let spec = PhantomSpec {
            rows: 256,
            cols: 128,
            seed: 5,
            ..PhantomSpec::default()
        };
        let f = generate_speckle(&spec).unwrap();
        let s = f.samples();
        let max_lag = 3 * spec.wavelength_samples as usize;
        let acf: Vec<f64> = (0..=max_lag)
            .map(|k| {
                let mut acc = 0.0;
                for j in 0..spec.cols {
                    for i in 0..spec.rows - k {
                        acc += s[[i, j]] * s[[i + k, j]];
                    }
                }
                acc / ((spec.rows - k) * spec.cols) as f64
            })
            .collect();
        assert!(acf[1..].iter().all(|&v| v < acf[0]));
        let lo = (spec.wavelength_samples / 2.0).ceil() as usize;
        let hi = (1.5 * spec.wavelength_samples) as usize;
        let peak = (lo..=hi).max_by(|&a, &b| acf[a].total_cmp(&acf[b])).unwrap();
        let period = peak as f64;
        assert!(
            (period - spec.wavelength_samples).abs() <= 0.1 * spec.wavelength_samples,
            "period {period}"
        );
    }

    #[test]
    fn noise_hits_requested_snr() {
        let clean = generate_speckle(&small_spec(2)).unwrap();
        let noisy = add_noise(&clean, 20.0, 9).unwrap();
        let signal: f64 = clean.samples().iter().map(|v| v * v).sum();
        let noise: f64 = (noisy.samples() - clean.samples()).iter().map(|v| v * v).sum();
        let snr = 10.0 * (signal / noise).log10();
        assert!((snr - 20.0).abs() < 0.3, "{snr}");
    }

    #[test]
    fn zero_strain_is_zero_field() {
        let t = analytic_displacement(&DeformationSpec::uniform(0.0, 0.3), (32, 16)).unwrap();
        assert_eq!(t.displacement.max_abs(), 0.0);
        assert!(t.strain.s_yy().iter().chain(t.strain.s_xx().iter()).all(|&v| v == 0.0));
        assert!(t.epr.nu().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn uniform_compression_values() {
        let t = analytic_displacement(&DeformationSpec::uniform(0.02, 0.49), (64, 32)).unwrap();
        for ((i, j), &a) in t.displacement.axial().indexed_iter() {
            assert_eq!(a, -0.02 * i as f64);
            let l = t.displacement.lateral()[[i, j]];
            assert!((l - 0.49 * 0.02 * (j as f64 - 15.5)).abs() < 1e-15);
        }
        assert!(t.strain.s_yy().iter().all(|&v| v == -0.02));
        assert!(t.strain.s_xx().iter().all(|&v| (v - 0.0098).abs() < 1e-15));
        assert!(t.epr.nu().iter().all(|&v| (v - 0.49).abs() < 1e-12));
    }

    fn fd_check(t: &GroundTruth, tol: f64) {
        let a = t.displacement.axial();
        let l = t.displacement.lateral();
        let (m, n) = a.dim();
        for i in 1..m - 1 {
            for j in 1..n - 1 {
                let dy = (a[[i + 1, j]] - a[[i - 1, j]]) / 2.0;
                let dx = (l[[i, j + 1]] - l[[i, j - 1]]) / 2.0;
                assert!((dy - t.strain.s_yy()[[i, j]]).abs() < tol, "s_yy at {i},{j}");
                assert!((dx - t.strain.s_xx()[[i, j]]).abs() < tol, "s_xx at {i},{j}");
            }
        }
    }

    #[test]
    fn strains_are_displacement_derivatives() {
        fd_check(&analytic_displacement(&DeformationSpec::uniform(0.02, 0.45), (40, 24)).unwrap(), 1e-6);
        let inc = DeformationSpec {
            kind: DeformationKind::Inclusion,
            inclusion: InclusionSpec {
                center_row: 48.0,
                center_col: 24.0,
                radius_rows: 20.0,
                radius_cols: 10.0,
                ..InclusionSpec::default()
            },
            ..DeformationSpec::default()
        };
        // Central differences of a raised-cosine edge 8 samples wide.
        fd_check(&analytic_displacement(&inc, (96, 48)).unwrap(), 2e-4);
    }

    #[test]
    fn epr_is_strain_ratio() {
        let def = DeformationSpec {
            kind: DeformationKind::Inclusion,
            inclusion: InclusionSpec {
                center_row: 48.0,
                center_col: 24.0,
                radius_rows: 20.0,
                radius_cols: 10.0,
                nu: 0.3,
                ..InclusionSpec::default()
            },
            ..DeformationSpec::default()
        };
        let t = analytic_displacement(&def, (96, 48)).unwrap();
        Zip::from(t.epr.nu())
            .and(t.strain.s_yy())
            .and(t.strain.s_xx())
            .for_each(|&nu, &syy, &sxx| assert_eq!(nu, -sxx / syy));
    }

    #[test]
    fn different_pr_map() {
        let def = DeformationSpec {
            kind: DeformationKind::DifferentPr,
            applied_strain: 0.02,
            background_nu: 0.45,
            inclusion: InclusionSpec {
                center_row: 48.0,
                center_col: 24.0,
                radius_rows: 20.0,
                radius_cols: 10.0,
                nu: 0.25,
                ..InclusionSpec::default()
            },
        };
        let t = analytic_displacement(&def, (96, 48)).unwrap();
        assert!((t.epr.nu()[[48, 24]] - 0.25).abs() < 1e-12);
        assert!((t.epr.nu()[[2, 2]] - 0.45).abs() < 1e-12);
        assert!(t.strain.s_yy().iter().all(|&v| v == -0.02));
    }

    #[test]
    fn lateral_boundary_pins_left_edge() {
        let def = DeformationSpec {
            kind: DeformationKind::LateralBoundary,
            ..DeformationSpec::default()
        };
        let t = analytic_displacement(&def, (32, 16)).unwrap();
        assert!(t.displacement.lateral().column(0).iter().all(|&v| v == 0.0));
        assert!(t.strain.s_xx().iter().all(|&v| (v - 0.0098).abs() < 1e-15));
    }

    #[test]
    fn inclusion_outside_grid_rejected() {
        let def = DeformationSpec {
            kind: DeformationKind::Inclusion,
            ..DeformationSpec::default()
        };
        assert!(analytic_displacement(&def, (64, 64)).is_err());
    }

    #[test]
    fn zero_warp_is_identity() {
        let pre = generate_speckle(&small_spec(4)).unwrap();
        let w = warp_frame(&pre, &DisplacementField::zeros(pre.dim()), 5).unwrap();
        assert_eq!(w.frame.samples(), pre.samples());
        assert!(w.valid.iter().all(|&v| v));
    }

    #[test]
    fn integer_shift_is_exact() {
        let pre = generate_speckle(&small_spec(4)).unwrap();
        let (m, n) = pre.dim();
        let shift = DisplacementField::new(Array2::from_elem((m, n), 3.0), Array2::zeros((m, n))).unwrap();
        let w = warp_frame(&pre, &shift, 5).unwrap();
        for r in 3..m {
            assert_eq!(w.frame.samples().row(r), pre.samples().row(r - 3));
            assert!(w.valid.row(r).iter().all(|&v| v));
        }
        assert!(w.valid.row(0).iter().all(|&v| !v));
    }

    #[test]
    fn warp_reproduces_pre_frame_at_displaced_positions() {
        let spec = PhantomSpec {
            rows: 128,
            cols: 64,
            seed: 8,
            ..PhantomSpec::default()
        };
        let pre = generate_speckle(&spec).unwrap();
        let truth = analytic_displacement(&DeformationSpec::uniform(0.02, 0.49), pre.dim()).unwrap();
        let post = warp_frame(&pre, &truth.displacement, DEFAULT_WARP_ITERATIONS).unwrap();
        let sampler = CubicSampler::new(post.frame.samples().view());
        let (m, n) = pre.dim();
        let (mut num, mut den, mut e2) = (0.0, 0.0, 0.0);
        let (mut p2, mut q2) = (0.0, 0.0);
        for i in 8..m - 8 {
            for j in 4..n - 4 {
                let a = truth.displacement.axial()[[i, j]];
                let l = truth.displacement.lateral()[[i, j]];
                let v = sampler.sample(i as f64 + a, j as f64 + l);
                let u = pre.samples()[[i, j]];
                num += u * v;
                p2 += u * u;
                q2 += v * v;
                e2 += (u - v).powi(2);
                den += u * u;
            }
        }
        let ncc = num / (p2 * q2).sqrt();
        assert!(ncc >= 0.99, "ncc {ncc}");
        assert!((e2 / den).sqrt() < 0.01 * 10.0, "normalized error {}", (e2 / den).sqrt());
    }

    #[test]
    fn oversized_displacement_rejected() {
        let pre = generate_speckle(&small_spec(4)).unwrap();
        let (m, n) = pre.dim();
        let big = DisplacementField::new(Array2::from_elem((m, n), 20.0), Array2::zeros((m, n))).unwrap();
        assert!(matches!(warp_frame(&pre, &big, 5), Err(Error::Param(_))));
    }
}
