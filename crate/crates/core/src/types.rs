//! Frames and per-sample fields.
//!
//! All grids are row-major `m x n` arrays: the row index `i` runs along the
//! beam (axial) and the column index `j` across A-lines (lateral).
//! Displacements are kept in sample units (rows for the axial component,
//! A-line pitches for the lateral one); millimetres only appear in metrics
//! and rendering.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-sample boolean validity map; `true` marks a usable sample.
pub type Mask = Array2<bool>;

/// Acquisition geometry carried alongside a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub axial_spacing_mm: f64,
    pub lateral_pitch_mm: f64,
    pub center_frequency_mhz: f64,
    pub sampling_frequency_mhz: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            axial_spacing_mm: 0.05,
            lateral_pitch_mm: 0.2,
            center_frequency_mhz: 5.0,
            sampling_frequency_mhz: 50.0,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("axial_spacing_mm", self.axial_spacing_mm),
            ("lateral_pitch_mm", self.lateral_pitch_mm),
            ("center_frequency_mhz", self.center_frequency_mhz),
            ("sampling_frequency_mhz", self.sampling_frequency_mhz),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant("geometry", format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// RF carrier period expressed in axial samples.
    pub fn wavelength_samples(&self) -> f64 {
        self.sampling_frequency_mhz / self.center_frequency_mhz
    }
}

/// Minimum extent along either axis for a frame handed to a tracker.
pub const MIN_SOLVER_EXTENT: usize = 8;

fn check_finite(what: &'static str, data: &Array2<f64>) -> Result<()> {
    if let Some((idx, v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invariant(what, format!("non-finite value {v} at {idx:?}")));
    }
    Ok(())
}

fn check_nonempty(what: &'static str, data: &Array2<f64>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::invariant(what, format!("empty shape {:?}", data.dim())));
    }
    Ok(())
}

fn check_same_shape(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// One RF frame: `m` axial samples on each of `n` A-lines.
#[derive(Clone, Debug, PartialEq)]
pub struct RfFrame {
    samples: Array2<f64>,
    geometry: Geometry,
}

impl RfFrame {
    pub fn new(samples: Array2<f64>, geometry: Geometry) -> Result<Self> {
        check_nonempty("frame", &samples)?;
        check_finite("frame", &samples)?;
        geometry.validate()?;
        Ok(Self { samples, geometry })
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<f64> {
        self.samples
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn with_geometry(self, geometry: Geometry) -> Result<Self> {
        geometry.validate()?;
        Ok(Self { geometry, ..self })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.samples.dim()
    }

    /// Checks that the frame is large enough to be tracked.
    pub fn ensure_trackable(&self) -> Result<()> {
        let (m, n) = self.dim();
        if m < MIN_SOLVER_EXTENT || n < MIN_SOLVER_EXTENT {
            return Err(Error::invariant(
                "frame",
                format!("tracking needs at least {MIN_SOLVER_EXTENT}x{MIN_SOLVER_EXTENT} samples, got {m}x{n}"),
            ));
        }
        Ok(())
    }
}

/// Axial and lateral displacement of every pre-frame sample.
///
/// Sample `(i, j)` of the pre-deformation frame is found at
/// `(i + axial[i, j], j + lateral[i, j])` in the post-deformation frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub(crate) axial: Array2<f64>,
    pub(crate) lateral: Array2<f64>,
}

impl DisplacementField {
    pub fn new(axial: Array2<f64>, lateral: Array2<f64>) -> Result<Self> {
        check_nonempty("displacement", &axial)?;
        check_same_shape(&axial, &lateral)?;
        check_finite("displacement", &axial)?;
        check_finite("displacement", &lateral)?;
        Ok(Self { axial, lateral })
    }

    pub fn zeros(dim: (usize, usize)) -> Self {
        Self {
            axial: Array2::zeros(dim),
            lateral: Array2::zeros(dim),
        }
    }

    pub fn axial(&self) -> &Array2<f64> {
        &self.axial
    }

    pub fn lateral(&self) -> &Array2<f64> {
        &self.lateral
    }

    pub fn dim(&self) -> (usize, usize) {
        self.axial.dim()
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.axial, self.lateral)
    }

    pub fn max_abs(&self) -> f64 {
        self.axial
            .iter()
            .chain(self.lateral.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Axial (`s_yy`) and lateral (`s_xx`) normal strains.
#[derive(Clone, Debug, PartialEq)]
pub struct StrainTensorField {
    pub(crate) s_yy: Array2<f64>,
    pub(crate) s_xx: Array2<f64>,
}

impl StrainTensorField {
    pub fn new(s_yy: Array2<f64>, s_xx: Array2<f64>) -> Result<Self> {
        check_nonempty("strain", &s_yy)?;
        check_same_shape(&s_yy, &s_xx)?;
        check_finite("strain", &s_yy)?;
        check_finite("strain", &s_xx)?;
        Ok(Self { s_yy, s_xx })
    }

    pub fn zeros(dim: (usize, usize)) -> Self {
        Self {
            s_yy: Array2::zeros(dim),
            s_xx: Array2::zeros(dim),
        }
    }

    pub fn s_yy(&self) -> &Array2<f64> {
        &self.s_yy
    }

    pub fn s_xx(&self) -> &Array2<f64> {
        &self.s_xx
    }

    pub fn dim(&self) -> (usize, usize) {
        self.s_yy.dim()
    }
}

/// Closed interval an effective Poisson's ratio is clamped to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for NuBounds {
    fn default() -> Self {
        Self { min: 0.0, max: 0.5 }
    }
}

impl NuBounds {
    pub fn clamp(&self, nu: f64) -> f64 {
        nu.clamp(self.min, self.max)
    }

    pub fn contains(&self, nu: f64) -> bool {
        nu >= self.min && nu <= self.max
    }
}

/// Effective Poisson's ratio per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EprField {
    pub(crate) nu: Array2<f64>,
}

impl EprField {
    pub fn new(nu: Array2<f64>) -> Result<Self> {
        check_nonempty("EPR", &nu)?;
        check_finite("EPR", &nu)?;
        Ok(Self { nu })
    }

    /// Like [`EprField::new`] but also rejects values outside `bounds`.
    pub fn with_bounds(nu: Array2<f64>, bounds: NuBounds) -> Result<Self> {
        let field = Self::new(nu)?;
        if let Some((idx, v)) = field.nu.indexed_iter().find(|(_, v)| !bounds.contains(**v)) {
            return Err(Error::invariant(
                "EPR",
                format!("value {v} at {idx:?} outside [{}, {}]", bounds.min, bounds.max),
            ));
        }
        Ok(field)
    }

    pub fn constant(dim: (usize, usize), nu: f64) -> Self {
        Self {
            nu: Array2::from_elem(dim, nu),
        }
    }

    pub fn nu(&self) -> &Array2<f64> {
        &self.nu
    }

    pub fn dim(&self) -> (usize, usize) {
        self.nu.dim()
    }
}
