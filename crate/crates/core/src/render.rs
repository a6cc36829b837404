//! Colour-mapped raster output.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colormap {
    #[default]
    Gray,
    Jet,
}

impl std::str::FromStr for Colormap {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" | "grey" => Ok(Self::Gray),
            "jet" => Ok(Self::Jet),
            other => Err(Error::Param(format!("unknown colormap '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSpec {
    pub colormap: Colormap,
    /// Display range `[lo, hi]`; the finite min and max when absent.
    pub range: Option<[f64; 2]>,
}

fn resolve_range(field: &Array2<f64>, spec: &RenderSpec) -> Result<(f64, f64)> {
    if let Some([lo, hi]) = spec.range {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Param(format!("invalid display range [{lo}, {hi}]")));
        }
        return Ok((lo, hi));
    }
    let (lo, hi) = field
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(if lo <= hi { (lo, hi) } else { (0.0, 0.0) })
}

/// Maps `v` into `0..=255`. A degenerate range maps everything to the
/// middle level; NaN maps to zero.
fn level(v: f64, lo: f64, hi: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    (t * 255.0).round() as u8
}

/// Classic jet ramp: blue, cyan, yellow, red.
pub fn jet(level: u8) -> [u8; 3] {
    let t = level as f64 / 255.0;
    let ch = |c: f64| ((1.5 - (4.0 * t - c).abs()).clamp(0.0, 1.0) * 255.0).round() as u8;
    [ch(3.0), ch(2.0), ch(1.0)]
}

fn rgb(level: u8, map: Colormap) -> [u8; 3] {
    match map {
        Colormap::Gray => [level; 3],
        Colormap::Jet => jet(level),
    }
}

/// Quantized levels in row-major order.
pub fn levels(field: &Array2<f64>, spec: &RenderSpec) -> Result<Vec<u8>> {
    let (lo, hi) = resolve_range(field, spec)?;
    Ok(field.iter().map(|&v| level(v, lo, hi)).collect())
}

/// Binary PGM (gray) or PPM (jet) image.
pub fn render_pnm(field: &Array2<f64>, spec: &RenderSpec) -> Result<Vec<u8>> {
    let (rows, cols) = field.dim();
    let lv = levels(field, spec)?;
    let (magic, body) = match spec.colormap {
        Colormap::Gray => ("P5", lv),
        Colormap::Jet => ("P6", lv.iter().flat_map(|&l| jet(l)).collect()),
    };
    let mut out = format!("{magic}\n{cols} {rows}\n255\n").into_bytes();
    out.extend(body);
    Ok(out)
}

/// RGBA pixels with full opacity, row-major.
pub fn render_rgba(field: &Array2<f64>, spec: &RenderSpec) -> Result<Vec<u8>> {
    let lv = levels(field, spec)?;
    Ok(lv
        .iter()
        .flat_map(|&l| {
            let [r, g, b] = rgb(l, spec.colormap);
            [r, g, b, 255]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_is_mid_gray() {
        let f = Array2::from_elem((3, 4), 0.5);
        let spec = RenderSpec {
            colormap: Colormap::Gray,
            range: Some([0.25, 0.75]),
        };
        assert!(levels(&f, &spec).unwrap().iter().all(|&l| l == 128));
        assert!(levels(&f, &RenderSpec::default()).unwrap().iter().all(|&l| l == 128));
    }

    #[test]
    fn pgm_header_and_clamping() {
        let f = ndarray::array![[-1.0, 0.0, 0.5, 2.0]];
        let spec = RenderSpec {
            colormap: Colormap::Gray,
            range: Some([0.0, 1.0]),
        };
        let img = render_pnm(&f, &spec).unwrap();
        let header = b"P5\n4 1\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert_eq!(&img[header.len()..], &[0, 0, 128, 255]);
    }

    #[test]
    fn jet_endpoints_and_ppm_size() {
        assert_eq!(jet(0), [0, 0, 128]);
        assert_eq!(jet(255), [128, 0, 0]);
        let f = Array2::from_shape_fn((5, 6), |(i, j)| (i + j) as f64);
        let spec = RenderSpec {
            colormap: Colormap::Jet,
            range: None,
        };
        let img = render_pnm(&f, &spec).unwrap();
        assert!(img.starts_with(b"P6\n6 5\n255\n"));
        assert_eq!(img.len(), b"P6\n6 5\n255\n".len() + 5 * 6 * 3);
        assert_eq!(render_rgba(&f, &spec).unwrap().len(), 5 * 6 * 4);
    }

    #[test]
    fn rejects_bad_range() {
        let f = Array2::zeros((2, 2));
        let spec = RenderSpec {
            colormap: Colormap::Gray,
            range: Some([1.0, 1.0]),
        };
        assert!(render_pnm(&f, &spec).is_err());
    }
}
