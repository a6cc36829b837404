//! Accuracy and image-quality metrics for strain and EPR maps.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Geometry, Mask};

/// Root-mean-square difference over the samples selected by `mask` (all
/// samples when `None`).
pub fn rmse(estimate: &Array2<f64>, truth: &Array2<f64>, mask: Option<&Mask>) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::Shape {
            expected: truth.dim(),
            got: estimate.dim(),
        });
    }
    if let Some(m) = mask {
        if m.dim() != truth.dim() {
            return Err(Error::Shape {
                expected: truth.dim(),
                got: m.dim(),
            });
        }
    }
    let (mut acc, mut count) = (0.0, 0usize);
    for ((idx, &e), &t) in estimate.indexed_iter().zip(truth.iter()) {
        if mask.is_none_or(|m| m[idx]) {
            acc += (e - t) * (e - t);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Param("RMSE over an empty mask".into()));
    }
    Ok((acc / count as f64).sqrt())
}

/// Peak signal-to-noise ratio with unit peak: `-20 log10(rmse)`. Infinite
/// for a perfect estimate.
pub fn psnr_db(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        -20.0 * rmse.log10()
    }
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

fn at_least_two(what: &str, values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::Param(format!("{what} needs at least two values, got {}", values.len())));
    }
    Ok(())
}

/// Mean over population standard deviation; infinite when the values are
/// all equal.
pub fn snr(values: &[f64]) -> Result<f64> {
    at_least_two("SNR", values)?;
    let (mean, var) = mean_and_variance(values);
    if var == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(mean / var.sqrt())
}

/// `sqrt(2 (mean_b - mean_t)^2 / (var_b + var_t))` with population
/// variances. Zero for equal means; infinite for distinct constant windows.
pub fn cnr(background: &[f64], target: &[f64]) -> Result<f64> {
    at_least_two("CNR background", background)?;
    at_least_two("CNR target", target)?;
    let (mb, vb) = mean_and_variance(background);
    let (mt, vt) = mean_and_variance(target);
    let diff2 = (mb - mt).powi(2);
    if diff2 == 0.0 {
        return Ok(0.0);
    }
    if vb + vt == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 * diff2 / (vb + vt)).sqrt())
}

/// Axis-aligned rectangle in millimetres from the top-left corner of the
/// image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub top_mm: f64,
    pub left_mm: f64,
    pub height_mm: f64,
    pub width_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSweepSpec {
    /// Window `(axial, lateral)` extent in millimetres.
    pub window_size_mm: [f64; 2],
    pub background_region: Region,
    pub target_regions: Vec<Region>,
    pub background_window_count: usize,
}

impl Default for WindowSweepSpec {
    fn default() -> Self {
        Self {
            window_size_mm: [3.0, 3.0],
            background_region: Region {
                top_mm: 0.5,
                left_mm: 0.5,
                height_mm: 3.5,
                width_mm: 24.6,
            },
            target_regions: vec![Region {
                top_mm: 4.8,
                left_mm: 11.0,
                height_mm: 3.2,
                width_mm: 3.6,
            }],
            background_window_count: 50,
        }
    }
}

/// Window region in samples: `(row, col, rows, cols)`.
type Rect = (usize, usize, usize, usize);

fn to_samples(r: &Region, g: &Geometry, dim: (usize, usize)) -> Result<Rect> {
    let row = (r.top_mm / g.axial_spacing_mm).round();
    let col = (r.left_mm / g.lateral_pitch_mm).round();
    let rows = (r.height_mm / g.axial_spacing_mm).round();
    let cols = (r.width_mm / g.lateral_pitch_mm).round();
    if !(row >= 0.0 && col >= 0.0 && rows >= 1.0 && cols >= 1.0) {
        return Err(Error::Param(format!("region {r:?} is empty or negative")));
    }
    let rect = (row as usize, col as usize, rows as usize, cols as usize);
    if rect.0 + rect.2 > dim.0 || rect.1 + rect.3 > dim.1 {
        return Err(Error::Param(format!("region {r:?} extends past the {}x{} image", dim.0, dim.1)));
    }
    Ok(rect)
}

fn overlaps(a: Rect, b: Rect) -> bool {
    a.0 < b.0 + b.2 && b.0 < a.0 + a.2 && a.1 < b.1 + b.3 && b.1 < a.1 + a.3
}

/// Mean and population standard deviation of the finite entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    /// Entries left out because they were infinite.
    pub excluded: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let excluded = values.len() - finite.len();
        if finite.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                count: 0,
                excluded,
            };
        }
        let (mean, var) = mean_and_variance(&finite);
        Self {
            mean,
            std: var.sqrt(),
            count: finite.len(),
            excluded,
        }
    }
}

/// One placed window, in samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WindowPlacement {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rmse: Option<f64>,
    pub psnr_db: Option<f64>,
    pub background_windows: Vec<WindowPlacement>,
    pub target_windows: Vec<WindowPlacement>,
    /// One value per background window.
    pub snr_values: Vec<f64>,
    /// Target-major: all background windows against target 0, then 1, ...
    pub cnr_values: Vec<f64>,
    pub snr_summary: Summary,
    pub cnr_summary: Summary,
}

impl MetricsReport {
    /// Adds accuracy figures against a ground truth.
    pub fn with_truth(mut self, estimate: &Array2<f64>, truth: &Array2<f64>, mask: Option<&Mask>) -> Result<Self> {
        let e = rmse(estimate, truth, mask)?;
        self.rmse = Some(e);
        self.psnr_db = Some(psnr_db(e));
        Ok(self)
    }
}

fn grid_positions(start: usize, span: usize, count: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![start + span / 2];
    }
    (0..count)
        .map(|k| start + ((k * span) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

fn window_values(field: &Array2<f64>, w: &WindowPlacement) -> Vec<f64> {
    field
        .slice(s![w.row..w.row + w.rows, w.col..w.col + w.cols])
        .iter()
        .copied()
        .collect()
}

/// Sweeps windows over the background and target regions and collects SNR
/// and CNR values.
pub fn sweep(field: &Array2<f64>, spec: &WindowSweepSpec, geometry: &Geometry) -> Result<MetricsReport> {
    geometry.validate()?;
    let dim = field.dim();
    let wr = (spec.window_size_mm[0] / geometry.axial_spacing_mm).round();
    let wc = (spec.window_size_mm[1] / geometry.lateral_pitch_mm).round();
    if !(wr >= 1.0 && wc >= 1.0) || (wr as usize) * (wc as usize) < 2 {
        return Err(Error::Param("window must cover at least two samples".into()));
    }
    let (wr, wc) = (wr as usize, wc as usize);
    if spec.background_window_count == 0 {
        return Err(Error::Param("background_window_count must be positive".into()));
    }
    let bg = to_samples(&spec.background_region, geometry, dim)?;
    let targets = spec
        .target_regions
        .iter()
        .map(|r| to_samples(r, geometry, dim))
        .collect::<Result<Vec<_>>>()?;
    for (k, t) in targets.iter().enumerate() {
        if overlaps(bg, *t) || targets[..k].iter().any(|o| overlaps(*o, *t)) {
            return Err(Error::Param(format!("target region {k} overlaps another region")));
        }
    }
    let fits = |r: Rect| r.2 >= wr && r.3 >= wc;
    if !fits(bg) || !targets.iter().all(|&t| fits(t)) {
        return Err(Error::Param(format!("a {wr}x{wc}-sample window does not fit in every region")));
    }

    let n = spec.background_window_count;
    let (span_r, span_c) = (bg.2 - wr, bg.3 - wc);
    let ratio = (span_r + 1) as f64 / (span_c + 1) as f64;
    let gr = ((n as f64 * ratio).sqrt().ceil() as usize).clamp(1, n);
    let gc = n.div_ceil(gr);
    let rows = grid_positions(bg.0, span_r, gr);
    let cols = grid_positions(bg.1, span_c, gc);
    let background_windows: Vec<WindowPlacement> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .take(n)
        .map(|(row, col)| WindowPlacement {
            row,
            col,
            rows: wr,
            cols: wc,
        })
        .collect();
    let target_windows: Vec<WindowPlacement> = targets
        .iter()
        .map(|t| WindowPlacement {
            row: t.0 + (t.2 - wr) / 2,
            col: t.1 + (t.3 - wc) / 2,
            rows: wr,
            cols: wc,
        })
        .collect();

    let bg_values: Vec<Vec<f64>> = background_windows.iter().map(|w| window_values(field, w)).collect();
    let snr_values = bg_values.iter().map(|v| snr(v)).collect::<Result<Vec<_>>>()?;
    let mut cnr_values = Vec::with_capacity(bg_values.len() * target_windows.len());
    for t in &target_windows {
        let tv = window_values(field, t);
        for b in &bg_values {
            cnr_values.push(cnr(b, &tv)?);
        }
    }
    Ok(MetricsReport {
        rmse: None,
        psnr_db: None,
        snr_summary: Summary::of(&snr_values),
        cnr_summary: Summary::of(&cnr_values),
        background_windows,
        target_windows,
        snr_values,
        cnr_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        let t = Array2::from_shape_fn((4, 5), |(i, j)| (i * j) as f64 * 0.1);
        assert_eq!(rmse(&t, &t, None).unwrap(), 0.0);
        let shifted = &t + 0.01;
        assert!((rmse(&shifted, &t, None).unwrap() - 0.01).abs() < 1e-15);
        let a = array![[0.0, 0.0], [0.0, 0.0]];
        let b = array![[3.0, 4.0], [0.0, 0.0]];
        assert_eq!(rmse(&a, &b, None).unwrap(), 2.5);
        let empty = Mask::from_elem((2, 2), false);
        assert!(rmse(&a, &b, Some(&empty)).is_err());
        let mut one = empty.clone();
        one[[0, 1]] = true;
        assert_eq!(rmse(&a, &b, Some(&one)).unwrap(), 4.0);
    }

    #[test]
    fn psnr_examples() {
        assert!((psnr_db(7.35e-4) - 62.67).abs() < 0.01);
        assert_eq!(psnr_db(1.0), 0.0);
        assert!((psnr_db(3.2e-3) - 49.9).abs() < 0.01);
        assert_eq!(psnr_db(0.0), f64::INFINITY);
    }

    #[test]
    fn snr_examples() {
        assert_eq!(snr(&[2.0, 2.0, 2.0]).unwrap(), f64::INFINITY);
        let v = snr(&[1.0, 2.0, 3.0]).unwrap();
        assert!((v - 2.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((v - 2.449).abs() < 1e-3);
        assert!((snr(&[5.0, 10.0, 15.0]).unwrap() - v).abs() < 1e-12);
        assert!(snr(&[1.0]).is_err());
    }

    #[test]
    fn cnr_examples() {
        let same = [1.0, 2.0, 3.0];
        assert_eq!(cnr(&same, &same).unwrap(), 0.0);
        let bg = [1.0, 1.0, 3.0, 3.0];
        let tg = [5.0, 5.0, 7.0, 7.0];
        assert_eq!(cnr(&bg, &tg).unwrap(), 4.0);
        assert_eq!(cnr(&tg, &bg).unwrap(), 4.0);
        assert_eq!(cnr(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), f64::INFINITY);
    }

    fn geometry() -> Geometry {
        Geometry::default()
    }

    #[test]
    fn constant_field_sweep() {
        let field = Array2::from_elem((256, 128), -0.02);
        let r = sweep(&field, &WindowSweepSpec::default(), &geometry()).unwrap();
        assert_eq!(r.snr_values.len(), 50);
        assert_eq!(r.cnr_values.len(), 50);
        assert!(r.snr_values.iter().all(|v| v.is_infinite()));
        assert!(r.cnr_values.iter().all(|&v| v == 0.0));
        assert_eq!(r.snr_summary.excluded, 50);
        assert_eq!(r.cnr_summary.count, 50);
    }

    #[test]
    fn counts_follow_targets() {
        let field = Array2::from_shape_fn((256, 128), |(i, j)| ((i * 7 + j * 3) % 13) as f64);
        let mut spec = WindowSweepSpec::default();
        spec.target_regions.push(Region {
            top_mm: 9.0,
            left_mm: 2.0,
            height_mm: 3.5,
            width_mm: 4.0,
        });
        let r = sweep(&field, &spec, &geometry()).unwrap();
        assert_eq!(r.snr_values.len(), 50);
        assert_eq!(r.cnr_values.len(), 100);
        let unique: std::collections::HashSet<_> = r.background_windows.iter().map(|w| (w.row, w.col)).collect();
        assert_eq!(unique.len(), 50);
    }

    #[test]
    fn regions_must_fit_and_be_disjoint() {
        let field = Array2::zeros((256, 128));
        let mut spec = WindowSweepSpec::default();
        spec.target_regions[0].height_mm = 2.0;
        assert!(sweep(&field, &spec, &geometry()).is_err());
        let mut spec = WindowSweepSpec::default();
        spec.target_regions[0].top_mm = 1.0;
        assert!(sweep(&field, &spec, &geometry()).is_err());
        let mut spec = WindowSweepSpec::default();
        spec.background_region.height_mm = 40.0;
        assert!(sweep(&field, &spec, &geometry()).is_err());
    }

    proptest! {
        #[test]
        fn rmse_triangle(
            a in proptest::collection::vec(-10.0..10.0f64, 12),
            b in proptest::collection::vec(-10.0..10.0f64, 12),
            c in proptest::collection::vec(-10.0..10.0f64, 12),
        ) {
            let a = Array2::from_shape_vec((3, 4), a).unwrap();
            let b = Array2::from_shape_vec((3, 4), b).unwrap();
            let c = Array2::from_shape_vec((3, 4), c).unwrap();
            let ac = rmse(&a, &c, None).unwrap();
            let ab = rmse(&a, &b, None).unwrap();
            let bc = rmse(&b, &c, None).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn psnr_falls_as_error_grows(
            truth in proptest::collection::vec(-1.0..1.0f64, 9),
            k in 0usize..9,
            e in 0.001..0.5f64,
            extra in 0.001..0.5f64,
        ) {
            let t = Array2::from_shape_vec((3, 3), truth).unwrap();
            let mut est = t.clone();
            est[[k / 3, k % 3]] += e;
            let mut worse = t.clone();
            worse[[k / 3, k % 3]] += e + extra;
            prop_assert!(psnr_db(rmse(&worse, &t, None).unwrap()) < psnr_db(rmse(&est, &t, None).unwrap()));
        }

        #[test]
        fn cnr_shift_invariant_snr_not(
            bg in proptest::collection::vec(0.5..2.0f64, 8),
            tg in proptest::collection::vec(3.0..5.0f64, 8),
            shift in 1.0..10.0f64,
        ) {
            let c0 = cnr(&bg, &tg).unwrap();
            let bs: Vec<f64> = bg.iter().map(|v| v + shift).collect();
            let ts: Vec<f64> = tg.iter().map(|v| v + shift).collect();
            let c1 = cnr(&bs, &ts).unwrap();
            prop_assert!((c0 - c1).abs() <= 1e-9 * c0.max(1.0));
            let s0 = snr(&bg).unwrap();
            let s1 = snr(&bs).unwrap();
            if s0.is_finite() {
                prop_assert!(s1 > s0);
            }
        }
    }
}
