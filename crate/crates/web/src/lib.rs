//! Browser bindings: build a phantom, track it, and render or score any
//! field as RGBA pixels.

use elasto::metrics::{psnr_db, rmse};
use elasto::phantom::{
    add_noise, analytic_displacement, generate_speckle, warp_frame, DeformationKind, DeformationSpec, GroundTruth,
    PhantomSpec, DEFAULT_WARP_ITERATIONS,
};
use elasto::render::{render_rgba, Colormap, RenderSpec};
use elasto::solver::{run_tracking, Method, SolverParams, TrackingResult};
use elasto::RfFrame;
use ndarray::Array2;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// A simulated frame pair with its ground truth and the latest estimate.
#[wasm_bindgen]
pub struct Demo {
    pre: RfFrame,
    post: RfFrame,
    truth: GroundTruth,
    result: Option<TrackingResult>,
}

#[wasm_bindgen]
impl Demo {
    /// `kind` is `uniform`, `inclusion` or `different_pr`; a non-finite
    /// `snr_db` means noiseless frames.
    #[wasm_bindgen(constructor)]
    pub fn new(rows: usize, cols: usize, kind: &str, applied_strain: f64, seed: u32, snr_db: f64) -> Result<Demo, String> {
        let kind = match kind {
            "uniform" => DeformationKind::UniformCompression,
            "inclusion" => DeformationKind::Inclusion,
            "different_pr" => DeformationKind::DifferentPr,
            other => return Err(format!("unknown phantom kind '{other}'")),
        };
        let mut def = DeformationSpec {
            kind,
            applied_strain,
            ..DeformationSpec::default()
        };
        def.inclusion.center_row = (rows as f64 - 1.0) / 2.0;
        def.inclusion.center_col = (cols as f64 - 1.0) / 2.0;
        def.inclusion.radius_rows = rows as f64 * 0.18;
        def.inclusion.radius_cols = cols as f64 * 0.12;
        if kind == DeformationKind::DifferentPr {
            def.background_nu = 0.45;
            def.inclusion.nu = 0.25;
            def.inclusion.strain_contrast = 1.0;
        }
        let spec = PhantomSpec {
            rows,
            cols,
            seed: seed as u64,
            ..PhantomSpec::default()
        };
        def.validate((rows, cols)).map_err(js)?;
        let clean = generate_speckle(&spec).map_err(js)?;
        let truth = analytic_displacement(&def, (rows, cols)).map_err(js)?;
        let warped = warp_frame(&clean, &truth.displacement, DEFAULT_WARP_ITERATIONS).map_err(js)?.frame;
        let (pre, post) = if snr_db.is_finite() {
            let s = seed as u64;
            (add_noise(&clean, snr_db, 2 * s + 1).map_err(js)?, add_noise(&warped, snr_db, 2 * s + 2).map_err(js)?)
        } else {
            (clean, warped)
        };
        Ok(Demo {
            pre,
            post,
            truth,
            result: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.pre.dim().0
    }

    pub fn cols(&self) -> usize {
        self.pre.dim().1
    }

    /// Runs `method` with the mechanical weight set to `alpha3` (the L1 weight
    /// for the L1 methods). Returns the cost trace.
    pub fn track(&mut self, method: &str, alpha3: f64) -> Result<Vec<f64>, String> {
        let method: Method = method.parse().map_err(js)?;
        let mut params = SolverParams::default();
        if method.is_l1() {
            params.alpha3s = alpha3;
        } else {
            params.alpha3 = alpha3;
        }
        let r = run_tracking(&self.pre, &self.post, method, &params, None).map_err(js)?;
        let trace = r.cost_trace.clone();
        self.result = Some(r);
        Ok(trace)
    }

    fn field(&self, name: &str) -> Result<&Array2<f64>, String> {
        let estimate = || self.result.as_ref().ok_or_else(|| "no tracking result yet".to_string());
        Ok(match name {
            "pre" => self.pre.samples(),
            "post" => self.post.samples(),
            "truth_axial_strain" => self.truth.strain.s_yy(),
            "truth_lateral_strain" => self.truth.strain.s_xx(),
            "truth_epr" => self.truth.epr.nu(),
            "axial_strain" => estimate()?.strains.s_yy(),
            "lateral_strain" => estimate()?.strains.s_xx(),
            "epr" => estimate()?.epr.nu(),
            other => return Err(format!("unknown field '{other}'")),
        })
    }

    /// RGBA pixels of a field; `lo >= hi` selects the field's own range.
    pub fn image(&self, name: &str, colormap: &str, lo: f64, hi: f64) -> Result<Vec<u8>, String> {
        let spec = RenderSpec {
            colormap: colormap.parse::<Colormap>().map_err(js)?,
            range: (lo < hi).then_some([lo, hi]),
        };
        render_rgba(self.field(name)?, &spec).map_err(js)
    }

    /// RMSE and PSNR of an estimated field against its ground truth.
    pub fn score(&self, name: &str) -> Result<Vec<f64>, String> {
        let truth = self.field(&format!("truth_{name}"))?;
        let e = rmse(self.field(name)?, truth, None).map_err(js)?;
        Ok(vec![e, psnr_db(e)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_names() {
        assert!(Demo::new(64, 32, "twisted", 0.02, 1, f64::NAN).is_err());
        let mut d = Demo::new(64, 32, "uniform", 0.02, 1, f64::NAN).unwrap();
        assert!(d.track("sad", 1.0).is_err());
        assert!(d.image("epr", "gray", 0.0, 0.5).is_err());
        assert!(d.image("pre", "viridis", 0.0, 0.0).is_err());
    }

    #[test]
    fn images_have_one_rgba_pixel_per_sample() {
        let d = Demo::new(64, 32, "inclusion", 0.02, 3, 20.0).unwrap();
        assert_eq!(d.image("truth_epr", "jet", 0.0, 0.5).unwrap().len(), 64 * 32 * 4);
    }
}
