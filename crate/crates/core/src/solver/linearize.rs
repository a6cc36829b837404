use ndarray::Array2;

use crate::error::{Error, Result};
use crate::interp::CubicSampler;
use crate::types::{DisplacementField, Mask, RfFrame};

/// First-order expansion of the post frame around the current displacement.
#[derive(Clone, Debug)]
pub struct Linearization {
    /// `I1(i, j) - I2(i + a, j + l)`; zero where masked.
    pub mu: Array2<f64>,
    /// Partial derivatives of the interpolated post frame at the warped
    /// positions.
    pub grad_a: Array2<f64>,
    pub grad_l: Array2<f64>,
    /// Samples whose warped position lies inside the post frame.
    pub valid: Mask,
}

pub(crate) fn check_shapes(pre: &RfFrame, post: &RfFrame, d: &DisplacementField) -> Result<()> {
    for got in [post.dim(), d.dim()] {
        if got != pre.dim() {
            return Err(Error::Shape {
                expected: pre.dim(),
                got,
            });
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn inside(y: f64, x: f64, (m, n): (usize, usize)) -> bool {
    y >= 0.0 && y <= (m - 1) as f64 && x >= 0.0 && x <= (n - 1) as f64
}

/// Samples the post frame at the displaced positions together with its
/// analytic gradient.
pub fn warp_and_linearize(pre: &RfFrame, post: &RfFrame, d: &DisplacementField) -> Result<Linearization> {
    check_shapes(pre, post, d)?;
    let dim = pre.dim();
    let sampler = CubicSampler::new(post.samples().view());
    let mut mu = Array2::zeros(dim);
    let mut grad_a = Array2::zeros(dim);
    let mut grad_l = Array2::zeros(dim);
    let mut valid = Mask::from_elem(dim, false);
    for ((i, j), &i1) in pre.samples().indexed_iter() {
        let y = i as f64 + d.axial[[i, j]];
        let x = j as f64 + d.lateral[[i, j]];
        if !inside(y, x, dim) {
            continue;
        }
        let (v, gy, gx) = sampler.sample_with_gradient(y, x);
        mu[[i, j]] = i1 - v;
        grad_a[[i, j]] = gy;
        grad_l[[i, j]] = gx;
        valid[[i, j]] = true;
    }
    Ok(Linearization {
        mu,
        grad_a,
        grad_l,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_speckle, PhantomSpec};

    fn frame() -> RfFrame {
        generate_speckle(&PhantomSpec {
            rows: 32,
            cols: 16,
            seed: 4,
            ..PhantomSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn identical_frames_have_zero_residual() {
        let f = frame();
        let lin = warp_and_linearize(&f, &f, &DisplacementField::zeros(f.dim())).unwrap();
        assert!(lin.mu.iter().all(|&v| v == 0.0));
        assert!(lin.valid.iter().all(|&v| v));
    }

    #[test]
    fn constant_offset() {
        let f = frame();
        let shifted = RfFrame::new(f.samples() + 0.75, *f.geometry()).unwrap();
        let zero = DisplacementField::zeros(f.dim());
        let lin = warp_and_linearize(&f, &shifted, &zero).unwrap();
        let own = warp_and_linearize(&f, &f, &zero).unwrap();
        assert!(lin.mu.iter().all(|&v| (v + 0.75).abs() < 1e-12));
        assert!(lin.grad_a.iter().zip(own.grad_a.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(lin.grad_l.iter().zip(own.grad_l.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn ramp_gradient() {
        let ramp = RfFrame::new(Array2::from_shape_fn((12, 10), |(i, _)| i as f64), Default::default()).unwrap();
        let lin = warp_and_linearize(&ramp, &ramp, &DisplacementField::zeros((12, 10))).unwrap();
        assert!(lin.grad_a.iter().all(|&v| (v - 1.0).abs() < 1e-10));
        assert!(lin.grad_l.iter().all(|&v| v.abs() < 1e-10));
    }

    #[test]
    fn out_of_frame_samples_are_masked() {
        let f = frame();
        let (m, n) = f.dim();
        let d = DisplacementField::new(Array2::from_elem((m, n), -1.5), Array2::zeros((m, n))).unwrap();
        let lin = warp_and_linearize(&f, &f, &d).unwrap();
        assert!(lin.valid.row(0).iter().all(|&v| !v));
        assert!(lin.valid.row(1).iter().all(|&v| !v));
        assert!(lin.valid.row(2).iter().all(|&v| v));
    }
}
