//! Continuous sampling of grids.
//!
//! Both samplers extend the grid past its border by linear extrapolation
//! (`f[-1] = 2 f[0] - f[1]`), so affine data is reproduced exactly
//! everywhere, including the first and last rows and columns.

use ndarray::ArrayView2;

#[inline]
fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t + 2.0 * t2 - t3),
        0.5 * (2.0 - 5.0 * t2 + 3.0 * t3),
        0.5 * (t + 4.0 * t2 - 3.0 * t3),
        0.5 * (-t2 + t3),
    ]
}

#[inline]
fn catmull_rom_derivative_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        0.5 * (-1.0 + 4.0 * t - 3.0 * t2),
        0.5 * (-10.0 * t + 9.0 * t2),
        0.5 * (1.0 + 8.0 * t - 9.0 * t2),
        0.5 * (-2.0 * t + 3.0 * t2),
    ]
}

/// Splits a coordinate into a cell origin in `[0, len - 2]` and a local
/// offset. Offsets outside `[0, 1]` extrapolate from the border cell.
#[inline]
fn locate(x: f64, len: usize) -> (isize, f64) {
    if len < 2 {
        return (0, 0.0);
    }
    let i = (x.floor() as isize).clamp(0, len as isize - 2);
    (i, x - i as f64)
}

/// Value at integer index `k` of a line, linearly extrapolated beyond the
/// ends.
#[inline]
fn extended<F: Fn(usize) -> f64>(at: F, k: isize, len: usize) -> f64 {
    if len == 1 {
        return at(0);
    }
    let last = len as isize - 1;
    if k < 0 {
        let (a, b) = (at(0), at(1));
        a + (k as f64) * (b - a)
    } else if k > last {
        let (a, b) = (at(len - 1), at(len - 2));
        a + ((k - last) as f64) * (a - b)
    } else {
        at(k as usize)
    }
}

/// Separable Catmull-Rom interpolation over a 2D grid.
#[derive(Clone, Copy)]
pub struct CubicSampler<'a> {
    data: ArrayView2<'a, f64>,
}

impl<'a> CubicSampler<'a> {
    pub fn new(data: ArrayView2<'a, f64>) -> Self {
        Self { data }
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        let (m, n) = self.data.dim();
        let row = |ii: usize| extended(|jj| self.data[[ii, jj]], j, n);
        extended(row, i, m)
    }

    fn stencil(&self, y: f64, x: f64) -> ([[f64; 4]; 4], f64, f64) {
        let (m, n) = self.data.dim();
        let (iy, ty) = locate(y, m);
        let (ix, tx) = locate(x, n);
        let mut p = [[0.0; 4]; 4];
        for (r, row) in p.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.at(iy - 1 + r as isize, ix - 1 + c as isize);
            }
        }
        (p, ty, tx)
    }

    /// Interpolated value at continuous position `(y, x)` (row, column).
    pub fn sample(&self, y: f64, x: f64) -> f64 {
        let (p, ty, tx) = self.stencil(y, x);
        let wy = catmull_rom_weights(ty);
        let wx = catmull_rom_weights(tx);
        let mut acc = 0.0;
        for r in 0..4 {
            let row: f64 = (0..4).map(|c| wx[c] * p[r][c]).sum();
            acc += wy[r] * row;
        }
        acc
    }

    /// Value together with the analytic partial derivatives of the
    /// interpolant along rows (`d/dy`) and columns (`d/dx`).
    pub fn sample_with_gradient(&self, y: f64, x: f64) -> (f64, f64, f64) {
        let (p, ty, tx) = self.stencil(y, x);
        let wy = catmull_rom_weights(ty);
        let wx = catmull_rom_weights(tx);
        let dy = catmull_rom_derivative_weights(ty);
        let dx = catmull_rom_derivative_weights(tx);
        let (mut v, mut gy, mut gx) = (0.0, 0.0, 0.0);
        for r in 0..4 {
            let row: f64 = (0..4).map(|c| wx[c] * p[r][c]).sum();
            let row_dx: f64 = (0..4).map(|c| dx[c] * p[r][c]).sum();
            v += wy[r] * row;
            gy += dy[r] * row;
            gx += wy[r] * row_dx;
        }
        (v, gy, gx)
    }
}

/// Bilinear interpolation with linear extrapolation outside the grid.
pub fn bilinear(data: ArrayView2<'_, f64>, y: f64, x: f64) -> f64 {
    let (m, n) = data.dim();
    let (iy, ty) = locate(y, m);
    let (ix, tx) = locate(x, n);
    let at = |i: isize, j: isize| {
        let i = (i as usize).min(m - 1);
        let j = (j as usize).min(n - 1);
        data[[i, j]]
    };
    let top = at(iy, ix) * (1.0 - tx) + at(iy, ix + 1) * tx;
    let bottom = at(iy + 1, ix) * (1.0 - tx) + at(iy + 1, ix + 1) * tx;
    top * (1.0 - ty) + bottom * ty
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn integer_positions_are_exact() {
        let data = Array2::from_shape_fn((6, 5), |(i, j)| ((i * 7 + j * 3) % 11) as f64 - 4.5);
        let s = CubicSampler::new(data.view());
        for ((i, j), v) in data.indexed_iter() {
            assert_eq!(s.sample(i as f64, j as f64), *v);
        }
    }

    #[test]
    fn affine_data_reproduced_with_exact_gradient() {
        let data = Array2::from_shape_fn((7, 6), |(i, j)| 0.5 + 2.0 * i as f64 - 0.75 * j as f64);
        let s = CubicSampler::new(data.view());
        for &(y, x) in &[(0.0, 0.0), (0.3, 4.9), (5.5, 2.2), (6.0, 5.0), (3.25, 0.1)] {
            let (v, gy, gx) = s.sample_with_gradient(y, x);
            assert!((v - (0.5 + 2.0 * y - 0.75 * x)).abs() < 1e-12);
            assert!((gy - 2.0).abs() < 1e-12);
            assert!((gx + 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let data = Array2::from_shape_fn((8, 8), |(i, j)| ((i as f64) * 0.9).sin() * ((j as f64) * 0.7).cos());
        let s = CubicSampler::new(data.view());
        let h = 1e-6;
        for &(y, x) in &[(2.3, 3.6), (4.71, 1.2), (5.5, 5.45)] {
            let (_, gy, gx) = s.sample_with_gradient(y, x);
            let fy = (s.sample(y + h, x) - s.sample(y - h, x)) / (2.0 * h);
            let fx = (s.sample(y, x + h) - s.sample(y, x - h)) / (2.0 * h);
            assert!((gy - fy).abs() < 1e-7, "{gy} vs {fy}");
            assert!((gx - fx).abs() < 1e-7, "{gx} vs {fx}");
        }
    }

    #[test]
    fn bilinear_affine_extrapolates() {
        let data = Array2::from_shape_fn((4, 4), |(i, j)| 1.0 + i as f64 - 2.0 * j as f64);
        for &(y, x) in &[(-1.5, 0.5), (1.5, 2.25), (4.0, 5.0)] {
            assert!((bilinear(data.view(), y, x) - (1.0 + y - 2.0 * x)).abs() < 1e-12);
        }
    }
}
