//! Penalty terms as affine functions of the stacked displacement vector.
//!
//! Unknowns are interleaved per sample and ordered column-major over the
//! grid: sample `(i, j)` has index `k = j * m + i`, its axial component sits
//! at `2k` and its lateral component at `2k + 1`. Every continuity or
//! mechanical penalty is a sum over "atoms" `x = sum(tap * d[idx]) + offset`
//! of either `c * x^2` or `c * sqrt(x^2 + eta^2)`.

use crate::solver::params::{BiasState, SolverParams, Variant};
use crate::types::{DisplacementField, EprField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Norm {
    Quadratic,
    Smoothed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Family {
    Regularization,
    Mechanical,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Atom {
    pub taps: [(u32, f64); 4],
    pub len: u8,
    pub offset: f64,
    pub weight: f64,
    pub norm: Norm,
    pub family: Family,
}

impl Atom {
    #[inline]
    pub fn taps(&self) -> &[(u32, f64)] {
        &self.taps[..self.len as usize]
    }

    #[inline]
    pub fn argument(&self, d: &[f64]) -> f64 {
        self.taps().iter().map(|&(k, t)| t * d[k as usize]).sum::<f64>() + self.offset
    }

    #[inline]
    pub fn penalty(&self, x: f64) -> f64 {
        match self.norm {
            Norm::Quadratic => self.weight * x * x,
            Norm::Smoothed(eta) => self.weight * (x * x + eta * eta).sqrt(),
        }
    }

    /// Weight of the quadratic surrogate `c_eff * x^2` that touches the
    /// penalty at `x` with matching slope.
    #[inline]
    pub fn surrogate_weight(&self, x: f64) -> f64 {
        match self.norm {
            Norm::Quadratic => self.weight,
            Norm::Smoothed(eta) => self.weight / (2.0 * (x * x + eta * eta).sqrt()),
        }
    }
}

#[inline]
pub(crate) fn axial_index(m: usize, i: usize, j: usize) -> u32 {
    (2 * (j * m + i)) as u32
}

#[inline]
pub(crate) fn lateral_index(m: usize, i: usize, j: usize) -> u32 {
    (2 * (j * m + i) + 1) as u32
}

pub(crate) fn pack(d: &DisplacementField) -> Vec<f64> {
    let (m, n) = d.dim();
    let mut out = vec![0.0; 2 * m * n];
    for j in 0..n {
        for i in 0..m {
            out[axial_index(m, i, j) as usize] = d.axial[[i, j]];
            out[lateral_index(m, i, j) as usize] = d.lateral[[i, j]];
        }
    }
    out
}

pub(crate) fn unpack(v: &[f64], (m, n): (usize, usize)) -> DisplacementField {
    let mut d = DisplacementField::zeros((m, n));
    for j in 0..n {
        for i in 0..m {
            d.axial[[i, j]] = v[axial_index(m, i, j) as usize];
            d.lateral[[i, j]] = v[lateral_index(m, i, j) as usize];
        }
    }
    d
}

struct Builder {
    atoms: Vec<Atom>,
    norm_first: Norm,
    norm_second: Norm,
}

impl Builder {
    fn push(&mut self, taps: &[(u32, f64)], offset: f64, weight: f64, norm: Norm, family: Family) {
        let mut arr = [(0u32, 0.0); 4];
        arr[..taps.len()].copy_from_slice(taps);
        self.atoms.push(Atom {
            taps: arr,
            len: taps.len() as u8,
            offset,
            weight,
            norm,
            family,
        });
    }

    fn first(&mut self, taps: &[(u32, f64)], offset: f64, weight: f64) {
        if weight > 0.0 {
            let norm = self.norm_first;
            self.push(taps, offset, weight, norm, Family::Regularization);
        }
    }

    fn second(&mut self, taps: &[(u32, f64)], weight: f64) {
        if weight > 0.0 {
            let norm = self.norm_second;
            self.push(taps, 0.0, weight, norm, Family::Regularization);
        }
    }
}

/// Per-family weights of one objective variant.
struct Weights {
    gamma: f64,
    first: [f64; 4],
    second: [f64; 4],
    mech: f64,
}

fn weights(p: &SolverParams, variant: Variant) -> Weights {
    let mut w = if variant.is_l1() {
        Weights {
            gamma: p.gamma_s,
            first: [p.alpha1s, p.alpha2s, p.beta1s, p.beta2s].map(|c| p.w_f * c),
            second: [p.alpha1s, p.alpha2s, p.beta1s, p.beta2s].map(|c| p.w_s * c),
            mech: p.alpha3s,
        }
    } else {
        Weights {
            gamma: p.gamma,
            first: [p.alpha1, p.alpha2, p.beta1, p.beta2],
            second: [p.alpha1, p.alpha2, p.beta1, p.beta2].map(|c| p.w * c),
            mech: p.alpha3,
        }
    };
    if !variant.has_mechanical() {
        w.mech = 0.0;
    }
    w
}

/// All penalty atoms of `variant` on an `m x n` grid. Terms with zero
/// weight are omitted entirely.
pub(crate) fn build_atoms(
    dim: (usize, usize),
    p: &SolverParams,
    variant: Variant,
    nu: &EprField,
    bias: BiasState,
) -> Vec<Atom> {
    let (m, n) = dim;
    let w = weights(p, variant);
    let (norm_first, norm_second, norm_mech) = if variant.is_l1() {
        (Norm::Smoothed(p.eta_first), Norm::Smoothed(p.eta_second), Norm::Smoothed(p.eta_m))
    } else {
        (Norm::Quadratic, Norm::Quadratic, Norm::Quadratic)
    };
    let mut b = Builder {
        atoms: Vec::with_capacity(12 * m * n),
        norm_first,
        norm_second,
    };
    let [a1, a2, b1, b2] = w.first;
    let [wa1, wa2, wb1, wb2] = w.second;
    let ax = |i, j| axial_index(m, i, j);
    let lat = |i, j| lateral_index(m, i, j);

    for j in 0..n {
        b.first(&[(ax(0, j), 1.0)], 0.0, w.gamma);
    }
    for j in 0..n {
        for i in 0..m {
            if i + 1 < m {
                b.first(&[(ax(i + 1, j), 1.0), (ax(i, j), -1.0)], -bias.eps_a, a1);
                b.first(&[(lat(i + 1, j), 1.0), (lat(i, j), -1.0)], 0.0, b1);
            }
            if j + 1 < n {
                b.first(&[(ax(i, j + 1), 1.0), (ax(i, j), -1.0)], 0.0, a2);
                b.first(&[(lat(i, j + 1), 1.0), (lat(i, j), -1.0)], -bias.eps_l, b2);
            }
            if i >= 1 && i + 1 < m {
                b.second(&[(ax(i - 1, j), 1.0), (ax(i, j), -2.0), (ax(i + 1, j), 1.0)], wa1);
                b.second(&[(lat(i - 1, j), 1.0), (lat(i, j), -2.0), (lat(i + 1, j), 1.0)], wb1);
            }
            if j >= 1 && j + 1 < n {
                b.second(&[(ax(i, j - 1), 1.0), (ax(i, j), -2.0), (ax(i, j + 1), 1.0)], wa2);
                b.second(&[(lat(i, j - 1), 1.0), (lat(i, j), -2.0), (lat(i, j + 1), 1.0)], wb2);
            }
            if w.mech > 0.0 && i + 1 < m && j + 1 < n {
                let v = nu.nu[[i, j]];
                b.push(
                    &[(lat(i, j + 1), 1.0), (lat(i, j), -1.0), (ax(i + 1, j), v), (ax(i, j), -v)],
                    0.0,
                    w.mech,
                    norm_mech,
                    Family::Mechanical,
                );
            }
        }
    }
    b.atoms
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn pack_round_trip() {
        let d = DisplacementField::new(
            Array2::from_shape_fn((3, 4), |(i, j)| (i * 10 + j) as f64),
            Array2::from_shape_fn((3, 4), |(i, j)| -((i * 10 + j) as f64)),
        )
        .unwrap();
        let v = pack(&d);
        assert_eq!(v[axial_index(3, 2, 1) as usize], 21.0);
        assert_eq!(v[lateral_index(3, 2, 1) as usize], -21.0);
        assert_eq!(unpack(&v, (3, 4)), d);
    }

    #[test]
    fn zero_weights_are_skipped() {
        let p = SolverParams {
            alpha1: 0.0,
            alpha2: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            w: 0.0,
            gamma: 0.0,
            alpha3: 0.0,
            ..SolverParams::default()
        };
        let nu = EprField::constant((5, 5), 0.3);
        assert!(build_atoms((5, 5), &p, Variant::L2m, &nu, BiasState::default()).is_empty());
    }

    #[test]
    fn mechanical_atoms_only_for_mech_variants() {
        let p = SolverParams::default();
        let nu = EprField::constant((6, 5), 0.3);
        let count = |v| {
            build_atoms((6, 5), &p, v, &nu, BiasState::default())
                .iter()
                .filter(|a| a.family == Family::Mechanical)
                .count()
        };
        assert_eq!(count(Variant::L2), 0);
        assert_eq!(count(Variant::L1), 0);
        assert_eq!(count(Variant::L2m), 5 * 4);
        assert_eq!(count(Variant::L1m), 5 * 4);
    }

    #[test]
    fn smoothed_surrogate_touches_penalty_slope() {
        let atom = Atom {
            taps: [(0, 1.0); 4],
            len: 1,
            offset: 0.0,
            weight: 0.7,
            norm: Norm::Smoothed(0.01),
            family: Family::Regularization,
        };
        let x = 0.3;
        let h = 1e-7;
        let slope = (atom.penalty(x + h) - atom.penalty(x - h)) / (2.0 * h);
        assert!((2.0 * atom.surrogate_weight(x) * x - slope).abs() < 1e-6);
        assert!((atom.surrogate_weight(0.0) - 0.7 / 0.02).abs() < 1e-12);
    }
}
