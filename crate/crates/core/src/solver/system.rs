//! Normal equations of the linearized objective.
//!
//! At the current displacement `d` the data term is replaced by its
//! Gauss-Newton model and each penalty atom by a quadratic in the update:
//! the atom itself for quadratic penalties, or the tangent quadratic with
//! weight `c / (2 sqrt(x^2 + eta^2))` for smoothed-L1 ones. Setting the
//! gradient of that model to zero gives `A * delta = rhs` with
//! `rhs = -grad(C) / 2` at `delta = 0`.

use crate::error::{Error, Result};
use crate::solver::atoms::{build_atoms, pack, Atom};
use crate::solver::linearize::Linearization;
use crate::solver::params::{BiasState, SolverParams, Variant};
use crate::types::{DisplacementField, EprField};

/// Upper-triangular compressed-column sparsity pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub(crate) size: usize,
    pub(crate) col_ptr: Vec<usize>,
    pub(crate) row_idx: Vec<usize>,
}

impl Pattern {
    /// Pattern covering the per-sample 2x2 data blocks and every pair of
    /// taps of every atom.
    pub(crate) fn new(grid: (usize, usize), atoms: &[Atom]) -> Self {
        let size = 2 * grid.0 * grid.1;
        let mut cols: Vec<Vec<usize>> = (0..size)
            .map(|c| if c % 2 == 0 { vec![c] } else { vec![c - 1, c] })
            .collect();
        for atom in atoms {
            let taps = atom.taps();
            for (p, &(kp, _)) in taps.iter().enumerate() {
                for &(kq, _) in &taps[p..] {
                    let (r, c) = if kp <= kq { (kp, kq) } else { (kq, kp) };
                    cols[c as usize].push(r as usize);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(size + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut rows in cols {
            rows.sort_unstable();
            rows.dedup();
            row_idx.extend(rows);
            col_ptr.push(row_idx.len());
        }
        Self { size, col_ptr, row_idx }
    }

    #[inline]
    fn position(&self, r: usize, c: usize) -> usize {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        let start = self.col_ptr[c];
        let rows = &self.row_idx[start..self.col_ptr[c + 1]];
        start + rows.binary_search(&r).expect("entry outside sparsity pattern")
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }
}

/// Symmetric system stored as its upper triangle.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub(crate) pattern: Pattern,
    pub(crate) values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn size(&self) -> usize {
        self.pattern.size
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    /// Builds a system from a dense symmetric matrix (upper triangle used).
    pub fn from_dense(a: &[Vec<f64>], rhs: Vec<f64>) -> Result<Self> {
        let size = rhs.len();
        if a.len() != size || a.iter().any(|r| r.len() != size) {
            return Err(Error::Param("matrix and rhs sizes differ".into()));
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for c in 0..size {
            for (r, row) in a.iter().enumerate().take(c + 1) {
                if row[c] != 0.0 || r == c {
                    row_idx.push(r);
                    values.push(row[c]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            pattern: Pattern { size, col_ptr, row_idx },
            values,
            rhs,
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut a = vec![vec![0.0; n]; n];
        for c in 0..n {
            for k in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                let r = self.pattern.row_idx[k];
                a[r][c] = self.values[k];
                a[c][r] = self.values[k];
            }
        }
        a
    }

    /// `A * x` using both triangles.
    pub fn multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size()];
        for c in 0..self.size() {
            for k in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                let r = self.pattern.row_idx[k];
                let v = self.values[k];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }

    /// `rhs - A * x` accumulated in double-double precision.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        let mut hi = self.rhs.clone();
        let mut lo = vec![0.0; n];
        let mut sub = |row: usize, v: f64, xv: f64| {
            let p = v * xv;
            let perr = v.mul_add(xv, -p);
            let s = hi[row] - p;
            let bb = s - hi[row];
            let serr = (hi[row] - (s - bb)) + (-p - bb);
            hi[row] = s;
            lo[row] += serr - perr;
        };
        for c in 0..n {
            for k in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                let r = self.pattern.row_idx[k];
                let v = self.values[k];
                sub(r, v, x[c]);
                if r != c {
                    sub(c, v, x[r]);
                }
            }
        }
        hi.iter().zip(&lo).map(|(h, l)| h + l).collect()
    }

    /// Number of structural non-zeros in each row of the full matrix.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.size()];
        for c in 0..self.size() {
            for k in self.pattern.col_ptr[c]..self.pattern.col_ptr[c + 1] {
                let r = self.pattern.row_idx[k];
                counts[r] += 1;
                if r != c {
                    counts[c] += 1;
                }
            }
        }
        counts
    }

    #[inline]
    fn add(&mut self, r: usize, c: usize, v: f64) {
        let k = self.pattern.position(r, c);
        self.values[k] += v;
    }
}

/// Fills the normal equations for `atoms` into a system with `pattern`.
pub(crate) fn assemble(lin: &Linearization, packed: &[f64], atoms: &[Atom], pattern: &Pattern) -> Result<LinearSystem> {
    let (m, n) = lin.mu.dim();
    if pattern.size != 2 * m * n {
        return Err(Error::Param("sparsity pattern does not match the grid".into()));
    }
    if !lin.valid.iter().any(|&v| v) {
        return Err(Error::Singular("every sample is outside the post frame".into()));
    }
    let mut sys = LinearSystem {
        pattern: pattern.clone(),
        values: vec![0.0; pattern.nnz()],
        rhs: vec![0.0; pattern.size],
    };
    for j in 0..n {
        for i in 0..m {
            if !lin.valid[[i, j]] {
                continue;
            }
            let k = 2 * (j * m + i);
            let (ga, gl, mu) = (lin.grad_a[[i, j]], lin.grad_l[[i, j]], lin.mu[[i, j]]);
            sys.add(k, k, ga * ga);
            sys.add(k, k + 1, ga * gl);
            sys.add(k + 1, k + 1, gl * gl);
            sys.rhs[k] += ga * mu;
            sys.rhs[k + 1] += gl * mu;
        }
    }
    for atom in atoms {
        let x = atom.argument(packed);
        let c = atom.surrogate_weight(x);
        let taps = atom.taps();
        for (p, &(kp, tp)) in taps.iter().enumerate() {
            sys.rhs[kp as usize] -= c * x * tp;
            for &(kq, tq) in &taps[p..] {
                sys.add(kp as usize, kq as usize, c * tp * tq);
            }
        }
    }
    Ok(sys)
}

fn assemble_variant(
    lin: &Linearization,
    d: &DisplacementField,
    params: &SolverParams,
    nu: &EprField,
    bias: BiasState,
    variant: Variant,
) -> Result<LinearSystem> {
    if d.dim() != lin.mu.dim() || nu.dim() != lin.mu.dim() {
        return Err(Error::Shape {
            expected: lin.mu.dim(),
            got: if d.dim() != lin.mu.dim() { d.dim() } else { nu.dim() },
        });
    }
    let atoms = build_atoms(d.dim(), params, variant, nu, bias);
    let pattern = Pattern::new(d.dim(), &atoms);
    assemble(lin, &pack(d), &atoms, &pattern)
}

/// Normal equations of the quadratic objective (with the mechanical block
/// whenever `alpha3 > 0`).
pub fn assemble_system_l2(
    lin: &Linearization,
    d: &DisplacementField,
    params: &SolverParams,
    nu: &EprField,
    bias: BiasState,
) -> Result<LinearSystem> {
    assemble_variant(lin, d, params, nu, bias, Variant::L2m)
}

/// Reweighted normal equations of the smoothed-L1 objective (with the
/// mechanical block whenever `alpha3s > 0`).
pub fn assemble_system_l1(
    lin: &Linearization,
    d: &DisplacementField,
    params: &SolverParams,
    nu: &EprField,
    bias: BiasState,
) -> Result<LinearSystem> {
    assemble_variant(lin, d, params, nu, bias, Variant::L1m)
}
