//! Direct sparse Cholesky solves.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::LltError;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Side};

use crate::error::{Error, Result};
use crate::solver::system::{LinearSystem, Pattern};

const REFINEMENT_STEPS: usize = 3;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cholesky solver that reuses its symbolic analysis while the sparsity
/// pattern stays the same.
#[derive(Default)]
pub struct SparseSolver {
    cached: Option<(Pattern, SymbolicLlt<usize>)>,
}

impl SparseSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn symbolic(&mut self, pattern: &Pattern) -> Result<SymbolicLlt<usize>> {
        if let Some((p, s)) = &self.cached {
            if p == pattern {
                return Ok(s.clone());
            }
        }
        let sym = SymbolicSparseColMatRef::new_checked(pattern.size, pattern.size, &pattern.col_ptr, None, &pattern.row_idx);
        let s = SymbolicLlt::try_new(sym, Side::Upper).map_err(|e| Error::Numerical(format!("symbolic factorization: {e:?}")))?;
        self.cached = Some((pattern.clone(), s.clone()));
        Ok(s)
    }

    /// Solves `A x = b` and checks `|A x - b| / |b| <= tol`, refining the
    /// solution iteratively if needed.
    pub fn solve(&mut self, sys: &LinearSystem, tol: f64) -> Result<Vec<f64>> {
        let size = sys.size();
        let b_norm = norm(&sys.rhs);
        if b_norm == 0.0 {
            return Ok(vec![0.0; size]);
        }
        let pattern = sys.pattern();
        let symbolic = self.symbolic(pattern)?;
        let sym = SymbolicSparseColMatRef::new_checked(size, size, &pattern.col_ptr, None, &pattern.row_idx);
        let mat = SparseColMatRef::new(sym, &sys.values);
        let llt = Llt::try_new_with_symbolic(symbolic, mat, Side::Upper).map_err(|e| match e {
            LltError::Numeric(inner) => Error::Numerical(format!("matrix is not positive definite: {inner:?}")),
            LltError::Generic(inner) => Error::Numerical(format!("factorization failed: {inner:?}")),
        })?;
        let solve = |v: &mut Vec<f64>| {
            let mat = MatMut::from_column_major_slice_mut(v.as_mut_slice(), size, 1);
            llt.solve_in_place_with_conj(Conj::No, mat);
        };

        let mut x = sys.rhs.clone();
        solve(&mut x);
        let mut residual = 0.0;
        for step in 0..=REFINEMENT_STEPS {
            let mut r = sys.residual(&x);
            residual = norm(&r) / b_norm;
            if !residual.is_finite() {
                return Err(Error::Numerical("non-finite solution".into()));
            }
            if residual <= tol || step == REFINEMENT_STEPS {
                break;
            }
            solve(&mut r);
            x.iter_mut().zip(&r).for_each(|(xi, ri)| *xi += ri);
        }
        if residual > tol {
            return Err(Error::Numerical(format!(
                "relative residual {residual:.3e} exceeds tolerance {tol:.1e}"
            )));
        }
        Ok(x)
    }
}

/// One-shot sparse solve of a symmetric positive definite system.
pub fn solve_sparse(sys: &LinearSystem, tol: f64) -> Result<Vec<f64>> {
    SparseSolver::new().solve(sys, tol)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Dense Cholesky, used as an oracle.
    pub(crate) fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut l = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut s = a[j][j];
            for k in 0..j {
                s -= l[j][k] * l[j][k];
            }
            assert!(s > 0.0, "dense oracle: matrix not positive definite");
            l[j][j] = s.sqrt();
            for i in j + 1..n {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / l[j][j];
            }
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
            y[i] = (b[i] - s) / l[i][i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
            x[i] = (y[i] - s) / l[i][i];
        }
        x
    }

    #[test]
    fn diagonal_system() {
        let n = 6;
        let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 2.0 } else { 0.0 }).collect()).collect();
        let sys = LinearSystem::from_dense(&a, vec![4.0; n]).unwrap();
        assert!(solve_sparse(&sys, 1e-10).unwrap().iter().all(|&v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = vec![vec![3.0, 1.0], vec![1.0, 2.0]];
        let sys = LinearSystem::from_dense(&a, vec![0.0, 0.0]).unwrap();
        assert_eq!(solve_sparse(&sys, 1e-10).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let sys = LinearSystem::from_dense(&a, vec![1.0, 0.0]).unwrap();
        assert!(matches!(solve_sparse(&sys, 1e-10), Err(Error::Numerical(_))));
    }

    #[test]
    fn matches_dense_cholesky() {
        let a = vec![
            vec![4.0, 1.0, 0.0, 0.5],
            vec![1.0, 3.0, 0.2, 0.0],
            vec![0.0, 0.2, 2.0, 0.1],
            vec![0.5, 0.0, 0.1, 5.0],
        ];
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let sys = LinearSystem::from_dense(&a, b.clone()).unwrap();
        let x = solve_sparse(&sys, 1e-12).unwrap();
        let y = dense_solve(&a, &b);
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-12));
    }
}
