//! Matrix-free periodic Schrödinger operator `-Δ_h + V` and a Jacobi
//! preconditioned conjugate-gradient solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, norm2, ScalarField};
use crate::grid::Grid;

/// A symmetric positive definite operator on `R^n`, applied matrix-free.
pub trait SpdOperator {
    fn size(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

/// Second-order finite-difference discretization of `H = -Δ + V` with
/// periodic boundary conditions (3-point stencil in 1D, 5-point in 2D).
#[derive(Debug, Clone)]
pub struct SchrodingerOperator {
    grid: Grid,
    potential: ScalarField,
    inv_h2: f64,
}

impl SchrodingerOperator {
    pub fn new(potential: ScalarField) -> Result<Self> {
        let values = potential.values();
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidPotential(format!(
                "potential is negative ({}) at grid point {i}",
                values[i]
            )));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidPotential(
                "potential vanishes identically; H is singular".into(),
            ));
        }
        let grid = potential.grid().clone();
        let h = grid.spacing();
        Ok(SchrodingerOperator {
            inv_h2: 1.0 / (h * h),
            grid,
            potential,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    /// `H f` on fields.
    pub fn apply_h(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![0.0; f.len()];
        self.apply(f.values(), &mut out);
        ScalarField::new(self.grid.clone(), out)
    }

    /// `-Δ_h x` only.
    pub fn apply_laplacian(&self, x: &[f64], y: &mut [f64]) {
        let shape = self.grid.shape();
        let c = self.inv_h2;
        if shape.len() == 1 {
            let n = shape[0];
            for j in 0..n {
                let left = x[if j == 0 { n - 1 } else { j - 1 }];
                let right = x[if j + 1 == n { 0 } else { j + 1 }];
                y[j] = (2.0 * x[j] - left - right) * c;
            }
        } else {
            let (n0, n1) = (shape[0], shape[1]);
            for i0 in 0..n0 {
                let up = if i0 == 0 { n0 - 1 } else { i0 - 1 } * n1;
                let down = if i0 + 1 == n0 { 0 } else { i0 + 1 } * n1;
                let row = i0 * n1;
                for i1 in 0..n1 {
                    let left = if i1 == 0 { n1 - 1 } else { i1 - 1 };
                    let right = if i1 + 1 == n1 { 0 } else { i1 + 1 };
                    let j = row + i1;
                    y[j] = (4.0 * x[j] - x[up + i1] - x[down + i1] - x[row + left] - x[row + right])
                        * c;
                }
            }
        }
    }

    /// Energy split of a field: (`||∇_h f||^2`, `<V f, f>`) with forward
    /// differences and the quadrature inner product.
    pub fn energy_split(&self, f: &ScalarField) -> Result<(f64, f64)> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let lattice = self.grid.lattice();
        let x = f.values();
        let mut kinetic = 0.0;
        for j in 0..x.len() {
            let [i0, i1] = lattice.to_multi(j);
            let (a, b) = (i0 as isize, i1 as isize);
            let fwd0 = x[lattice.to_flat([a + 1, b])] - x[j];
            kinetic += fwd0 * fwd0;
            if self.grid.dim() == 2 {
                let fwd1 = x[lattice.to_flat([a, b + 1])] - x[j];
                kinetic += fwd1 * fwd1;
            }
        }
        let vol = self.grid.cell_volume();
        let pot: f64 = x
            .iter()
            .zip(self.potential.values())
            .map(|(f, v)| v * f * f)
            .sum();
        Ok((kinetic * self.inv_h2 * vol, pot * vol))
    }
}

impl SpdOperator for SchrodingerOperator {
    fn size(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_laplacian(x, y);
        for ((yj, xj), vj) in y.iter_mut().zip(x).zip(self.potential.values()) {
            *yj += vj * xj;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let stencil = 2.0 * self.grid.dim() as f64 * self.inv_h2;
        self.potential.values().iter().map(|v| stencil + v).collect()
    }
}

/// `H - shift I`, positive definite when `shift` lies below the spectrum.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedOperator<'a> {
    pub op: &'a SchrodingerOperator,
    pub shift: f64,
}

impl SpdOperator for ShiftedOperator<'_> {
    fn size(&self) -> usize {
        self.op.size()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        for (yj, xj) in y.iter_mut().zip(x) {
            *yj -= self.shift * xj;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.op.diagonal().into_iter().map(|d| d - self.shift).collect()
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// True residual `||A x - b|| / ||b||`, recomputed at the end.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients with Jacobi preconditioning.
///
/// Returns `x` with `||A x - b|| <= tol ||b||` when `report.converged`. The
/// residual in the report is recomputed from scratch; if the recursively
/// updated residual drifted, CG is restarted from the current iterate.
pub fn solve_spd<A: SpdOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveReport) {
    let n = op.size();
    assert_eq!(rhs.len(), n, "right-hand side has the wrong length");
    let b_norm = norm2(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = rhs.to_vec();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = 1.0;
    let mut previous_rel = f64::INFINITY;

    const MAX_RESTARTS: usize = 8;
    for _ in 0..MAX_RESTARTS {
        for ((zj, rj), dj) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zj = rj * dj;
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 || !pap.is_finite() {
                break;
            }
            let alpha = rz / pap;
            for j in 0..n {
                x[j] += alpha * p[j];
                r[j] -= alpha * ap[j];
            }
            iterations += 1;
            if norm2(&r) <= tol * b_norm {
                break;
            }
            for ((zj, rj), dj) in z.iter_mut().zip(&r).zip(&inv_diag) {
                *zj = rj * dj;
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (pj, zj) in p.iter_mut().zip(&z) {
                *pj = zj + beta * *pj;
            }
        }
        op.apply(&x, &mut ap);
        for j in 0..n {
            r[j] = rhs[j] - ap[j];
        }
        rel = norm2(&r) / b_norm;
        if rel <= tol || iterations >= max_iter || rel > 0.5 * previous_rel {
            break;
        }
        previous_rel = rel;
    }
    (
        x,
        SolveReport {
            iterations,
            relative_residual: rel,
            converged: rel <= tol,
        },
    )
}

impl SchrodingerOperator {
    /// Solve `H x = rhs` for fields; non-convergence is an error.
    pub fn solve(&self, rhs: &ScalarField, tol: f64, max_iter: usize) -> Result<(ScalarField, SolveReport)> {
        if rhs.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let (x, report) = solve_spd(self, rhs.values(), tol, max_iter);
        if !report.converged {
            return Err(Error::NotConverged {
                iterations: report.iterations,
                relative_residual: report.relative_residual,
            });
        }
        Ok((ScalarField::new(self.grid.clone(), x)?, report))
    }
}

/// Default iteration cap for a grid with `n` points.
pub fn default_max_iter(n: usize) -> usize {
    (4 * n).max(1000)
}
