//! Landscape function `u` (`H u = 1`), effective potential `W = 1/u`, and
//! numerical checks of the landscape identities.

use crate::error::{Error, Result};
use crate::field::{l2_norm, ScalarField};
use crate::operator::{default_max_iter, SchrodingerOperator, SolveReport};
use crate::spectra::EigenPair;

/// Default relative residual for the landscape solve.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LandscapePair {
    pub u: ScalarField,
    pub w: ScalarField,
    pub solve_report: SolveReport,
}

/// Solve `H u = 1` and form `W = 1/u`. Fails if `u` is not strictly positive.
pub fn compute_landscape(op: &SchrodingerOperator, tol: f64) -> Result<LandscapePair> {
    let grid = op.grid().clone();
    let ones = ScalarField::constant(grid, 1.0)?;
    let (u, solve_report) = op.solve(&ones, tol, default_max_iter(ones.len()))?;
    if let Some((index, &value)) = u.values().iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::NonPositiveLandscape { index, value });
    }
    let w = u.map(|x| 1.0 / x)?;
    Ok(LandscapePair { u, w, solve_report })
}

/// `(inf V, inf W)` on a common grid.
pub fn lower_bounds(v: &ScalarField, w: &ScalarField) -> Result<(f64, f64)> {
    v.same_grid(w)?;
    Ok((v.min(), w.min()))
}

/// `max_j (|ψ_j| - λ u_j ||ψ||_∞)`; nonpositive when the landscape bound holds.
pub fn check_landscape_bound(u: &ScalarField, pair: &EigenPair) -> Result<f64> {
    u.same_grid(&pair.psi)?;
    let sup = pair.psi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(pair
        .psi
        .values()
        .iter()
        .zip(u.values())
        .map(|(p, uj)| p.abs() - pair.lambda * uj * sup)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `L_h φ = -(1/u²) div_h(ū² grad_h φ)` with `ū²` the arithmetic mean of
/// `u²` at the two ends of each edge.
pub fn apply_l(pair: &LandscapePair, phi: &ScalarField) -> Result<ScalarField> {
    pair.u.same_grid(phi)?;
    let grid = phi.grid();
    let lattice = grid.lattice();
    let h = grid.spacing();
    let u = pair.u.values();
    let x = phi.values();
    let mut out = vec![0.0; x.len()];
    for (j, out_j) in out.iter_mut().enumerate() {
        let [i0, i1] = lattice.to_multi(j);
        let base = [i0 as isize, i1 as isize];
        let mut div = 0.0;
        for axis in 0..grid.dim() {
            let mut step = base;
            step[axis] += 1;
            let jp = lattice.to_flat(step);
            step[axis] -= 2;
            let jm = lattice.to_flat(step);
            let up = 0.5 * (u[j] * u[j] + u[jp] * u[jp]);
            let um = 0.5 * (u[j] * u[j] + u[jm] * u[jm]);
            div += up * (x[jp] - x[j]) - um * (x[j] - x[jm]);
        }
        *out_j = -div / (h * h * u[j] * u[j]);
    }
    ScalarField::new(grid.clone(), out)
}

/// `(L_h + W) φ`.
pub fn apply_conjugated(pair: &LandscapePair, phi: &ScalarField) -> Result<ScalarField> {
    let l = apply_l(pair, phi)?;
    let values = l
        .values()
        .iter()
        .zip(pair.w.values())
        .zip(phi.values())
        .map(|((a, w), p)| a + w * p)
        .collect();
    ScalarField::new(phi.grid().clone(), values)
}

/// `||H_h(u φ) - u (L_h + W) φ|| / ||φ||`.
pub fn conjugated_residual(op: &SchrodingerOperator, pair: &LandscapePair, phi: &ScalarField) -> Result<f64> {
    pair.u.same_grid(phi)?;
    let u_phi = ScalarField::new(
        phi.grid().clone(),
        pair.u.values().iter().zip(phi.values()).map(|(a, b)| a * b).collect(),
    )?;
    let lhs = op.apply_h(&u_phi)?;
    let rhs = apply_conjugated(pair, phi)?;
    let r = ScalarField::new(
        phi.grid().clone(),
        lhs.values()
            .iter()
            .zip(rhs.values())
            .zip(pair.u.values())
            .map(|((a, b), u)| a - u * b)
            .collect(),
    )?;
    Ok(l2_norm(&r) / l2_norm(phi))
}
