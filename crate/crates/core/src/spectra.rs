//! Eigenvalue oracle for the discrete operator.
//!
//! [`smallest_eigenpairs`] runs shift-invert Lanczos on `(H - σ)^{-1}` with
//! the shift at `min V` (below the spectrum), full reorthogonalization, thick
//! restarts and locking of converged pairs. Inner solves use [`solve_spd`]. In 1D the
//! operator is cyclic tridiagonal, so Sylvester inertia of `H - E` counts the
//! eigenvalues below `E` exactly; [`eigenvalues_in_range`] slices the spectrum
//! with it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::{dot, norm2, ScalarField};
use crate::operator::{default_max_iter, solve_spd, SchrodingerOperator, ShiftedOperator, SpdOperator};
use crate::rng::SplitMix64;

/// An approximate eigenpair of the discrete operator. `psi` is normalized in
/// the quadrature L2 norm; `residual = ||H psi - lambda psi||` in the same norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub psi: ScalarField,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Residual tolerance for accepting a pair.
    pub tol: f64,
    /// Relative tolerance of the inner CG solves.
    pub solve_tol: f64,
    pub max_restarts: usize,
    /// Maximum basis size; chosen from `k` when `None`.
    pub krylov_dim: Option<usize>,
    /// Seed for the start vectors.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            solve_tol: 1e-12,
            max_restarts: 60,
            krylov_dim: None,
            seed: 0x1A2C_705E,
        }
    }
}

/// The `k` smallest eigenpairs of `op`, ascending, each with residual `<= tol`.
pub fn smallest_eigenpairs(op: &SchrodingerOperator, k: usize, tol: f64) -> Result<Vec<EigenPair>> {
    smallest_eigenpairs_with(
        op,
        k,
        EigenOptions {
            tol,
            ..EigenOptions::default()
        },
    )
}

pub fn smallest_eigenpairs_with(
    op: &SchrodingerOperator,
    k: usize,
    opts: EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = op.size();
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one eigenpair".into()));
    }
    if 2 * k > n {
        return Err(Error::InvalidParameter(format!(
            "{k} eigenpairs requested on a grid of {n} points"
        )));
    }
    let vmin = op.potential().min();
    let vmax = op.potential().max();
    // H - min V is singular when V is constant.
    let fallback = vmin - 0.1;
    if vmax - vmin <= 1e-12 * vmax.max(1.0) {
        return lanczos(op, k, fallback, &opts);
    }
    match lanczos(op, k, vmin, &opts) {
        Err(Error::NotConverged { .. }) => lanczos(op, k, fallback, &opts),
        other => other,
    }
}

fn lanczos(
    op: &SchrodingerOperator,
    k: usize,
    shift: f64,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = op.size();
    let shifted = ShiftedOperator { op, shift };
    let max_iter = default_max_iter(n);
    let mut rng = SplitMix64::new(opts.seed);
    let max_basis = opts.krylov_dim.unwrap_or((2 * k + 20).max(40)).min(n);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    // Orthonormal basis `q` and its image `aq = (H - σ)^{-1} q`.
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut aq: Vec<Vec<f64>> = Vec::new();
    let mut next = random_unit(n, &mut rng);
    let mut fresh_start = true;
    let mut hy = vec![0.0; n];

    for _round in 0..opts.max_restarts {
        let kth_before = kth_value(&locked_vals, k);
        let random_round = fresh_start;
        fresh_start = false;

        // Expand the basis up to `max_basis - locked` vectors.
        let room = max_basis.min(n - locked.len());
        let mut misses = 0;
        while q.len() < room && misses < 3 {
            let mut v = next;
            for _ in 0..2 {
                orthogonalize(&mut v, &locked);
                orthogonalize(&mut v, &q);
            }
            let norm = norm2(&v);
            if norm < 1e-10 {
                misses += 1;
                next = random_unit(n, &mut rng);
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            let (w, report) = solve_spd(&shifted, &v, opts.solve_tol, max_iter);
            if !report.converged {
                return Err(Error::NotConverged {
                    iterations: report.iterations,
                    relative_residual: report.relative_residual,
                });
            }
            next = w.clone();
            q.push(v);
            aq.push(w);
        }

        // Residual direction of every Ritz pair from this basis.
        for _ in 0..2 {
            orthogonalize(&mut next, &locked);
            orthogonalize(&mut next, &q);
        }

        // Rayleigh-Ritz on span(q).
        let m = q.len();
        if m == 0 {
            if locked.len() >= k {
                return finish(op, locked, locked_vals, k);
            }
            break;
        }
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x = 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i]));
                t[(i, j)] = x;
                t[(j, i)] = x;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let remaining = k.saturating_sub(locked.len());
        let keep = (remaining + 10).min(m / 2).max(1);
        let mut found_below = false;
        let mut lowest_unconverged = f64::INFINITY;
        let mut kept_q = Vec::new();
        let mut kept_aq = Vec::new();
        for &idx in &order {
            let theta = eig.eigenvalues[idx];
            if theta <= 0.0 || kept_q.len() >= keep {
                break;
            }
            let combine = |basis: &[Vec<f64>]| {
                let mut y = vec![0.0; n];
                for (i, b) in basis.iter().enumerate() {
                    let s = eig.eigenvectors[(i, idx)];
                    for (yj, bj) in y.iter_mut().zip(b) {
                        *yj += s * bj;
                    }
                }
                y
            };
            let y = combine(&q);
            op.apply(&y, &mut hy);
            let y_norm2 = dot(&y, &y);
            let lambda = dot(&y, &hy) / y_norm2;
            let residual = hy
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt()
                / y_norm2.sqrt();
            // Margin so the residual recomputed after rescaling stays below tol.
            if residual <= 0.9 * opts.tol {
                if lambda < kth_before {
                    found_below = true;
                }
                let scale = 1.0 / y_norm2.sqrt();
                locked.push(y.into_iter().map(|x| x * scale).collect());
                locked_vals.push(lambda);
            } else {
                lowest_unconverged = lowest_unconverged.min(shift + 1.0 / theta);
                kept_aq.push(combine(&aq));
                kept_q.push(y);
            }
        }

        let kth = kth_value(&locked_vals, k);
        if locked.len() >= k && !found_below && lowest_unconverged >= kth {
            if random_round {
                return finish(op, locked, locked_vals, k);
            }
            // Confirm with a basis grown from a fresh random vector, which
            // exposes partners of degenerate eigenvalues.
            q.clear();
            aq.clear();
            next = random_unit(n, &mut rng);
            fresh_start = true;
            continue;
        }
        // Thick restart: keep the leading unconverged Ritz vectors and keep
        // expanding from the last residual direction.
        q = kept_q;
        aq = kept_aq;
    }
    Err(Error::Eigensolver(format!(
        "only {} of {k} eigenpairs converged within {} restarts",
        locked.len(),
        opts.max_restarts
    )))
}

fn kth_value(values: &[f64], k: usize) -> f64 {
    if values.len() < k {
        return f64::INFINITY;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[k - 1]
}

fn finish(
    op: &SchrodingerOperator,
    vectors: Vec<Vec<f64>>,
    values: Vec<f64>,
    k: usize,
) -> Result<Vec<EigenPair>> {
    let grid = op.grid().clone();
    let scale = 1.0 / grid.cell_volume().sqrt();
    let mut pairs: Vec<(f64, Vec<f64>)> = values.into_iter().zip(vectors).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(k);
    pairs
        .into_iter()
        .map(|(lambda, mut y)| {
            let (peak, _) = y
                .iter()
                .enumerate()
                .fold((0, 0.0), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
            let sign = if y[peak] < 0.0 { -scale } else { scale };
            y.iter_mut().for_each(|x| *x *= sign);
            let psi = ScalarField::new(grid.clone(), y)?;
            let mut pair = EigenPair {
                lambda,
                psi,
                residual: 0.0,
            };
            pair.residual = eigen_residual(op, &pair)?;
            Ok(pair)
        })
        .collect()
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    for q in against {
        let c = dot(w, q);
        for (wi, qi) in w.iter_mut().zip(q) {
            *wi -= c * qi;
        }
    }
}

fn random_unit(n: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
    let norm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// `||H psi - lambda psi||` in the quadrature L2 norm, recomputed from scratch.
pub fn eigen_residual(op: &SchrodingerOperator, pair: &EigenPair) -> Result<f64> {
    let h_psi = op.apply_h(&pair.psi)?;
    let sum: f64 = h_psi
        .values()
        .iter()
        .zip(pair.psi.values())
        .map(|(a, b)| (a - pair.lambda * b).powi(2))
        .sum();
    Ok((sum * op.grid().cell_volume()).sqrt())
}

/// Ground state of the finite square well `V = ν 1_{|x| > 1}` on the line:
/// the root of `cos √λ = √(λ/ν)` in `(0, π²/4)`.
pub fn square_well_eigenvalue(nu: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("well depth must be positive, got {nu}")));
    }
    let f = |l: f64| l.sqrt().cos() - (l / nu).sqrt();
    let (mut lo, mut hi) = (0.0, PI * PI / 4.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of eigenvalues of a 1D operator strictly below `energy`, from the
/// signs of the pivots of an `LDLᵀ` factorization of `H - energy`.
pub fn count_eigenvalues_below(op: &SchrodingerOperator, energy: f64) -> Result<usize> {
    if op.grid().dim() != 1 {
        return Err(Error::InvalidParameter(
            "inertia counting is available for 1D grids only".into(),
        ));
    }
    let v = op.potential().values();
    let n = v.len();
    let h = op.grid().spacing();
    let inv_h2 = 1.0 / (h * h);
    let c = -inv_h2;
    let diag = |i: usize| 2.0 * inv_h2 + v[i] - energy;
    let tiny = f64::EPSILON * inv_h2;
    let guard = |d: f64| if d.abs() < tiny { -tiny } else { d };

    // Eliminate rows 0..n-2 in order. Besides the tridiagonal part, each row
    // couples to the last row through the periodic corner, so track that
    // coupling `f` and the running last diagonal `g`.
    let mut count = 0;
    let mut d_cur = diag(0);
    let mut f = c;
    let mut g = diag(n - 1);
    for i in 0..n - 2 {
        let d = guard(d_cur);
        if d < 0.0 {
            count += 1;
        }
        let f_init = if i + 1 == n - 2 { c } else { 0.0 };
        d_cur = diag(i + 1) - c * c / d;
        g -= f * f / d;
        f = f_init - c * f / d;
    }
    let d = guard(d_cur);
    if d < 0.0 {
        count += 1;
    }
    g -= f * f / d;
    if guard(g) < 0.0 {
        count += 1;
    }
    Ok(count)
}

/// Gershgorin enclosure of the spectrum.
fn spectral_bounds(op: &SchrodingerOperator) -> (f64, f64) {
    let h = op.grid().spacing();
    let stencil = 4.0 * op.grid().dim() as f64 / (h * h);
    (op.potential().min(), op.potential().max() + stencil)
}

/// All eigenvalues in `[lo, hi)` of a 1D operator, ascending, each located by
/// bisection on the inertia count to absolute accuracy `tol`.
pub fn eigenvalues_in_range(op: &SchrodingerOperator, lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi})")));
    }
    let first = count_eigenvalues_below(op, lo)?;
    let end = count_eigenvalues_below(op, hi)?;
    let mut out = Vec::with_capacity(end - first);
    let mut floor = lo;
    for index in first..end {
        let value = bisect_eigenvalue(op, index, floor, hi, tol)?;
        out.push(value);
        floor = value - tol;
    }
    Ok(out)
}

/// The `k`-th smallest eigenvalue (1-based) of a 1D operator.
pub fn kth_eigenvalue(op: &SchrodingerOperator, k: usize, tol: f64) -> Result<f64> {
    if k == 0 || k > op.size() {
        return Err(Error::InvalidParameter(format!("eigenvalue index {k} out of range")));
    }
    let (lo, hi) = spectral_bounds(op);
    bisect_eigenvalue(op, k - 1, lo - 1.0, hi + 1.0, tol)
}

/// Smallest `x` in `[lo, hi]` with more than `index` eigenvalues below it.
fn bisect_eigenvalue(op: &SchrodingerOperator, index: usize, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if count_eigenvalues_below(op, mid)? > index {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner;
    use crate::grid::Grid;
    use crate::potential::{gen_bernoulli, gen_uniform, Potential};

    fn op_for(p: &Potential, r: usize) -> SchrodingerOperator {
        let g = p.grid(r).unwrap();
        SchrodingerOperator::new(p.sample_on_grid(&g).unwrap()).unwrap()
    }

    #[test]
    fn constant_potential_spectrum() {
        let (c, units, r) = (1.5, 6, 4);
        let g = Grid::new(1, &[units], r).unwrap();
        let op = SchrodingerOperator::new(ScalarField::constant(g, c).unwrap()).unwrap();
        let pairs = smallest_eigenpairs(&op, 5, 1e-8).unwrap();
        let h = 1.0 / r as f64;
        let len = units as f64;
        let mode = |k: f64| c + (2.0 - 2.0 * (2.0 * PI * k * h / len).cos()) / (h * h);
        let expected = [c, mode(1.0), mode(1.0), mode(2.0), mode(2.0)];
        for (p, e) in pairs.iter().zip(expected) {
            assert!((p.lambda - e).abs() < 1e-9, "{} vs {e}", p.lambda);
            assert!(p.residual <= 1e-8);
        }
        // Ground state is the normalized constant.
        let amp = 1.0 / len.sqrt();
        assert!(pairs[0].psi.values().iter().all(|v| (v - amp).abs() < 1e-8));
        let res = eigen_residual(&op, &pairs[0]).unwrap();
        assert!(res < 1e-8);

        let exact = EigenPair {
            lambda: c,
            psi: ScalarField::constant(op.grid().clone(), amp).unwrap(),
            residual: 0.0,
        };
        assert!(eigen_residual(&op, &exact).unwrap() < 1e-13);
    }

    #[test]
    fn random_instance_pairs_are_orthonormal_and_accurate() {
        let p = gen_uniform(&[64], 0.0, 4.0, 3).unwrap();
        let op = op_for(&p, 6);
        let pairs = smallest_eigenpairs(&op, 8, 1e-8).unwrap();
        for w in pairs.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
        for (i, a) in pairs.iter().enumerate() {
            assert!(a.residual <= 1e-8);
            assert!(a.lambda >= op.potential().min() - 1e-9);
            for (j, b) in pairs.iter().enumerate() {
                let g = inner(&a.psi, &b.psi).unwrap();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-8, "gram[{i}][{j}] = {g}");
            }
            // Largest component is positive.
            let (idx, _) = a
                .psi
                .values()
                .iter()
                .enumerate()
                .fold((0, 0.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
            assert!(a.psi.values()[idx] > 0.0);
        }
        // Inertia-based bisection agrees with Lanczos.
        for (i, pair) in pairs.iter().enumerate() {
            let l = kth_eigenvalue(&op, i + 1, 1e-12).unwrap();
            assert!((l - pair.lambda).abs() < 1e-9, "{l} vs {}", pair.lambda);
        }
    }

    #[test]
    fn two_dimensional_instance() {
        let p = gen_bernoulli(&[10, 10], 0.0, 4.0, 0.3, 1).unwrap();
        let op = op_for(&p, 3);
        let pairs = smallest_eigenpairs(&op, 4, 1e-8).unwrap();
        for (i, a) in pairs.iter().enumerate() {
            assert!(a.residual <= 1e-8);
            for b in &pairs[i + 1..] {
                assert!(inner(&a.psi, &b.psi).unwrap().abs() < 1e-8);
            }
        }
        assert!(count_eigenvalues_below(&op, 1.0).is_err());
    }

    #[test]
    fn residual_grows_linearly_with_perturbation() {
        let p = gen_uniform(&[32], 0.0, 4.0, 9).unwrap();
        let op = op_for(&p, 5);
        let pair = smallest_eigenpairs(&op, 1, 1e-8).unwrap().remove(0);
        let mut rng = SplitMix64::new(4);
        let noise: Vec<f64> = (0..op.size()).map(|_| rng.next_f64() - 0.5).collect();
        let perturbed = |eps: f64| {
            let v: Vec<f64> = pair.psi.values().iter().zip(&noise).map(|(a, b)| a + eps * b).collect();
            EigenPair {
                lambda: pair.lambda,
                psi: ScalarField::new(op.grid().clone(), v).unwrap(),
                residual: 0.0,
            }
        };
        let r1 = eigen_residual(&op, &perturbed(1e-4)).unwrap();
        let r2 = eigen_residual(&op, &perturbed(2e-4)).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 0.01, "ratio {}", r2 / r1);
    }

    #[test]
    fn rejects_bad_k() {
        let g = Grid::new(1, &[2], 2).unwrap();
        let op = SchrodingerOperator::new(ScalarField::constant(g, 1.0).unwrap()).unwrap();
        assert!(smallest_eigenpairs(&op, 0, 1e-8).is_err());
        assert!(smallest_eigenpairs(&op, 3, 1e-8).is_err());
    }

    #[test]
    fn square_well_root() {
        let l = square_well_eigenvalue(4.0).unwrap();
        let f = |x: f64| x.sqrt().cos() - (x / 4.0).sqrt();
        assert!(f(l - 1e-9) > 0.0 && f(l + 1e-9) < 0.0);
        for nu in [0.01, 0.5, 1.0, 4.0, 100.0, 1e6] {
            let l = square_well_eigenvalue(nu).unwrap();
            assert!(l > 0.0 && l < nu.min(PI * PI / 4.0), "nu = {nu}: {l}");
        }
        let deep = square_well_eigenvalue(1e12).unwrap();
        assert!((deep - PI * PI / 4.0).abs() < 1e-5);
        assert!(square_well_eigenvalue(0.0).is_err());
    }

    #[test]
    fn inertia_count_matches_constant_spectrum() {
        let (c, units, r) = (0.7, 5, 3);
        let g = Grid::new(1, &[units], r).unwrap();
        let op = SchrodingerOperator::new(ScalarField::constant(g, c).unwrap()).unwrap();
        let n = units * r;
        let h = 1.0 / r as f64;
        let mut all: Vec<f64> = (0..n)
            .map(|k| c + (2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos()) / (h * h))
            .collect();
        all.sort_by(f64::total_cmp);
        for e in [0.0, 0.71, 1.0, 3.0, 10.0, 20.0, 40.0] {
            let expected = all.iter().filter(|&&l| l < e).count();
            assert_eq!(count_eigenvalues_below(&op, e).unwrap(), expected, "E = {e}");
        }
        let found = eigenvalues_in_range(&op, 0.0, 30.0, 1e-12).unwrap();
        let expected: Vec<f64> = all.iter().copied().filter(|&l| l < 30.0).collect();
        assert_eq!(found.len(), expected.len());
        // Exactly degenerate pairs cost the bordered elimination some digits.
        for (a, b) in found.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-6, "{found:?} vs {expected:?}");
        }
    }
}
