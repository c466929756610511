//! Piecewise-constant random potentials on unit cells.
//!
//! Three families are supported: iid uniform, iid two-valued (Bernoulli), and
//! squared correlated Gaussians obtained by filtering white noise in Fourier
//! space (circulant embedding). Every generator is a pure function of its
//! parameters and a 64-bit seed.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::rng::SplitMix64;

/// How a potential was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub generator: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl GeneratorMeta {
    fn new(generator: &str, params: &[(&str, f64)], seed: u64) -> Self {
        GeneratorMeta {
            generator: generator.to_string(),
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            seed,
        }
    }
}

/// One nonnegative value per unit cell, row-major over cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    dim: usize,
    units: Vec<usize>,
    cell_values: Vec<f64>,
    meta: GeneratorMeta,
}

impl Potential {
    pub fn new(
        dim: usize,
        units: Vec<usize>,
        cell_values: Vec<f64>,
        meta: GeneratorMeta,
    ) -> Result<Self> {
        let p = Potential {
            dim,
            units,
            cell_values,
            meta,
        };
        p.validate()?;
        Ok(p)
    }

    /// A potential with explicitly given cell values.
    pub fn from_cells(units: &[usize], cell_values: Vec<f64>) -> Result<Self> {
        Self::new(
            units.len(),
            units.to_vec(),
            cell_values,
            GeneratorMeta::new("custom", &[], 0),
        )
    }

    fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidPotential(format!(
                "dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if self.units.len() != self.dim || self.units.iter().any(|&u| u < 2) {
            return Err(Error::InvalidPotential(format!(
                "need {} unit counts of at least 2, got {:?}",
                self.dim, self.units
            )));
        }
        let cells: usize = self.units.iter().product();
        if self.cell_values.len() != cells {
            return Err(Error::LengthMismatch {
                expected: cells,
                actual: self.cell_values.len(),
            });
        }
        if let Some(i) = self
            .cell_values
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidPotential(format!(
                "cell {i} has value {}; values must be finite and nonnegative",
                self.cell_values[i]
            )));
        }
        if !self.cell_values.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidPotential(
                "potential vanishes identically".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn units(&self) -> &[usize] {
        &self.units
    }

    pub fn cell_values(&self) -> &[f64] {
        &self.cell_values
    }

    pub fn meta(&self) -> &GeneratorMeta {
        &self.meta
    }

    pub fn seed(&self) -> u64 {
        self.meta.seed
    }

    /// The same cell values multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut meta = self.meta.clone();
        let prior = meta.params.get("scale").copied().unwrap_or(1.0);
        meta.params.insert("scale".into(), prior * factor);
        Self::new(
            self.dim,
            self.units.clone(),
            self.cell_values.iter().map(|v| v * factor).collect(),
            meta,
        )
    }

    /// A grid over this potential's cells with `points_per_unit` points per unit length.
    pub fn grid(&self, points_per_unit: usize) -> Result<Grid> {
        Grid::new(self.dim, &self.units, points_per_unit)
    }

    /// Evaluate the potential at every grid point.
    pub fn sample_on_grid(&self, grid: &Grid) -> Result<ScalarField> {
        if grid.dim() != self.dim || grid.units() != self.units.as_slice() {
            return Err(Error::GridMismatch);
        }
        let values = (0..grid.len())
            .map(|i| self.cell_values[grid.cell_of(i)])
            .collect();
        ScalarField::new(grid.clone(), values)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Potential = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

/// iid values `lo + (hi - lo) U` per cell.
pub fn gen_uniform(units: &[usize], lo: f64, hi: f64, seed: u64) -> Result<Potential> {
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "uniform range needs 0 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let cells = cell_count(units)?;
    let mut rng = SplitMix64::new(seed);
    let values = (0..cells).map(|_| lo + (hi - lo) * rng.next_f64()).collect();
    Potential::new(
        units.len(),
        units.to_vec(),
        values,
        GeneratorMeta::new("uniform", &[("lo", lo), ("hi", hi)], seed),
    )
}

/// iid values: `v1` with probability `p1`, else `v0`.
pub fn gen_bernoulli(
    units: &[usize],
    v0: f64,
    v1: f64,
    p1: f64,
    seed: u64,
) -> Result<Potential> {
    if !(v0 >= 0.0 && v1 >= 0.0 && v0.is_finite() && v1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Bernoulli values must be nonnegative, got {v0} and {v1}"
        )));
    }
    if v0 + v1 <= 0.0 {
        return Err(Error::InvalidParameter(
            "Bernoulli values cannot both be zero".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::InvalidParameter(format!(
            "probability must lie in [0, 1], got {p1}"
        )));
    }
    let cells = cell_count(units)?;
    let mut rng = SplitMix64::new(seed);
    let values = (0..cells)
        .map(|_| if rng.next_f64() < p1 { v1 } else { v0 })
        .collect();
    Potential::new(
        units.len(),
        units.to_vec(),
        values,
        GeneratorMeta::new("bernoulli", &[("v0", v0), ("v1", v1), ("p1", p1)], seed),
    )
}

/// Squared Gaussian field on `n` cells with spectral multiplier
/// `q_i = q_{n-i} = sigma exp(-d i)`, `0 <= i <= n/2`.
pub fn gen_correlated_1d(n: usize, sigma: f64, d: f64, seed: u64) -> Result<Potential> {
    check_correlated(n, sigma, d)?;
    let multiplier: Vec<f64> = (0..n)
        .map(|i| sigma * (-d * i.min(n - i) as f64).exp())
        .collect();
    let mut rng = SplitMix64::new(seed);
    let z: Vec<Complex64> = rng
        .standard_normals(n)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let mut spectrum = fft::dft(&z);
    for (s, q) in spectrum.iter_mut().zip(&multiplier) {
        *s *= q;
    }
    let filtered = fft::idft(&spectrum);
    let values = square_real_part(&filtered)?;
    Potential::new(
        1,
        vec![n],
        values,
        GeneratorMeta::new("correlated", &[("n", n as f64), ("sigma", sigma), ("d", d)], seed),
    )
}

/// Squared Gaussian field on `n x n` cells with aperture multiplier
/// `sigma * chi(d |t|)`, `t` the wrapped integer frequency.
pub fn gen_correlated_2d(n: usize, sigma: f64, d: f64, seed: u64) -> Result<Potential> {
    check_correlated(n, sigma, d)?;
    let mut rng = SplitMix64::new(seed);
    let z: Vec<Complex64> = rng
        .standard_normals(n * n)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let mut spectrum = fft::dft2(&z, n, n);
    for (idx, s) in spectrum.iter_mut().enumerate() {
        let t0 = (idx / n).min(n - idx / n) as f64;
        let t1 = (idx % n).min(n - idx % n) as f64;
        if d * (t0 * t0 + t1 * t1).sqrt() > 1.0 {
            *s = Complex64::default();
        } else {
            *s *= sigma;
        }
    }
    let filtered = fft::idft2(&spectrum, n, n);
    let values = square_real_part(&filtered)?;
    Potential::new(
        2,
        vec![n, n],
        values,
        GeneratorMeta::new("correlated", &[("n", n as f64), ("sigma", sigma), ("d", d)], seed),
    )
}

fn check_correlated(n: usize, sigma: f64, d: f64) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "correlated potentials need an even cell count >= 4, got {n}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma and d must be positive, got sigma = {sigma}, d = {d}"
        )));
    }
    Ok(())
}

fn square_real_part(filtered: &[Complex64]) -> Result<Vec<f64>> {
    let scale = filtered.iter().map(|v| v.re.abs()).fold(1.0, f64::max);
    if let Some(v) = filtered.iter().find(|v| v.im.abs() > 1e-10 * scale) {
        return Err(Error::InvalidPotential(format!(
            "filtered field is not real (imaginary part {:e})",
            v.im
        )));
    }
    Ok(filtered.iter().map(|v| v.re * v.re).collect())
}

fn cell_count(units: &[usize]) -> Result<usize> {
    if units.is_empty() || units.len() > 2 || units.iter().any(|&u| u < 2) {
        return Err(Error::InvalidParameter(format!(
            "need 1 or 2 unit counts of at least 2, got {units:?}"
        )));
    }
    Ok(units.iter().product())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_paper_configuration() {
        let p = gen_uniform(&[80, 80], 0.0, 20.0, 3).unwrap();
        assert_eq!(p.cell_values().len(), 6400);
        assert!(p.cell_values().iter().all(|&v| (0.0..20.0).contains(&v)));
        assert_eq!(p.meta().generator, "uniform");
    }

    #[test]
    fn uniform_golden_values() {
        // 4 * (top 53 bits of the SplitMix64 stream for seed 1) / 2^53.
        let p = gen_uniform(&[4], 0.0, 4.0, 1).unwrap();
        assert_eq!(
            p.cell_values(),
            &[
                2.2662463006891236,
                2.9831270290508045,
                3.884011014347185,
                1.7774368682230883
            ]
        );
    }

    #[test]
    fn degenerate_uniform_is_constant() {
        let p = gen_uniform(&[5, 3], 2.5, 2.5, 9).unwrap();
        assert!(p.cell_values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn uniform_errors() {
        assert!(gen_uniform(&[4], -1.0, 2.0, 0).is_err());
        assert!(gen_uniform(&[4], 3.0, 2.0, 0).is_err());
        assert!(gen_uniform(&[4], 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn bernoulli_values_and_extremes() {
        let p = gen_bernoulli(&[80, 80], 0.0, 4.0, 0.3, 5).unwrap();
        assert!(p.cell_values().iter().all(|&v| v == 0.0 || v == 4.0));
        let p = gen_bernoulli(&[16], 0.0, 1.5, 1.0, 5).unwrap();
        assert!(p.cell_values().iter().all(|&v| v == 1.5));
        assert!(gen_bernoulli(&[16], 0.0, 0.0, 0.5, 5).is_err());
        assert!(gen_bernoulli(&[16], 0.0, 1.0, 1.5, 5).is_err());
        assert!(gen_bernoulli(&[16], 0.0, 1.0, -0.1, 5).is_err());
    }

    #[test]
    fn bernoulli_fraction_concentrates() {
        // Binomial(512, 0.5) has sd ~11.3, so (0.4, 0.6) is a ~4.5 sd band.
        for seed in 0..32 {
            let p = gen_bernoulli(&[512], 0.0, 1.0, 0.5, seed).unwrap();
            let frac = p.cell_values().iter().sum::<f64>() / 512.0;
            assert!(frac > 0.4 && frac < 0.6, "seed {seed}: {frac}");
        }
    }

    #[test]
    fn correlated_1d_basic() {
        let p = gen_correlated_1d(1024, 1.0, 0.01, 42).unwrap();
        let v = p.cell_values();
        assert_eq!(v.len(), 1024);
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!(v.iter().any(|&x| x != v[0]));
        assert!(gen_correlated_1d(1023, 1.0, 0.01, 0).is_err());
        assert!(gen_correlated_1d(64, 0.0, 0.01, 0).is_err());
        assert!(gen_correlated_1d(64, 1.0, -1.0, 0).is_err());
    }

    #[test]
    fn correlated_1d_large_decay_keeps_dc_mode() {
        let (n, sigma, seed) = (64, 1.3, 8);
        let p = gen_correlated_1d(n, sigma, 200.0, seed).unwrap();
        let z = SplitMix64::new(seed).standard_normals(n);
        let mean = z.iter().sum::<f64>() / n as f64;
        let expected = (sigma * mean).powi(2);
        for &v in p.cell_values() {
            assert!((v - expected).abs() <= 1e-12 * expected.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn correlated_sigma_scaling_is_quadratic() {
        let a = gen_correlated_1d(128, 1.0, 0.05, 4).unwrap();
        let b = gen_correlated_1d(128, 2.0, 0.05, 4).unwrap();
        for (x, y) in a.cell_values().iter().zip(b.cell_values()) {
            assert!((4.0 * x - y).abs() <= 1e-12 * y.max(1.0));
        }
        let a = gen_correlated_2d(16, 1.0, 0.2, 4).unwrap();
        let b = gen_correlated_2d(16, 2.0, 0.2, 4).unwrap();
        for (x, y) in a.cell_values().iter().zip(b.cell_values()) {
            assert!((4.0 * x - y).abs() <= 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn correlated_2d_aperture() {
        let p = gen_correlated_2d(80, 4.0, 0.05, 1).unwrap();
        assert_eq!(p.cell_values().len(), 6400);
        assert!(p.cell_values().iter().all(|&x| x >= 0.0));
        // Frequencies up to |t| = 1/d = 20 survive, a correlation length of a few
        // cells; iid cells would give a lag-1 autocorrelation near zero.
        let v = p.cell_values();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let lag1: f64 = (0..v.len())
            .map(|i| {
                let (r, c) = (i / 80, i % 80);
                (v[i] - mean) * (v[r * 80 + (c + 1) % 80] - mean)
            })
            .sum();
        assert!(lag1 / var > 0.3, "lag-1 autocorrelation {}", lag1 / var);

        // Only t = 0 survives when d exceeds 1.
        let p = gen_correlated_2d(8, 1.0, 1.5, 2).unwrap();
        let v = p.cell_values();
        assert!(v.iter().all(|&x| (x - v[0]).abs() <= 1e-12 * v[0].max(1e-300)));
    }

    #[test]
    fn sampling_tiles_cells() {
        let p = Potential::from_cells(&[2], vec![1.0, 3.0]).unwrap();
        let g = p.grid(2).unwrap();
        assert_eq!(p.sample_on_grid(&g).unwrap().values(), &[1.0, 1.0, 3.0, 3.0]);

        let p = gen_uniform(&[3, 4], 0.0, 4.0, 2).unwrap();
        let f = p.sample_on_grid(&p.grid(3).unwrap()).unwrap();
        let cmin = p.cell_values().iter().copied().fold(f64::INFINITY, f64::min);
        let cmax = p.cell_values().iter().copied().fold(0.0, f64::max);
        assert_eq!(f.min(), cmin);
        assert_eq!(f.max(), cmax);
        // Row-major over cells: cell (1, 2) is index 6.
        let g = f.grid();
        let idx = g.lattice().to_flat([4, 7]);
        assert_eq!(f.values()[idx], p.cell_values()[6]);

        let other = Grid::new(2, &[4, 3], 3).unwrap();
        assert!(p.sample_on_grid(&other).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = gen_bernoulli(&[6, 4], 0.0, 4.0, 0.3, 77).unwrap();
        let text = p.to_json().unwrap();
        assert_eq!(Potential::from_json(&text).unwrap(), p);
        assert!(text.starts_with("{\"dim\":2,\"units\":[6,4],\"cell_values\":["));
        let bad = text.replace("\"dim\":2", "\"dim\":3");
        assert!(Potential::from_json(&bad).is_err());
        assert!(Potential::from_cells(&[3], vec![0.0, 0.0, 0.0]).is_err());
        assert!(Potential::from_cells(&[3], vec![1.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_correlated_2d(16, 4.0, 0.05, 123).unwrap();
        let b = gen_correlated_2d(16, 4.0, 0.05, 123).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = gen_correlated_2d(16, 4.0, 0.05, 124).unwrap();
        assert_ne!(a.cell_values(), c.cell_values());
    }
}
