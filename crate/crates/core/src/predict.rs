//! Spectral predictions from the landscape: eigenvalue estimates, supports,
//! location matching, ratio statistics, histograms and Weyl-type counts.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{argmax_field, integrate, ScalarField};
use crate::geometry::{sublevel_component, Region, Well};
use crate::grid::periodic_distance;
use crate::spectra::EigenPair;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {dim}")))
    }
}

/// `1 + n/4`.
pub fn bump_factor(dim: usize) -> Result<f64> {
    check_dim(dim)?;
    Ok(1.0 + dim as f64 / 4.0)
}

/// Support level multiplier: 1.875 in 1D, 1.56 in 2D.
pub fn default_alpha(dim: usize) -> Result<f64> {
    check_dim(dim)?;
    Ok(if dim == 1 { 1.5 * 1.25 } else { 1.04 * 1.5 })
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub well: Well,
    pub lambda_hat: f64,
    pub support: Region,
}

/// `λ̂_k = (1 + n/4) w_min(k)` in rank order.
pub fn predict_eigenvalues(wells: &[Well], dim: usize) -> Result<Vec<f64>> {
    let c = bump_factor(dim)?;
    Ok(wells.iter().map(|w| c * w.w_min).collect())
}

/// The first `k` wells, and whether fewer than `k` exist.
pub fn leading_wells(wells: &[Well], k: usize) -> (&[Well], bool) {
    (&wells[..k.min(wells.len())], wells.len() < k)
}

/// Component of `{W <= alpha * w_min}` around each well.
pub fn support_regions(wells: &[Well], w: &ScalarField, alpha: f64) -> Result<Vec<Region>> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    wells
        .iter()
        .map(|well| {
            let mut region = sublevel_component(w, well.min_index, alpha * well.w_min)?;
            region.seed_rank = Some(well.rank);
            Ok(region)
        })
        .collect()
}

pub fn predictions(wells: &[Well], w: &ScalarField, alpha: f64) -> Result<Vec<Prediction>> {
    let dim = w.grid().dim();
    let lambda_hat = predict_eigenvalues(wells, dim)?;
    let supports = support_regions(wells, w, alpha)?;
    Ok(wells
        .iter()
        .zip(lambda_hat)
        .zip(supports)
        .map(|((well, lambda_hat), support)| Prediction {
            well: well.clone(),
            lambda_hat,
            support,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchPair {
    pub eigen_rank: usize,
    pub well_rank: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    /// Greedy nearest-well pairs, in eigenvalue order.
    pub pairs: Vec<MatchPair>,
    /// Distance between the peak of eigenfunction k and well k.
    pub rank_to_rank: Vec<f64>,
    pub unmatched_wells: Vec<usize>,
    pub unmatched_eigenpairs: Vec<usize>,
}

/// Flat index and coordinates of the largest `|ψ|` (first on ties).
pub fn eigen_peak(pair: &EigenPair) -> Result<(usize, Vec<f64>)> {
    let (index, _) = argmax_field(&pair.psi.map(f64::abs)?)?;
    Ok((index, pair.psi.grid().coords(index)))
}

/// Pair each eigenfunction, in eigenvalue order, with the nearest unpaired
/// well (periodic distance from the eigenfunction's peak). Ties go to the
/// lower-ranked well.
pub fn match_locations(wells: &[Well], eigenpairs: &[EigenPair]) -> Result<MatchReport> {
    let first = eigenpairs.first().ok_or(Error::Empty("eigenpair list"))?;
    let peaks = eigenpairs
        .iter()
        .map(|e| {
            e.psi.same_grid(&first.psi)?;
            Ok(eigen_peak(e)?.1)
        })
        .collect::<Result<Vec<_>>>()?;
    match_peaks(wells, &peaks, &first.psi.grid().lengths())
}

/// [`match_locations`] on precomputed peak coordinates.
pub fn match_peaks(wells: &[Well], peaks: &[Vec<f64>], lengths: &[f64]) -> Result<MatchReport> {
    if wells.is_empty() {
        return Err(Error::Empty("well list"));
    }
    if peaks.is_empty() {
        return Err(Error::Empty("eigenpair list"));
    }
    let mut used = vec![false; wells.len()];
    let mut pairs = Vec::new();
    let mut unmatched_eigenpairs = Vec::new();
    for (e, peak) in peaks.iter().enumerate() {
        let best = wells
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, w)| (i, periodic_distance(peak, &w.min_location, lengths)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, distance)) => {
                used[i] = true;
                pairs.push(MatchPair {
                    eigen_rank: e + 1,
                    well_rank: wells[i].rank,
                    distance,
                });
            }
            None => unmatched_eigenpairs.push(e + 1),
        }
    }
    let rank_to_rank = peaks
        .iter()
        .zip(wells)
        .map(|(p, w)| periodic_distance(p, &w.min_location, lengths))
        .collect();
    let unmatched_wells = wells
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(w, _)| w.rank)
        .collect();
    Ok(MatchReport {
        pairs,
        rank_to_rank,
        unmatched_wells,
        unmatched_eigenpairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioStat {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

/// Mean and SD of `λ_k / w_min(k)` over the first `m` rank pairs, per `m`.
pub fn ratio_stats(eigenvalues: &[f64], wells: &[Well], counts: &[usize]) -> Result<Vec<RatioStat>> {
    counts
        .iter()
        .map(|&m| {
            if m == 0 {
                return Err(Error::InvalidParameter("ratio count must be positive".into()));
            }
            if wells.len() < m {
                return Err(Error::Insufficient {
                    requested: m,
                    available: wells.len(),
                });
            }
            if eigenvalues.len() < m {
                return Err(Error::Insufficient {
                    requested: m,
                    available: eigenvalues.len(),
                });
            }
            let ratios: Vec<f64> = eigenvalues[..m]
                .iter()
                .zip(wells)
                .map(|(l, w)| l / w.w_min)
                .collect();
            let mean = ratios.iter().sum::<f64>() / m as f64;
            let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / m as f64;
            Ok(RatioStat {
                count: m,
                mean,
                sd: var.sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Left edge of bin `i`.
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.width()
    }

    /// Counts divided by their total (all zeros for an empty histogram).
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.bins];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

/// Uniform-bin histogram of the values in `[lo, hi)`.
pub fn dos_histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("invalid histogram range [{lo}, {hi})")));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let mut counts = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if v >= lo && v < hi {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
    }
    Ok(Histogram { lo, hi, bins, counts })
}

/// `0.5 Σ |p_i - q_i|` between normalized histograms on the same bins.
pub fn total_variation(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.bins != b.bins || a.lo != b.lo || a.hi != b.hi {
        return Err(Error::InvalidParameter("histograms use different bins".into()));
    }
    Ok(0.5
        * a.normalized()
            .iter()
            .zip(b.normalized())
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>())
}

/// `#{λ <= E}` for sorted input.
pub fn counting_function(sorted: &[f64], energy: f64) -> Result<usize> {
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Unsorted);
    }
    Ok(sorted.partition_point(|&l| l <= energy))
}

/// Phase-space count `(2π)^{-n} ω_n ∫ (E - f)_+^{n/2}` with `ω_1 = 2`, `ω_2 = π`.
pub fn weyl_counting(field: &ScalarField, energy: f64, dim: usize) -> Result<f64> {
    check_dim(dim)?;
    if field.grid().dim() != dim {
        return Err(Error::InvalidParameter(format!(
            "field is {}-dimensional, count requested in {dim}D",
            field.grid().dim()
        )));
    }
    let integrand = field.map(|f| {
        let gap = (energy - f).max(0.0);
        if dim == 1 {
            gap.sqrt()
        } else {
            gap
        }
    })?;
    let prefactor = if dim == 1 { 2.0 / (2.0 * PI) } else { PI / (4.0 * PI * PI) };
    Ok(prefactor * integrate(&integrand))
}

/// `∫ q / ∫ q²` for `q = (1 - Σ (x_i/a_i)²)_+`, by the midpoint rule with
/// `resolution` cells per axis on the bounding box.
pub fn bump_constant(semiaxes: &[f64], resolution: usize) -> Result<f64> {
    check_dim(semiaxes.len())?;
    if semiaxes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidParameter("semiaxes must be positive".into()));
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    // Midpoints of the reference interval [-1, 1]; the Jacobian cancels in the ratio.
    let t: Vec<f64> = (0..resolution)
        .map(|i| -1.0 + (2.0 * i as f64 + 1.0) / resolution as f64)
        .collect();
    let (mut first, mut second) = (0.0, 0.0);
    let mut add = |r2: f64| {
        let q = 1.0 - r2;
        if q > 0.0 {
            first += q;
            second += q * q;
        }
    };
    if semiaxes.len() == 1 {
        t.iter().for_each(|x| add(x * x));
    } else {
        for x in &t {
            for y in &t {
                add(x * x + y * y);
            }
        }
    }
    Ok(first / second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::local_minima;
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn well(rank: usize, w_min: f64, loc: f64, index: usize) -> Well {
        Well {
            min_index: index,
            min_location: vec![loc],
            w_min,
            rank,
            basin_label: rank,
        }
    }

    #[test]
    fn eigenvalue_predictions() {
        let wells = [well(1, 2.3061, 0.0, 0)];
        let l = predict_eigenvalues(&wells, 2).unwrap();
        assert!((l[0] - 3.459_15).abs() < 1e-12);
        let l = predict_eigenvalues(&[well(1, 1.22, 0.0, 0)], 1).unwrap();
        assert!((l[0] - 1.525).abs() < 1e-12);
        assert_eq!(predict_eigenvalues(&[well(1, 0.0, 0.0, 0)], 1).unwrap(), vec![0.0]);
        assert!(predict_eigenvalues(&wells, 3).is_err());
        assert_eq!(default_alpha(1).unwrap(), 1.875);
        assert!((default_alpha(2).unwrap() - 1.56).abs() < 1e-15);
    }

    #[test]
    fn truncation_flag() {
        let wells = [well(1, 1.0, 0.0, 0), well(2, 2.0, 1.0, 1)];
        assert_eq!(leading_wells(&wells, 1).0.len(), 1);
        assert!(!leading_wells(&wells, 2).1);
        let (all, truncated) = leading_wells(&wells, 5);
        assert_eq!(all.len(), 2);
        assert!(truncated);
    }

    #[test]
    fn histogram_examples() {
        let h = dos_histogram(&[0.1, 0.4, 0.9], 0.0, 1.0, 2).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        // Bins are half-open, so an interior edge belongs to the upper bin.
        let h = dos_histogram(&[0.1, 0.5, 0.9], 0.0, 1.0, 2).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(dos_histogram(&[], 0.0, 1.0, 3).unwrap().counts, vec![0, 0, 0]);
        assert_eq!(dos_histogram(&[1.0, -0.1], 0.0, 1.0, 4).unwrap().total(), 0);
        assert!(dos_histogram(&[], 1.0, 1.0, 3).is_err());
        assert!(dos_histogram(&[], 0.0, 1.0, 0).is_err());
        let a = dos_histogram(&[0.1, 0.2], 0.0, 1.0, 2).unwrap();
        let b = dos_histogram(&[0.7, 0.8], 0.0, 1.0, 2).unwrap();
        assert_eq!(total_variation(&a, &b).unwrap(), 1.0);
        assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn counting_examples() {
        assert_eq!(counting_function(&[1.0, 2.0, 3.0], 2.5).unwrap(), 2);
        assert_eq!(counting_function(&[1.0, 2.0, 3.0], 0.0).unwrap(), 0);
        assert_eq!(counting_function(&[1.0, 2.0, 3.0], 2.0).unwrap(), 2);
        assert_eq!(counting_function(&[1.0, 2.0, 2.0], 2.0).unwrap(), 3);
        assert!(matches!(counting_function(&[2.0, 1.0], 1.5), Err(Error::Unsorted)));
    }

    #[test]
    fn weyl_constant_fields() {
        let g = Grid::new(1, &[6], 4).unwrap();
        let f = ScalarField::constant(g, 0.5).unwrap();
        for e in [0.0, 0.5, 1.0, 7.3] {
            let expected = if e > 0.5 { 6.0 / PI * (e - 0.5f64).sqrt() } else { 0.0 };
            assert!((weyl_counting(&f, e, 1).unwrap() - expected).abs() < 1e-12);
        }
        let g = Grid::new(2, &[3, 4], 2).unwrap();
        let f = ScalarField::constant(g, 1.0).unwrap();
        let n = weyl_counting(&f, 5.0, 2).unwrap();
        assert!((n - 12.0 * 4.0 / (4.0 * PI)).abs() < 1e-12);
        assert!(weyl_counting(&f, 5.0, 1).is_err());
    }

    /// Continuum periodic Laplacian on length `L`: eigenvalues `(2πk/L)²`.
    #[test]
    fn weyl_matches_free_count() {
        for len in [6usize, 8] {
            let g = Grid::new(1, &[len], 4).unwrap();
            let f = ScalarField::constant(g, 0.0).unwrap();
            for i in 0..=100 {
                let e = i as f64;
                let exact = 1 + 2 * ((len as f64 * e.sqrt()) / (2.0 * PI)).floor() as i64;
                let n = weyl_counting(&f, e, 1).unwrap();
                assert!((n - exact as f64).abs() <= 2.0, "L={len} E={e}: {n} vs {exact}");
            }
        }
    }

    #[test]
    fn bump_constant_oracle() {
        assert!((bump_constant(&[1.0], 10_000).unwrap() - 1.25).abs() < 1e-3);
        assert!((bump_constant(&[1.0, 1.0], 2000).unwrap() - 1.5).abs() < 1e-3);
        assert!((bump_constant(&[1.0, 3.0], 2000).unwrap() - 1.5).abs() < 1e-3);
        assert!(bump_constant(&[0.0], 10).is_err());
        assert!(bump_constant(&[1.0, 1.0, 1.0], 10).is_err());
    }

    #[test]
    fn ratio_stats_synthetic() {
        let wells: Vec<Well> = (1..=5).map(|k| well(k, k as f64, 0.0, k)).collect();
        let lambdas: Vec<f64> = wells.iter().map(|w| 1.3 * w.w_min).collect();
        let s = ratio_stats(&lambdas, &wells, &[1, 5]).unwrap();
        assert!((s[1].mean - 1.3).abs() < 1e-14 && s[1].sd < 1e-14);
        let s = ratio_stats(&[1.0, 3.0], &wells, &[2]).unwrap();
        assert!((s[0].mean - 1.25).abs() < 1e-15);
        assert!((s[0].sd - 0.25).abs() < 1e-15);
        assert!(matches!(
            ratio_stats(&lambdas, &wells[..2], &[3]),
            Err(Error::Insufficient { requested: 3, available: 2 })
        ));
    }

    fn bump_psi(grid: &Grid, center: f64) -> EigenPair {
        let len = grid.lengths()[0];
        let psi = ScalarField::from_fn(grid.clone(), |x| {
            let d = periodic_distance(&[x[0]], &[center], &[len]);
            (-d * d).exp()
        })
        .unwrap();
        EigenPair {
            lambda: 1.0,
            psi,
            residual: 0.0,
        }
    }

    #[test]
    fn greedy_matching_handles_permuted_order() {
        let g = Grid::new(1, &[20], 4).unwrap();
        let wells = [well(1, 1.0, 15.125, 60), well(2, 1.1, 3.125, 12), well(3, 1.2, 9.0, 36)];
        let eigs = [bump_psi(&g, 3.125), bump_psi(&g, 15.125)];
        let m = match_locations(&wells, &eigs).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert_eq!((m.pairs[0].eigen_rank, m.pairs[0].well_rank), (1, 2));
        assert_eq!((m.pairs[1].eigen_rank, m.pairs[1].well_rank), (2, 1));
        assert!(m.pairs.iter().all(|p| p.distance < 1e-12));
        assert!((m.rank_to_rank[0] - 8.0).abs() < 1e-12);
        assert_eq!(m.unmatched_wells, vec![3]);
        assert!(m.unmatched_eigenpairs.is_empty());
        assert!(match_locations(&[], &eigs).is_err());
    }

    #[test]
    fn single_defect_is_located() {
        let mut cells = vec![4.0; 16];
        cells[9] = 0.5;
        let p = crate::potential::Potential::from_cells(&[16], cells).unwrap();
        // An odd r puts a grid point at the center of the symmetric well.
        let g = p.grid(9).unwrap();
        let op = crate::operator::SchrodingerOperator::new(p.sample_on_grid(&g).unwrap()).unwrap();
        let pair = crate::landscape::compute_landscape(&op, 1e-12).unwrap();
        let wells = local_minima(&pair.w);
        assert_eq!(wells.len(), 1);
        let eigs = crate::spectra::smallest_eigenpairs(&op, 1, 1e-8).unwrap();
        let m = match_locations(&wells, &eigs).unwrap();
        assert!(m.pairs[0].distance <= 1.0);
        assert!((wells[0].min_location[0] - 9.5).abs() < 1.0);
    }

    #[test]
    fn supports_nest_and_contain_their_wells() {
        let p = crate::potential::gen_uniform(&[64], 0.0, 4.0, 12).unwrap();
        let g = p.grid(5).unwrap();
        let op = crate::operator::SchrodingerOperator::new(p.sample_on_grid(&g).unwrap()).unwrap();
        let pair = crate::landscape::compute_landscape(&op, 1e-10).unwrap();
        let wells = local_minima(&pair.w);
        let small = support_regions(&wells[..4], &pair.w, 1.0 + 1e-9).unwrap();
        let big = support_regions(&wells[..4], &pair.w, 1.875).unwrap();
        for ((s, b), w) in small.iter().zip(&big).zip(&wells) {
            assert_eq!(s.members, vec![w.min_index]);
            assert!(b.contains(w.min_index));
            assert!(s.members.iter().all(|j| b.contains(*j)));
            assert_eq!(b.seed_rank, Some(w.rank));
        }
        assert!(support_regions(&wells, &pair.w, 1.0).is_err());
        let preds = predictions(&wells[..4], &pair.w, 1.875).unwrap();
        for p in &preds {
            assert!((p.lambda_hat / p.well.w_min - 1.25).abs() < 1e-15);
            assert!(p.support.contains(p.well.min_index));
        }
    }

    proptest! {
        #[test]
        fn weyl_is_monotone_and_zero_at_the_bottom(
            values in prop::collection::vec(0.0f64..4.0, 16),
            e1 in 0.0f64..6.0,
            e2 in 0.0f64..6.0,
        ) {
            let g = Grid::new(1, &[4], 4).unwrap();
            let f = ScalarField::new(g, values).unwrap();
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(weyl_counting(&f, lo, 1).unwrap() <= weyl_counting(&f, hi, 1).unwrap());
            prop_assert_eq!(weyl_counting(&f, f.min(), 1).unwrap(), 0.0);
        }

        #[test]
        fn predictions_are_linear(w_min in 0.0f64..50.0, dim in 1usize..=2) {
            let l = predict_eigenvalues(&[well(1, w_min, 0.0, 0)], dim).unwrap()[0];
            prop_assert!((l - (1.0 + dim as f64 / 4.0) * w_min).abs() <= 1e-12 * (1.0 + l));
        }

        #[test]
        fn histogram_counts_in_range_samples(
            values in prop::collection::vec(-1.0f64..2.0, 0..60),
            bins in 1usize..20,
        ) {
            let h = dos_histogram(&values, 0.0, 1.0, bins).unwrap();
            let inside = values.iter().filter(|v| (0.0..1.0).contains(*v)).count();
            prop_assert_eq!(h.total(), inside);
        }
    }
}
