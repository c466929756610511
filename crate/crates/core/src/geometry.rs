//! Structure of the effective potential: local minima, sublevel components,
//! watershed basins and the W-distance.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldView, ScalarField};
use crate::grid::Stencil;

/// A strict local minimum of `W`. Ranks start at 1 and follow increasing
/// `w_min`, ties by flat index; `basin_label` equals the rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Well {
    pub min_index: usize,
    pub min_location: Vec<f64>,
    pub w_min: f64,
    pub rank: usize,
    pub basin_label: usize,
}

/// Connected component of a sublevel set `{W <= energy}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Flat indices, ascending.
    pub members: Vec<usize>,
    pub energy: f64,
    pub seed_rank: Option<usize>,
}

impl Region {
    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Watershed partition. Crest points still carry a designated label.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinMap {
    pub labels: Vec<usize>,
    pub crest: Vec<bool>,
}

impl BasinMap {
    /// Number of distinct labels.
    pub fn basin_count(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn crest_count(&self) -> usize {
        self.crest.iter().filter(|&&c| c).count()
    }
}

/// `(value, index)` ordered by value then index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Strict local minima over the full stencil (2 neighbors in 1D, 8 in 2D).
pub fn local_minima<'a>(w: impl Into<FieldView<'a>>) -> Vec<Well> {
    let w = w.into();
    let values = w.values;
    let mut found: Vec<Key> = Vec::new();
    for (j, &wj) in values.iter().enumerate() {
        let mut strict = true;
        let mut any = false;
        w.lattice.for_each_neighbor(j, Stencil::Full, |k, _| {
            any = true;
            if values[k] <= wj {
                strict = false;
            }
        });
        if strict && any {
            found.push(Key(wj, j));
        }
    }
    found.sort();
    found
        .into_iter()
        .enumerate()
        .map(|(i, Key(w_min, min_index))| Well {
            min_index,
            min_location: w.coords(min_index),
            w_min,
            rank: i + 1,
            basin_label: i + 1,
        })
        .collect()
}

/// Flood fill from `seed` over axis-aligned neighbors with `W <= energy`.
pub fn sublevel_component<'a>(w: impl Into<FieldView<'a>>, seed: usize, energy: f64) -> Result<Region> {
    let w = w.into();
    w.lattice.check_index(seed)?;
    let values = w.values;
    if values[seed] > energy {
        return Err(Error::SeedAboveLevel {
            index: seed,
            value: values[seed],
            energy,
        });
    }
    let mut inside = vec![false; values.len()];
    inside[seed] = true;
    let mut queue = VecDeque::from([seed]);
    let mut members = vec![seed];
    while let Some(j) = queue.pop_front() {
        w.lattice.for_each_neighbor(j, Stencil::AxisAligned, |k, _| {
            if !inside[k] && values[k] <= energy {
                inside[k] = true;
                members.push(k);
                queue.push_back(k);
            }
        });
    }
    members.sort_unstable();
    Ok(Region {
        members,
        energy,
        seed_rank: None,
    })
}

/// Priority-flood watershed seeded at `wells`, processing points in increasing
/// `(W, index)` order over axis-aligned neighbors. A point reached from two or
/// more basins is a crest and keeps the smallest adjacent label.
pub fn watershed_basins<'a>(w: impl Into<FieldView<'a>>, wells: &[Well]) -> Result<BasinMap> {
    if wells.is_empty() {
        return Err(Error::Empty("well list"));
    }
    let w = w.into();
    let values = w.values;
    let n = values.len();
    const UNLABELED: usize = 0;
    let mut labels = vec![UNLABELED; n];
    let mut crest = vec![false; n];
    let mut queued = vec![false; n];
    let mut heap = BinaryHeap::new();
    for well in wells {
        w.lattice.check_index(well.min_index)?;
        labels[well.min_index] = well.basin_label;
        queued[well.min_index] = true;
    }
    for well in wells {
        w.lattice.for_each_neighbor(well.min_index, Stencil::AxisAligned, |k, _| {
            if !queued[k] {
                queued[k] = true;
                heap.push(Reverse(Key(values[k], k)));
            }
        });
    }
    while let Some(Reverse(Key(_, j))) = heap.pop() {
        let mut clean: Vec<usize> = Vec::with_capacity(4);
        let mut from_crest: Vec<usize> = Vec::with_capacity(4);
        w.lattice.for_each_neighbor(j, Stencil::AxisAligned, |k, _| {
            let l = labels[k];
            if l == UNLABELED {
                return;
            }
            if crest[k] {
                from_crest.push(l);
            } else if !clean.contains(&l) {
                clean.push(l);
            }
        });
        labels[j] = match clean.len() {
            0 => *from_crest.iter().min().expect("queued points touch a labeled point"),
            1 => clean[0],
            _ => {
                crest[j] = true;
                *clean.iter().min().unwrap()
            }
        };
        if clean.is_empty() {
            crest[j] = true;
        }
        w.lattice.for_each_neighbor(j, Stencil::AxisAligned, |k, _| {
            if !queued[k] {
                queued[k] = true;
                heap.push(Reverse(Key(values[k], k)));
            }
        });
    }
    Ok(BasinMap { labels, crest })
}

/// Length of every stencil edge used by the W-distance (diagonals in 2D).
fn edge_length(spacing: f64, sq_len: usize) -> f64 {
    if sq_len == 1 {
        spacing
    } else {
        spacing * (sq_len as f64).sqrt()
    }
}

/// Graph W-distance to `S = {W <= lambda + delta}`: multi-source Dijkstra with
/// edge weight `length * (sqrt((W_a - λ)+) + sqrt((W_b - λ)+)) / 2`.
pub fn w_distance<'a>(w: impl Into<FieldView<'a>>, lambda: f64, delta: f64) -> Result<Vec<f64>> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
    }
    let w = w.into();
    let values = w.values;
    let level = lambda + delta;
    let density: Vec<f64> = values.iter().map(|&v| (v - lambda).max(0.0).sqrt()).collect();
    let mut dist = vec![f64::INFINITY; values.len()];
    let mut heap = BinaryHeap::new();
    for (j, &v) in values.iter().enumerate() {
        if v <= level {
            dist[j] = 0.0;
            heap.push(Reverse(Key(0.0, j)));
        }
    }
    if heap.is_empty() {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::EmptySublevelSet { level, min });
    }
    while let Some(Reverse(Key(d, j))) = heap.pop() {
        if d > dist[j] {
            continue;
        }
        w.lattice.for_each_neighbor(j, Stencil::Full, |k, sq_len| {
            let step = edge_length(w.spacing, sq_len) * 0.5 * (density[j] + density[k]);
            let candidate = d + step;
            if candidate < dist[k] {
                dist[k] = candidate;
                heap.push(Reverse(Key(candidate, k)));
            }
        });
    }
    Ok(dist)
}

/// `sup { |ψ(x)| : h(x) >= t }` for each threshold `t` (0 when the set is empty).
pub fn decay_profile(h: &[f64], psi: &ScalarField, thresholds: &[f64]) -> Result<Vec<f64>> {
    if h.len() != psi.len() {
        return Err(Error::LengthMismatch {
            expected: psi.len(),
            actual: h.len(),
        });
    }
    Ok(thresholds
        .iter()
        .map(|&t| {
            h.iter()
                .zip(psi.values())
                .filter(|(hx, _)| **hx >= t)
                .fold(0.0f64, |m, (_, p)| m.max(p.abs()))
        })
        .collect())
}

/// `∫ e^h ψ² / ∫ ψ²`.
pub fn agmon_ratio(h: &[f64], psi: &ScalarField) -> Result<f64> {
    if h.len() != psi.len() {
        return Err(Error::LengthMismatch {
            expected: psi.len(),
            actual: h.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (hx, p) in h.iter().zip(psi.values()) {
        num += hx.exp() * p * p;
        den += p * p;
    }
    Ok(num / den)
}
