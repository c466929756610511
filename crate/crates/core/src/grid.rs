//! Periodic lattices and the uniform grids built on top of them.
//!
//! Flat indices are row-major with axis 0 (x) as the slow index:
//! `flat = i0 * n1 + i1`. Grid points sit at cell-interior midpoints,
//! `x_j = (j + 1/2) h`, so a point never lies on a unit-cell boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which neighbors to visit around a lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// The `2 * dim` nearest neighbors along the axes.
    AxisAligned,
    /// Axis-aligned plus diagonal neighbors (8 in 2D). Same as axis-aligned in 1D.
    Full,
}

const AXIS_OFFSETS_2D: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const FULL_OFFSETS_2D: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Periodic index space of dimension 1 or 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    shape: [usize; 2],
}

impl Lattice {
    pub fn new(shape: &[usize]) -> Result<Self> {
        match *shape {
            [n] if n >= 1 => Ok(Lattice {
                dim: 1,
                shape: [n, 1],
            }),
            [n0, n1] if n0 >= 1 && n1 >= 1 => Ok(Lattice {
                dim: 2,
                shape: [n0, n1],
            }),
            [_] | [_, _] => Err(Error::InvalidGrid(format!(
                "lattice extents must be positive, got {shape:?}"
            ))),
            _ => Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                shape.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extent along each axis (`dim` entries).
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat index; the unused second axis is 0 in 1D.
    pub fn to_multi(&self, index: usize) -> [usize; 2] {
        [index / self.shape[1], index % self.shape[1]]
    }

    /// Flat index of a multi-index, wrapping each coordinate periodically.
    pub fn to_flat(&self, multi: [isize; 2]) -> usize {
        let i0 = multi[0].rem_euclid(self.shape[0] as isize) as usize;
        let i1 = multi[1].rem_euclid(self.shape[1] as isize) as usize;
        i0 * self.shape[1] + i1
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    /// Distinct neighbors of `index` under periodic wrap, excluding the point itself.
    pub fn neighbors(&self, index: usize, stencil: Stencil) -> Result<Vec<usize>> {
        self.check_index(index)?;
        let mut out = Vec::with_capacity(8);
        self.for_each_neighbor(index, stencil, |j, _| {
            if !out.contains(&j) {
                out.push(j);
            }
        });
        Ok(out)
    }

    /// Visit every stencil offset of `index` (duplicates and self-wraps included
    /// only when the lattice is tiny). The closure receives the neighbor index and
    /// the squared offset length in lattice units.
    pub(crate) fn for_each_neighbor(
        &self,
        index: usize,
        stencil: Stencil,
        mut f: impl FnMut(usize, usize),
    ) {
        let [i0, i1] = self.to_multi(index);
        let base = [i0 as isize, i1 as isize];
        if self.dim == 1 {
            for d in [-1isize, 1] {
                let j = self.to_flat([base[0] + d, 0]);
                if j != index {
                    f(j, 1);
                }
            }
            return;
        }
        let offsets: &[(isize, isize)] = match stencil {
            Stencil::AxisAligned => &AXIS_OFFSETS_2D,
            Stencil::Full => &FULL_OFFSETS_2D,
        };
        for &(d0, d1) in offsets {
            let j = self.to_flat([base[0] + d0, base[1] + d1]);
            if j != index {
                f(j, (d0 * d0 + d1 * d1) as usize);
            }
        }
    }
}

/// Uniform periodic grid over a box of `units` unit cells per axis, with
/// `points_per_unit` grid points per unit length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    lattice: Lattice,
    units: [usize; 2],
    points_per_unit: usize,
}

impl Grid {
    pub fn new(dim: usize, units: &[usize], points_per_unit: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if units.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} unit counts, got {}",
                units.len()
            )));
        }
        if let Some(&u) = units.iter().find(|&&u| u < 2) {
            return Err(Error::InvalidGrid(format!("unit count must be at least 2, got {u}")));
        }
        if points_per_unit < 2 {
            return Err(Error::InvalidGrid(format!(
                "points per unit must be at least 2, got {points_per_unit}"
            )));
        }
        let shape: Vec<usize> = units.iter().map(|u| u * points_per_unit).collect();
        let lattice = Lattice::new(&shape)?;
        let mut u = [1, 1];
        u[..dim].copy_from_slice(units);
        Ok(Grid {
            lattice,
            units: u,
            points_per_unit,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn units(&self) -> &[usize] {
        &self.units[..self.dim()]
    }

    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    /// Grid spacing `h = 1 / points_per_unit`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_unit as f64
    }

    /// Quadrature weight of one point, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    pub fn shape(&self) -> &[usize] {
        self.lattice.shape()
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side lengths of the domain.
    pub fn lengths(&self) -> Vec<f64> {
        self.units().iter().map(|&u| u as f64).collect()
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.units().iter().product::<usize>() as f64
    }

    /// Physical coordinates of a grid point.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        let multi = self.lattice.to_multi(index);
        let h = self.spacing();
        multi[..self.dim()]
            .iter()
            .map(|&i| (i as f64 + 0.5) * h)
            .collect()
    }

    /// Flat index of the unit cell containing a grid point (row-major over cells).
    pub fn cell_of(&self, index: usize) -> usize {
        let [i0, i1] = self.lattice.to_multi(index);
        let r = self.points_per_unit;
        if self.dim() == 1 {
            i0 / r
        } else {
            (i0 / r) * self.units[1] + i1 / r
        }
    }

    pub fn neighbors(&self, index: usize, stencil: Stencil) -> Result<Vec<usize>> {
        self.lattice.neighbors(index, stencil)
    }
}

/// Euclidean distance on a periodic box with the given side lengths.
pub fn periodic_distance(a: &[f64], b: &[f64], lengths: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lengths)
        .map(|((&x, &y), &l)| {
            let d = (x - y).rem_euclid(l);
            let d = d.min(l - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
