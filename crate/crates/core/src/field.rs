//! Real-valued fields on a grid, quadrature and extremum helpers.

use crate::error::{Error, Result};
use crate::grid::{Grid, Lattice};

/// Real values at every point of a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    /// Sample a function of the physical coordinates at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn view(&self) -> FieldView<'_> {
        FieldView {
            lattice: self.grid.lattice(),
            spacing: self.grid.spacing(),
            values: &self.values,
        }
    }

    /// Pointwise map into a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Borrowed values on a periodic lattice with a uniform spacing.
///
/// The geometry routines operate on views so they also work on raw lattices
/// that are too small to be a [`Grid`].
#[derive(Debug, Clone, Copy)]
pub struct FieldView<'a> {
    pub lattice: &'a Lattice,
    pub spacing: f64,
    pub values: &'a [f64],
}

impl<'a> FieldView<'a> {
    pub fn new(lattice: &'a Lattice, spacing: f64, values: &'a [f64]) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::LengthMismatch {
                expected: lattice.len(),
                actual: values.len(),
            });
        }
        check_finite(values)?;
        Ok(FieldView {
            lattice,
            spacing,
            values,
        })
    }

    pub fn coords(&self, index: usize) -> Vec<f64> {
        let multi = self.lattice.to_multi(index);
        multi[..self.lattice.dim()]
            .iter()
            .map(|&i| (i as f64 + 0.5) * self.spacing)
            .collect()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.lattice
            .shape()
            .iter()
            .map(|&n| n as f64 * self.spacing)
            .collect()
    }
}

impl<'a> From<&'a ScalarField> for FieldView<'a> {
    fn from(f: &'a ScalarField) -> Self {
        f.view()
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Periodic midpoint rule: `h^dim * sum(values)`.
pub fn integrate(field: &ScalarField) -> f64 {
    field.grid.cell_volume() * field.values.iter().sum::<f64>()
}

/// `integrate(f * g)`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.same_grid(g)?;
    Ok(f.grid.cell_volume() * dot(&f.values, &g.values))
}

/// L2 norm under the quadrature inner product.
pub fn l2_norm(f: &ScalarField) -> f64 {
    (f.grid.cell_volume() * dot(&f.values, &f.values)).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// First index attaining the minimum (ties go to the smallest index).
pub fn argmin(values: &[f64]) -> Result<(usize, f64)> {
    extremum(values, |a, b| a < b)
}

/// First index attaining the maximum (ties go to the smallest index).
pub fn argmax(values: &[f64]) -> Result<(usize, f64)> {
    extremum(values, |a, b| a > b)
}

fn extremum(values: &[f64], better: impl Fn(f64, f64) -> bool) -> Result<(usize, f64)> {
    check_finite(values)?;
    let (&first, rest) = values.split_first().ok_or(Error::Empty("field"))?;
    let mut best = (0, first);
    for (i, &v) in rest.iter().enumerate() {
        if better(v, best.1) {
            best = (i + 1, v);
        }
    }
    Ok(best)
}

pub fn argmin_field(field: &ScalarField) -> Result<(usize, f64)> {
    argmin(&field.values)
}

pub fn argmax_field(field: &ScalarField) -> Result<(usize, f64)> {
    argmax(&field.values)
}
