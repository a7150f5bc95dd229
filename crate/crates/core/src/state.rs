//! Real-valued fields over the grid, indexed by canonical ordinal.

use crate::error::Error;
use crate::Result;

/// A real vector over the grid in canonical ordinal order. Identifies a
/// function of `X_N` with its values at the representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    values: Vec<f64>,
}

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        State { values }
    }

    /// Constant field of the given length.
    pub fn constant(len: usize, value: f64) -> Self {
        State {
            values: vec![value; len],
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::constant(len, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    /// Sup norm `max_i |u_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i |u_i - v_i|`.
    pub fn sup_distance(&self, other: &State) -> Result<f64> {
        self.check_len(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Pointwise `self + scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &State) -> Result<()> {
        self.check_len(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Euclidean inner product.
    pub fn dot(&self, other: &State) -> Result<f64> {
        self.check_len(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Apply a scalar function pointwise, producing a new state.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> State {
        State {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_len(&self, other: &State) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for State {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

impl From<Vec<f64>> for State {
    fn from(values: Vec<f64>) -> Self {
        State { values }
    }
}
