//! Dense real vectors used for dual variables.

use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

/// A d-dimensional dual variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn new(values: Vec<f64>) -> Self {
        DualVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        DualVector(vec![0.0; dim])
    }

    pub fn scalar(value: f64) -> Self {
        DualVector(vec![value])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn distance(&self, other: &DualVector) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &DualVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn scaled(&self, factor: f64) -> DualVector {
        DualVector(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn sub(&self, other: &DualVector) -> DualVector {
        DualVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &DualVector) -> DualVector {
        DualVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: f64, other: &DualVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
    }
}

impl From<Vec<f64>> for DualVector {
    fn from(values: Vec<f64>) -> Self {
        DualVector(values)
    }
}

impl From<f64> for DualVector {
    fn from(value: f64) -> Self {
        DualVector::scalar(value)
    }
}

impl Index<usize> for DualVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for DualVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Weighted average `Σ w_k x_k / Σ w_k` of equally sized vectors.
pub(crate) fn weighted_mean<'a, I>(items: I, dim: usize) -> DualVector
where
    I: IntoIterator<Item = (f64, &'a DualVector)>,
{
    let mut acc = DualVector::zeros(dim);
    let mut total = 0.0;
    for (w, x) in items {
        acc.add_scaled(w, x);
        total += w;
    }
    if total > 0.0 {
        acc.scaled(1.0 / total)
    } else {
        acc
    }
}
