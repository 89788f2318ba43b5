//! Dense guidance-space vectors.
//!
//! A [`GuidanceVec`] carries noise predictions and guidance increments. All
//! engine arithmetic happens on these; the dimension is fixed per run and every
//! binary operation checks it.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::DimensionMismatch;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuidanceVec(Vec<f64>);

impl GuidanceVec {
    pub fn new(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
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

    pub fn check_dim(&self, other: &GuidanceVec) -> Result<(), DimensionMismatch> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            })
        }
    }

    pub fn dot(&self, other: &GuidanceVec) -> Result<f64, DimensionMismatch> {
        self.check_dim(other)?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self - other`.
    pub fn sub(&self, other: &GuidanceVec) -> Result<GuidanceVec, DimensionMismatch> {
        self.check_dim(other)?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// `self + other`.
    pub fn add(&self, other: &GuidanceVec) -> Result<GuidanceVec, DimensionMismatch> {
        self.check_dim(other)?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, factor: f64) -> GuidanceVec {
        Self(self.0.iter().map(|v| factor * v).collect())
    }

    /// `self - factor * dir`, the update shape shared by every projection.
    pub fn sub_scaled(
        &self,
        factor: f64,
        dir: &GuidanceVec,
    ) -> Result<GuidanceVec, DimensionMismatch> {
        self.check_dim(dir)?;
        Ok(Self(
            self.0
                .iter()
                .zip(&dir.0)
                .map(|(x, a)| x - factor * a)
                .collect(),
        ))
    }

    pub fn distance(&self, other: &GuidanceVec) -> Result<f64, DimensionMismatch> {
        self.check_dim(other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Zeroes every coordinate outside `range`.
    pub fn masked(&self, range: std::ops::Range<usize>) -> GuidanceVec {
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(i, v)| if range.contains(&i) { *v } else { 0.0 })
                .collect(),
        )
    }
}

impl From<Vec<f64>> for GuidanceVec {
    fn from(data: Vec<f64>) -> Self {
        Self(data)
    }
}

impl Index<usize> for GuidanceVec {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
