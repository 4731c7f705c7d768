//! Axis-aligned boxes with half-open membership `[lo, hi)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidRegion(format!(
                "dimension {} outside 1..={MAX_DIM}",
                lo.len()
            )));
        }
        for (i, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidRegion(format!("axis {i} has a non-finite bound")));
            }
            if a >= b {
                return Err(Error::InvalidRegion(format!("axis {i}: lo {a} >= hi {b}")));
            }
        }
        Ok(Region { lo, hi })
    }

    /// The cube `[-side/2, side/2)^dim`.
    pub fn centered_cube(dim: usize, side: f64) -> Result<Self> {
        Region::new(vec![-side / 2.0; dim], vec![side / 2.0; dim])
    }

    pub fn unit_cube(dim: usize) -> Result<Self> {
        Region::new(vec![0.0; dim], vec![1.0; dim])
    }

    /// Parses `x0,y0,...,x1,y1,...` (all lower corners, then all upper corners).
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidRegion(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() % 2 != 0 {
            return Err(Error::InvalidRegion(format!(
                "expected an even number of coordinates, got {}",
                values.len()
            )));
        }
        let dim = values.len() / 2;
        Region::new(values[..dim].to_vec(), values[dim..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn min_side(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&a, &b))| v >= a && v < b)
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| other.lo[i] >= self.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn intersects(&self, other: &Region) -> bool {
        other.dim() == self.dim() && (0..self.dim()).all(|i| other.lo[i] < self.hi[i] && self.lo[i] < other.hi[i])
    }

    pub fn intersection(&self, other: &Region) -> Option<Region> {
        if !self.intersects(other) {
            return None;
        }
        let lo = (0..self.dim()).map(|i| self.lo[i].max(other.lo[i])).collect();
        let hi = (0..self.dim()).map(|i| self.hi[i].min(other.hi[i])).collect();
        Region::new(lo, hi).ok()
    }

    /// Grows every face outward by `margin` (shrinks for negative margins).
    pub fn dilate(&self, margin: f64) -> Result<Region> {
        Region::new(
            self.lo.iter().map(|a| a - margin).collect(),
            self.hi.iter().map(|b| b + margin).collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Result<Region> {
        Region::new(
            self.lo.iter().map(|a| a * factor).collect(),
            self.hi.iter().map(|b| b * factor).collect(),
        )
    }
}

pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
