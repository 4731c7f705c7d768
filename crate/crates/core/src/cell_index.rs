//! Uniform-grid cell list for fixed-radius ball queries.

use crate::error::{Error, Result};
use crate::geometry::{distance_sq, MAX_DIM};
use crate::point_process::PointCloud;

const MAX_CELLS: usize = 1 << 24;

/// Points of a cloud bucketed on a regular grid over the cloud region, stored
/// in compressed rows (`start[c]..start[c + 1]` indexes `items`).
#[derive(Debug, Clone)]
pub struct CellIndex {
    dim: usize,
    origin: [f64; MAX_DIM],
    side: [f64; MAX_DIM],
    extent: [usize; MAX_DIM],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl CellIndex {
    /// Builds an index whose cells are at least `min_side` wide on every axis.
    pub fn build(cloud: &PointCloud, min_side: f64) -> Result<Self> {
        if !(min_side.is_finite() && min_side > 0.0) {
            return Err(Error::InvalidParams(format!("cell side must be positive, got {min_side}")));
        }
        let region = cloud.region();
        let dim = region.dim();
        let mut origin = [0.0; MAX_DIM];
        let mut side = [f64::INFINITY; MAX_DIM];
        let mut extent = [1usize; MAX_DIM];
        for k in 0..dim {
            let width = region.side(k);
            // Cap the grid so huge regions with tiny radii stay addressable.
            let cap = (MAX_CELLS as f64).powf(1.0 / dim as f64).floor() as usize;
            let mut n = ((width / min_side).floor() as usize).clamp(1, cap);
            while n > 1 && width / (n as f64) < min_side {
                n -= 1;
            }
            origin[k] = region.lo()[k];
            side[k] = width / n as f64;
            extent[k] = n;
        }
        let cells: usize = extent[..dim].iter().product();
        let mut index = CellIndex { dim, origin, side, extent, start: vec![0; cells + 1], items: Vec::new() };

        let cell_of: Vec<usize> = cloud.points().map(|p| index.linear(&index.cell_coords(p))).collect();
        for &c in &cell_of {
            index.start[c + 1] += 1;
        }
        for c in 0..cells {
            index.start[c + 1] += index.start[c];
        }
        let mut fill = index.start.clone();
        index.items = vec![0; cell_of.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            index.items[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(index)
    }

    /// Smallest cell width; the largest radius a query may use. An axis
    /// with a single cell never limits the radius.
    pub fn cell_side(&self) -> f64 {
        (0..self.dim)
            .filter(|&k| self.extent[k] > 1)
            .map(|k| self.side[k])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_count(&self) -> usize {
        self.start.len() - 1
    }

    fn cell_coords(&self, x: &[f64]) -> [usize; MAX_DIM] {
        let mut c = [0usize; MAX_DIM];
        for k in 0..self.dim {
            let t = ((x[k] - self.origin[k]) / self.side[k]).floor();
            c[k] = if t <= 0.0 || t.is_nan() {
                0
            } else {
                (t as usize).min(self.extent[k] - 1)
            };
        }
        c
    }

    fn linear(&self, c: &[usize; MAX_DIM]) -> usize {
        (0..self.dim).fold(0, |acc, k| acc * self.extent[k] + c[k])
    }

    /// Members of cell `c` (by linear cell index).
    pub fn cell_members(&self, c: usize) -> &[usize] {
        &self.items[self.start[c]..self.start[c + 1]]
    }

    /// Calls `f(j, |x - y_j|^2)` for every cloud point `y_j` with `|y_j - x| <= r`.
    pub fn for_each_within(
        &self,
        cloud: &PointCloud,
        x: &[f64],
        r: f64,
        mut f: impl FnMut(usize, f64),
    ) -> Result<()> {
        let cell = self.cell_side();
        if r.is_nan() || r > cell {
            return Err(Error::RadiusExceedsCell { r, cell });
        }
        let r2 = r * r;
        let home = self.cell_coords(x);
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for k in 0..self.dim {
            lo[k] = home[k].saturating_sub(1);
            hi[k] = (home[k] + 1).min(self.extent[k] - 1);
        }
        let mut c = lo;
        loop {
            for &j in self.cell_members(self.linear(&c)) {
                let d2 = distance_sq(x, cloud.point(j));
                if d2 <= r2 {
                    f(j, d2);
                }
            }
            // Odometer over the (up to) 3^d cell block.
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                if c[k] < hi[k] {
                    c[k] += 1;
                    break;
                }
                c[k] = lo[k];
            }
        }
    }

    /// Indices of all points in the closed ball `|y - x| <= r`.
    pub fn neighbors_within(&self, cloud: &PointCloud, x: &[f64], r: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.for_each_within(cloud, x, r, |j, _| out.push(j))?;
        Ok(out)
    }
}
