//! Real-valued functions on cloud points and on lattice boxes.

use crate::error::{Error, Result};
use crate::lattice::{BoxId, LatticePartition};
use crate::point_process::PointCloud;

/// One finite value per cloud point, in cloud order.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudField {
    pub(crate) values: Vec<f64>,
}

impl CloudField {
    pub fn new(cloud: &PointCloud, values: Vec<f64>) -> Result<Self> {
        if values.len() != cloud.len() {
            return Err(Error::FieldLength { expected: cloud.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(CloudField { values })
    }

    pub fn from_fn(cloud: &PointCloud, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        CloudField::new(cloud, cloud.points().map(f).collect())
    }

    pub fn constant(cloud: &PointCloud, c: f64) -> Result<Self> {
        CloudField::new(cloud, vec![c; cloud.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check(&self, cloud: &PointCloud) -> Result<()> {
        if self.values.len() != cloud.len() {
            return Err(Error::FieldLength { expected: cloud.len(), got: self.values.len() });
        }
        Ok(())
    }
}

/// Values on a subset (the domain) of a partition, indexed like the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub(crate) values: Vec<Option<f64>>,
}

impl LatticeField {
    pub fn undefined(partition: &LatticePartition) -> Self {
        LatticeField { values: vec![None; partition.len()] }
    }

    pub fn constant(partition: &LatticePartition, c: f64) -> Self {
        LatticeField { values: vec![Some(c); partition.len()] }
    }

    /// Defined everywhere, with `f` evaluated at box centers.
    pub fn from_centers(partition: &LatticePartition, f: impl Fn(&[f64]) -> f64) -> Self {
        LatticeField {
            values: partition.boxes().map(|b| Some(f(&partition.center(&b)))).collect(),
        }
    }

    pub fn from_entries(partition: &LatticePartition, entries: &[(BoxId, f64)]) -> Result<Self> {
        let mut field = LatticeField::undefined(partition);
        for (id, v) in entries {
            let i = partition.index_of(id).ok_or(Error::BoxOutsidePartition(*id))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            field.values[i] = Some(*v);
        }
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied().flatten()
    }

    pub fn set(&mut self, index: usize, value: f64) {
        self.values[index] = Some(value);
    }

    pub fn clear(&mut self, index: usize) {
        self.values[index] = None;
    }

    pub fn raw(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter_map(|(i, v)| v.map(|_| i))
    }

    pub fn domain_len(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub(crate) fn check(&self, partition: &LatticePartition) -> Result<()> {
        if self.values.len() != partition.len() {
            return Err(Error::FieldLength { expected: partition.len(), got: self.values.len() });
        }
        Ok(())
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.values.iter().flatten().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((a, b)) => Some((a.min(v), b.max(v))),
        })
    }
}
