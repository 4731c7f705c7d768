//! Good/bad box classification and the geometry of the bad set.
//!
//! A box is bad when its point count deviates from the mean `gamma s^d / eps^d`
//! by at least a `kappa` fraction. Bad components are maximal face-connected
//! clusters; the boundary of a component is the layer of good boxes touching it
//! at a face, edge or corner, and paths along a boundary move diagonally.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::{BoxId, LatticePartition};
use crate::point_process::PointCloud;
use crate::union_find::UnionFind;

/// Site percolation thresholds used only for reporting (d = 1, 2, 3).
pub fn site_percolation_threshold(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => 0.592_746,
        _ => 0.311_6,
    }
}

/// The concentration bound `exp(-2 t^2 / (t + E))` for a Poisson count with
/// mean `expected`.
pub fn chernoff_bound(expected: f64, t: f64) -> f64 {
    (-2.0 * t * t / (t + expected)).exp()
}

/// Bound on the bad-box probability at relative deviation `kappa`:
/// `exp(-2 kappa^2 E / (1 + kappa))`.
pub fn bad_probability_bound(expected: f64, kappa: f64) -> f64 {
    chernoff_bound(expected, kappa * expected)
}

/// Decay exponent `(beta/2)^d * d * gamma * 2 kappa^2 / (1 + kappa)` of the
/// expected bad count in the sub-threshold regime.
pub fn rho(beta: f64, dim: usize, gamma: f64, kappa: f64) -> f64 {
    (beta / 2.0).powi(dim as i32) * dim as f64 * gamma * 2.0 * kappa * kappa / (1.0 + kappa)
}

#[inline]
pub fn is_bad_count(count: usize, expected: f64, kappa: f64) -> bool {
    (count as f64 - expected).abs() >= kappa * expected
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kappa: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// `gamma * s^d / eps^d`.
    pub expected: f64,
    /// Point count per partition box.
    pub counts: Vec<usize>,
    /// Bad flag per partition box.
    pub bad: Vec<bool>,
}

impl Classification {
    pub fn bad_count(&self) -> usize {
        self.bad.iter().filter(|&&b| b).count()
    }

    pub fn bad_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bad.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn good_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bad.iter().enumerate().filter_map(|(i, &b)| (!b).then_some(i))
    }

    pub fn bad_boxes(&self, partition: &LatticePartition) -> Vec<BoxId> {
        self.bad_indices().map(|i| partition.box_at(i)).collect()
    }

    pub fn good_boxes(&self, partition: &LatticePartition) -> Vec<BoxId> {
        self.good_indices().map(|i| partition.box_at(i)).collect()
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParams(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    Ok(())
}

/// Classifies per-box counts against `expected`.
pub fn classify_counts(counts: Vec<usize>, expected: f64, kappa: f64, gamma: f64, epsilon: f64) -> Result<Classification> {
    check_kappa(kappa)?;
    if expected.is_nan() || expected < 1.0 {
        return Err(Error::ExpectedCountBelowOne { expected });
    }
    let bad = counts.iter().map(|&c| is_bad_count(c, expected, kappa)).collect();
    Ok(Classification { kappa, gamma, epsilon, expected, counts, bad })
}

/// Counts the cloud in every box of `partition` and classifies the boxes.
/// The cloud region must cover every box.
pub fn classify(cloud: &PointCloud, partition: &LatticePartition, kappa: f64, gamma: f64) -> Result<Classification> {
    check_kappa(kappa)?;
    if !cloud.region().contains_region(&partition.covered_region()) {
        return Err(Error::PartitionNotCovered);
    }
    let epsilon = cloud.params().epsilon;
    let expected = gamma * (partition.s() / epsilon).powi(partition.dim() as i32);
    if expected.is_nan() || expected < 1.0 {
        return Err(Error::ExpectedCountBelowOne { expected });
    }
    let mut counts = vec![0usize; partition.len()];
    for x in cloud.points() {
        if let Some(i) = partition.index_of_point(x) {
            counts[i] += 1;
        }
    }
    classify_counts(counts, expected, kappa, gamma, epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentGraph {
    /// Partition indices of each component, sorted; components are ordered by
    /// their smallest member.
    pub components: Vec<Vec<usize>>,
    /// Sorted partition indices of the boundary layer of each component.
    pub boundary: Vec<Vec<usize>>,
    /// Component id of each partition box, `None` for good boxes.
    pub component_of: Vec<Option<usize>>,
}

impl ComponentGraph {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn max_component(&self) -> usize {
        self.components.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn members(&self, partition: &LatticePartition, id: usize) -> Vec<BoxId> {
        self.components[id].iter().map(|&i| partition.box_at(i)).collect()
    }

    pub fn boundary_boxes(&self, partition: &LatticePartition, id: usize) -> Vec<BoxId> {
        self.boundary[id].iter().map(|&i| partition.box_at(i)).collect()
    }
}

/// Face-connected components of the flagged boxes and their vertex-touch
/// boundaries.
pub fn components_from_mask(bad: &[bool], partition: &LatticePartition) -> Result<ComponentGraph> {
    if bad.len() != partition.len() {
        return Err(Error::FieldLength { expected: partition.len(), got: bad.len() });
    }
    let mut uf = UnionFind::new(bad.len());
    for i in (0..bad.len()).filter(|&i| bad[i]) {
        partition.for_each_neighbor(i, false, |j| {
            if bad[j] {
                uf.union(i, j);
            }
        });
    }
    let mut component_of = vec![None; bad.len()];
    let mut root_to_id = std::collections::HashMap::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    for i in (0..bad.len()).filter(|&i| bad[i]) {
        let root = uf.find(i);
        let id = *root_to_id.entry(root).or_insert_with(|| {
            components.push(Vec::new());
            components.len() - 1
        });
        components[id].push(i);
        component_of[i] = Some(id);
    }
    let boundary = components
        .iter()
        .map(|members| {
            let mut layer = Vec::new();
            for &i in members {
                partition.for_each_neighbor(i, true, |j| {
                    if !bad[j] {
                        layer.push(j);
                    }
                });
            }
            layer.sort_unstable();
            layer.dedup();
            layer
        })
        .collect();
    Ok(ComponentGraph { components, boundary, component_of })
}

pub fn components(cls: &Classification, partition: &LatticePartition) -> Result<ComponentGraph> {
    components_from_mask(&cls.bad, partition)
}

/// Whether the unflagged boxes form a single face-connected set.
pub fn good_mask_is_connected(bad: &[bool], partition: &LatticePartition) -> bool {
    let Some(start) = bad.iter().position(|&b| !b) else {
        return true;
    };
    let total = bad.iter().filter(|&&b| !b).count();
    let mut seen = vec![false; bad.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        partition.for_each_neighbor(i, false, |j| {
            if !bad[j] && !seen[j] {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        });
    }
    reached == total
}

pub fn good_is_connected(cls: &Classification, partition: &LatticePartition) -> bool {
    good_mask_is_connected(&cls.bad, partition)
}

/// Breadth-first distances (in steps) inside `layer` under diagonal adjacency.
fn layer_bfs(partition: &LatticePartition, layer: &[usize], from: usize) -> Vec<Option<(usize, usize)>> {
    // (steps, predecessor) per position in `layer`.
    let pos = |j: usize| layer.binary_search(&j).ok();
    let mut out = vec![None; layer.len()];
    let Some(start) = pos(from) else {
        return out;
    };
    out[start] = Some((0, start));
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        let steps = out[a].expect("queued nodes are reached").0;
        partition.for_each_neighbor(layer[a], true, |j| {
            if let Some(b) = pos(j) {
                if out[b].is_none() {
                    out[b] = Some((steps + 1, a));
                    queue.push_back(b);
                }
            }
        });
    }
    out
}

/// A shortest diagonal path inside the boundary of component `id` from `from`
/// to `to`, both included.
pub fn boundary_path(
    graph: &ComponentGraph,
    partition: &LatticePartition,
    id: usize,
    from: &BoxId,
    to: &BoxId,
) -> Result<Vec<BoxId>> {
    let layer = graph
        .boundary
        .get(id)
        .ok_or_else(|| Error::InvalidParams(format!("no component {id}")))?;
    let locate = |b: &BoxId| {
        partition
            .index_of(b)
            .and_then(|i| layer.binary_search(&i).ok())
            .ok_or_else(|| Error::InvalidParams(format!("box {b:?} is not on the boundary of component {id}")))
    };
    let (a, b) = (locate(from)?, locate(to)?);
    let tree = layer_bfs(partition, layer, layer[a]);
    if tree[b].is_none() {
        return Err(Error::BoundaryDisconnected { component: id });
    }
    let mut path = vec![partition.box_at(layer[b])];
    let mut cur = b;
    while cur != a {
        cur = tree[cur].expect("on the BFS tree").1;
        path.push(partition.box_at(layer[cur]));
    }
    path.reverse();
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryStats {
    /// Longest shortest-path length (boxes, endpoints included) between two
    /// boundary boxes that are connected to each other.
    pub max_path_len: usize,
    pub connected: bool,
}

/// All-pairs shortest diagonal paths on the boundary of component `id`.
pub fn boundary_stats(graph: &ComponentGraph, partition: &LatticePartition, id: usize) -> BoundaryStats {
    let layer = &graph.boundary[id];
    let mut max_path_len = 0;
    let mut connected = true;
    for &start in layer {
        for hit in layer_bfs(partition, layer, start) {
            match hit {
                Some((steps, _)) => max_path_len = max_path_len.max(steps + 1),
                None => connected = false,
            }
        }
    }
    BoundaryStats { max_path_len, connected }
}

/// Per-realization evaluation of the controlled-subfamily properties.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledCertificate {
    /// Good set is face-path-connected.
    pub n0_ok: bool,
    pub bad_count: usize,
    pub max_component: usize,
    /// `#bad * s^d`.
    pub volume_bound: f64,
    pub rho0: f64,
    /// `#bad * s^d <= s^rho0`.
    pub volume_ok: bool,
    /// `eps^rho0 / s^d`.
    pub count_bound: f64,
    /// `#bad <= eps^rho0 / s^d`.
    pub count_ok: bool,
    /// `max_component / ln(1/s)`; the sweep-level fit is the maximum of these.
    pub lambda_hat: f64,
    pub bad_fraction: f64,
    /// Bad fraction below the site percolation threshold.
    pub subcritical: bool,
}

pub fn certify(
    cls: &Classification,
    graph: &ComponentGraph,
    partition: &LatticePartition,
    rho0_target: f64,
) -> ControlledCertificate {
    let s = partition.s();
    let d = partition.dim() as i32;
    let bad_count = cls.bad_count();
    let max_component = graph.max_component();
    let volume_bound = bad_count as f64 * s.powi(d);
    let count_bound = cls.epsilon.powf(rho0_target) / s.powi(d);
    let log_inv_s = (1.0 / s).ln();
    let lambda_hat = if max_component == 0 {
        0.0
    } else if log_inv_s > 0.0 {
        max_component as f64 / log_inv_s
    } else {
        f64::INFINITY
    };
    let bad_fraction = if cls.bad.is_empty() { 0.0 } else { bad_count as f64 / cls.bad.len() as f64 };
    ControlledCertificate {
        n0_ok: good_is_connected(cls, partition),
        bad_count,
        max_component,
        volume_bound,
        rho0: rho0_target,
        volume_ok: volume_bound <= s.powf(rho0_target),
        count_bound,
        count_ok: bad_count as f64 <= count_bound,
        lambda_hat,
        bad_fraction,
        subcritical: bad_fraction < site_percolation_threshold(partition.dim()),
    }
}
