use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;

use cloudcompact::bad_boxes::{boundary_path, classify, components_from_mask, good_mask_is_connected};
use cloudcompact::cell_index::CellIndex;
use cloudcompact::energy::{cloud_energy, EnergyParams};
use cloudcompact::extension::extend;
use cloudcompact::field::{CloudField, LatticeField};
use cloudcompact::geometry::distance_sq;
use cloudcompact::point_process::sample;
use cloudcompact::regularity::{cell_shapes, rasterize, regular_from_shapes};
use cloudcompact::{LatticePartition, PointCloud, ProcessParams, Region};

fn grid(d: usize, side: i64) -> LatticePartition {
    LatticePartition::from_ranges(1.0, d, &vec![0; d], &vec![side - 1; d]).unwrap()
}

fn mask_strategy() -> impl Strategy<Value = (usize, i64, Vec<bool>)> {
    (1usize..=3).prop_flat_map(|d| {
        let side: i64 = match d {
            1 => 30,
            2 => 20,
            _ => 7,
        };
        let n = (side as usize).pow(d as u32);
        (Just(d), Just(side), proptest::collection::vec(proptest::bool::weighted(0.35), n))
    })
}

fn cloud_strategy(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64), 2..max).prop_map(|mut pts| {
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    })
}

fn unit_cloud(pts: &[(f64, f64)], eps: f64) -> PointCloud {
    let params = ProcessParams::new(1.0, eps, 2, 0).unwrap();
    let points = pts.iter().map(|&(x, y)| vec![x, y]).collect();
    PointCloud::from_points(points, params, Region::unit_cube(2).unwrap()).unwrap()
}

/// Face components by flood fill on box coordinates.
fn flood_components(bad: &[bool], part: &LatticePartition) -> Vec<BTreeSet<usize>> {
    let d = part.dim();
    let mut seen = vec![false; bad.len()];
    let mut out = Vec::new();
    for start in 0..bad.len() {
        if !bad[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            comp.insert(i);
            let c = part.box_at(i);
            for k in 0..d {
                for step in [-1i64, 1] {
                    let mut n = c;
                    n.0[k] += step;
                    if let Some(j) = part.index_of(&n) {
                        if bad[j] && !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

fn chebyshev(part: &LatticePartition, i: usize, j: usize) -> i64 {
    let (a, b) = (part.box_at(i), part.box_at(j));
    (0..part.dim()).map(|k| (a.0[k] - b.0[k]).abs()).max().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_point_lies_in_exactly_one_box(x in -3.0..3.0f64, y in -3.0..3.0f64, s in 0.05..1.5f64) {
        let part = LatticePartition::build(&Region::centered_cube(2, 8.0).unwrap(), s).unwrap();
        let owners: Vec<usize> = (0..part.len()).filter(|&i| part.box_region(&part.box_at(i)).contains(&[x, y])).collect();
        match part.index_of_point(&[x, y]) {
            Some(i) => prop_assert_eq!(owners, vec![i]),
            None => prop_assert!(owners.is_empty()),
        }
    }

    #[test]
    fn cell_list_matches_ball_scan(pts in cloud_strategy(150), r in 0.02..0.4f64, qx in 0.0..1.0f64, qy in 0.0..1.0f64) {
        let cloud = unit_cloud(&pts, 0.05);
        let index = CellIndex::build(&cloud, r).unwrap();
        let mut got = index.neighbors_within(&cloud, &[qx, qy], r).unwrap();
        got.sort_unstable();
        let want: Vec<usize> = (0..cloud.len()).filter(|&i| distance_sq(cloud.point(i), &[qx, qy]) <= r * r).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn energy_is_twice_the_half_sum(pts in cloud_strategy(120), s in 0.05..0.5f64, p in 1.0..3.0f64) {
        let cloud = unit_cloud(&pts, 0.05);
        let u = CloudField::from_fn(&cloud, |x| (4.0 * x[0]).sin() + x[1]).unwrap();
        let region = cloud.region().clone();
        let total = cloud_energy(&cloud, &u, &region, &EnergyParams::new(p, s, 0.05).unwrap()).unwrap().total;
        let v = u.values();
        let mut half = 0.0;
        for i in 0..cloud.len() {
            for j in i + 1..cloud.len() {
                if distance_sq(cloud.point(i), cloud.point(j)) <= s * s {
                    half += ((v[i] - v[j]).abs() / s).powf(p);
                }
            }
        }
        let expected = 2.0 * half * 0.05f64.powi(4) / (s * s);
        prop_assert!((total - expected).abs() <= 1e-10 * expected.max(1e-300));
    }

    #[test]
    fn raising_kappa_shrinks_the_bad_set(seed in 0u64..10_000, k1 in 0.05..0.95f64, k2 in 0.05..0.95f64) {
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let region = Region::unit_cube(2).unwrap();
        let cloud = sample(&ProcessParams::new(1.0, 0.05, 2, seed).unwrap(), &region).unwrap();
        let part = LatticePartition::build(&region.dilate(-0.1).unwrap(), 0.2).unwrap();
        let a = classify(&cloud, &part, lo, 1.0).unwrap();
        let b = classify(&cloud, &part, hi, 1.0).unwrap();
        prop_assert!(b.bad.iter().zip(&a.bad).all(|(&hb, &lb)| !hb || lb));
    }

    #[test]
    fn components_match_flood_fill((d, side, bad) in mask_strategy()) {
        let part = grid(d, side);
        let graph = components_from_mask(&bad, &part).unwrap();
        let got: Vec<BTreeSet<usize>> = graph.components.iter().map(|c| c.iter().copied().collect()).collect();
        prop_assert_eq!(got, flood_components(&bad, &part));
        for (id, comp) in graph.components.iter().enumerate() {
            // Maximal: no bad face neighbor outside.
            for &i in comp {
                let mut ok = true;
                part.for_each_neighbor(i, false, |j| ok &= !bad[j] || graph.component_of[j] == Some(id));
                prop_assert!(ok);
            }
            // Boundary: good boxes touching the component, and all of them.
            let want: Vec<usize> = (0..part.len())
                .filter(|&j| !bad[j] && comp.iter().any(|&i| chebyshev(&part, i, j) == 1))
                .collect();
            prop_assert_eq!(&graph.boundary[id], &want);
        }
    }

    #[test]
    fn boundary_paths_stay_short((d, side, bad) in mask_strategy(), pick in 0usize..1000) {
        let part = grid(d, side);
        let graph = components_from_mask(&bad, &part).unwrap();
        prop_assume!(!graph.is_empty());
        let id = pick % graph.len();
        let layer = &graph.boundary[id];
        prop_assume!(layer.len() >= 2);
        let from = part.box_at(layer[0]);
        let to = part.box_at(layer[layer.len() - 1]);
        if let Ok(path) = boundary_path(&graph, &part, id, &from, &to) {
            prop_assert!(path.len() <= layer.len());
            prop_assert_eq!(path[0], from);
            prop_assert_eq!(*path.last().unwrap(), to);
            for w in path.windows(2) {
                let step = (0..d).map(|k| (w[0].0[k] - w[1].0[k]).abs()).max().unwrap();
                prop_assert_eq!(step, 1);
            }
        }
    }

    #[test]
    fn good_connectivity_matches_flood_fill((d, side, bad) in mask_strategy()) {
        let part = grid(d, side);
        let good: Vec<bool> = bad.iter().map(|b| !b).collect();
        let expected = flood_components(&good, &part).len() <= 1;
        prop_assert_eq!(good_mask_is_connected(&bad, &part), expected);
    }

    #[test]
    fn extension_is_affine_and_range_bounded(
        (d, side, bad) in mask_strategy(),
        values in proptest::collection::vec(-10.0..10.0f64, 27_000),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let part = grid(d, side);
        let graph = components_from_mask(&bad, &part).unwrap();
        prop_assume!(graph.boundary.iter().all(|l| !l.is_empty()));
        let mut v = LatticeField::undefined(&part);
        let mut w = LatticeField::undefined(&part);
        for i in 0..part.len() {
            if !bad[i] {
                v.set(i, values[i]);
                w.set(i, a * values[i] + b);
            }
        }
        let tv = extend(&v, &graph, &part).unwrap();
        let tw = extend(&w, &graph, &part).unwrap();
        let (lo, hi) = v.min_max().unwrap();
        for i in 0..part.len() {
            let t = tv.get(i).unwrap();
            prop_assert!(lo <= t && t <= hi);
            if !bad[i] {
                prop_assert_eq!(t, values[i]);
            }
            let lhs = tw.get(i).unwrap();
            prop_assert!((lhs - (a * t + b)).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn larger_alpha_keeps_fewer_points(seed in 0u64..1000, a1 in 0.02..0.6f64, a2 in 0.02..0.6f64) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let cloud = sample(&ProcessParams::new(1.0, 0.1, 2, seed).unwrap(), &Region::unit_cube(2).unwrap()).unwrap();
        prop_assume!(!cloud.is_empty());
        let raster = rasterize(&cloud, cloud.region(), 0.1 / 8.0).unwrap();
        let shapes = cell_shapes(&raster);
        let weak = regular_from_shapes(&shapes, 0.1, lo).unwrap();
        let strong = regular_from_shapes(&shapes, 0.1, hi).unwrap();
        prop_assert!(strong.regular.iter().zip(&weak.regular).all(|(&s, &w)| !s || w));
    }
}
