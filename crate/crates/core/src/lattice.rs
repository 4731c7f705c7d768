//! The box partition `I_s(Q)` anchored at the origin.
//!
//! A box `J` with integer coordinates `c` is centered at `s*c` and covers the
//! half-open cube `[s(c_i - 1/2), s(c_i + 1/2))` on every axis. The partition of
//! a region keeps exactly the boxes whose centers lie in the region, so it is a
//! dense rectangular block of integer coordinates. Boxes are ordered
//! lexicographically, axis 0 most significant.

use crate::error::{Error, Result};
use crate::geometry::{Region, MAX_DIM};

/// Upper bound on the number of boxes a partition may hold.
pub const MAX_BOXES: u128 = 1 << 26;

/// Lattice coordinates beyond this magnitude are not resolved exactly in f64.
const EXACT_RANGE: f64 = (1u64 << 50) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoxId(pub [i64; MAX_DIM]);

impl BoxId {
    pub fn new(coords: &[i64]) -> Self {
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        BoxId(c)
    }

    pub fn coords(&self, dim: usize) -> &[i64] {
        &self.0[..dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePartition {
    s: f64,
    dim: usize,
    lo: [i64; MAX_DIM],
    extent: [usize; MAX_DIM],
    region: Region,
}

fn check_side(s: f64) -> Result<()> {
    if !(s.is_normal() && s > 0.0 && (s * 4.0 * EXACT_RANGE).is_finite()) {
        return Err(Error::InvalidParams(format!("box side must be a positive normal float, got {s}")));
    }
    Ok(())
}

/// Lower face of the boxes with coordinate `c` along one axis.
#[inline]
fn face(s: f64, c: i64) -> f64 {
    s * (c as f64 - 0.5)
}

impl LatticePartition {
    /// Enumerates `I_s(region)`.
    pub fn build(region: &Region, s: f64) -> Result<Self> {
        check_side(s)?;
        let side = region.min_side();
        if s > side {
            return Err(Error::ScaleTooLarge { s, side });
        }
        let dim = region.dim();
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for k in 0..dim {
            let (a, b) = (region.lo()[k], region.hi()[k]);
            if !((a / s).abs() <= EXACT_RANGE && (b / s).abs() <= EXACT_RANGE) {
                return Err(Error::InvalidParams(format!(
                    "region coordinates are too large relative to s = {s}"
                )));
            }
            let mut first = (a / s).ceil() as i64;
            while s * ((first - 1) as f64) >= a {
                first -= 1;
            }
            while s * (first as f64) < a {
                first += 1;
            }
            let mut last = (b / s).ceil() as i64 - 1;
            while s * ((last + 1) as f64) < b {
                last += 1;
            }
            while s * (last as f64) >= b {
                last -= 1;
            }
            lo[k] = first;
            hi[k] = last;
        }
        Self::from_ranges(s, dim, &lo[..dim], &hi[..dim]).map(|mut p| {
            p.region = region.clone();
            p
        })
    }

    /// The partition made of every box with `lo[k] <= c[k] <= hi[k]`. Its
    /// region is the union of those boxes.
    pub fn from_ranges(s: f64, dim: usize, lo: &[i64], hi: &[i64]) -> Result<Self> {
        check_side(s)?;
        if dim == 0 || dim > MAX_DIM || lo.len() != dim || hi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: lo.len().min(hi.len()) });
        }
        if lo.iter().chain(hi).any(|&c| c.unsigned_abs() as f64 > EXACT_RANGE) {
            return Err(Error::InvalidParams("lattice coordinates out of range".into()));
        }
        let mut count: u128 = 1;
        let mut extent = [1usize; MAX_DIM];
        let mut lo_arr = [0i64; MAX_DIM];
        for k in 0..dim {
            if hi[k] < lo[k] {
                return Err(Error::EmptyDomain);
            }
            let n = (hi[k] as i128 - lo[k] as i128 + 1) as u128;
            count = count.saturating_mul(n);
            if count > MAX_BOXES {
                return Err(Error::TooManyBoxes { count, cap: MAX_BOXES });
            }
            extent[k] = n as usize;
            lo_arr[k] = lo[k];
        }
        let region = Region::new(
            (0..dim).map(|k| face(s, lo[k])).collect(),
            (0..dim).map(|k| face(s, hi[k] + 1)).collect(),
        )?;
        Ok(LatticePartition { s, dim, lo: lo_arr, extent, region })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.extent[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The region the partition was built from.
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dim]
    }

    /// Union of all boxes; differs from `region()` by a band narrower than `s`.
    pub fn covered_region(&self) -> Region {
        let lo = (0..self.dim).map(|k| face(self.s, self.lo[k])).collect();
        let hi = (0..self.dim)
            .map(|k| face(self.s, self.lo[k] + self.extent[k] as i64))
            .collect();
        Region::new(lo, hi).expect("a nonempty partition covers a proper box")
    }

    pub fn box_volume(&self) -> f64 {
        self.s.powi(self.dim as i32)
    }

    pub fn box_at(&self, index: usize) -> BoxId {
        let mut c = [0i64; MAX_DIM];
        let mut rest = index;
        for k in (0..self.dim).rev() {
            c[k] = self.lo[k] + (rest % self.extent[k]) as i64;
            rest /= self.extent[k];
        }
        BoxId(c)
    }

    pub fn index_of(&self, id: &BoxId) -> Option<usize> {
        let mut index = 0usize;
        for k in 0..self.dim {
            let off = id.0[k].checked_sub(self.lo[k])?;
            if off < 0 || off as usize >= self.extent[k] {
                return None;
            }
            index = index * self.extent[k] + off as usize;
        }
        if id.0[self.dim..].iter().any(|&c| c != 0) {
            return None;
        }
        Some(index)
    }

    pub fn contains(&self, id: &BoxId) -> bool {
        self.index_of(id).is_some()
    }

    pub fn boxes(&self) -> impl ExactSizeIterator<Item = BoxId> + '_ {
        (0..self.len()).map(|i| self.box_at(i))
    }

    pub fn center(&self, id: &BoxId) -> Vec<f64> {
        id.coords(self.dim).iter().map(|&c| self.s * c as f64).collect()
    }

    /// `Q_s(J)` as a half-open region.
    pub fn box_region(&self, id: &BoxId) -> Region {
        let c = id.coords(self.dim);
        Region::new(
            c.iter().map(|&ci| face(self.s, ci)).collect(),
            c.iter().map(|&ci| face(self.s, ci + 1)).collect(),
        )
        .expect("boxes have positive side")
    }

    /// Lattice coordinates of the box holding `x`, whether or not it belongs
    /// to this partition.
    pub fn lattice_coords(&self, x: &[f64]) -> Option<BoxId> {
        if x.len() != self.dim {
            return None;
        }
        let mut c = [0i64; MAX_DIM];
        for k in 0..self.dim {
            if !x[k].is_finite() {
                return None;
            }
            let guess = (x[k] / self.s + 0.5).floor();
            if guess.is_nan() || guess.abs() > EXACT_RANGE {
                return None;
            }
            let mut ci = guess as i64;
            while x[k] < face(self.s, ci) {
                ci -= 1;
            }
            while x[k] >= face(self.s, ci + 1) {
                ci += 1;
            }
            c[k] = ci;
        }
        Some(BoxId(c))
    }

    /// The box of this partition containing `x`, if any.
    pub fn box_of(&self, x: &[f64]) -> Option<BoxId> {
        self.lattice_coords(x).filter(|id| self.contains(id))
    }

    pub fn index_of_point(&self, x: &[f64]) -> Option<usize> {
        self.lattice_coords(x).and_then(|id| self.index_of(&id))
    }

    /// Calls `f` with the index of every partition box adjacent to `index`:
    /// sharing a face when `diagonal` is false, sharing any boundary point
    /// (the `3^d - 1` surrounding boxes) when it is true.
    pub fn for_each_neighbor(&self, index: usize, diagonal: bool, mut f: impl FnMut(usize)) {
        let here = self.box_at(index);
        let mut local = [0usize; MAX_DIM];
        for (k, l) in local.iter_mut().enumerate().take(self.dim) {
            *l = (here.0[k] - self.lo[k]) as usize;
        }
        let stride = self.strides();
        if !diagonal {
            for k in 0..self.dim {
                if local[k] > 0 {
                    f(index - stride[k]);
                }
                if local[k] + 1 < self.extent[k] {
                    f(index + stride[k]);
                }
            }
            return;
        }
        let total = 3usize.pow(self.dim as u32);
        'offsets: for code in 0..total {
            let mut rest = code;
            let mut target = index as isize;
            let mut is_self = true;
            for k in 0..self.dim {
                let off = (rest % 3) as isize - 1;
                rest /= 3;
                if off != 0 {
                    is_self = false;
                }
                let pos = local[k] as isize + off;
                if pos < 0 || pos >= self.extent[k] as isize {
                    continue 'offsets;
                }
                target += off * stride[k] as isize;
            }
            if !is_self {
                f(target as usize);
            }
        }
    }

    fn strides(&self) -> [usize; MAX_DIM] {
        let mut stride = [0usize; MAX_DIM];
        let mut acc = 1;
        for k in (0..self.dim).rev() {
            stride[k] = acc;
            acc *= self.extent[k];
        }
        stride
    }

    /// Boxes `J'` of the partition with `|J - J'| = s`.
    pub fn face_neighbors(&self, id: &BoxId) -> Result<Vec<BoxId>> {
        self.neighbors(id, false)
    }

    /// `N(J) = (Q_{3s}(J) \ {J}) ∩ I_s(Q)`.
    pub fn diagonal_neighbors(&self, id: &BoxId) -> Result<Vec<BoxId>> {
        self.neighbors(id, true)
    }

    fn neighbors(&self, id: &BoxId, diagonal: bool) -> Result<Vec<BoxId>> {
        let index = self.index_of(id).ok_or(Error::BoxOutsidePartition(*id))?;
        let mut out = Vec::new();
        self.for_each_neighbor(index, diagonal, |j| out.push(self.box_at(j)));
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centered(side: f64) -> Region {
        Region::centered_cube(2, side).unwrap()
    }

    #[test]
    fn half_side_partition_of_centered_square() {
        let p = LatticePartition::build(&centered(1.0), 0.5).unwrap();
        let boxes: Vec<_> = p.boxes().map(|b| [b.0[0], b.0[1]]).collect();
        assert_eq!(boxes, vec![[-1, -1], [-1, 0], [0, -1], [0, 0]]);
    }

    #[test]
    fn unit_side_partition_keeps_only_origin() {
        let p = LatticePartition::build(&centered(1.0), 1.0).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.box_at(0), BoxId::new(&[0, 0]));
    }

    #[test]
    fn side_over_k_gives_k_pow_d_boxes() {
        // Brute force: count integer points c with s*c in [0, 1) per axis.
        for k in 1..40usize {
            let s = 1.0 / k as f64;
            let brute = (-100i64..100).filter(|&c| (0.0..1.0).contains(&(s * c as f64))).count();
            let p = LatticePartition::build(&Region::unit_cube(2).unwrap(), s).unwrap();
            assert_eq!(p.len(), brute * brute, "k = {k}");
            assert_eq!(brute, k);
        }
    }

    #[test]
    fn rejects_oversized_boxes() {
        assert!(matches!(
            LatticePartition::build(&centered(1.0), 1.5),
            Err(Error::ScaleTooLarge { .. })
        ));
    }

    #[test]
    fn box_of_center_and_shared_face() {
        let p = LatticePartition::build(&centered(4.0), 1.0).unwrap();
        let j = BoxId::new(&[1, -1]);
        assert_eq!(p.box_of(&p.center(&j)), Some(j));
        // x = 0.5 sits on the face between boxes 0 and 1; the + side wins.
        assert_eq!(p.box_of(&[0.5, 0.0]), Some(BoxId::new(&[1, 0])));
        assert_eq!(p.box_of(&[100.0, 0.0]), None);
    }

    #[test]
    fn neighbor_counts() {
        let p = LatticePartition::build(&centered(10.0), 1.0).unwrap();
        let inner = BoxId::new(&[0, 0]);
        assert_eq!(p.face_neighbors(&inner).unwrap().len(), 4);
        assert_eq!(p.diagonal_neighbors(&inner).unwrap().len(), 8);
        let corner = p.box_at(0);
        assert_eq!(p.face_neighbors(&corner).unwrap().len(), 2);
        assert_eq!(p.diagonal_neighbors(&corner).unwrap().len(), 3);
        assert!(p.face_neighbors(&BoxId::new(&[99, 0])).is_err());

        let p3 = LatticePartition::build(&Region::centered_cube(3, 10.0).unwrap(), 1.0).unwrap();
        let inner3 = BoxId::new(&[0, 0, 0]);
        assert_eq!(p3.face_neighbors(&inner3).unwrap().len(), 6);
        assert_eq!(p3.diagonal_neighbors(&inner3).unwrap().len(), 26);
        assert_eq!(p3.face_neighbors(&p3.box_at(0)).unwrap().len(), 3);
    }

    #[test]
    fn neighbor_relations_are_symmetric_and_nested() {
        let p = LatticePartition::build(&Region::new(vec![0.0, 0.0], vec![5.0, 3.0]).unwrap(), 1.0).unwrap();
        for j in p.boxes() {
            let face = p.face_neighbors(&j).unwrap();
            let diag = p.diagonal_neighbors(&j).unwrap();
            for f in &face {
                assert!(diag.contains(f));
                assert!(p.face_neighbors(f).unwrap().contains(&j));
            }
            for g in &diag {
                assert!(p.diagonal_neighbors(g).unwrap().contains(&j));
            }
        }
    }

    #[test]
    fn index_round_trip() {
        let p = LatticePartition::build(&Region::centered_cube(3, 3.0).unwrap(), 0.7).unwrap();
        for i in 0..p.len() {
            assert_eq!(p.index_of(&p.box_at(i)), Some(i));
        }
        let ordered: Vec<_> = p.boxes().collect();
        let mut sorted = ordered.clone();
        sorted.sort();
        assert_eq!(ordered, sorted);
    }

    #[test]
    fn from_ranges_caps_size() {
        assert!(matches!(
            LatticePartition::from_ranges(1.0, 2, &[0, 0], &[1 << 20, 1 << 20]),
            Err(Error::TooManyBoxes { .. })
        ));
        assert!(LatticePartition::from_ranges(1.0, 2, &[i64::MIN, 0], &[i64::MAX, 0]).is_err());
        let p = LatticePartition::from_ranges(0.5, 1, &[-2], &[3]).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.covered_region().lo(), &[-1.25]);
        assert_eq!(p.covered_region().hi(), &[1.75]);
    }
}
