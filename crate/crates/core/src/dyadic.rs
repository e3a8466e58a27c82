//! Approximate parabolic dyadic grid.
//!
//! Generation `i` halves every spatial side `i` times and the temporal side
//! `k_i = round_half_up(i·p)` times, so each box is within a bounded factor
//! of a true parabolic box. Boxes are addressed by integer indices and only
//! materialized to real coordinates on demand; the grid itself is lazy.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::geometry::{Box, Exponent, Interval};
use crate::numeric::m;

/// `k_1, …, k_depth` with `k_i = round_half_up(i·p)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentSequence {
    pub p: Exponent,
    pub k: Vec<u32>,
}

impl ExponentSequence {
    pub fn depth(&self) -> usize {
        self.k.len()
    }

    /// `k_i`, with `k_0 = 0`.
    pub fn k(&self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            self.k[i - 1]
        }
    }

    /// `p·i − k_i`; the box at generation `i` is `2^{p·i − k_i}` times longer
    /// in time than the parabolic box with the same spatial side.
    pub fn distortion_exponent(&self, i: usize) -> f64 {
        self.p.get() * i as f64 - self.k(i) as f64
    }

    fn check(&self) -> Result<()> {
        let p = self.p.get();
        let mut prev = 0;
        for i in 1..=self.depth() {
            let k = self.k(i);
            let fi = i as f64;
            if (p - k as f64 / fi).abs() > 1.0 / fi {
                return Err(Error::Internal(alloc::format!("|p - k_{i}/{i}| exceeds 1/{i}")));
            }
            if k < prev {
                return Err(Error::Internal(alloc::format!("k_{i} decreases")));
            }
            let d = self.distortion_exponent(i);
            if !(d > -1.0 && d < 1.0) {
                return Err(Error::Internal(alloc::format!("2^(p*{i} - k_{i}) outside (1/2, 2)")));
            }
            prev = k;
        }
        Ok(())
    }
}

pub fn exponent_sequence(p: Exponent, depth: usize) -> Result<ExponentSequence> {
    if depth == 0 {
        return Err(param("depth", "must be at least 1"));
    }
    let k = (1..=depth)
        .map(|i| m::floor(p.get() * i as f64 + 0.5) as u32)
        .collect();
    let seq = ExponentSequence { p, k };
    seq.check()?;
    Ok(seq)
}

/// Integer address of a dyadic box.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DyadicBoxId {
    pub generation: u32,
    /// Spatial indices, each in `0..2^generation`.
    pub space: Vec<u64>,
    /// Temporal index in `0..2^{k_generation}`.
    pub time: u64,
}

/// Parabolic box covering a dyadic box.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverBox {
    pub r#box: Box,
    pub covered: DyadicBoxId,
    pub volume_ratio: f64,
}

/// One line of the grid dump.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DyadicBoxRecord {
    pub generation: u32,
    pub index: u128,
    pub spatial_lo: Vec<f64>,
    pub spatial_hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub parent_index: Option<u128>,
}

/// Largest generation that [`DyadicGrid::generation`] will enumerate.
pub const MAX_ENUMERATED_BOXES: u128 = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DyadicGrid {
    pub root: Box,
    pub seq: ExponentSequence,
}

pub fn build_grid(root: Box, p: Exponent, depth: usize) -> Result<DyadicGrid> {
    DyadicGrid::new(root, p, depth)
}

impl DyadicGrid {
    pub fn new(root: Box, p: Exponent, depth: usize) -> Result<Self> {
        if root.dim() == 0 {
            return Err(param("root", "needs at least one spatial axis"));
        }
        let side = root.space[0].len();
        if root.space.iter().any(|iv| (iv.len() - side).abs() > 1e-12 * side) {
            return Err(param("root", "spatial section must be a cube"));
        }
        if !(side > 0.0 && root.time.len() > 0.0) {
            return Err(param("root", "must have positive extent"));
        }
        let seq = exponent_sequence(p, depth)?;
        let n = root.dim() as u32;
        if n * depth as u32 + seq.k(depth) >= 127 {
            return Err(param("depth", "generation sizes overflow the index range"));
        }
        Ok(DyadicGrid { root, seq })
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn depth(&self) -> usize {
        self.seq.depth()
    }

    pub fn p(&self) -> Exponent {
        self.seq.p
    }

    pub fn root_id(&self) -> DyadicBoxId {
        DyadicBoxId {
            generation: 0,
            space: vec![0; self.dim()],
            time: 0,
        }
    }

    /// Number of boxes in generation `i`: `2^{i·n + k_i}`.
    pub fn generation_size(&self, i: usize) -> u128 {
        1u128 << (i as u32 * self.dim() as u32 + self.seq.k(i))
    }

    /// Spatial side at generation `i`.
    pub fn spatial_side(&self, i: usize) -> f64 {
        self.root.space[0].len() * m::powi(0.5, i as i32)
    }

    /// Temporal side at generation `i`.
    pub fn temporal_side(&self, i: usize) -> f64 {
        self.root.time.len() * m::powi(0.5, self.seq.k(i) as i32)
    }

    /// Temporal side of the true parabolic box with spatial side `2^{-i}`.
    pub fn parabolic_temporal_side(&self, i: usize) -> f64 {
        self.root.time.len() * m::powf(0.5, self.p().get() * i as f64)
    }

    pub fn is_valid(&self, id: &DyadicBoxId) -> bool {
        let g = id.generation as usize;
        g <= self.depth()
            && id.space.len() == self.dim()
            && id.space.iter().all(|&s| s >> g == 0)
            && (id.time >> self.seq.k(g)) == 0
    }

    fn check_id(&self, id: &DyadicBoxId) -> Result<()> {
        if self.is_valid(id) {
            Ok(())
        } else {
            Err(param("box_id", "not a box of this grid"))
        }
    }

    /// Position of `id` within its generation (time-major).
    pub fn flat_index(&self, id: &DyadicBoxId) -> u128 {
        let g = id.generation;
        let mut idx = id.time as u128;
        for &s in id.space.iter().rev() {
            idx = (idx << g) | s as u128;
        }
        idx
    }

    pub fn from_flat_index(&self, generation: usize, mut idx: u128) -> Result<DyadicBoxId> {
        if generation > self.depth() || idx >= self.generation_size(generation) {
            return Err(param("index", "outside the generation"));
        }
        let mask = (1u128 << generation) - 1;
        let mut space = Vec::with_capacity(self.dim());
        for _ in 0..self.dim() {
            space.push((idx & mask) as u64);
            idx >>= generation;
        }
        Ok(DyadicBoxId {
            generation: generation as u32,
            space,
            time: idx as u64,
        })
    }

    pub fn parent(&self, id: &DyadicBoxId) -> Result<DyadicBoxId> {
        self.check_id(id)?;
        let g = id.generation as usize;
        if g == 0 {
            return Err(param("box_id", "the root has no parent"));
        }
        let dk = self.seq.k(g) - self.seq.k(g - 1);
        Ok(DyadicBoxId {
            generation: id.generation - 1,
            space: id.space.iter().map(|&s| s >> 1).collect(),
            time: id.time >> dk,
        })
    }

    /// Whether `a` equals `b` or is one of its descendants.
    pub fn is_descendant_or_self(&self, a: &DyadicBoxId, b: &DyadicBoxId) -> bool {
        if a.generation < b.generation {
            return false;
        }
        let dg = a.generation - b.generation;
        let dk = self.seq.k(a.generation as usize) - self.seq.k(b.generation as usize);
        a.space.iter().zip(&b.space).all(|(&x, &y)| x >> dg == y) && a.time >> dk == b.time
    }

    pub fn children(&self, id: &DyadicBoxId) -> Result<Vec<DyadicBoxId>> {
        self.check_id(id)?;
        let g = id.generation as usize;
        if g >= self.depth() {
            return Ok(Vec::new());
        }
        let n = self.dim();
        let dk = self.seq.k(g + 1) - self.seq.k(g);
        let mut out = Vec::with_capacity((1usize << n) << dk);
        for tt in 0..(1u64 << dk) {
            for mask in 0..(1u64 << n) {
                out.push(DyadicBoxId {
                    generation: id.generation + 1,
                    space: (0..n).map(|a| (id.space[a] << 1) | ((mask >> a) & 1)).collect(),
                    time: (id.time << dk) | tt,
                });
            }
        }
        Ok(out)
    }

    /// All boxes of generation `i`, in flat-index order.
    pub fn generation(&self, i: usize) -> Result<Vec<DyadicBoxId>> {
        if i > self.depth() {
            return Err(param("generation", "deeper than the grid"));
        }
        let size = self.generation_size(i);
        if size > MAX_ENUMERATED_BOXES {
            return Err(param("generation", "too many boxes to enumerate"));
        }
        (0..size).map(|k| self.from_flat_index(i, k)).collect()
    }

    /// Real coordinates of a box.
    pub fn materialize(&self, id: &DyadicBoxId) -> Box {
        let g = id.generation as usize;
        let (s, tau) = (self.spatial_side(g), self.temporal_side(g));
        let space = id
            .space
            .iter()
            .zip(&self.root.space)
            .map(|(&k, iv)| Interval::new(iv.lo + k as f64 * s, iv.lo + (k + 1) as f64 * s))
            .collect();
        let t0 = self.root.time.lo;
        Box {
            space,
            time: Interval::new(t0 + id.time as f64 * tau, t0 + (id.time + 1) as f64 * tau),
        }
    }

    /// True parabolic box containing `id`, aligned at its temporal start,
    /// with temporal side `max(dyadic, parabolic)`.
    pub fn cover_box(&self, id: &DyadicBoxId) -> CoverBox {
        let g = id.generation as usize;
        let mut b = self.materialize(id);
        let dyadic = self.temporal_side(g);
        let parabolic = self.parabolic_temporal_side(g);
        let side = dyadic.max(parabolic);
        b.time = Interval::new(b.time.lo, b.time.lo + side);
        CoverBox {
            r#box: b,
            covered: id.clone(),
            volume_ratio: side / dyadic,
        }
    }

    pub fn record(&self, id: &DyadicBoxId) -> DyadicBoxRecord {
        let b = self.materialize(id);
        DyadicBoxRecord {
            generation: id.generation,
            index: self.flat_index(id),
            spatial_lo: b.space.iter().map(|iv| iv.lo).collect(),
            spatial_hi: b.space.iter().map(|iv| iv.hi).collect(),
            t_lo: b.time.lo,
            t_hi: b.time.hi,
            parent_index: self.parent(id).ok().map(|q| self.flat_index(&q)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_root() -> Box {
        Box::new(vec![Interval::new(0.0, 1.0)], Interval::new(0.0, 1.0)).unwrap()
    }

    fn exp(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    #[test]
    fn sequences() {
        assert_eq!(exponent_sequence(exp(2.0), 5).unwrap().k, vec![2, 4, 6, 8, 10]);
        assert_eq!(exponent_sequence(exp(2.5), 3).unwrap().k, vec![3, 5, 8]);
        let pi = exponent_sequence(exp(core::f64::consts::PI), 4).unwrap();
        assert_eq!(pi.k, vec![3, 6, 9, 13]);
        assert!(exponent_sequence(exp(2.0), 0).is_err());
    }

    #[test]
    fn generation_counts_and_dims() {
        let g = build_grid(unit_root(), exp(2.0), 2).unwrap();
        assert_eq!(g.generation_size(1), 8);
        assert_eq!(g.generation_size(2), 64);
        assert_eq!((g.spatial_side(1), g.temporal_side(1)), (0.5, 0.25));
        assert_eq!((g.spatial_side(2), g.temporal_side(2)), (0.25, 0.0625));
        let gen2 = g.generation(2).unwrap();
        let vol: f64 = gen2.iter().map(|id| g.materialize(id).measure()).sum();
        assert_eq!(vol, 1.0);
    }

    #[test]
    fn parent_child_round_trip() {
        let g = build_grid(unit_root(), exp(2.5), 3).unwrap();
        for i in 1..=3 {
            for id in g.generation(i).unwrap() {
                let par = g.parent(&id).unwrap();
                assert!(g.children(&par).unwrap().contains(&id));
                assert!(g.materialize(&par).contains_box(&g.materialize(&id)));
                assert!(g.is_descendant_or_self(&id, &par));
                assert_eq!(g.from_flat_index(i, g.flat_index(&id)).unwrap(), id);
            }
        }
        assert!(g.parent(&g.root_id()).is_err());
    }

    #[test]
    fn cover_ratios() {
        let g = build_grid(unit_root(), exp(2.0), 4).unwrap();
        let id = g.generation(3).unwrap()[5].clone();
        let c = g.cover_box(&id);
        assert_eq!(c.volume_ratio, 1.0);
        assert_eq!(c.r#box, g.materialize(&id));
        let g = build_grid(unit_root(), exp(2.5), 3).unwrap();
        let c = g.cover_box(&g.generation(1).unwrap()[0]);
        assert!((c.volume_ratio - 2f64.sqrt()).abs() < 1e-15);
        assert!(c.r#box.contains_box(&g.materialize(&c.covered)));
    }

    #[test]
    fn non_cubical_root_rejected() {
        let root = Box::new(
            vec![Interval::new(0.0, 1.0), Interval::new(0.0, 2.0)],
            Interval::new(0.0, 1.0),
        )
        .unwrap();
        assert!(matches!(build_grid(root, exp(2.0), 2), Err(Error::Parameter { .. })));
    }
}
