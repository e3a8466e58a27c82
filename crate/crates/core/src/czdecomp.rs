//! Forward-in-time Calderón–Zygmund decomposition on the dyadic grid.
//!
//! A dyadic box `Q` is tested through the forward companion of its cover
//! box `Q̃`: `Q̃` translated by `forward_factor · τ̃` in time, `τ̃` the
//! temporal side of `Q̃`. Descending depth-first from the root, the first
//! box whose forward mean exceeds `λ` is stopped. On a stopped box
//! `b = u − m` and `g = m`, with `m` the forward mean of its parent;
//! elsewhere `b = 0` and `g = u`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dyadic::{DyadicBoxId, DyadicGrid};
use crate::error::{param, Error, Result};
use crate::field::{AveragePart, IndexBox, SampledField};
use crate::geometry::Box;
use crate::numeric::DoubleDouble;

pub const DEFAULT_FORWARD_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CzConfig {
    pub lambda: f64,
    pub forward_factor: f64,
}

impl CzConfig {
    pub fn new(lambda: f64) -> Self {
        CzConfig {
            lambda,
            forward_factor: DEFAULT_FORWARD_FACTOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StoppedBox {
    pub id: DyadicBoxId,
    pub r#box: Box,
    pub forward_mean: f64,
    pub parent_forward_mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub forward_factor: f64,
    pub root_forward_mean: f64,
    pub stopped: Vec<StoppedBox>,
    /// Boxes whose forward companion leaves the cylinder or is unresolved;
    /// their subtrees were not explored.
    pub unresolved: Vec<DyadicBoxId>,
    /// `Σ b_i`; zero off the stopped boxes.
    pub b: SampledField,
    pub g: SampledField,
    pub region: Box,
}

/// Forward companion of the cover box of `id`.
pub fn forward_box(grid: &DyadicGrid, id: &DyadicBoxId, forward_factor: f64) -> Box {
    let cover = grid.cover_box(id).r#box;
    let tau = cover.time.len();
    cover.translate_time(forward_factor * tau)
}

fn forward_mean(f: &SampledField, grid: &DyadicGrid, id: &DyadicBoxId, factor: f64) -> Option<f64> {
    let fb = forward_box(grid, id, factor);
    if !f.grid().cylinder.contains(&fb) {
        return None;
    }
    let ib = f.grid().index_box(&fb)?;
    if !f.fully_defined(&ib) {
        return None;
    }
    Some(f.box_sum(&ib, AveragePart::Full).div_f64(ib.count() as f64))
}

pub fn decompose(f: &SampledField, grid: &DyadicGrid, cfg: &CzConfig) -> Result<CzDecomposition> {
    if grid.dim() != f.grid().dim() {
        return Err(param("grid", "dimension does not match the field"));
    }
    if !cfg.lambda.is_finite() {
        return Err(param("lambda", "must be finite"));
    }
    if !(cfg.forward_factor.is_finite() && cfg.forward_factor >= 1.0) {
        return Err(param("forward_factor", "must be at least 1"));
    }
    let root = grid.root_id();
    let root_forward_mean = forward_mean(f, grid, &root, cfg.forward_factor).ok_or_else(|| {
        Error::Precondition("forward companion of the root is not resolved inside the cylinder".into())
    })?;
    if !(cfg.lambda > root_forward_mean) {
        return Err(Error::Precondition(alloc::format!(
            "lambda = {} must exceed the root forward mean {}",
            cfg.lambda,
            root_forward_mean
        )));
    }

    let mut stopped = Vec::new();
    let mut unresolved = Vec::new();
    // depth-first, children visited in grid order
    let mut stack = vec![(root, root_forward_mean)];
    while let Some((id, mean)) = stack.pop() {
        let children = grid.children(&id)?;
        let mut descend = Vec::new();
        for child in children {
            match forward_mean(f, grid, &child, cfg.forward_factor) {
                None => unresolved.push(child),
                Some(v) if v > cfg.lambda => stopped.push(StoppedBox {
                    r#box: grid.materialize(&child),
                    id: child,
                    forward_mean: v,
                    parent_forward_mean: mean,
                }),
                Some(v) => descend.push((child, v)),
            }
        }
        stack.extend(descend.into_iter().rev());
    }

    let lattice = f.grid();
    let shape = lattice.shape();
    let mut b = vec![0.0; lattice.len()];
    let mut g = f.values().to_vec();
    for s in &stopped {
        let ib = lattice.index_box_unchecked(&s.r#box);
        ib.for_each_flat(&shape, |flat| {
            if f.defined()[flat] {
                b[flat] = f.values()[flat] - s.parent_forward_mean;
                g[flat] = s.parent_forward_mean;
            }
        });
    }
    let b = SampledField::with_mask(lattice.clone(), b, f.defined().to_vec())?;
    let g = SampledField::with_mask(lattice.clone(), g, f.defined().to_vec())?;
    Ok(CzDecomposition {
        lambda: cfg.lambda,
        forward_factor: cfg.forward_factor,
        root_forward_mean,
        stopped,
        unresolved,
        b,
        g,
        region: grid.root.clone(),
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CzReport {
    pub lambda: f64,
    pub stopped_count: usize,
    pub unresolved_count: usize,
    /// Max of `g` over lattice points of stopped boxes.
    pub on_box_g_max: Option<f64>,
    /// Max of `g = u` over region points outside the stopped boxes.
    pub off_box_u_max: Option<f64>,
    pub reconstruction_error: f64,
    pub disjoint: bool,
    pub maximal: bool,
}

impl CzReport {
    /// Contract fields: on-box `g ≤ λ`, disjointness and maximality.
    /// Reconstruction is judged against a tolerance by the caller.
    pub fn contracts_hold(&self) -> bool {
        self.disjoint && self.maximal && self.on_box_g_max.is_none_or(|g| g <= self.lambda)
    }
}

fn direct_mean(f: &SampledField, b: &Box) -> Option<f64> {
    let ib: IndexBox = f.grid().index_box(b)?;
    let shape = f.grid().shape();
    let mut s = DoubleDouble::ZERO;
    let mut n = 0usize;
    let mut complete = true;
    ib.for_each_flat(&shape, |flat| match f.value(flat) {
        Some(v) => {
            s = s.add_f64(v);
            n += 1;
        }
        None => complete = false,
    });
    (complete && n > 0).then(|| s.div_f64(n as f64))
}

/// Re-checks a decomposition with direct summation, independently of the
/// prefix tables used to build it.
pub fn verify(dec: &CzDecomposition, f: &SampledField, grid: &DyadicGrid) -> CzReport {
    let lattice = f.grid();
    let shape = lattice.shape();

    let mut disjoint = true;
    for (i, a) in dec.stopped.iter().enumerate() {
        for b in &dec.stopped[i + 1..] {
            if grid.is_descendant_or_self(&a.id, &b.id) || grid.is_descendant_or_self(&b.id, &a.id) {
                disjoint = false;
            }
        }
    }
    let mut owner = vec![usize::MAX; lattice.len()];
    for (i, s) in dec.stopped.iter().enumerate() {
        lattice.index_box_unchecked(&s.r#box).for_each_flat(&shape, |flat| {
            if owner[flat] != usize::MAX {
                disjoint = false;
            }
            owner[flat] = i;
        });
    }

    let forward = |id: &DyadicBoxId| -> Option<f64> {
        let fb = forward_box(grid, id, dec.forward_factor);
        if !lattice.cylinder.contains(&fb) {
            return None;
        }
        direct_mean(f, &fb)
    };
    let mut maximal = true;
    for s in &dec.stopped {
        match forward(&s.id) {
            Some(v) if v > dec.lambda => {}
            _ => maximal = false,
        }
        let mut cur = s.id.clone();
        let mut first = true;
        while cur.generation > 0 {
            cur = grid.parent(&cur).expect("non-root box has a parent");
            match forward(&cur) {
                Some(v) if v <= dec.lambda => {
                    if first && v != s.parent_forward_mean {
                        maximal = false;
                    }
                }
                _ => maximal = false,
            }
            first = false;
        }
    }

    let region = lattice.index_box_unchecked(&dec.region);
    let mut in_region = vec![false; lattice.len()];
    region.for_each_flat(&shape, |flat| in_region[flat] = true);

    let mut on_box_g_max: Option<f64> = None;
    let mut off_box_u_max: Option<f64> = None;
    let mut reconstruction_error: f64 = 0.0;
    for flat in 0..lattice.len() {
        let (Some(u), Some(b), Some(g)) = (f.value(flat), dec.b.value(flat), dec.g.value(flat)) else {
            continue;
        };
        reconstruction_error = reconstruction_error.max((b + g - u).abs());
        if owner[flat] != usize::MAX {
            on_box_g_max = Some(on_box_g_max.map_or(g, |m| m.max(g)));
        } else if in_region[flat] {
            off_box_u_max = Some(off_box_u_max.map_or(u, |m| m.max(u)));
        }
    }

    CzReport {
        lambda: dec.lambda,
        stopped_count: dec.stopped.len(),
        unresolved_count: dec.unresolved.len(),
        on_box_g_max,
        off_box_u_max,
        reconstruction_error,
        disjoint,
        maximal,
    }
}

/// Whether every box stopped in `higher` (the larger threshold) lies in a
/// box stopped in `lower`.
pub fn stopped_region_nested(grid: &DyadicGrid, lower: &CzDecomposition, higher: &CzDecomposition) -> bool {
    higher.stopped.iter().all(|s| {
        lower
            .stopped
            .iter()
            .any(|t| grid.is_descendant_or_self(&s.id, &t.id))
    })
}
