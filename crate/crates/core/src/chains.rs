//! Chains of overlapping space-time blocks between two time-separated boxes.
//!
//! A direct chain joins `start = Q₀ × [t₀, t₀ + θs^p)` to
//! `target = start + (v, τs^p)` through blocks `P_0 = start, P_1, …, P_N =
//! target` placed one period `T = τs^p / N` apart, `N = ⌊τ / (1 + θ)⌋`.
//! The first `k` links move the cube by `v / k`, the remaining `l = N − k`
//! links are vertical. Between `P_j` and `P_{j+1}` sits the overlap
//! `S_j = P_j⁺ ∩ P_{j+1}⁻`, where the companions are the blocks shifted by
//! `±T/2` in time.
//!
//! When the direct construction is infeasible (too little time for the
//! spatial displacement, or `τ < 1 + θ`), start and target are tiled by
//! `ε`-boxes and every tile is joined to a pair of hub boxes midway by a
//! direct sub-chain.

use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::field::SampledField;
use crate::geometry::{check_gamma, Box, Exponent, Interval};
use crate::numeric::m;
use crate::seminorms::double_oscillation;

/// Constant in the direct feasibility test `τ ≥ c₀ |v| / s`.
pub const FEASIBILITY_C0: f64 = 4.0;
pub const DELTA_MIN: f64 = 0.25;
/// Largest refinement exponent tried before giving up.
pub const MAX_REFINEMENT: u32 = 16;
/// Upper bound on the number of blocks a refined construction may hold.
pub const MAX_REFINED_BLOCKS: usize = 1 << 21;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainSpec {
    /// `R⁻(θ)`-shaped start box: a cube of side `ℓ` times `θℓ^p` in time.
    pub start: Box,
    pub v: Vec<f64>,
    pub tau: f64,
    pub theta: f64,
    pub p: Exponent,
}

impl ChainSpec {
    /// Start box `Q(x, ℓ) × [t, t + θℓ^p)`.
    pub fn from_corner(center_x: &[f64], t: f64, ell: f64, v: Vec<f64>, tau: f64, theta: f64, p: Exponent) -> Result<Self> {
        let space = center_x
            .iter()
            .map(|&c| Interval::new(c - 0.5 * ell, c + 0.5 * ell))
            .collect();
        let start = Box::new(space, Interval::new(t, t + theta * p.time_scale(ell)))?;
        Ok(ChainSpec {
            start,
            v,
            tau,
            theta,
            p,
        })
    }

    pub fn ell(&self) -> f64 {
        self.start.space[0].len()
    }

    pub fn target(&self) -> Box {
        self.start
            .translate_space(&self.v)
            .translate_time(self.tau * self.p.time_scale(self.ell()))
    }

    fn validate(&self) -> Result<()> {
        check_gamma(self.theta).map_err(|_| param("theta", "must lie in (0, 1)"))?;
        if self.v.len() != self.start.dim() || self.v.iter().any(|c| !c.is_finite()) {
            return Err(param("v", "one finite component per spatial axis is required"));
        }
        let ell = self.ell();
        if self.start.space.iter().any(|iv| (iv.len() - ell).abs() > 1e-12 * ell) {
            return Err(param("start", "spatial section must be a cube"));
        }
        let expected = self.theta * self.p.time_scale(ell);
        if (self.start.time.len() - expected).abs() > 1e-9 * expected {
            return Err(param("start", "temporal side must be theta * ell^p"));
        }
        if !(self.tau.is_finite() && self.tau > 1.0 - self.theta) {
            return Err(param("tau", "must exceed 1 - theta"));
        }
        if !(self.tau > self.theta) {
            return Err(Error::Order(alloc::format!(
                "target starts at tau = {} before the start box ends (theta = {})",
                self.tau,
                self.theta
            )));
        }
        Ok(())
    }
}

/// One telescoping step `P → S → P'`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainLink {
    pub from: Box,
    pub overlap: Box,
    pub to: Box,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectChain {
    pub side: f64,
    pub theta: f64,
    /// `P_0, …, P_N`.
    pub blocks: Vec<Box>,
    /// `P_j⁺`, `j < N`.
    pub companions_plus: Vec<Box>,
    /// `P_j⁻`, `j ≥ 1`.
    pub companions_minus: Vec<Box>,
    /// `S_j`, `j < N`.
    pub overlaps: Vec<Box>,
    pub delta: f64,
    pub k: usize,
    pub l: usize,
    pub period: f64,
}

impl DirectChain {
    pub fn links(&self) -> Vec<ChainLink> {
        (0..self.overlaps.len())
            .map(|j| ChainLink {
                from: self.blocks[j].clone(),
                overlap: self.overlaps[j].clone(),
                to: self.blocks[j + 1].clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefinedChain {
    /// `ε = 2^{−m}`.
    pub epsilon: f64,
    pub m: u32,
    /// Shape of the tiles: `θ_ε = θ · 2^{mp − ⌈mp⌉}`.
    pub theta_eps: f64,
    pub start_tiles: Vec<Box>,
    pub target_tiles: Vec<Box>,
    pub hub_lower: Box,
    pub hub_upper: Box,
    /// Sub-chain from each start tile to `hub_lower`.
    pub to_hub: Vec<DirectChain>,
    /// Sub-chain from `hub_upper` to each target tile.
    pub from_hub: Vec<DirectChain>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ChainKind {
    Direct(DirectChain),
    Refined(RefinedChain),
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Chain {
    pub spec: ChainSpec,
    pub kind: ChainKind,
}

impl Chain {
    pub fn epsilon(&self) -> f64 {
        match &self.kind {
            ChainKind::Direct(_) => 1.0,
            ChainKind::Refined(r) => r.epsilon,
        }
    }

    /// Every direct (sub-)chain in the construction.
    pub fn direct_parts(&self) -> Vec<&DirectChain> {
        match &self.kind {
            ChainKind::Direct(d) => alloc::vec![d],
            ChainKind::Refined(r) => r.to_hub.iter().chain(&r.from_hub).collect(),
        }
    }
}

fn cube_overlap_fraction(v: &[f64], k: usize, side: f64) -> f64 {
    v.iter()
        .map(|&c| (1.0 - c.abs() / (k as f64 * side)).max(0.0))
        .product()
}

fn norm(v: &[f64]) -> f64 {
    m::sqrt(v.iter().map(|c| c * c).sum())
}

/// Number of periods `⌊τ / (1 + θ)⌋`, robust to `τ` being a rounded multiple.
fn period_count(tau: f64, theta: f64) -> usize {
    let q = tau / (1.0 + theta);
    m::floor(q * (1.0 + 1e-12)) as usize
}

/// Smallest `k` with overlap fraction at least [`DELTA_MIN`]; `0` for `v = 0`.
fn spatial_steps(v: &[f64], side: f64) -> (usize, f64) {
    if v.iter().all(|&c| c == 0.0) {
        return (0, 1.0);
    }
    let mut k = 1;
    loop {
        let d = cube_overlap_fraction(v, k, side);
        if d >= DELTA_MIN {
            return (k, d);
        }
        k += 1;
    }
}

/// Whether a direct chain from a `(side, θ)` block over `(v, τ)` exists.
pub fn direct_feasible(v: &[f64], tau: f64, theta: f64, side: f64) -> bool {
    let n = period_count(tau, theta);
    let (k, _) = spatial_steps(v, side);
    n >= 1 && n >= k && tau * side >= FEASIBILITY_C0 * norm(v) * (1.0 - 1e-12)
}

fn build_direct(start: &Box, target: &Box, theta: f64, p: Exponent) -> Result<DirectChain> {
    let side = start.space[0].len();
    let sp = p.time_scale(side);
    let v: Vec<f64> = start
        .space
        .iter()
        .zip(&target.space)
        .map(|(a, b)| b.lo - a.lo)
        .collect();
    let tau = (target.time.lo - start.time.lo) / sp;
    if !direct_feasible(&v, tau, theta, side) {
        return Err(Error::Internal("direct chain requested for infeasible geometry".into()));
    }
    let n = period_count(tau, theta);
    let (k, delta) = spatial_steps(&v, side);
    let period = (target.time.lo - start.time.lo) / n as f64;
    let half = 0.5 * period;

    let mut blocks = Vec::with_capacity(n + 1);
    blocks.push(start.clone());
    for j in 1..n {
        let frac = if k == 0 { 0.0 } else { j.min(k) as f64 / k as f64 };
        let shift: Vec<f64> = v.iter().map(|c| c * frac).collect();
        let t = start.time.lo + j as f64 * period;
        let mut b = start.translate_space(&shift);
        b.time = Interval::new(t, t + start.time.len());
        blocks.push(b);
    }
    blocks.push(target.clone());

    let mut companions_plus = Vec::with_capacity(n);
    let mut companions_minus = Vec::with_capacity(n);
    let mut overlaps = Vec::with_capacity(n);
    for j in 0..n {
        let plus = blocks[j].translate_time(half);
        let minus = blocks[j + 1].translate_time(-half);
        let space = plus
            .space
            .iter()
            .zip(&minus.space)
            .map(|(a, b)| Interval::new(a.lo.max(b.lo), a.hi.min(b.hi)))
            .collect();
        // both companions share the same slot; use the forward one's bounds
        overlaps.push(Box {
            space,
            time: plus.time,
        });
        companions_plus.push(plus);
        companions_minus.push(minus);
    }
    Ok(DirectChain {
        side,
        theta,
        blocks,
        companions_plus,
        companions_minus,
        overlaps,
        delta,
        k,
        l: n - k,
        period,
    })
}

/// Splits `[lo, hi)` into `parts` equal half-open pieces whose outer
/// endpoints are exactly `lo` and `hi`.
fn split_interval(iv: &Interval, parts: usize) -> Vec<Interval> {
    let w = iv.len() / parts as f64;
    let edge = |k: usize| if k == parts { iv.hi } else { iv.lo + k as f64 * w };
    (0..parts).map(|k| Interval::new(edge(k), edge(k + 1))).collect()
}

fn tiles(b: &Box, spatial_parts: usize, temporal_parts: usize) -> Vec<Box> {
    let axes: Vec<Vec<Interval>> = b.space.iter().map(|iv| split_interval(iv, spatial_parts)).collect();
    let times = split_interval(&b.time, temporal_parts);
    let n = b.dim();
    let per_time = spatial_parts.pow(n as u32);
    let mut out = Vec::with_capacity(per_time * temporal_parts);
    for t in &times {
        for s in 0..per_time {
            let mut rem = s;
            let space = (0..n)
                .map(|a| {
                    let i = rem % spatial_parts;
                    rem /= spatial_parts;
                    axes[a][i]
                })
                .collect();
            out.push(Box { space, time: *t });
        }
    }
    out
}

fn try_refined(spec: &ChainSpec, mexp: u32) -> Result<Option<RefinedChain>> {
    let p = spec.p.get();
    let ell = spec.ell();
    let target = spec.target();
    let spatial_parts = 1usize << mexp;
    let tc = m::ceil(mexp as f64 * p - 1e-12);
    let temporal_parts = m::powf(2.0, tc) as usize;
    let theta_eps = spec.theta * m::powf(2.0, mexp as f64 * p - tc);
    let s = ell / spatial_parts as f64;
    let sp = spec.p.time_scale(s);
    let tile_t = spec.start.time.len() / temporal_parts as f64;

    let a_end = spec.start.time.hi;
    let b_start = target.time.lo;
    let tm = 0.5 * (a_end + b_start);
    let gap = 0.5 * sp;
    let center: Vec<f64> = spec
        .start
        .spatial_center()
        .iter()
        .zip(&spec.v)
        .map(|(c, v)| c + 0.5 * v)
        .collect();
    let hub_space: Vec<Interval> = center
        .iter()
        .map(|&c| Interval::new(c - 0.5 * s, c + 0.5 * s))
        .collect();
    let hub_lower = Box {
        space: hub_space.clone(),
        time: Interval::new(tm - gap - tile_t, tm - gap),
    };
    let hub_upper = Box {
        space: hub_space,
        time: Interval::new(tm + gap, tm + gap + tile_t),
    };

    let tile_count = spatial_parts.checked_pow(spec.start.dim() as u32).and_then(|c| c.checked_mul(temporal_parts));
    if tile_count.is_none_or(|c| c > MAX_REFINED_BLOCKS / 2) {
        return Err(Error::Domain(alloc::format!("refinement 2^-{mexp} needs too many tiles")));
    }
    let start_tiles = tiles(&spec.start, spatial_parts, temporal_parts);
    let target_tiles = tiles(&target, spatial_parts, temporal_parts);
    let feasible = |a: &Box, b: &Box| {
        let v: Vec<f64> = a.space.iter().zip(&b.space).map(|(x, y)| y.lo - x.lo).collect();
        let tau = (b.time.lo - a.time.lo) / sp;
        tau > theta_eps && direct_feasible(&v, tau, theta_eps, s)
    };
    if !start_tiles.iter().all(|a| feasible(a, &hub_lower)) || !target_tiles.iter().all(|b| feasible(&hub_upper, b)) {
        return Ok(None);
    }
    let blocks: usize = start_tiles
        .iter()
        .map(|a| period_count((hub_lower.time.lo - a.time.lo) / sp, theta_eps) + 1)
        .chain(target_tiles.iter().map(|b| period_count((b.time.lo - hub_upper.time.lo) / sp, theta_eps) + 1))
        .sum();
    if blocks > MAX_REFINED_BLOCKS {
        return Err(Error::Domain(alloc::format!(
            "refinement 2^-{mexp} needs {blocks} blocks (limit {MAX_REFINED_BLOCKS})"
        )));
    }
    let to_hub = start_tiles
        .iter()
        .map(|a| build_direct(a, &hub_lower, theta_eps, spec.p))
        .collect::<Result<Vec<_>>>()?;
    let from_hub = target_tiles
        .iter()
        .map(|b| build_direct(&hub_upper, b, theta_eps, spec.p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(RefinedChain {
        epsilon: 1.0 / spatial_parts as f64,
        m: mexp,
        theta_eps,
        start_tiles,
        target_tiles,
        hub_lower,
        hub_upper,
        to_hub,
        from_hub,
    }))
}

/// First refinement exponent tried: the largest `ε = 2^{−m}` with
/// `ε ≤ (τ ℓ / (c₀ |v|))^{1/(p−1)}`, and at least `m = 1`.
pub fn initial_refinement(spec: &ChainSpec) -> u32 {
    let vn = norm(&spec.v);
    if vn == 0.0 {
        return 1;
    }
    let bound = m::powf(spec.tau * spec.ell() / (FEASIBILITY_C0 * vn), 1.0 / (spec.p.get() - 1.0));
    if bound >= 0.5 {
        return 1;
    }
    (m::ceil(-m::log2(bound)) as u32).max(1)
}

pub fn build_chain(spec: &ChainSpec) -> Result<Chain> {
    spec.validate()?;
    let ell = spec.ell();
    if direct_feasible(&spec.v, spec.tau, spec.theta, ell) {
        let d = build_direct(&spec.start, &spec.target(), spec.theta, spec.p)?;
        return Ok(Chain {
            spec: spec.clone(),
            kind: ChainKind::Direct(d),
        });
    }
    for mexp in initial_refinement(spec)..=MAX_REFINEMENT {
        if let Some(r) = try_refined(spec, mexp)? {
            return Ok(Chain {
                spec: spec.clone(),
                kind: ChainKind::Refined(r),
            });
        }
    }
    Err(Error::Domain(alloc::format!(
        "no refinement up to 2^-{MAX_REFINEMENT} yields feasible sub-chains"
    )))
}

/// Structural checks shared by every direct (sub-)chain.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainCheck {
    pub overlap_fraction_ok: bool,
    pub overlaps_are_companion_intersections: bool,
    pub time_ordered: bool,
    pub period_ok: bool,
    pub delta_in_range: bool,
    pub step_count_ok: bool,
    pub endpoints_ok: bool,
    pub tiles_partition: bool,
}

impl ChainCheck {
    pub fn all(&self) -> bool {
        self.overlap_fraction_ok
            && self.overlaps_are_companion_intersections
            && self.time_ordered
            && self.period_ok
            && self.delta_in_range
            && self.step_count_ok
            && self.endpoints_ok
            && self.tiles_partition
    }
}

fn check_direct(d: &DirectChain, out: &mut ChainCheck) {
    let n = d.blocks.len() - 1;
    let vol = d.blocks[0].measure();
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
    let sp = d.blocks[0].time.len() / d.theta;
    for j in 0..n {
        let (a, b) = (&d.blocks[j], &d.blocks[j + 1]);
        let s = &d.overlaps[j];
        let moving = j < d.k;
        let frac = s.measure() / vol;
        if moving && !rel(frac, d.delta) {
            out.overlap_fraction_ok = false;
        }
        if !moving && !rel(frac, 1.0) {
            out.overlap_fraction_ok = false;
        }
        match d.companions_plus[j].intersect(&d.companions_minus[j]) {
            Some(i) if rel(i.measure(), s.measure()) && (i.contains_box(s) || s.contains_box(&i)) => {}
            _ => out.overlaps_are_companion_intersections = false,
        }
        if !(a.time.hi < s.time.lo && s.time.hi < b.time.lo) {
            out.time_ordered = false;
        }
        if !(rel(b.time.lo - a.time.lo, d.period) && d.period >= (1.0 + d.theta) * sp * (1.0 - 1e-12)) {
            out.period_ok = false;
        }
    }
    if !(d.delta >= DELTA_MIN && d.delta <= 1.0) {
        out.delta_in_range = false;
    }
    let v: f64 = m::sqrt(
        d.blocks[0]
            .space
            .iter()
            .zip(&d.blocks[n].space)
            .map(|(a, b)| (b.lo - a.lo) * (b.lo - a.lo))
            .sum(),
    );
    if !(d.k as f64 <= 4.0 * v / d.side + 1.0) || d.k + d.l != n {
        out.step_count_ok = false;
    }
}

fn partitions(whole: &Box, parts: &[Box]) -> bool {
    let total: f64 = parts.iter().map(Box::measure).sum();
    let disjoint = parts
        .iter()
        .enumerate()
        .all(|(i, a)| parts[i + 1..].iter().all(|b| a.is_disjoint(b)));
    disjoint && parts.iter().all(|b| whole.contains_box(b)) && (total - whole.measure()).abs() <= 1e-9 * whole.measure()
}

/// Verifies the structural invariants of a chain, recursively for the
/// sub-chains of a refined construction.
pub fn check_chain(chain: &Chain) -> ChainCheck {
    let mut out = ChainCheck {
        overlap_fraction_ok: true,
        overlaps_are_companion_intersections: true,
        time_ordered: true,
        period_ok: true,
        delta_in_range: true,
        step_count_ok: true,
        endpoints_ok: true,
        tiles_partition: true,
    };
    match &chain.kind {
        ChainKind::Direct(d) => {
            check_direct(d, &mut out);
            out.endpoints_ok =
                d.blocks.first() == Some(&chain.spec.start) && d.blocks.last() == Some(&chain.spec.target());
        }
        ChainKind::Refined(r) => {
            for d in r.to_hub.iter().chain(&r.from_hub) {
                check_direct(d, &mut out);
            }
            out.endpoints_ok = r
                .to_hub
                .iter()
                .zip(&r.start_tiles)
                .all(|(d, a)| d.blocks.first() == Some(a) && d.blocks.last() == Some(&r.hub_lower))
                && r.from_hub
                    .iter()
                    .zip(&r.target_tiles)
                    .all(|(d, b)| d.blocks.first() == Some(&r.hub_upper) && d.blocks.last() == Some(b))
                && r.hub_lower.time.hi < r.hub_upper.time.lo;
            out.tiles_partition =
                partitions(&chain.spec.start, &r.start_tiles) && partitions(&chain.spec.target(), &r.target_tiles);
        }
    }
    out
}

fn direct_bound(f: &SampledField, d: &DirectChain) -> Result<f64> {
    let mut total = 0.0;
    for link in d.links() {
        total += double_oscillation(f, &link.from, &link.overlap)?;
        total += double_oscillation(f, &link.overlap, &link.to)?;
    }
    Ok(total)
}

fn sample_count(f: &SampledField, b: &Box) -> usize {
    let ib = f.grid().index_box_unchecked(b);
    f.defined_count(&ib) as usize
}

/// Telescoped upper bound for `double_oscillation(f, start, target)`.
///
/// Refined chains weight each tile by its share of the samples of the
/// start (or target) box; tiles without samples carry no weight.
pub fn chain_oscillation(f: &SampledField, chain: &Chain) -> Result<f64> {
    let cyl = &f.grid().cylinder;
    if !cyl.contains(&chain.spec.start) || !cyl.contains(&chain.spec.target()) {
        return Err(Error::Domain("chain endpoints leave the cylinder".into()));
    }
    match &chain.kind {
        ChainKind::Direct(d) => direct_bound(f, d),
        ChainKind::Refined(r) => {
            let weighted = |tiles: &[Box], subs: &[DirectChain]| -> Result<f64> {
                let counts: Vec<usize> = tiles.iter().map(|t| sample_count(f, t)).collect();
                let total: usize = counts.iter().sum();
                if total == 0 {
                    return Err(Error::InsufficientResolution {
                        found: 0,
                        required: crate::MIN_SAMPLES_PER_AXIS,
                    });
                }
                let mut acc = 0.0;
                for ((c, sub), _) in counts.iter().zip(subs).zip(tiles) {
                    if *c > 0 {
                        acc += *c as f64 / total as f64 * direct_bound(f, sub)?;
                    }
                }
                Ok(acc)
            };
            let a = weighted(&r.start_tiles, &r.to_hub)?;
            let hub = double_oscillation(f, &r.hub_lower, &r.hub_upper)?;
            let b = weighted(&r.target_tiles, &r.from_hub)?;
            Ok(a + hub + b)
        }
    }
}
