//! Sampled space-time fields on uniform cell-centered lattices.
//!
//! A [`SampledField`] stores one value per cell center of a uniform
//! partition of a [`Cylinder`], together with prefix-sum tables of the
//! values, their positive parts, their negative parts and the count of
//! defined samples. Box averages are unweighted means over the cell centers
//! contained in the (half-open) box; the prefix tables are kept in
//! double-double precision so a box sum costs `2^(n+1)` table reads and is
//! rounded once.
//!
//! Lattice axes are ordered `x_0, …, x_{n-1}, t` with `x_0` varying fastest
//! in the flat value array.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::geometry::{Box, Cylinder, Interval};
use crate::numeric::{m, negative_part, positive_part, DoubleDouble};
use crate::MIN_SAMPLES_PER_AXIS;

/// Relative tolerance (in lattice spacings) for deciding whether a box
/// boundary coincides with a cell center.
const SNAP: f64 = 1e-9;

/// Uniform cell-centered lattice over a cylinder.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub cylinder: Cylinder,
    pub nx: Vec<usize>,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(cylinder: Cylinder, nx: Vec<usize>, nt: usize) -> Result<Self> {
        if nx.len() != cylinder.dim() {
            return Err(param("nx", "one resolution per spatial axis is required"));
        }
        if nt < 2 || nx.iter().any(|&k| k < 2) {
            return Err(param("nx/nt", "every axis needs at least 2 lattice points"));
        }
        Ok(GridSpec { cylinder, nx, nt })
    }

    /// Convenience constructor for `n = 1`.
    pub fn new_1d(x: (f64, f64), t: (f64, f64), nx: usize, nt: usize) -> Result<Self> {
        let cyl = Cylinder::new(vec![Interval::new(x.0, x.1)], Interval::new(t.0, t.1))?;
        GridSpec::new(cyl, vec![nx], nt)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.nx.len()
    }

    /// Lattice shape in axis order `x_0, …, x_{n-1}, t`.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = self.nx.clone();
        s.push(self.nt);
        s
    }

    pub fn len(&self) -> usize {
        self.nx.iter().product::<usize>() * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spatial_len(&self) -> usize {
        self.nx.iter().product()
    }

    #[inline]
    pub fn h_x(&self, axis: usize) -> f64 {
        self.cylinder.space[axis].len() / self.nx[axis] as f64
    }

    #[inline]
    pub fn h_t(&self) -> f64 {
        self.cylinder.time.len() / self.nt as f64
    }

    pub fn max_h_x(&self) -> f64 {
        (0..self.dim()).map(|a| self.h_x(a)).fold(0.0, f64::max)
    }

    #[inline]
    pub fn x_coord(&self, axis: usize, k: usize) -> f64 {
        self.cylinder.space[axis].lo + (k as f64 + 0.5) * self.h_x(axis)
    }

    #[inline]
    pub fn t_coord(&self, k: usize) -> f64 {
        self.cylinder.time.lo + (k as f64 + 0.5) * self.h_t()
    }

    /// Per-axis lattice index of a flat index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.dim() + 1);
        for &n in &self.nx {
            idx.push(flat % n);
            flat /= n;
        }
        idx.push(flat);
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut flat = idx[self.dim()];
        for a in (0..self.dim()).rev() {
            flat = flat * self.nx[a] + idx[a];
        }
        flat
    }

    /// Coordinates `(x, t)` of the cell center with the given flat index.
    pub fn point(&self, flat: usize) -> (Vec<f64>, f64) {
        let idx = self.unflatten(flat);
        let x = (0..self.dim()).map(|a| self.x_coord(a, idx[a])).collect();
        (x, self.t_coord(idx[self.dim()]))
    }

    fn axis_range(lo0: f64, h: f64, n: usize, iv: &Interval) -> (usize, usize) {
        // cell k is inside iff lo <= lo0 + (k + 1/2) h < hi
        let first = m::ceil((iv.lo - lo0) / h - 0.5 - SNAP);
        let end = m::ceil((iv.hi - lo0) / h - 0.5 - SNAP);
        let clamp = |v: f64| -> usize {
            if v <= 0.0 {
                0
            } else if v >= n as f64 {
                n
            } else {
                v as usize
            }
        };
        let (a, b) = (clamp(first), clamp(end));
        (a, b.max(a))
    }

    /// Lattice index box of the cell centers inside `b`, or `None` when the
    /// box has fewer than [`MIN_SAMPLES_PER_AXIS`] lattice planes on some
    /// axis.
    pub fn index_box(&self, b: &Box) -> Option<IndexBox> {
        let ib = self.index_box_unchecked(b);
        (ib.min_extent() >= MIN_SAMPLES_PER_AXIS).then_some(ib)
    }

    pub fn index_box_unchecked(&self, b: &Box) -> IndexBox {
        let mut ranges = Vec::with_capacity(self.dim() + 1);
        for a in 0..self.dim() {
            ranges.push(GridSpec::axis_range(
                self.cylinder.space[a].lo,
                self.h_x(a),
                self.nx[a],
                &b.space[a],
            ));
        }
        ranges.push(GridSpec::axis_range(
            self.cylinder.time.lo,
            self.h_t(),
            self.nt,
            &b.time,
        ));
        IndexBox { ranges }
    }

    /// Direct membership test of one cell center in `b`, with the same
    /// boundary snapping as [`GridSpec::index_box`].
    pub fn sample_in_box(&self, flat: usize, b: &Box) -> bool {
        let idx = self.unflatten(flat);
        let inside = |c: f64, iv: &Interval, h: f64| c >= iv.lo - SNAP * h && c < iv.hi - SNAP * h;
        (0..self.dim()).all(|a| inside(self.x_coord(a, idx[a]), &b.space[a], self.h_x(a)))
            && inside(self.t_coord(idx[self.dim()]), &b.time, self.h_t())
    }
}

/// Half-open lattice index ranges, one per axis (`x_0, …, x_{n-1}, t`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexBox {
    pub ranges: Vec<(usize, usize)>,
}

impl IndexBox {
    pub fn min_extent(&self) -> usize {
        self.ranges.iter().map(|(a, b)| b - a).min().unwrap_or(0)
    }

    pub fn count(&self) -> usize {
        self.ranges.iter().map(|(a, b)| b - a).product()
    }

    /// Visits every flat index in the box, time-major with `x_0` innermost.
    pub fn for_each_flat(&self, shape: &[usize], mut f: impl FnMut(usize)) {
        if self.count() == 0 {
            return;
        }
        let d = shape.len();
        let mut strides = vec![1usize; d];
        for a in 1..d {
            strides[a] = strides[a - 1] * shape[a - 1];
        }
        let mut idx: Vec<usize> = self.ranges.iter().map(|r| r.0).collect();
        let (x0_lo, x0_hi) = self.ranges[0];
        loop {
            let base: usize = (1..d).map(|a| idx[a] * strides[a]).sum();
            for k in x0_lo..x0_hi {
                f(base + k);
            }
            let mut a = 1;
            loop {
                if a == d {
                    return;
                }
                idx[a] += 1;
                if idx[a] < self.ranges[a].1 {
                    break;
                }
                idx[a] = self.ranges[a].0;
                a += 1;
            }
        }
    }
}

/// Inclusive prefix sums over an `(n+1)`-dimensional lattice.
#[derive(Clone, Debug)]
struct PrefixTable {
    /// Shape of the table (`shape[a] + 1` per axis).
    dims: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<DoubleDouble>,
}

impl PrefixTable {
    fn build(shape: &[usize], values: impl Fn(usize) -> f64) -> Self {
        let dims: Vec<usize> = shape.iter().map(|&s| s + 1).collect();
        let mut strides = vec![1usize; dims.len()];
        for a in 1..dims.len() {
            strides[a] = strides[a - 1] * dims[a - 1];
        }
        let total: usize = dims.iter().product();
        let mut data = vec![DoubleDouble::ZERO; total];
        // scatter into the interior (offset by one on every axis)
        let mut idx = vec![0usize; shape.len()];
        let n: usize = shape.iter().product();
        for flat in 0..n {
            let pos: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            data[pos] = DoubleDouble::from_f64(values(flat));
            for a in 0..shape.len() {
                idx[a] += 1;
                if idx[a] < shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        // cumulative sums axis by axis
        for a in 0..dims.len() {
            let stride = strides[a];
            for pos in 0..total {
                let coord = (pos / stride) % dims[a];
                if coord > 0 {
                    let prev = data[pos - stride];
                    data[pos] = data[pos] + prev;
                }
            }
        }
        PrefixTable { dims, strides, data }
    }

    fn box_sum(&self, ib: &IndexBox) -> DoubleDouble {
        let d = self.dims.len();
        let mut acc = DoubleDouble::ZERO;
        for corner in 0..(1usize << d) {
            let mut pos = 0usize;
            let mut lows = 0u32;
            for a in 0..d {
                let (lo, hi) = ib.ranges[a];
                if corner & (1 << a) != 0 {
                    pos += lo * self.strides[a];
                    lows += 1;
                } else {
                    pos += hi * self.strides[a];
                }
            }
            let v = self.data[pos];
            acc = if lows.is_multiple_of(2) { acc + v } else { acc - v };
        }
        acc
    }
}

/// Exact integer prefix counts.
#[derive(Clone, Debug)]
struct CountTable {
    strides: Vec<usize>,
    dims_len: usize,
    data: Vec<u64>,
}

impl CountTable {
    fn build(shape: &[usize], defined: &[bool]) -> Self {
        let dims: Vec<usize> = shape.iter().map(|&s| s + 1).collect();
        let mut strides = vec![1usize; dims.len()];
        for a in 1..dims.len() {
            strides[a] = strides[a - 1] * dims[a - 1];
        }
        let total: usize = dims.iter().product();
        let mut data = vec![0u64; total];
        let mut idx = vec![0usize; shape.len()];
        for &d in defined {
            let pos: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            data[pos] = d as u64;
            for a in 0..shape.len() {
                idx[a] += 1;
                if idx[a] < shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        for a in 0..dims.len() {
            let stride = strides[a];
            for pos in 0..total {
                if !(pos / stride).is_multiple_of(dims[a]) {
                    data[pos] += data[pos - stride];
                }
            }
        }
        CountTable {
            strides,
            dims_len: dims.len(),
            data,
        }
    }

    fn box_count(&self, ib: &IndexBox) -> u64 {
        let d = self.dims_len;
        let mut acc: i64 = 0;
        for corner in 0..(1usize << d) {
            let mut pos = 0usize;
            let mut lows = 0u32;
            for a in 0..d {
                let (lo, hi) = ib.ranges[a];
                if corner & (1 << a) != 0 {
                    pos += lo * self.strides[a];
                    lows += 1;
                } else {
                    pos += hi * self.strides[a];
                }
            }
            let v = self.data[pos] as i64;
            acc += if lows.is_multiple_of(2) { v } else { -v };
        }
        acc as u64
    }
}

/// Which values a box average is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AveragePart {
    /// `f`
    Full,
    /// `f⁺ = f·1{f > 0}`
    Positive,
    /// `f⁻ = −f·1{f < 0}` (nonnegative)
    Negative,
    /// `|f| = f⁺ + f⁻`
    Absolute,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxAverageReport {
    pub mean: f64,
    pub sample_count: usize,
    pub r#box: Box,
}

#[derive(Clone, Debug)]
struct Accumulators {
    full: PrefixTable,
    pos: PrefixTable,
    neg: PrefixTable,
    count: CountTable,
}

/// Values of a function at the cell centers of a [`GridSpec`].
///
/// Points may be marked undefined (for instance where no admissible
/// rectangle exists for a maximal function). Undefined points hold `0.0`,
/// are skipped by every accumulator and are never reported as values.
#[derive(Clone, Debug)]
pub struct SampledField {
    grid: GridSpec,
    values: Vec<f64>,
    defined: Vec<bool>,
    acc: Accumulators,
}

impl PartialEq for SampledField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.defined == other.defined
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl SampledField {
    /// Field with every point defined.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let defined = vec![true; values.len()];
        SampledField::with_mask(grid, values, defined)
    }

    /// Field with an explicit definedness mask.
    pub fn with_mask(grid: GridSpec, mut values: Vec<f64>, defined: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || defined.len() != grid.len() {
            return Err(param("values", "length must match the lattice size"));
        }
        for (flat, (v, &d)) in values.iter_mut().zip(&defined).enumerate() {
            if !d {
                *v = 0.0;
            } else if !v.is_finite() {
                let (coords, t) = grid.point(flat);
                let mut c = coords;
                c.push(t);
                return Err(Error::Sampling {
                    coords: c,
                    value: *v,
                });
            }
        }
        let shape = grid.shape();
        let acc = Accumulators {
            full: PrefixTable::build(&shape, |i| values[i]),
            pos: PrefixTable::build(&shape, |i| positive_part(values[i])),
            neg: PrefixTable::build(&shape, |i| negative_part(values[i])),
            count: CountTable::build(&shape, &defined),
        };
        Ok(SampledField {
            grid,
            values,
            defined,
            acc,
        })
    }

    /// Samples `eval(x, t)` at every cell center.
    pub fn sample<F>(grid: GridSpec, eval: F) -> Result<Self>
    where
        F: Fn(&[f64], f64) -> f64,
    {
        let mut values = Vec::with_capacity(grid.len());
        let mut x = vec![0.0; grid.dim()];
        for flat in 0..grid.len() {
            let idx = grid.unflatten(flat);
            for a in 0..grid.dim() {
                x[a] = grid.x_coord(a, idx[a]);
            }
            let t = grid.t_coord(idx[grid.dim()]);
            let v = eval(&x, t);
            if !v.is_finite() {
                let mut c = x.clone();
                c.push(t);
                return Err(Error::Sampling { coords: c, value: v });
            }
            values.push(v);
        }
        SampledField::from_values(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn defined(&self) -> &[bool] {
        &self.defined
    }

    #[inline]
    pub fn value(&self, flat: usize) -> Option<f64> {
        self.defined[flat].then(|| self.values[flat])
    }

    pub fn undefined_count(&self) -> usize {
        self.defined.iter().filter(|d| !**d).count()
    }

    /// Largest defined value, if any.
    pub fn max_defined(&self) -> Option<f64> {
        self.values
            .iter()
            .zip(&self.defined)
            .filter(|(_, d)| **d)
            .map(|(v, _)| *v)
            .reduce(f64::max)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> SampledField {
        let values = self
            .values
            .iter()
            .zip(&self.defined)
            .map(|(&v, &d)| if d { f(v) } else { 0.0 })
            .collect();
        SampledField::with_mask(self.grid.clone(), values, self.defined.clone())
            .expect("pointwise map of finite values stays finite")
    }

    /// Pointwise `f⁺`.
    pub fn pos_part(&self) -> SampledField {
        self.map(positive_part)
    }

    /// Pointwise `f⁻ ≥ 0`.
    pub fn neg_part(&self) -> SampledField {
        self.map(negative_part)
    }

    /// Pointwise `−f`.
    pub fn negate(&self) -> SampledField {
        self.map(|v| -v)
    }

    /// Pointwise `c·f + d`.
    pub fn affine(&self, c: f64, d: f64) -> Result<SampledField> {
        let values = self
            .values
            .iter()
            .zip(&self.defined)
            .map(|(&v, &def)| if def { c * v + d } else { 0.0 })
            .collect();
        SampledField::with_mask(self.grid.clone(), values, self.defined.clone())
    }

    /// Re-indexes time by `t ↦ −t` about the temporal midpoint of the cylinder.
    pub fn time_reverse(&self) -> SampledField {
        let s = self.grid.spatial_len();
        let nt = self.grid.nt;
        let mut values = vec![0.0; self.values.len()];
        let mut defined = vec![false; self.values.len()];
        for k in 0..nt {
            let src = k * s;
            let dst = (nt - 1 - k) * s;
            values[dst..dst + s].copy_from_slice(&self.values[src..src + s]);
            defined[dst..dst + s].copy_from_slice(&self.defined[src..src + s]);
        }
        SampledField::with_mask(self.grid.clone(), values, defined)
            .expect("reindexing preserves finiteness")
    }

    /// Index box of `b`, checked against the per-axis sample minimum.
    pub fn index_box(&self, b: &Box) -> Result<IndexBox> {
        let ib = self.grid.index_box_unchecked(b);
        let found = ib.min_extent();
        if found < MIN_SAMPLES_PER_AXIS {
            return Err(Error::InsufficientResolution {
                found,
                required: MIN_SAMPLES_PER_AXIS,
            });
        }
        Ok(ib)
    }

    /// Number of defined samples in an index box.
    #[inline]
    pub fn defined_count(&self, ib: &IndexBox) -> u64 {
        self.acc.count.box_count(ib)
    }

    /// Double-double sum of the selected part over an index box.
    #[inline]
    pub fn box_sum(&self, ib: &IndexBox, part: AveragePart) -> DoubleDouble {
        match part {
            AveragePart::Full => self.acc.full.box_sum(ib),
            AveragePart::Positive => self.acc.pos.box_sum(ib),
            AveragePart::Negative => self.acc.neg.box_sum(ib),
            AveragePart::Absolute => self.acc.pos.box_sum(ib) + self.acc.neg.box_sum(ib),
        }
    }

    /// Mean of the selected part over the defined samples of an index box,
    /// or `None` when it holds no defined sample.
    #[inline]
    pub fn mean_in(&self, ib: &IndexBox, part: AveragePart) -> Option<f64> {
        let c = self.defined_count(ib);
        (c > 0).then(|| self.box_sum(ib, part).div_f64(c as f64))
    }

    /// Whether every sample of the index box is defined.
    #[inline]
    pub fn fully_defined(&self, ib: &IndexBox) -> bool {
        self.defined_count(ib) == ib.count() as u64
    }

    /// Arithmetic mean of `f`, `f⁺`, `f⁻` or `|f|` over the cell centers in `b`.
    pub fn box_average(&self, b: &Box, part: AveragePart) -> Result<BoxAverageReport> {
        if b.dim() != self.grid.dim() {
            return Err(param("box", "dimension does not match the grid"));
        }
        let ib = self.index_box(b)?;
        let count = self.defined_count(&ib) as usize;
        if count == 0 {
            return Err(Error::InsufficientResolution {
                found: 0,
                required: MIN_SAMPLES_PER_AXIS,
            });
        }
        let mean = self.box_sum(&ib, part).div_f64(count as f64);
        Ok(BoxAverageReport {
            mean,
            sample_count: count,
            r#box: b.clone(),
        })
    }

    /// Defined sample values inside an index box, appended to `out`.
    pub fn collect_samples(&self, ib: &IndexBox, out: &mut Vec<f64>) {
        let shape = self.grid.shape();
        ib.for_each_flat(&shape, |flat| {
            if self.defined[flat] {
                out.push(self.values[flat]);
            }
        });
    }

    pub fn samples_in(&self, b: &Box) -> Result<Vec<f64>> {
        let ib = self.index_box(b)?;
        let mut out = Vec::with_capacity(ib.count());
        self.collect_samples(&ib, &mut out);
        Ok(out)
    }
}

/// Free-function form of [`SampledField::box_average`].
pub fn box_average(f: &SampledField, b: &Box, part: AveragePart) -> Result<BoxAverageReport> {
    f.box_average(b, part)
}
