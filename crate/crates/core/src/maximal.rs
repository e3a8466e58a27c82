//! Parabolic maximal operators centered at lattice points.
//!
//! For a field `f`, shape `γ` and a geometric ladder of side lengths,
//!
//! * `M_*^{γ−} f(z) = sup_ℓ [ (f⁺)_{R⁻(z,ℓ,γ)} + (f⁻)_{R⁺(z,ℓ,γ)} ]` (backward),
//! * `M_*^{γ+} f(z) = sup_ℓ [ (f⁺)_{R⁺(z,ℓ,γ)} + (f⁻)_{R⁻(z,ℓ,γ)} ]` (forward),
//! * `M^{γ−} f(z) = sup_ℓ |f|_{R⁻(z,ℓ,γ)}`.
//!
//! A side length is admissible at `z` when the whole rectangle lies in the
//! cylinder and both parts hold at least two lattice planes per axis of
//! defined samples. Points without an admissible side length are undefined.
//!
//! Each part average is rounded to `f64` before the two are added, so the
//! pointwise sandwich and duality identities hold bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::field::{AveragePart, GridSpec, IndexBox, SampledField};
use crate::geometry::{check_gamma, Box, Exponent, ParabolicRectangle};
use crate::numeric::{m, CompensatedSum, DoubleDouble};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    /// Positivity in the past, negativity in the future (`M_*^{γ−}`).
    Backward,
    /// Positivity in the future, negativity in the past (`M_*^{γ+}`).
    Forward,
}

/// Geometric ladder `{ℓ_min·r^k} ∩ [ℓ_min, ℓ_max]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ladder {
    pub ell_min: f64,
    pub ell_max: f64,
    pub ratio: f64,
}

impl Ladder {
    pub fn new(ell_min: f64, ell_max: f64, ratio: f64) -> Result<Self> {
        if !(ell_min.is_finite() && ell_min > 0.0) {
            return Err(param("ell_min", "must be a positive length"));
        }
        if !(ell_max.is_finite() && ell_max >= ell_min) {
            return Err(param("ell_max", "must be at least ell_min"));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(param("ladder_ratio", "must exceed 1"));
        }
        Ok(Ladder {
            ell_min,
            ell_max,
            ratio,
        })
    }

    /// Side lengths in increasing order. `ℓ_min·r^k` is formed with a power
    /// (not repeated products) so nested ladders share their common rungs.
    pub fn values(&self) -> Vec<f64> {
        let top = self.ell_max * (1.0 + 1e-12);
        let mut out = Vec::new();
        for k in 0.. {
            let ell = self.ell_min * m::powi(self.ratio, k);
            if ell > top {
                break;
            }
            out.push(ell);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaximalConfig {
    pub gamma: f64,
    pub p: Exponent,
    pub ladder: Ladder,
    pub direction: Direction,
}

impl MaximalConfig {
    pub fn new(gamma: f64, p: Exponent, ladder: Ladder, direction: Direction) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(MaximalConfig {
            gamma,
            p,
            ladder,
            direction,
        })
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        MaximalConfig {
            direction,
            ..self.clone()
        }
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        check_gamma(self.gamma)?;
        if self.ladder.ell_min < 2.0 * grid.max_h_x() * (1.0 - 1e-12) {
            return Err(Error::Configuration(alloc::format!(
                "ell_min = {} is below two spatial lattice spacings ({})",
                self.ladder.ell_min,
                2.0 * grid.max_h_x()
            )));
        }
        if grid.dim() == 0 {
            return Err(Error::Configuration("grid has no spatial axis".into()));
        }
        Ok(())
    }
}

/// Cutoff between the small-scale and the large-scale parts of the supremum.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitCutoff {
    pub cutoff_factor: f64,
    pub reference_ell: f64,
}

impl SplitCutoff {
    pub fn new(reference_ell: f64) -> Self {
        SplitCutoff {
            cutoff_factor: 0.01,
            reference_ell,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff_factor * self.reference_ell
    }
}

/// Lattice geometry of the two parts of one centered rectangle.
#[derive(Clone, Debug)]
pub struct RectParts {
    pub rect: ParabolicRectangle,
    pub lower: Box,
    pub upper: Box,
    pub lower_ib: IndexBox,
    pub upper_ib: IndexBox,
}

/// The parts of the rectangle centered at `(x, t)` when it is admissible on
/// `f`: inside the cylinder, both parts resolved and fully defined.
pub fn admissible_parts(
    f: &SampledField,
    center_x: &[f64],
    center_t: f64,
    ell: f64,
    p: Exponent,
    gamma: f64,
) -> Option<RectParts> {
    let rect = ParabolicRectangle::new(center_x.to_vec(), center_t, ell, p).ok()?;
    if !f.grid().cylinder.contains(&rect.full_box()) {
        return None;
    }
    let lower = rect.lower_part(gamma).ok()?;
    let upper = rect.upper_part(gamma).ok()?;
    let lower_ib = f.grid().index_box(&lower)?;
    let upper_ib = f.grid().index_box(&upper)?;
    if !f.fully_defined(&lower_ib) || !f.fully_defined(&upper_ib) {
        return None;
    }
    Some(RectParts {
        rect,
        lower,
        upper,
        lower_ib,
        upper_ib,
    })
}

fn mean(f: &SampledField, ib: &IndexBox, part: AveragePart) -> f64 {
    f.box_sum(ib, part).div_f64(ib.count() as f64)
}

/// Sup over the admissible rungs in `ladder` of `objective(lower, upper)`.
fn sup_over_ladder<F>(f: &SampledField, gamma: f64, p: Exponent, ladder: &[f64], objective: F) -> SampledField
where
    F: Fn(&IndexBox, &IndexBox) -> f64 + Sync,
{
    let grid = f.grid();
    let eval = |flat: usize| -> Option<f64> {
        let (x, t) = grid.point(flat);
        let mut best: Option<f64> = None;
        for &ell in ladder {
            if let Some(parts) = admissible_parts(f, &x, t, ell, p, gamma) {
                let v = objective(&parts.lower_ib, &parts.upper_ib);
                best = Some(match best {
                    Some(b) if b >= v => b,
                    _ => v,
                });
            }
        }
        best
    };
    let results: Vec<Option<f64>> = map_points(grid.len(), eval);
    let defined: Vec<bool> = results.iter().map(Option::is_some).collect();
    let values: Vec<f64> = results.iter().map(|v| v.unwrap_or(0.0)).collect();
    SampledField::with_mask(grid.clone(), values, defined).expect("averages of finite values are finite")
}

#[cfg(feature = "parallel")]
fn map_points<T: Send>(n: usize, eval: impl Fn(usize) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(&eval).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_points<T>(n: usize, eval: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(eval).collect()
}

fn star_objective(f: &SampledField, direction: Direction) -> impl Fn(&IndexBox, &IndexBox) -> f64 + Sync + '_ {
    move |lower, upper| match direction {
        Direction::Backward => mean(f, lower, AveragePart::Positive) + mean(f, upper, AveragePart::Negative),
        Direction::Forward => mean(f, upper, AveragePart::Positive) + mean(f, lower, AveragePart::Negative),
    }
}

fn checked_ladder(f: &SampledField, cfg: &MaximalConfig) -> Result<Vec<f64>> {
    cfg.validate(f.grid())?;
    let ladder = cfg.ladder.values();
    if ladder.is_empty() {
        return Err(Error::Configuration("side-length ladder is empty".into()));
    }
    Ok(ladder)
}

fn require_some_defined(out: SampledField) -> Result<SampledField> {
    if out.undefined_count() == out.grid().len() {
        return Err(Error::Configuration(
            "no rung of the ladder is admissible at any lattice point".into(),
        ));
    }
    Ok(out)
}

/// `M_*^{γ−} f` (or `M_*^{γ+} f` for [`Direction::Forward`]).
pub fn maximal_star(f: &SampledField, cfg: &MaximalConfig) -> Result<SampledField> {
    let ladder = checked_ladder(f, cfg)?;
    require_some_defined(sup_over_ladder(f, cfg.gamma, cfg.p, &ladder, star_objective(f, cfg.direction)))
}

/// `M^{γ−} f = sup_ℓ |f|_{R⁻}` (or the future-part version for
/// [`Direction::Forward`]).
pub fn maximal_plain(f: &SampledField, cfg: &MaximalConfig) -> Result<SampledField> {
    let ladder = checked_ladder(f, cfg)?;
    let direction = cfg.direction;
    require_some_defined(sup_over_ladder(f, cfg.gamma, cfg.p, &ladder, |lower, upper| match direction {
        Direction::Backward => mean(f, lower, AveragePart::Absolute),
        Direction::Forward => mean(f, upper, AveragePart::Absolute),
    }))
}

/// Small- and large-scale parts `(U₁, U₂)` of the star maximal function:
/// `U₁` uses `ℓ ≤ cutoff`, `U₂` uses `ℓ ≥ cutoff`. A part whose sub-ladder
/// is empty comes back with every point undefined.
pub fn split(f: &SampledField, cfg: &MaximalConfig, cut: &SplitCutoff) -> Result<(SampledField, SampledField)> {
    let ladder = checked_ladder(f, cfg)?;
    let c = cut.cutoff();
    if !(c.is_finite() && c > 0.0) {
        return Err(param("cutoff", "must be a positive length"));
    }
    let small: Vec<f64> = ladder.iter().copied().filter(|&l| l <= c).collect();
    let large: Vec<f64> = ladder.iter().copied().filter(|&l| l >= c).collect();
    let obj = star_objective(f, cfg.direction);
    let u1 = sup_over_ladder(f, cfg.gamma, cfg.p, &small, &obj);
    let u2 = sup_over_ladder(f, cfg.gamma, cfg.p, &large, &obj);
    Ok((u1, u2))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviationReport {
    pub max_abs_deviation: f64,
    pub compared: usize,
    pub undefined_count: usize,
    /// Points defined in one operand but not the other.
    pub mask_mismatches: usize,
}

fn compare(a: &SampledField, b: &SampledField) -> DeviationReport {
    let mut max_abs_deviation: f64 = 0.0;
    let mut compared = 0;
    let mut undefined_count = 0;
    let mut mask_mismatches = 0;
    for flat in 0..a.grid().len() {
        match (a.value(flat), b.value(flat)) {
            (Some(x), Some(y)) => {
                compared += 1;
                max_abs_deviation = max_abs_deviation.max((x - y).abs());
            }
            (None, None) => undefined_count += 1,
            _ => mask_mismatches += 1,
        }
    }
    DeviationReport {
        max_abs_deviation,
        compared,
        undefined_count,
        mask_mismatches,
    }
}

/// Max deviation between `M_*^{γ−}(−f)` and `M_*^{γ+} f`; the two are
/// evaluated by their own formulas.
pub fn duality_check(f: &SampledField, cfg: &MaximalConfig) -> Result<DeviationReport> {
    let backward = maximal_star(&f.negate(), &cfg.with_direction(Direction::Backward))?;
    let forward = maximal_star(f, &cfg.with_direction(Direction::Forward))?;
    Ok(compare(&backward, &forward))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HlReductionReport {
    pub max_abs_deviation: f64,
    pub compared: usize,
    /// Points where the temporal extent removed a spatially admissible rung.
    pub skipped: usize,
    pub time_slice: usize,
    /// Largest `|f(x, t) − f(x, t')|` over the lattice; zero for a
    /// time-independent field.
    pub time_dependence: f64,
}

/// Compares `M_*^{γ−} f` on the middle time slice with the centered-cube
/// Hardy–Littlewood maximal function of the slice profile `g`, computed by
/// direct summation over spatial cubes on the same ladder.
pub fn hl_reduction_check(f: &SampledField, cfg: &MaximalConfig) -> Result<HlReductionReport> {
    let ladder = checked_ladder(f, cfg)?;
    let grid = f.grid();
    let n = grid.dim();
    let slen = grid.spatial_len();
    let slice = grid.nt / 2;

    let mut time_dependence: f64 = 0.0;
    for k in 0..grid.nt {
        for s in 0..slen {
            let d = (f.values()[k * slen + s] - f.values()[s]).abs();
            time_dependence = time_dependence.max(d);
        }
    }

    let mstar = maximal_star(f, &cfg.with_direction(Direction::Backward))?;
    let profile = &f.values()[slice * slen..(slice + 1) * slen];

    let mut report = HlReductionReport {
        max_abs_deviation: 0.0,
        compared: 0,
        skipped: 0,
        time_slice: slice,
        time_dependence,
    };
    let t = grid.t_coord(slice);
    for s in 0..slen {
        let flat = slice * slen + s;
        let (x, _) = grid.point(flat);
        let mut hl: Option<f64> = None;
        let mut skip = false;
        for &ell in &ladder {
            // spatial admissibility, decided from coordinates alone
            let mut members: Vec<usize> = (0..slen).collect();
            let mut fits = true;
            for a in 0..n {
                let (lo, hi) = (x[a] - 0.5 * ell, x[a] + 0.5 * ell);
                let cyl = grid.cylinder.space[a];
                let slack = 1e-12 * cyl.len();
                if lo < cyl.lo - slack || hi > cyl.hi + slack {
                    fits = false;
                }
                let h = grid.h_x(a);
                members.retain(|&q| {
                    let idx = grid.unflatten(q);
                    let c = grid.x_coord(a, idx[a]);
                    c >= lo - 1e-9 * h && c < hi - 1e-9 * h
                });
                let planes = (0..grid.nx[a])
                    .filter(|&k| {
                        let c = grid.x_coord(a, k);
                        c >= lo - 1e-9 * h && c < hi - 1e-9 * h
                    })
                    .count();
                if planes < crate::MIN_SAMPLES_PER_AXIS {
                    fits = false;
                }
            }
            if !fits {
                continue;
            }
            if admissible_parts(f, &x, t, ell, cfg.p, cfg.gamma).is_none() {
                skip = true;
                break;
            }
            let mut pos = DoubleDouble::ZERO;
            let mut neg = DoubleDouble::ZERO;
            for &q in &members {
                let g = profile[q];
                if g > 0.0 {
                    pos = pos.add_f64(g);
                } else if g < 0.0 {
                    neg = neg.add_f64(-g);
                }
            }
            let c = members.len() as f64;
            let v = pos.div_f64(c) + neg.div_f64(c);
            hl = Some(hl.map_or(v, |b: f64| b.max(v)));
        }
        if skip {
            report.skipped += 1;
            continue;
        }
        match (hl, mstar.value(flat)) {
            (Some(h), Some(v)) => {
                report.compared += 1;
                report.max_abs_deviation = report.max_abs_deviation.max((h - v).abs());
            }
            (None, None) => {}
            _ => report.skipped += 1,
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SandwichReport {
    /// Largest positive part of `max(U⁻, U⁺) − M_*^{γ−}u`.
    pub max_lower_violation: f64,
    /// Largest positive part of `M_*^{γ−}u − (U⁻ + U⁺)`.
    pub max_upper_violation: f64,
    pub compared: usize,
    pub undefined_count: usize,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.max_lower_violation == 0.0 && self.max_upper_violation == 0.0
    }
}

/// Pointwise check of `max(U⁻, U⁺) ≤ M_*^{γ−}u ≤ U⁻ + U⁺` with
/// `U⁺ = M_*^{γ−}(u⁺)` and `U⁻ = M_*^{γ−}(−u⁻) = M_*^{γ+}(u⁻)`.
pub fn sandwich_check(u: &SampledField, cfg: &MaximalConfig) -> Result<SandwichReport> {
    let cfg = cfg.with_direction(Direction::Backward);
    let full = maximal_star(u, &cfg)?;
    let u_plus = maximal_star(&u.pos_part(), &cfg)?;
    let u_minus = maximal_star(&u.neg_part().negate(), &cfg)?;
    let mut report = SandwichReport {
        max_lower_violation: 0.0,
        max_upper_violation: 0.0,
        compared: 0,
        undefined_count: 0,
    };
    for flat in 0..u.grid().len() {
        match (full.value(flat), u_plus.value(flat), u_minus.value(flat)) {
            (Some(mv), Some(p), Some(q)) => {
                report.compared += 1;
                report.max_lower_violation = report.max_lower_violation.max(p.max(q) - mv);
                report.max_upper_violation = report.max_upper_violation.max(mv - (p + q));
            }
            _ => report.undefined_count += 1,
        }
    }
    Ok(report)
}

/// Reference implementation of the star operator by explicit summation
/// over the cell centers of every ladder rectangle. Intended as a test
/// oracle; it shares no code with the prefix-sum path beyond the box
/// geometry.
pub fn maximal_star_bruteforce(f: &SampledField, cfg: &MaximalConfig) -> Result<SampledField> {
    let ladder = checked_ladder(f, cfg)?;
    let grid = f.grid();
    let mut values = vec![0.0; grid.len()];
    let mut defined = vec![false; grid.len()];
    for flat in 0..grid.len() {
        let (x, t) = grid.point(flat);
        let mut best: Option<f64> = None;
        for &ell in &ladder {
            let rect = ParabolicRectangle::new(x.clone(), t, ell, cfg.p)?;
            if !grid.cylinder.contains(&rect.full_box()) {
                continue;
            }
            let lower = rect.lower_part(cfg.gamma)?;
            let upper = rect.upper_part(cfg.gamma)?;
            let (pos_box, neg_box) = match cfg.direction {
                Direction::Backward => (&lower, &upper),
                Direction::Forward => (&upper, &lower),
            };
            let stats = |b: &Box, want_pos: bool| -> Option<f64> {
                let ib = grid.index_box(b)?;
                let _ = ib;
                let mut sum = CompensatedSum::new();
                let mut count = 0usize;
                for q in 0..grid.len() {
                    if grid.sample_in_box(q, b) {
                        let v = f.value(q)?;
                        sum.add(if want_pos { v.max(0.0) } else { (-v).max(0.0) });
                        count += 1;
                    }
                }
                (count > 0).then(|| sum.value() / count as f64)
            };
            if let (Some(a), Some(b)) = (stats(pos_box, true), stats(neg_box, false)) {
                let v = a + b;
                best = Some(best.map_or(v, |cur: f64| cur.max(v)));
            }
        }
        if let Some(v) = best {
            values[flat] = v;
            defined[flat] = true;
        }
    }
    SampledField::with_mask(grid.clone(), values, defined)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(gamma: f64, ell_min: f64, ell_max: f64) -> MaximalConfig {
        MaximalConfig::new(
            gamma,
            Exponent::new(2.0).unwrap(),
            Ladder::new(ell_min, ell_max, m::powf(2.0, 0.25)).unwrap(),
            Direction::Backward,
        )
        .unwrap()
    }

    fn grid() -> GridSpec {
        GridSpec::new_1d((0.0, 1.0), (-2.0, 2.0), 32, 32).unwrap()
    }

    #[test]
    fn ladder_values_are_geometric() {
        let l = Ladder::new(0.25, 1.0, 2.0).unwrap();
        assert_eq!(l.values(), vec![0.25, 0.5, 1.0]);
        assert!(Ladder::new(0.5, 0.25, 2.0).is_err());
        assert!(Ladder::new(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn constant_fields() {
        let c = cfg(0.5, 0.25, 1.0);
        let f = SampledField::sample(grid(), |_, _| 3.0).unwrap();
        let mf = maximal_star(&f, &c).unwrap();
        assert!(mf.undefined_count() < grid().len());
        for flat in 0..grid().len() {
            if let Some(v) = mf.value(flat) {
                assert_eq!(v, 3.0);
            }
        }
        let g = SampledField::sample(grid(), |_, _| -1.0).unwrap();
        let mg = maximal_star(&g, &c).unwrap();
        let pg = maximal_plain(&g, &c).unwrap();
        for flat in 0..grid().len() {
            if let Some(v) = mg.value(flat) {
                assert_eq!(v, 1.0);
                assert_eq!(pg.value(flat), Some(1.0));
            }
        }
    }

    #[test]
    fn ell_min_below_resolution_is_rejected() {
        let f = SampledField::sample(grid(), |_, _| 1.0).unwrap();
        let err = maximal_star(&f, &cfg(0.5, 0.01, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }

    #[test]
    fn split_recovers_full_supremum() {
        let f = SampledField::sample(grid(), |x, t| (3.0 * x[0] + t).sin()).unwrap();
        let c = cfg(0.5, 0.25, 1.0);
        let full = maximal_star(&f, &c).unwrap();
        let (u1, u2) = split(&f, &c, &SplitCutoff { cutoff_factor: 0.5, reference_ell: 1.0 }).unwrap();
        for flat in 0..grid().len() {
            let joined = match (u1.value(flat), u2.value(flat)) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            assert_eq!(joined, full.value(flat));
        }
        // cutoff above the ladder: the large part is empty
        let (u1, u2) = split(&f, &c, &SplitCutoff { cutoff_factor: 1.0, reference_ell: 10.0 }).unwrap();
        assert_eq!(u2.undefined_count(), grid().len());
        assert_eq!(u1, full);
        let (u1, u2) = split(&f, &c, &SplitCutoff { cutoff_factor: 1.0, reference_ell: 0.1 }).unwrap();
        assert_eq!(u1.undefined_count(), grid().len());
        assert_eq!(u2, full);
    }
}
