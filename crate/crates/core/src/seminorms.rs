//! Lattice estimators of the PBMO seminorms and their one-sided relatives.
//!
//! Every estimate is a supremum over a [`RectangleFamily`]: rectangles
//! centered at strided lattice points with side lengths from a geometric
//! ladder, kept only when they fit in the cylinder and both parts are
//! resolved and fully defined.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{param, Error, Result};
use crate::field::{AveragePart, IndexBox, SampledField};
use crate::geometry::{check_gamma, Box, Exponent, ParabolicRectangle};
use crate::maximal::{admissible_parts, Ladder, RectParts};
use crate::numeric::{mean_positive_pair_differences_sorted, total_cmp, DoubleDouble};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PbmoDirection {
    /// `PBMO⁻`: past-positive, future-negative oscillation.
    Minus,
    /// `PBMO⁺`: `PBMO⁻` of the time-reversed field.
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum VariantSide {
    /// `BMO⁺(γ, L)`: mean over `R⁻(γ)` of `(u − u_S)⁺`, `S = R⁻(γ) + Lℓ^p`.
    Plus,
    /// `−BMO⁻(γ, L)`: mean over `S` of `(u_{R⁻(γ)} − u)⁺`.
    MinusNeg,
}

/// Index set of the discretized supremum.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RectangleFamily {
    /// Center stride in lattice points, one entry per spatial axis followed
    /// by the temporal one.
    pub stride: Vec<usize>,
    pub ladder: Ladder,
    pub gamma: f64,
    pub p: Exponent,
}

impl RectangleFamily {
    pub fn new(stride: Vec<usize>, ladder: Ladder, gamma: f64, p: Exponent) -> Result<Self> {
        check_gamma(gamma)?;
        if stride.is_empty() || stride.contains(&0) {
            return Err(param("stride", "every axis needs a positive stride"));
        }
        Ok(RectangleFamily {
            stride,
            ladder,
            gamma,
            p,
        })
    }

    /// Same stride on every axis of an `n`-dimensional grid.
    pub fn uniform(n: usize, stride: usize, ladder: Ladder, gamma: f64, p: Exponent) -> Result<Self> {
        RectangleFamily::new(alloc::vec![stride; n + 1], ladder, gamma, p)
    }

    /// Admissible members on `f`, in lattice order (time slowest, then
    /// space, then increasing side length).
    pub fn members(&self, f: &SampledField) -> Result<Vec<RectParts>> {
        let grid = f.grid();
        if self.stride.len() != grid.dim() + 1 {
            return Err(param("stride", "one stride per lattice axis is required"));
        }
        let ladder = self.ladder.values();
        let mut out = Vec::new();
        for flat in 0..grid.len() {
            let idx = grid.unflatten(flat);
            if idx.iter().zip(&self.stride).any(|(&i, &s)| i % s != 0) {
                continue;
            }
            let (x, t) = grid.point(flat);
            for &ell in &ladder {
                if let Some(parts) = admissible_parts(f, &x, t, ell, self.p, self.gamma) {
                    out.push(parts);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeminormEstimate {
    pub value: f64,
    pub witness: ParabolicRectangle,
    /// Optimizing `a_R` (PBMO) or companion mean (one-sided variants).
    pub constant: f64,
    pub family_size: usize,
}

/// Orders candidates by `(value, center_t, center_x, ℓ)`.
fn candidate_cmp(a: &(f64, ParabolicRectangle, f64), b: &(f64, ParabolicRectangle, f64)) -> Ordering {
    total_cmp(&a.0, &b.0)
        .then_with(|| total_cmp(&a.1.center_t, &b.1.center_t))
        .then_with(|| {
            a.1.center_x
                .iter()
                .zip(&b.1.center_x)
                .map(|(x, y)| total_cmp(x, y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| total_cmp(&a.1.ell, &b.1.ell))
}

fn reduce(cands: Vec<(f64, ParabolicRectangle, f64)>) -> Result<SeminormEstimate> {
    let family_size = cands.len();
    let best = cands
        .into_iter()
        .max_by(candidate_cmp)
        .ok_or_else(|| Error::Configuration("rectangle family is empty on this grid".into()))?;
    Ok(SeminormEstimate {
        value: best.0,
        witness: best.1,
        constant: best.2,
        family_size,
    })
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_unstable_by(total_cmp);
    v
}

/// `g(a) = mean_lower (u − a)⁺ + mean_upper (a − u)⁺`, each mean summed in
/// double-double and rounded once.
pub fn pbmo_objective(lower: &[f64], upper: &[f64], a: f64) -> f64 {
    let mut s = DoubleDouble::ZERO;
    for &u in lower {
        if u > a {
            s = s.add_f64(u - a);
        }
    }
    let mut t = DoubleDouble::ZERO;
    for &u in upper {
        if a > u {
            t = t.add_f64(a - u);
        }
    }
    s.div_f64(lower.len() as f64) + t.div_f64(upper.len() as f64)
}

fn leftmost_minimizer_sorted(lower: &[f64], upper: &[f64]) -> f64 {
    // right derivative at a breakpoint b is #(U ≤ b)/mU − #(L > b)/mL
    let (ml, mu) = (lower.len() as u128, upper.len() as u128);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let b = match (lower.get(i), upper.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!("the last breakpoint always qualifies"),
        };
        while i < lower.len() && lower[i] <= b {
            i += 1;
        }
        while j < upper.len() && upper[j] <= b {
            j += 1;
        }
        let upper_le = j as u128;
        let lower_gt = (lower.len() - i) as u128;
        if upper_le * ml >= lower_gt * mu {
            return b;
        }
    }
}

/// Leftmost minimizer `a` of [`pbmo_objective`] and the minimum value.
pub fn optimal_constant(lower: &[f64], upper: &[f64]) -> Result<(f64, f64)> {
    if lower.is_empty() || upper.is_empty() {
        return Err(param("samples", "both sample sets must be nonempty"));
    }
    if lower.iter().chain(upper).any(|v| !v.is_finite()) {
        return Err(param("samples", "samples must be finite"));
    }
    let (l, u) = (sorted(lower), sorted(upper));
    let a = leftmost_minimizer_sorted(&l, &u);
    Ok((a, pbmo_objective(lower, upper, a)))
}

fn pbmo_minus(f: &SampledField, fam: &RectangleFamily) -> Result<SeminormEstimate> {
    let members = fam.members(f)?;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let cands: Vec<_> = members
        .into_iter()
        .map(|parts| {
            lower.clear();
            upper.clear();
            f.collect_samples(&parts.lower_ib, &mut lower);
            f.collect_samples(&parts.upper_ib, &mut upper);
            let (a, v) = optimal_constant(&lower, &upper).expect("admissible parts are nonempty");
            (v, parts.rect, a)
        })
        .collect();
    reduce(cands)
}

/// Estimate of `‖f‖_{PBMO∓}` over the family, with the witness rectangle
/// and its optimal constant.
pub fn pbmo_seminorm(f: &SampledField, fam: &RectangleFamily, direction: PbmoDirection) -> Result<SeminormEstimate> {
    match direction {
        PbmoDirection::Minus => pbmo_minus(f, fam),
        PbmoDirection::Plus => {
            let mut est = pbmo_minus(&f.time_reverse(), fam)?;
            let time = f.grid().cylinder.time;
            est.witness.center_t = time.lo + time.hi - est.witness.center_t;
            Ok(est)
        }
    }
}

fn mean_shifted(f: &SampledField, ib: &IndexBox) -> f64 {
    f.box_sum(ib, AveragePart::Full).div_f64(ib.count() as f64)
}

/// `BMO⁺(γ, L)` or `−BMO⁻(γ, L)` over the family; the comparison constant
/// is the mean over the companion box.
pub fn bmo_variant_seminorm(
    f: &SampledField,
    fam: &RectangleFamily,
    gamma: f64,
    lag: f64,
    side: VariantSide,
) -> Result<SeminormEstimate> {
    check_gamma(gamma)?;
    if !(lag.is_finite() && lag > 1.0 - gamma) {
        return Err(param("lag", alloc::format!("must exceed 1 - gamma = {}", 1.0 - gamma)));
    }
    let grid = f.grid();
    let members = fam.members(f)?;
    let mut samples = Vec::new();
    let mut cands = Vec::with_capacity(members.len());
    for parts in members {
        let rect = parts.rect;
        let lower: Box = rect.lower_part(gamma)?;
        let shifted = lower.translate_time(lag * rect.time_scale());
        if !grid.cylinder.contains(&shifted) {
            continue;
        }
        let (Some(lower_ib), Some(shift_ib)) = (grid.index_box(&lower), grid.index_box(&shifted)) else {
            continue;
        };
        if !f.fully_defined(&lower_ib) || !f.fully_defined(&shift_ib) {
            continue;
        }
        samples.clear();
        let (c, value) = match side {
            VariantSide::Plus => {
                let c = mean_shifted(f, &shift_ib);
                f.collect_samples(&lower_ib, &mut samples);
                let mut s = DoubleDouble::ZERO;
                for &u in &samples {
                    if u > c {
                        s = s.add_f64(u - c);
                    }
                }
                (c, s.div_f64(samples.len() as f64))
            }
            VariantSide::MinusNeg => {
                let c = mean_shifted(f, &lower_ib);
                f.collect_samples(&shift_ib, &mut samples);
                let mut s = DoubleDouble::ZERO;
                for &u in &samples {
                    if c > u {
                        s = s.add_f64(c - u);
                    }
                }
                (c, s.div_f64(samples.len() as f64))
            }
        };
        cands.push((value, rect, c));
    }
    reduce(cands)
}

/// Mean over `x ∈ A`, `y ∈ B` of `(f(x) − f(y))⁺` for `B` strictly after `A`.
pub fn double_oscillation(f: &SampledField, a: &Box, b: &Box) -> Result<f64> {
    let gap = b.time.lo - a.time.hi;
    if !(gap > 0.0) {
        return Err(Error::Order(alloc::format!(
            "second box must start after the first ends (gap {gap})"
        )));
    }
    let xa = f.samples_in(a)?;
    let xb = f.samples_in(b)?;
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::InsufficientResolution {
            found: 0,
            required: crate::MIN_SAMPLES_PER_AXIS,
        });
    }
    Ok(mean_positive_pair_differences_sorted(&sorted(&xa), &sorted(&xb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    fn scan_min(l: &[f64], u: &[f64]) -> f64 {
        let lo = l.iter().chain(u).cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let hi = l.iter().chain(u).cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        (0..=4000)
            .map(|k| pbmo_objective(l, u, lo + (hi - lo) * k as f64 / 4000.0))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn optimal_constant_examples() {
        assert_eq!(optimal_constant(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), (1.0, 0.5));
        assert!((scan_min(&[0.0, 2.0], &[1.0, 3.0]) - 0.5).abs() < 1e-12);
        assert_eq!(optimal_constant(&[-1.0, 0.5], &[0.5, 4.0]).unwrap(), (0.5, 0.0));
        assert_eq!(optimal_constant(&[2.5], &[2.5]).unwrap(), (2.5, 0.0));
        assert!(optimal_constant(&[], &[1.0]).is_err());
    }

    #[test]
    fn optimal_constant_unequal_sizes() {
        // lower {1}, upper {0.5, 2}: g(a) = (1-a)+ + ((a-0.5)+ + (a-2)+)/2
        let (a, v) = optimal_constant(&[1.0], &[0.5, 2.0]).unwrap();
        assert_eq!(a, 1.0);
        assert_eq!(v, 0.25);
    }

    fn grid() -> GridSpec {
        GridSpec::new_1d((-1.0, 1.0), (-1.0, 1.0), 32, 32).unwrap()
    }

    fn family(stride: usize) -> RectangleFamily {
        RectangleFamily::uniform(
            1,
            stride,
            Ladder::new(0.125, 1.0, 2f64.sqrt()).unwrap(),
            0.5,
            Exponent::new(2.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn increasing_field_has_zero_seminorms() {
        let f = SampledField::sample(grid(), |_, t| t.exp()).unwrap();
        let fam = family(1);
        assert_eq!(pbmo_seminorm(&f, &fam, PbmoDirection::Minus).unwrap().value, 0.0);
        for side in [VariantSide::Plus, VariantSide::MinusNeg] {
            assert_eq!(bmo_variant_seminorm(&f, &fam, 0.5, 1.0, side).unwrap().value, 0.0);
        }
        assert!(pbmo_seminorm(&f, &fam, PbmoDirection::Plus).unwrap().value > 0.0);
    }

    #[test]
    fn step_down_in_time() {
        let f = SampledField::sample(grid(), |_, t| if t < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let fam = family(1);
        let est = pbmo_seminorm(&f, &fam, PbmoDirection::Minus).unwrap();
        assert_eq!(est.value, 1.0);
        let w = &est.witness;
        assert!(w.lower_part(0.5).unwrap().time.hi < 0.0625 && w.upper_part(0.5).unwrap().time.lo > -0.0625);
        let plus = bmo_variant_seminorm(&f, &fam, 0.5, 1.0, VariantSide::Plus).unwrap();
        assert_eq!(plus.value, 1.0);
        assert_eq!(pbmo_seminorm(&f, &fam, PbmoDirection::Plus).unwrap().value, 0.0);
    }

    #[test]
    fn plus_direction_maps_witness_back() {
        let f = SampledField::sample(grid(), |_, t| if t < 0.0 { 0.0 } else { 1.0 }).unwrap();
        let est = pbmo_seminorm(&f, &family(1), PbmoDirection::Plus).unwrap();
        assert_eq!(est.value, 1.0);
        assert!(est.witness.upper_part(0.5).unwrap().time.lo > -0.0625);
        assert!(est.witness.lower_part(0.5).unwrap().time.hi < 0.0625);
    }

    #[test]
    fn lag_is_validated() {
        let f = SampledField::sample(grid(), |_, _| 0.0).unwrap();
        let err = bmo_variant_seminorm(&f, &family(1), 0.5, 0.5, VariantSide::Plus).unwrap_err();
        assert!(matches!(err, Error::Parameter { .. }));
    }

    #[test]
    fn double_oscillation_requires_gap_and_matches_pair_loop() {
        use crate::geometry::Interval;
        let f = SampledField::sample(grid(), |x, t| (3.0 * x[0]).sin() - t).unwrap();
        let a = Box::new(alloc::vec![Interval::new(-1.0, 0.0)], Interval::new(-1.0, -0.5)).unwrap();
        assert!(matches!(double_oscillation(&f, &a, &a.translate_time(0.25)), Err(Error::Order(_))));
        let b = a.translate_time(1.0);
        let (xa, xb) = (f.samples_in(&a).unwrap(), f.samples_in(&b).unwrap());
        let mut s = 0.0;
        for &p in &xa {
            for &q in &xb {
                s += (p - q).max(0.0);
            }
        }
        let oracle = s / (xa.len() * xb.len()) as f64;
        let got = double_oscillation(&f, &a, &b).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn empty_family_is_a_configuration_error() {
        let f = SampledField::sample(grid(), |_, _| 0.0).unwrap();
        let fam = RectangleFamily::uniform(
            1,
            1,
            Ladder::new(1.5, 2.0, 2.0).unwrap(),
            0.5,
            Exponent::new(2.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            pbmo_seminorm(&f, &fam, PbmoDirection::Minus),
            Err(Error::Configuration(_))
        ));
    }
}
