//! Empirical John–Nirenberg scanner.
//!
//! For a rectangle `R` with centering constant `b_R` (the leftmost
//! minimizer of the PBMO objective) the scanner evaluates
//! `mean_{R⁻} exp(c (u − b_R)⁺)` and `mean_{R⁺} exp(c (b_R − u)⁺)` on a grid
//! of `c` values and reports the largest `c` keeping both below a cap on
//! every member of a family.

use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::field::SampledField;
use crate::geometry::{check_gamma, Box, ParabolicRectangle};
use crate::numeric::{m, total_cmp, CompensatedSum};
use crate::seminorms::{optimal_constant, RectangleFamily};

/// Exponents above this are evaluated in log-space.
const EXP_GUARD: f64 = 700.0;
const BISECTION_STEPS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MomentSide {
    /// `exp(c (u − b)⁺)`.
    Over,
    /// `exp(c (b − u)⁺)`.
    Under,
}

fn deviation(u: f64, b: f64, side: MomentSide) -> f64 {
    match side {
        MomentSide::Over => (u - b).max(0.0),
        MomentSide::Under => (b - u).max(0.0),
    }
}

/// Mean of `exp(c·x_i)` over nonnegative `x_i`.
pub fn mean_exp(xs: &[f64], c: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let top = xs.iter().fold(0.0f64, |a, &x| a.max(c * x));
    if top <= EXP_GUARD {
        let mut s = CompensatedSum::new();
        for &x in xs {
            s.add(m::exp(c * x));
        }
        return s.value() / xs.len() as f64;
    }
    let mut s = CompensatedSum::new();
    for &x in xs {
        s.add(m::exp(c * x - top));
    }
    m::exp(top + m::ln(s.value() / xs.len() as f64))
}

pub fn exp_moment(f: &SampledField, b_box: &Box, b: f64, c: f64, side: MomentSide) -> Result<f64> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(param("c", "must be a finite nonnegative number"));
    }
    if !b.is_finite() {
        return Err(param("b", "must be finite"));
    }
    let xs: Vec<f64> = f.samples_in(b_box)?.iter().map(|&u| deviation(u, b, side)).collect();
    Ok(mean_exp(&xs, c))
}

/// Mean over `x ∈ A`, `y ∈ B` of `exp(c (u(x) − u(y))⁺)`, by sorting.
pub fn pair_exp_moment(f: &SampledField, a: &Box, b: &Box, c: f64) -> Result<f64> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(param("c", "must be a finite nonnegative number"));
    }
    if !(b.time.lo > a.time.hi) {
        return Err(Error::Order("second box must start after the first ends".into()));
    }
    let mut xa = f.samples_in(a)?;
    let mut xb = f.samples_in(b)?;
    xa.sort_unstable_by(total_cmp);
    xb.sort_unstable_by(total_cmp);
    let base = xb[0];
    // Σ_{y < x} exp(c(x − y)) = exp(c(x − base)) Σ_{y < x} exp(−c(y − base))
    let mut j = 0;
    let mut tail = CompensatedSum::new();
    let mut total = CompensatedSum::new();
    for &x in &xa {
        while j < xb.len() && xb[j] < x {
            tail.add(m::exp(-c * (xb[j] - base)));
            j += 1;
        }
        if j > 0 {
            total.add(m::exp(c * (x - base)) * tail.value());
        }
        total.add((xb.len() - j) as f64);
    }
    Ok(total.value() / (xa.len() as f64 * xb.len() as f64))
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(param("c_grid", "needs 0 < lo < hi and at least 2 points"));
    }
    let (a, b) = (m::ln(lo), m::ln(hi));
    Ok((0..count)
        .map(|k| match k {
            0 => lo,
            _ if k == count - 1 => hi,
            _ => m::exp(a + (b - a) * k as f64 / (count - 1) as f64),
        })
        .collect())
}

/// 32 log-spaced values in `[10⁻², 10²]`.
pub fn default_c_grid() -> Vec<f64> {
    log_spaced(1e-2, 1e2, 32).expect("valid constant range")
}

pub const DEFAULT_MOMENT_CAP: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JnReport {
    /// Binding rectangle: the first to exceed the cap past `c_star`.
    pub rectangle: ParabolicRectangle,
    pub b: f64,
    pub c_grid: Vec<f64>,
    /// Moments of the binding rectangle along `c_grid`.
    pub lower_moments: Vec<f64>,
    pub upper_moments: Vec<f64>,
    /// Family-wide worst moments along `c_grid`.
    pub worst_lower: Vec<f64>,
    pub worst_upper: Vec<f64>,
    /// Largest grid value keeping every moment `≤ moment_cap`.
    pub c_star_grid: f64,
    /// Grid neighbours of `c_star_grid`; `hi` is `None` when the whole
    /// grid passes.
    pub bracket: (f64, Option<f64>),
    /// `c_star_grid` refined by bisection inside the bracket.
    pub c_star: f64,
    pub moment_cap: f64,
    pub family_size: usize,
}

struct Member {
    rect: ParabolicRectangle,
    b: f64,
    over: Vec<f64>,
    under: Vec<f64>,
}

impl Member {
    fn worst(&self, c: f64) -> f64 {
        mean_exp(&self.over, c).max(mean_exp(&self.under, c))
    }
}

pub fn jn_scan(
    f: &SampledField,
    fam: &RectangleFamily,
    gamma: f64,
    c_grid: &[f64],
    moment_cap: f64,
) -> Result<JnReport> {
    check_gamma(gamma)?;
    if c_grid.is_empty() || c_grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(param("c_grid", "needs at least one finite nonnegative value"));
    }
    if c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("c_grid", "must be strictly increasing"));
    }
    if !(moment_cap > 1.0) {
        return Err(param("moment_cap", "must exceed 1"));
    }
    let grid = f.grid();
    let mut members = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for parts in fam.members(f)? {
        let lo = parts.rect.lower_part(gamma)?;
        let hi = parts.rect.upper_part(gamma)?;
        let (Some(li), Some(ui)) = (grid.index_box(&lo), grid.index_box(&hi)) else {
            continue;
        };
        if !f.fully_defined(&li) || !f.fully_defined(&ui) {
            continue;
        }
        lower.clear();
        upper.clear();
        f.collect_samples(&li, &mut lower);
        f.collect_samples(&ui, &mut upper);
        let (b, _) = optimal_constant(&lower, &upper)?;
        members.push(Member {
            rect: parts.rect,
            b,
            over: lower.iter().map(|&u| deviation(u, b, MomentSide::Over)).collect(),
            under: upper.iter().map(|&u| deviation(u, b, MomentSide::Under)).collect(),
        });
    }
    if members.is_empty() {
        return Err(Error::Configuration("rectangle family is empty on this grid".into()));
    }

    let mut worst_lower = Vec::with_capacity(c_grid.len());
    let mut worst_upper = Vec::with_capacity(c_grid.len());
    let mut first_fail: Option<usize> = None;
    for (ci, &c) in c_grid.iter().enumerate() {
        let mut wl: f64 = 1.0;
        let mut wu: f64 = 1.0;
        for mem in &members {
            wl = wl.max(mean_exp(&mem.over, c));
            wu = wu.max(mean_exp(&mem.under, c));
        }
        worst_lower.push(wl);
        worst_upper.push(wu);
        if first_fail.is_none() && wl.max(wu) > moment_cap {
            first_fail = Some(ci);
        }
    }

    let (c_star_grid, bracket, c_star, binding) = match first_fail {
        None => {
            let c = *c_grid.last().expect("nonempty");
            let binding = members
                .iter()
                .enumerate()
                .max_by(|a, b| total_cmp(&a.1.worst(c), &b.1.worst(c)))
                .map(|(i, _)| i)
                .expect("nonempty");
            (c, (c, None), c, binding)
        }
        Some(ci) => {
            let lo = if ci == 0 { 0.0 } else { c_grid[ci - 1] };
            let hi = c_grid[ci];
            // each failing member has its own crossing inside (lo, hi]
            let mut best: Option<(f64, usize)> = None;
            for (i, mem) in members.iter().enumerate() {
                if mem.worst(hi) <= moment_cap {
                    continue;
                }
                let (mut a, mut b) = (lo, hi);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (a + b);
                    if mem.worst(mid) <= moment_cap {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                if best.is_none_or(|(c, _)| a < c) {
                    best = Some((a, i));
                }
            }
            let (c, i) = best.expect("some member fails at the first failing grid value");
            (lo, (lo, Some(hi)), c, i)
        }
    };

    let bind = &members[binding];
    Ok(JnReport {
        rectangle: bind.rect.clone(),
        b: bind.b,
        c_grid: c_grid.to_vec(),
        lower_moments: c_grid.iter().map(|&c| mean_exp(&bind.over, c)).collect(),
        upper_moments: c_grid.iter().map(|&c| mean_exp(&bind.under, c)).collect(),
        worst_lower,
        worst_upper,
        c_star_grid,
        bracket,
        c_star,
        moment_cap,
        family_size: members.len(),
    })
}

/// Discrete convexity of `c ↦ log(moment)` on a nonuniform grid, up to a
/// relative slack.
pub fn log_moments_convex(c_grid: &[f64], moments: &[f64], slack: f64) -> bool {
    let logs: Vec<f64> = moments.iter().map(|&x| m::ln(x)).collect();
    (1..c_grid.len().saturating_sub(1)).all(|i| {
        let s1 = (logs[i] - logs[i - 1]) / (c_grid[i] - c_grid[i - 1]);
        let s2 = (logs[i + 1] - logs[i]) / (c_grid[i + 1] - c_grid[i]);
        !s1.is_finite() || !s2.is_finite() || s2 >= s1 - slack * s1.abs().max(s2.abs()).max(1e-300)
    })
}
