//! Parabolic rectangles, their past and future parts, and axis-parallel
//! space-time boxes.
//!
//! A parabolic rectangle with center `(x, t)`, side length `ℓ` and exponent
//! `p` is `Q × (t − ℓ^p, t + ℓ^p)` where `Q` is the cube of side `ℓ` centered
//! at `x`. For a shape `γ ∈ (0, 1)` its past part is
//! `Q × (t − ℓ^p, t − (1 − γ)ℓ^p)` and its future part
//! `Q × (t + (1 − γ)ℓ^p, t + ℓ^p)`.
//!
//! All boxes are half-open `[lo, hi)` on every axis.

use alloc::vec::Vec;

use crate::error::{param, Error, Result};
use crate::numeric::m;

/// The scaling exponent `p > 1`: time scales like space to the power `p`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(Exponent(p))
        } else {
            Err(param("p", alloc::format!("exponent must be > 1, got {p}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `ℓ^p`.
    #[inline]
    pub fn time_scale(self, ell: f64) -> f64 {
        m::powf(ell, self.0)
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Exponent::new(p)
    }
}

impl From<Exponent> for f64 {
    fn from(p: Exponent) -> f64 {
        p.0
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(param("gamma", alloc::format!("shape must lie in (0, 1), got {gamma}")))
    }
}

/// Shape `γ` and optional lag coefficient `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShapeParams {
    pub gamma: f64,
    pub lag: Option<f64>,
}

impl ShapeParams {
    pub fn new(gamma: f64, lag: Option<f64>) -> Result<Self> {
        check_gamma(gamma)?;
        if let Some(lag) = lag {
            if !(lag.is_finite() && lag > 1.0 - gamma) {
                return Err(param(
                    "lag",
                    alloc::format!("lag must exceed 1 - gamma = {}, got {lag}", 1.0 - gamma),
                ));
            }
        }
        Ok(ShapeParams { gamma, lag })
    }
}

/// Half-open interval `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    #[inline]
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    #[inline]
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then_some(Interval { lo, hi })
    }

    #[inline]
    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    #[inline]
    pub fn shift(&self, d: f64) -> Interval {
        Interval::new(self.lo + d, self.hi + d)
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Interval {
        Interval::new(self.lo * s, self.hi * s)
    }
}

/// Axis-parallel space-time box: one interval per spatial axis plus a
/// temporal interval.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Box {
    pub space: Vec<Interval>,
    pub time: Interval,
}

impl Box {
    pub fn new(space: Vec<Interval>, time: Interval) -> Result<Self> {
        let b = Box { space, time };
        if b.space.iter().chain(core::iter::once(&b.time)).any(|iv| {
            !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.is_empty()
        }) {
            return Err(param("box", "every side must be a finite interval of positive length"));
        }
        Ok(b)
    }

    /// Spatial dimension `n`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn measure(&self) -> f64 {
        self.space.iter().map(Interval::len).product::<f64>() * self.time.len()
    }

    pub fn intersect(&self, other: &Box) -> Option<Box> {
        if self.dim() != other.dim() {
            return None;
        }
        let time = self.time.intersect(&other.time)?;
        let space = self
            .space
            .iter()
            .zip(&other.space)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>()?;
        Some(Box { space, time })
    }

    pub fn is_disjoint(&self, other: &Box) -> bool {
        self.intersect(other).is_none()
    }

    pub fn contains_box(&self, other: &Box) -> bool {
        self.dim() == other.dim()
            && self.time.contains_interval(&other.time)
            && self.space.iter().zip(&other.space).all(|(a, b)| a.contains_interval(b))
    }

    pub fn contains_point(&self, x: &[f64], t: f64) -> bool {
        t >= self.time.lo
            && t < self.time.hi
            && x.len() == self.dim()
            && self.space.iter().zip(x).all(|(iv, &c)| c >= iv.lo && c < iv.hi)
    }

    /// Shift of the temporal interval by `dt`; the spatial part is unchanged.
    pub fn translate_time(&self, dt: f64) -> Box {
        Box {
            space: self.space.clone(),
            time: self.time.shift(dt),
        }
    }

    pub fn translate_space(&self, v: &[f64]) -> Box {
        Box {
            space: self.space.iter().zip(v).map(|(iv, &d)| iv.shift(d)).collect(),
            time: self.time,
        }
    }

    /// Parabolic dilation `(x, t) ↦ (δx, δ^p t)` about the origin.
    pub fn dilate(&self, delta: f64, p: Exponent) -> Result<Box> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(param("delta", alloc::format!("dilation factor must be > 0, got {delta}")));
        }
        let dt = p.time_scale(delta);
        Ok(Box {
            space: self.space.iter().map(|iv| iv.scale(delta)).collect(),
            time: self.time.scale(dt),
        })
    }

    /// Mirror image under `t ↦ 2·axis − t`.
    pub fn reflect_time(&self, axis: f64) -> Box {
        Box {
            space: self.space.clone(),
            time: Interval::new(2.0 * axis - self.time.hi, 2.0 * axis - self.time.lo),
        }
    }

    pub fn spatial_center(&self) -> Vec<f64> {
        self.space.iter().map(Interval::mid).collect()
    }
}

/// Free-function form of [`Box::translate_time`].
pub fn translate_time(b: &Box, dt: f64) -> Box {
    b.translate_time(dt)
}

/// Free-function form of [`Box::dilate`].
pub fn dilate(b: &Box, delta: f64, p: Exponent) -> Result<Box> {
    b.dilate(delta, p)
}

/// Parabolic rectangle `Q × (t − ℓ^p, t + ℓ^p)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParabolicRectangle {
    pub center_x: Vec<f64>,
    pub center_t: f64,
    pub ell: f64,
    pub p: Exponent,
}

impl ParabolicRectangle {
    pub fn new(center_x: Vec<f64>, center_t: f64, ell: f64, p: Exponent) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(param("ell", alloc::format!("side length must be > 0, got {ell}")));
        }
        if !center_t.is_finite() || center_x.iter().any(|c| !c.is_finite()) {
            return Err(param("center", "center coordinates must be finite"));
        }
        Ok(ParabolicRectangle {
            center_x,
            center_t,
            ell,
            p,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.center_x.len()
    }

    /// `ℓ^p`.
    #[inline]
    pub fn time_scale(&self) -> f64 {
        self.p.time_scale(self.ell)
    }

    fn base(&self) -> Vec<Interval> {
        let half = 0.5 * self.ell;
        self.center_x
            .iter()
            .map(|&c| Interval::new(c - half, c + half))
            .collect()
    }

    pub fn full_box(&self) -> Box {
        let s = self.time_scale();
        Box {
            space: self.base(),
            time: Interval::new(self.center_t - s, self.center_t + s),
        }
    }

    /// `Q × (t − ℓ^p, t − (1 − γ)ℓ^p)`.
    pub fn lower_part(&self, gamma: f64) -> Result<Box> {
        check_gamma(gamma)?;
        let s = self.time_scale();
        Ok(Box {
            space: self.base(),
            time: Interval::new(self.center_t - s, self.center_t - (1.0 - gamma) * s),
        })
    }

    /// `Q × (t + (1 − γ)ℓ^p, t + ℓ^p)`.
    pub fn upper_part(&self, gamma: f64) -> Result<Box> {
        check_gamma(gamma)?;
        let s = self.time_scale();
        Ok(Box {
            space: self.base(),
            time: Interval::new(self.center_t + (1.0 - gamma) * s, self.center_t + s),
        })
    }
}

/// Free-function form of [`ParabolicRectangle::lower_part`].
pub fn lower_part(r: &ParabolicRectangle, gamma: f64) -> Result<Box> {
    r.lower_part(gamma)
}

/// Free-function form of [`ParabolicRectangle::upper_part`].
pub fn upper_part(r: &ParabolicRectangle, gamma: f64) -> Result<Box> {
    r.upper_part(gamma)
}

/// Bounded space-time cylinder `Ω × (t0, t1)` with `Ω` an axis-parallel box.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cylinder {
    pub space: Vec<Interval>,
    pub time: Interval,
}

impl Cylinder {
    pub fn new(space: Vec<Interval>, time: Interval) -> Result<Self> {
        Box::new(space.clone(), time)?;
        Ok(Cylinder { space, time })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn as_box(&self) -> Box {
        Box {
            space: self.space.clone(),
            time: self.time,
        }
    }

    /// Containment with a relative slack of `1e-12` of the cylinder extent,
    /// so that rectangles touching the boundary are accepted.
    pub fn contains(&self, b: &Box) -> bool {
        if b.dim() != self.dim() {
            return false;
        }
        let fits = |outer: &Interval, inner: &Interval| {
            let slack = 1e-12 * outer.len();
            inner.lo >= outer.lo - slack && inner.hi <= outer.hi + slack
        };
        fits(&self.time, &b.time) && self.space.iter().zip(&b.space).all(|(o, i)| fits(o, i))
    }
}
