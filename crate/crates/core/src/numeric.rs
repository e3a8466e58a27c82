//! Error-free transformations and double-double accumulators.
//!
//! Prefix-sum tables are kept in double-double form so that box sums
//! obtained by inclusion-exclusion keep ~100 bits of the running total
//! and only round once, when the mean is formed.

use core::cmp::Ordering;
use core::ops::{Add, Neg, Sub};

/// Float functions that are not in `core`; routed through `libm` or `std`.
pub(crate) mod m {
    use num_traits::Float;

    #[inline]
    pub fn powf(x: f64, y: f64) -> f64 {
        Float::powf(x, y)
    }
    #[inline]
    pub fn powi(x: f64, n: i32) -> f64 {
        Float::powi(x, n)
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        Float::exp(x)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        Float::ln(x)
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        Float::sqrt(x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        Float::floor(x)
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        Float::ceil(x)
    }
    #[inline]
    pub fn log2(x: f64) -> f64 {
        Float::log2(x)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Dekker product; exact for operands well inside the exponent range.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        DoubleDouble { hi, lo }
    }

    /// Quotient by a floating divisor, rounded once to `f64`.
    #[inline]
    pub fn div_f64(self, d: f64) -> f64 {
        let q1 = self.hi / d;
        let (p, pe) = two_prod(q1, d);
        let (r, re) = two_sum(self.hi, -p);
        let rem = ((re - pe) + self.lo) + r;
        q1 + rem / d
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;

    #[inline]
    fn add(self, b: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;

    #[inline]
    fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;

    #[inline]
    fn sub(self, b: DoubleDouble) -> DoubleDouble {
        self + (-b)
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

#[inline]
pub fn positive_part(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[inline]
pub fn negative_part(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        0.0
    }
}

pub fn total_cmp(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}

/// Mean of `(a - b)^+` over all pairs `(a, b)` of the two sorted samples.
///
/// Both slices must be sorted ascending. Runs in `O(|a| + |b|)`.
pub fn mean_positive_pair_differences_sorted(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut below = 0usize;
    let mut below_sum = CompensatedSum::new();
    let mut total = CompensatedSum::new();
    for &x in a {
        while below < b.len() && b[below] < x {
            below_sum.add(b[below]);
            below += 1;
        }
        if below > 0 {
            total.add(x * below as f64);
            total.add(-below_sum.value());
        }
    }
    total.value() / (a.len() as f64 * b.len() as f64)
}
