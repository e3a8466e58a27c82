//! Closed-form test functions with known PBMO behavior.
//!
//! Entries with a grid-dependent lift or clip (`log_abs_x`, the lifted
//! heat kernel) read the grid at evaluation time, so the same name gives
//! the natural discretisation at every resolution.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{GridSpec, SampledField};
use crate::geometry::Interval;
use crate::numeric::m;
use crate::oneside::Signal;

/// Default lower time bound for the heat-kernel entries.
pub const HEAT_T_MIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Flags {
    pub nonnegative: bool,
    pub increasing_in_time: bool,
    pub expected_pbmo_minus_zero: bool,
    pub expected_divergent_abs: bool,
    pub time_independent: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    ExpT,
    ExpDiff,
    LogHeat,
    LogHeatLifted,
    LogAbsX,
    LogAbsXLifted,
    Step,
    Constant,
    RampT,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub flags: Flags,
    /// Smallest admissible time, if the entry is singular below it.
    pub t_min: Option<f64>,
    kind: Kind,
}

const fn flags(
    nonnegative: bool,
    increasing_in_time: bool,
    expected_divergent_abs: bool,
    time_independent: bool,
) -> Flags {
    Flags {
        nonnegative,
        increasing_in_time,
        expected_pbmo_minus_zero: increasing_in_time,
        expected_divergent_abs,
        time_independent,
    }
}

const ENTRIES: [CorpusEntry; 9] = [
    CorpusEntry {
        name: "exp_t",
        description: "e^t",
        flags: flags(true, true, false, false),
        t_min: None,
        kind: Kind::ExpT,
    },
    CorpusEntry {
        name: "exp_diff",
        description: "e^t - e^-t",
        flags: flags(false, true, true, false),
        t_min: None,
        kind: Kind::ExpDiff,
    },
    CorpusEntry {
        name: "log_heat",
        description: "log of the heat kernel (4 pi t)^(-n/2) exp(-|x|^2 / 4t)",
        flags: flags(false, false, false, false),
        t_min: Some(HEAT_T_MIN),
        kind: Kind::LogHeat,
    },
    CorpusEntry {
        name: "log_heat_lifted",
        description: "log heat kernel minus its lower bound on the grid",
        flags: flags(true, false, false, false),
        t_min: Some(HEAT_T_MIN),
        kind: Kind::LogHeatLifted,
    },
    CorpusEntry {
        name: "log_abs_x",
        description: "log |x|, with |x| clipped below at the spatial step",
        flags: flags(false, false, false, true),
        t_min: None,
        kind: Kind::LogAbsX,
    },
    CorpusEntry {
        name: "log_abs_x_lifted",
        description: "log max(|x|, h_x) - log h_x",
        flags: flags(true, false, false, true),
        t_min: None,
        kind: Kind::LogAbsXLifted,
    },
    CorpusEntry {
        name: "step",
        description: "1 for t < 0, else 0",
        flags: flags(true, false, false, false),
        t_min: None,
        kind: Kind::Step,
    },
    CorpusEntry {
        name: "constant",
        description: "1",
        flags: flags(true, true, false, true),
        t_min: None,
        kind: Kind::Constant,
    },
    CorpusEntry {
        name: "ramp_t",
        description: "t",
        flags: flags(false, true, false, false),
        t_min: None,
        kind: Kind::RampT,
    },
];

pub fn list_entries() -> &'static [CorpusEntry] {
    &ENTRIES
}

pub fn entry(name: &str) -> Result<&'static CorpusEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Configuration(alloc::format!("unknown corpus entry `{name}`")))
}

fn norm(x: &[f64]) -> f64 {
    m::sqrt(x.iter().map(|v| v * v).sum())
}

fn log_heat(x: &[f64], t: f64) -> f64 {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    -0.5 * n * m::ln(4.0 * core::f64::consts::PI * t) - r2 / (4.0 * t)
}

/// Analytic lower bound of the log heat kernel on the grid's cylinder.
fn log_heat_floor(grid: &GridSpec, t_min: f64) -> f64 {
    let c = &grid.cylinder;
    let far: f64 = c.space.iter().map(|iv| iv.lo.abs().max(iv.hi.abs())).map(|v| v * v).sum();
    let n = grid.dim() as f64;
    -0.5 * n * m::ln(4.0 * core::f64::consts::PI * c.time.hi) - far / (4.0 * t_min)
}

impl CorpusEntry {
    /// Samples the entry on `grid`.
    pub fn evaluate(&self, grid: &GridSpec) -> Result<SampledField> {
        if let Some(t_min) = self.t_min {
            // the first lattice time must be admissible
            let t0 = grid.t_coord(0);
            if t0 < t_min {
                let mut coords = vec![0.0; grid.dim()];
                coords.push(t0);
                return Err(Error::Sampling {
                    coords,
                    value: f64::NAN,
                });
            }
        }
        let h = grid.max_h_x();
        let heat_floor = log_heat_floor(grid, grid.t_coord(0).max(self.t_min.unwrap_or(0.0)));
        let f = |x: &[f64], t: f64| -> f64 {
            match self.kind {
                Kind::ExpT => m::exp(t),
                Kind::ExpDiff => m::exp(t) - m::exp(-t),
                Kind::LogHeat => log_heat(x, t),
                Kind::LogHeatLifted => (log_heat(x, t) - heat_floor).max(0.0),
                Kind::LogAbsX => m::ln(norm(x).max(h)),
                Kind::LogAbsXLifted => m::ln(norm(x).max(h)) - m::ln(h),
                Kind::Step => {
                    if t < 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Kind::Constant => 1.0,
                Kind::RampT => t,
            }
        };
        SampledField::sample(grid.clone(), f)
    }
}

pub fn evaluate_entry(name: &str, grid: &GridSpec) -> Result<SampledField> {
    entry(name)?.evaluate(grid)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestEntry {
    pub name: String,
    pub description: String,
    pub domain: String,
    pub flags: Flags,
}

pub fn manifest() -> Vec<ManifestEntry> {
    let mut out: Vec<ManifestEntry> = ENTRIES
        .iter()
        .map(|e| ManifestEntry {
            name: e.name.to_string(),
            description: e.description.to_string(),
            domain: match e.t_min {
                Some(t) => alloc::format!("t >= {t}"),
                None => "any bounded cylinder".to_string(),
            },
            flags: e.flags,
        })
        .collect();
    out.extend(SIGNALS.iter().map(|s| ManifestEntry {
        name: s.name.to_string(),
        description: s.description.to_string(),
        domain: "1D signal, any bounded interval".to_string(),
        flags: Flags {
            nonnegative: s.nonnegative,
            increasing_in_time: s.increasing,
            expected_pbmo_minus_zero: s.increasing,
            expected_divergent_abs: false,
            time_independent: false,
        },
    }));
    out
}

/// One-dimensional signals for the one-sided toolkit. The variable plays
/// the role of time: "increasing" means nondecreasing in `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignalEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub nonnegative: bool,
    pub increasing: bool,
}

const SIGNALS: [SignalEntry; 4] = [
    SignalEntry {
        name: "sig_step",
        description: "1 for x < 0, else 0",
        nonnegative: true,
        increasing: false,
    },
    SignalEntry {
        name: "sig_log_abs_lifted",
        description: "log max(|x|, h) - log h",
        nonnegative: true,
        increasing: false,
    },
    SignalEntry {
        name: "sig_exp",
        description: "e^x",
        nonnegative: true,
        increasing: true,
    },
    SignalEntry {
        name: "sig_ramp",
        description: "x",
        nonnegative: false,
        increasing: true,
    },
];

pub fn list_signals() -> &'static [SignalEntry] {
    &SIGNALS
}

pub fn evaluate_signal(name: &str, domain: Interval, n: usize) -> Result<Signal> {
    let h = domain.len() / n.max(1) as f64;
    let f: fn(f64, f64) -> f64 = match name {
        "sig_step" => |x, _| if x < 0.0 { 1.0 } else { 0.0 },
        "sig_log_abs_lifted" => |x, h| m::ln(x.abs().max(h)) - m::ln(h),
        "sig_exp" => |x, _| m::exp(x),
        "sig_ramp" => |x, _| x,
        _ => return Err(Error::Configuration(alloc::format!("unknown signal `{name}`"))),
    };
    Signal::sample(domain, n, |x| f(x, h))
}
