//! TOML run configuration.
//!
//! Every section has defaults, so an empty file is a valid config. Unknown
//! keys are rejected so typos surface as diagnostics instead of silently
//! falling back to defaults.

use std::path::{Path, PathBuf};

use parabmo_core::{Exponent, GridSpec, Ladder, RectangleFamily};
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand; the command line takes precedence.
    pub command: Option<String>,
    pub seed: u64,
    pub grid: GridConfig,
    pub shape: ShapeConfig,
    pub ladder: LadderConfig,
    pub family: FamilyConfig,
    pub source: SourceConfig,
    pub output: OutputConfig,
    pub verify_bounded: VerifyBoundedConfig,
    pub dyadic: DyadicConfig,
    pub cz: CzSection,
    pub chain: ChainSection,
    pub jn: JnSection,
    pub oneside: OnesideSection,
    pub diverge: DivergeSection,
}

/// `n = 1` lattice over `x × t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x: [f64; 2],
    pub t: [f64; 2],
    pub nx: usize,
    pub nt: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x: [-1.0, 1.0],
            t: [-1.0, 1.0],
            nx: 64,
            nt: 64,
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, Error> {
        Ok(GridSpec::new_1d(
            (self.x[0], self.x[1]),
            (self.t[0], self.t[1]),
            self.nx,
            self.nt,
        )?)
    }

    /// The same lattice with time shifted so that it starts at `t_min` or
    /// later.
    pub fn starting_at(&self, t_min: f64) -> GridConfig {
        let shift = (t_min - self.t[0]).max(0.0);
        GridConfig {
            t: [self.t[0] + shift, self.t[1] + shift],
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeConfig {
    pub p: f64,
    pub gamma: f64,
    /// Offset of the shifted companion in the one-sided variants, in units
    /// of `ℓ^p`. `2 − γ` makes the companion coincide with `R⁺(γ)`.
    pub lag: Option<f64>,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            p: 2.0,
            gamma: 0.5,
            lag: None,
        }
    }
}

impl ShapeConfig {
    pub fn exponent(&self) -> Result<Exponent, Error> {
        Ok(Exponent::new(self.p)?)
    }

    pub fn lag(&self) -> f64 {
        self.lag.unwrap_or(2.0 - self.gamma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    pub ell_min: f64,
    pub ell_max: f64,
    pub ratio: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            ell_min: 0.125,
            ell_max: 1.0,
            ratio: 2f64.powf(0.25),
        }
    }
}

impl LadderConfig {
    pub fn ladder(&self) -> Result<Ladder, Error> {
        Ok(Ladder::new(self.ell_min, self.ell_max, self.ratio)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Center stride `[x, t]` in lattice points.
    pub stride: [usize; 2],
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig { stride: [2, 2] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// Corpus entry name.
    pub entry: Option<String>,
    /// Field CSV on the configured grid.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            csv: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBoundedConfig {
    pub entries: Vec<String>,
}

impl Default for VerifyBoundedConfig {
    fn default() -> Self {
        VerifyBoundedConfig {
            entries: vec!["exp_t".into(), "log_heat_lifted".into(), "step".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DyadicConfig {
    /// Root cube `[x0, x1) × [t0, t1)`; defaults to the largest cube in the
    /// lower-left corner of the grid whose forward companion still fits.
    pub root_x: Option<[f64; 2]>,
    pub root_t: Option<[f64; 2]>,
    pub depth: usize,
    /// Generations listed in the CSV.
    pub list_generations: usize,
}

impl Default for DyadicConfig {
    fn default() -> Self {
        DyadicConfig {
            root_x: None,
            root_t: None,
            depth: 6,
            list_generations: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CzSection {
    /// Stopping level; when absent, `lambda_factor` times the root forward
    /// mean (or plus one if that mean is not positive).
    pub lambda: Option<f64>,
    pub lambda_factor: f64,
    pub forward_factor: f64,
}

impl Default for CzSection {
    fn default() -> Self {
        CzSection {
            lambda: None,
            lambda_factor: 2.0,
            forward_factor: parabmo_core::czdecomp::DEFAULT_FORWARD_FACTOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub center_x: f64,
    pub t: f64,
    pub ell: f64,
    pub v: f64,
    pub tau: f64,
    pub theta: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            center_x: 0.0,
            t: -0.9,
            ell: 0.5,
            v: 0.1,
            tau: 4.0,
            theta: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JnSection {
    pub c_min: f64,
    pub c_max: f64,
    pub c_count: usize,
    pub moment_cap: f64,
}

impl Default for JnSection {
    fn default() -> Self {
        JnSection {
            c_min: 1e-2,
            c_max: 1e2,
            c_count: 32,
            moment_cap: parabmo_core::jn::DEFAULT_MOMENT_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnesideSection {
    pub domain: [f64; 2],
    pub n: usize,
    pub signals: Vec<String>,
    pub lengths: LadderConfig,
    pub stride: usize,
    /// Root interval `I` of the decomposition; the level is the root
    /// forward mean plus `cz_lambda_offset` times the norm.
    pub cz_interval: [f64; 2],
    pub cz_lambda_offset: f64,
    pub cz_depth: u32,
    pub chain_cases: usize,
}

impl Default for OnesideSection {
    fn default() -> Self {
        OnesideSection {
            domain: [-1.0, 1.0],
            n: 256,
            signals: parabmo_core::corpus::list_signals()
                .iter()
                .map(|s| s.name.to_string())
                .collect(),
            lengths: LadderConfig {
                ell_min: 1.0 / 32.0,
                ell_max: 0.5,
                ratio: 2f64.powf(0.25),
            },
            stride: 1,
            cz_interval: [-0.5, -0.25],
            cz_lambda_offset: 0.25,
            cz_depth: 8,
            chain_cases: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergeSection {
    /// Half-widths `T` of the time windows `[−T, T]`.
    pub windows: Vec<f64>,
    pub nx: usize,
    pub nt: usize,
    pub ladder: LadderConfig,
}

impl Default for DivergeSection {
    fn default() -> Self {
        DivergeSection {
            windows: vec![2.0, 4.0, 8.0],
            nx: 64,
            nt: 64,
            ladder: LadderConfig {
                ell_min: 1.0,
                ell_max: 1.0,
                ratio: 2.0,
            },
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    pub fn family(&self) -> Result<RectangleFamily, Error> {
        Ok(RectangleFamily::new(
            self.family.stride.to_vec(),
            self.ladder.ladder()?,
            self.shape.gamma,
            self.shape.exponent()?,
        )?)
    }
}
