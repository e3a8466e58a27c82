//! Command implementations. Each returns its checks, a JSON results object
//! and a CSV table; none of them touch the filesystem except to read a
//! configured field file.

use std::fmt;
use std::str::FromStr;

use parabmo_core::chains::{check_chain, ChainKind};
use parabmo_core::corpus::{self, evaluate_signal, list_signals};
use parabmo_core::czdecomp::{self, stopped_region_nested, verify};
use parabmo_core::dyadic::DyadicGrid;
use parabmo_core::geometry::{Box, Interval};
use parabmo_core::jn::{self, log_moments_convex};
use parabmo_core::maximal::{duality_check, hl_reduction_check, maximal_plain, maximal_star, sandwich_check};
use parabmo_core::oneside::{self, os_cz_verify, IntervalFamily, Signal};
use parabmo_core::seminorms::{bmo_variant_seminorm, double_oscillation, pbmo_seminorm};
use parabmo_core::{
    build_chain, chain_oscillation, decompose, interval_chain, jn_scan, os_bmo_norm, os_cz, os_double_norm,
    os_maximal, ChainSpec, CzConfig, Direction, MaximalConfig, PbmoDirection, SampledField, SeminormEstimate,
    VariantSide,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{GridConfig, RunConfig};
use crate::io::{fmt_f64, opt, Table};
use crate::{Check, Error};

/// Tolerance for reconstruction `u = b + g` in the decompositions.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for chain bounds against the direct oscillation.
pub const CHAIN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Seminorm,
    Maximal,
    VerifyBounded,
    Sandwich,
    Dyadic,
    Cz,
    Chain,
    Jn,
    Oneside,
    Diverge,
    Manifest,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::Seminorm,
        Command::Maximal,
        Command::VerifyBounded,
        Command::Sandwich,
        Command::Dyadic,
        Command::Cz,
        Command::Chain,
        Command::Jn,
        Command::Oneside,
        Command::Diverge,
        Command::Manifest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Seminorm => "seminorm",
            Command::Maximal => "maximal",
            Command::VerifyBounded => "verify-bounded",
            Command::Sandwich => "sandwich",
            Command::Dyadic => "dyadic",
            Command::Cz => "cz",
            Command::Chain => "chain",
            Command::Jn => "jn",
            Command::Oneside => "oneside",
            Command::Diverge => "diverge",
            Command::Manifest => "manifest",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Debug, Default)]
pub struct CommandOutput {
    pub checks: Vec<Check>,
    pub results: Value,
    pub table: Option<Table>,
}

impl CommandOutput {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<CommandOutput, Error> {
    match cmd {
        Command::Seminorm => seminorm(cfg),
        Command::Maximal => maximal(cfg),
        Command::VerifyBounded => verify_bounded(cfg),
        Command::Sandwich => sandwich(cfg),
        Command::Dyadic => dyadic(cfg),
        Command::Cz => cz(cfg),
        Command::Chain => chain(cfg),
        Command::Jn => jn(cfg),
        Command::Oneside => oneside(cfg),
        Command::Diverge => diverge(cfg),
        Command::Manifest => manifest(),
    }
}

/// Field named by the config: a CSV file on the configured grid, or a
/// corpus entry (default `step`). Entries that are singular at early times
/// are sampled on the grid shifted to start at their `t_min`.
pub fn source_field(cfg: &RunConfig) -> Result<(String, SampledField), Error> {
    if let Some(path) = &cfg.source.file {
        if cfg.source.entry.is_some() {
            return Err(Error::Config("source: set either `entry` or `file`, not both".into()));
        }
        let f = crate::io::read_field_file(&cfg.grid.spec()?, path)?;
        return Ok((path.display().to_string(), f));
    }
    let name = cfg.source.entry.as_deref().unwrap_or("step");
    Ok((name.to_string(), entry_field(name, &cfg.grid)?))
}

pub fn entry_field(name: &str, grid: &GridConfig) -> Result<SampledField, Error> {
    let entry = corpus::entry(name)?;
    let grid = match entry.t_min {
        Some(t) => grid.starting_at(t),
        None => grid.clone(),
    };
    Ok(entry.evaluate(&grid.spec()?)?)
}

fn maximal_config(cfg: &RunConfig) -> Result<MaximalConfig, Error> {
    Ok(MaximalConfig::new(
        cfg.shape.gamma,
        cfg.shape.exponent()?,
        cfg.ladder.ladder()?,
        Direction::Backward,
    )?)
}

fn estimate_json(e: &SeminormEstimate) -> Value {
    json!({
        "value": e.value,
        "constant": e.constant,
        "family_size": e.family_size,
        "witness": {
            "center_x": e.witness.center_x,
            "center_t": e.witness.center_t,
            "ell": e.witness.ell,
        },
    })
}

fn estimate_row(name: &str, e: &SeminormEstimate) -> Vec<String> {
    vec![
        name.to_string(),
        fmt_f64(e.value),
        fmt_f64(e.constant),
        fmt_f64(e.witness.center_x[0]),
        fmt_f64(e.witness.center_t),
        fmt_f64(e.witness.ell),
        e.family_size.to_string(),
    ]
}

fn finite_nonnegative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

fn is_nonnegative(f: &SampledField) -> bool {
    (0..f.grid().len()).all(|k| f.value(k).is_none_or(|v| v >= 0.0))
}

/// CSV columns: `quantity,value,constant,center_x,center_t,ell,family_size`.
fn seminorm(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let (name, f) = source_field(cfg)?;
    let fam = cfg.family()?;
    let gamma = cfg.shape.gamma;
    let lag = cfg.shape.lag();
    let minus = pbmo_seminorm(&f, &fam, PbmoDirection::Minus)?;
    let plus = pbmo_seminorm(&f, &fam, PbmoDirection::Plus)?;
    let bmo_plus = bmo_variant_seminorm(&f, &fam, gamma, lag, VariantSide::Plus)?;
    let bmo_minus = bmo_variant_seminorm(&f, &fam, gamma, lag, VariantSide::MinusNeg)?;

    let mut checks = vec![Check::new(
        "estimates_finite_nonnegative",
        [&minus, &plus, &bmo_plus, &bmo_minus].iter().all(|e| finite_nonnegative(e.value)),
        "",
    )];
    let matched = (lag - (2.0 - gamma)).abs() <= 1e-12;
    if matched {
        let lower = bmo_plus.value.max(bmo_minus.value);
        checks.push(Check::new(
            "variants_below_pbmo",
            lower <= minus.value,
            format!("max(bmo+, -bmo-) = {lower}, pbmo- = {}", minus.value),
        ));
    }
    let mut table = Table::new(&["quantity", "value", "constant", "center_x", "center_t", "ell", "family_size"]);
    table.push(estimate_row("pbmo_minus", &minus));
    table.push(estimate_row("pbmo_plus", &plus));
    table.push(estimate_row("bmo_plus", &bmo_plus));
    table.push(estimate_row("bmo_minus_neg", &bmo_minus));
    Ok(CommandOutput {
        checks,
        results: json!({
            "source": name,
            "lag": lag,
            "matched_lag": matched,
            "pbmo_minus": estimate_json(&minus),
            "pbmo_plus": estimate_json(&plus),
            "bmo_plus": estimate_json(&bmo_plus),
            "bmo_minus_neg": estimate_json(&bmo_minus),
        }),
        table: Some(table),
    })
}

/// CSV columns: `x,t,u,m_star_minus,m_plain_minus,m_star_plus`.
fn maximal(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let (name, f) = source_field(cfg)?;
    let mc = maximal_config(cfg)?;
    let star = maximal_star(&f, &mc)?;
    let plain = maximal_plain(&f, &mc)?;
    let forward = maximal_star(&f, &mc.with_direction(Direction::Forward))?;
    let dual = duality_check(&f, &mc)?;
    let mut checks = vec![Check::new(
        "duality_exact",
        dual.max_abs_deviation == 0.0 && dual.mask_mismatches == 0,
        format!("max deviation {}, mask mismatches {}", dual.max_abs_deviation, dual.mask_mismatches),
    )];
    let nonneg = is_nonnegative(&f);
    if nonneg {
        let same = (0..f.grid().len()).all(|k| star.value(k).map(f64::to_bits) == plain.value(k).map(f64::to_bits));
        checks.push(Check::new("plain_equals_star_for_nonnegative", same, ""));
    }
    let hl = hl_reduction_check(&f, &mc)?;
    if hl.time_dependence == 0.0 {
        checks.push(Check::new(
            "hl_reduction_exact",
            hl.max_abs_deviation == 0.0,
            format!("max deviation {} over {} points", hl.max_abs_deviation, hl.compared),
        ));
    }
    let grid = f.grid();
    let mut table = Table::new(&["x", "t", "u", "m_star_minus", "m_plain_minus", "m_star_plus"]);
    for k in 0..grid.len() {
        let (x, t) = grid.point(k);
        table.push(vec![
            fmt_f64(x[0]),
            fmt_f64(t),
            opt(f.value(k)),
            opt(star.value(k)),
            opt(plain.value(k)),
            opt(forward.value(k)),
        ]);
    }
    Ok(CommandOutput {
        checks,
        results: json!({
            "source": name,
            "nonnegative": nonneg,
            "m_star_minus_max": star.max_defined(),
            "m_star_minus_undefined": star.undefined_count(),
            "duality": dual,
            "hl_reduction": hl,
        }),
        table: Some(table),
    })
}

/// CSV columns: `entry,norm_u,norm_maximal,ratio`.
fn verify_bounded(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let fam = cfg.family()?;
    let mc = maximal_config(cfg)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut table = Table::new(&["entry", "norm_u", "norm_maximal", "ratio"]);
    for name in &cfg.verify_bounded.entries {
        let f = entry_field(name, &cfg.grid)?;
        let norm_u = pbmo_seminorm(&f, &fam, PbmoDirection::Minus)?.value;
        let mu = maximal_star(&f, &mc)?;
        let norm_mu = pbmo_seminorm(&mu, &fam, PbmoDirection::Minus)?.value;
        let ratio = (norm_u > 0.0).then(|| norm_mu / norm_u);
        checks.push(Check::new(
            format!("{name}:ratio_finite"),
            norm_mu.is_finite() && ratio.is_none_or(f64::is_finite),
            format!("norm_u = {norm_u}, norm_maximal = {norm_mu}"),
        ));
        if corpus::entry(name)?.flags.expected_pbmo_minus_zero {
            checks.push(Check::new(format!("{name}:zero_norm"), norm_u == 0.0, format!("norm_u = {norm_u}")));
        }
        table.push(vec![name.clone(), fmt_f64(norm_u), fmt_f64(norm_mu), opt(ratio)]);
        rows.push(json!({"entry": name, "norm_u": norm_u, "norm_maximal": norm_mu, "ratio": ratio}));
    }
    Ok(CommandOutput {
        checks,
        results: json!({ "entries": rows }),
        table: Some(table),
    })
}

/// CSV columns: `compared,undefined_count,max_lower_violation,max_upper_violation`.
fn sandwich(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let (name, f) = source_field(cfg)?;
    let rep = sandwich_check(&f, &maximal_config(cfg)?)?;
    let mut table = Table::new(&["compared", "undefined_count", "max_lower_violation", "max_upper_violation"]);
    table.push(vec![
        rep.compared.to_string(),
        rep.undefined_count.to_string(),
        fmt_f64(rep.max_lower_violation),
        fmt_f64(rep.max_upper_violation),
    ]);
    Ok(CommandOutput {
        checks: vec![Check::new(
            "sandwich",
            rep.holds(),
            format!("lower {}, upper {}", rep.max_lower_violation, rep.max_upper_violation),
        )],
        results: json!({ "source": name, "report": rep }),
        table: Some(table),
    })
}

/// Root cube for dyadic commands: configured, or the largest cube at the
/// lower-left corner of the grid whose forward companion (shifted by
/// `forward_factor` parabolic sides) stays inside the time range.
pub fn dyadic_root(cfg: &RunConfig) -> Result<Box, Error> {
    let g = &cfg.grid;
    let p = cfg.shape.p;
    let (rx, rt) = match (cfg.dyadic.root_x, cfg.dyadic.root_t) {
        (Some(x), Some(t)) => (x, t),
        (None, None) => {
            let budget = (g.t[1] - g.t[0]) / (1.0 + cfg.cz.forward_factor);
            let side = (g.x[1] - g.x[0]).min(budget.powf(1.0 / p));
            ([g.x[0], g.x[0] + side], [g.t[0], g.t[0] + side.powf(p)])
        }
        _ => return Err(Error::Config("dyadic: set both `root_x` and `root_t` or neither".into())),
    };
    Ok(Box::new(vec![Interval::new(rx[0], rx[1])], Interval::new(rt[0], rt[1]))?)
}

fn dyadic_grid(cfg: &RunConfig) -> Result<DyadicGrid, Error> {
    Ok(DyadicGrid::new(dyadic_root(cfg)?, cfg.shape.exponent()?, cfg.dyadic.depth)?)
}

/// CSV columns: `generation,index,x_lo,x_hi,t_lo,t_hi,parent_index`.
fn dyadic(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let grid = dyadic_grid(cfg)?;
    let list = cfg.dyadic.list_generations.min(grid.depth());
    let mut partition = true;
    let mut nesting = true;
    let mut index_round_trip = true;
    let mut table = Table::new(&["generation", "index", "x_lo", "x_hi", "t_lo", "t_hi", "parent_index"]);
    for gen in 0..=list {
        for id in grid.generation(gen)? {
            let b = grid.materialize(&id);
            index_round_trip &= grid.from_flat_index(gen, grid.flat_index(&id))? == id;
            if gen < grid.depth() {
                let kids: Vec<Box> = grid.children(&id)?.iter().map(|c| grid.materialize(c)).collect();
                let total: f64 = kids.iter().map(Box::measure).sum();
                partition &= (total - b.measure()).abs() <= 1e-12 * b.measure();
                for (i, k) in kids.iter().enumerate() {
                    nesting &= b.contains_box(k);
                    partition &= kids[i + 1..].iter().all(|o| o.is_disjoint(k));
                }
            }
            let r = grid.record(&id);
            table.push(vec![
                gen.to_string(),
                r.index.to_string(),
                fmt_f64(r.spatial_lo[0]),
                fmt_f64(r.spatial_hi[0]),
                fmt_f64(r.t_lo),
                fmt_f64(r.t_hi),
                r.parent_index.map_or_else(String::new, |i| i.to_string()),
            ]);
        }
    }
    let seq = &grid.seq;
    let (lo, hi) = (2f64.powf(-0.5), 2f64.powf(0.5));
    let distortion: Vec<f64> = (0..=grid.depth()).map(|i| 2f64.powf(seq.distortion_exponent(i))).collect();
    let distortion_ok = distortion.iter().all(|&d| d >= lo && d <= hi);
    Ok(CommandOutput {
        checks: vec![
            Check::new("children_partition_parent", partition, ""),
            Check::new("children_nested", nesting, ""),
            Check::new("flat_index_round_trip", index_round_trip, ""),
            Check::new("distortion_within_sqrt2", distortion_ok, format!("{distortion:?}")),
        ],
        results: json!({
            "root": grid.root,
            "depth": grid.depth(),
            "k": seq.k,
            "distortion": distortion,
            "generation_sizes": (0..=grid.depth()).map(|i| grid.generation_size(i).to_string()).collect::<Vec<_>>(),
        }),
        table: Some(table),
    })
}

fn cz_lambda(mean: f64, cfg_lambda: Option<f64>, factor: f64) -> f64 {
    cfg_lambda.unwrap_or(if mean > 0.0 { factor * mean } else { mean + 1.0 })
}

/// CSV columns: `generation,x_lo,x_hi,t_lo,t_hi,forward_mean,parent_forward_mean`.
fn cz(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let (name, f) = source_field(cfg)?;
    let grid = dyadic_grid(cfg)?;
    let factor = cfg.cz.forward_factor;
    let fb = czdecomp::forward_box(&grid, &grid.root_id(), factor);
    let mean = f.box_average(&fb, parabmo_core::AveragePart::Full)?.mean;
    let lambda = cz_lambda(mean, cfg.cz.lambda, cfg.cz.lambda_factor);
    let dec = decompose(&f, &grid, &CzConfig { lambda, forward_factor: factor })?;
    let rep = verify(&dec, &f, &grid);
    let higher = decompose(&f, &grid, &CzConfig { lambda: 2.0 * lambda - mean, forward_factor: factor })?;
    let nested = stopped_region_nested(&grid, &dec, &higher);
    let mut table = Table::new(&["generation", "x_lo", "x_hi", "t_lo", "t_hi", "forward_mean", "parent_forward_mean"]);
    for s in &dec.stopped {
        table.push(vec![
            s.id.generation.to_string(),
            fmt_f64(s.r#box.space[0].lo),
            fmt_f64(s.r#box.space[0].hi),
            fmt_f64(s.r#box.time.lo),
            fmt_f64(s.r#box.time.hi),
            fmt_f64(s.forward_mean),
            fmt_f64(s.parent_forward_mean),
        ]);
    }
    Ok(CommandOutput {
        checks: vec![
            Check::new("contracts", rep.contracts_hold(), format!("disjoint {}, maximal {}", rep.disjoint, rep.maximal)),
            Check::new(
                "reconstruction",
                rep.reconstruction_error <= RECONSTRUCTION_TOL,
                format!("error {}", rep.reconstruction_error),
            ),
            Check::new("lambda_monotone", nested, ""),
        ],
        results: json!({
            "source": name,
            "root_forward_mean": dec.root_forward_mean,
            "report": rep,
            "unresolved": dec.unresolved.len(),
        }),
        table: Some(table),
    })
}

/// CSV columns: `part,index,x_lo,x_hi,t_lo,t_hi` for every block of the
/// chain (`start_tile`, `target_tile` and `hub` rows for refined chains).
fn chain(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let (name, f) = source_field(cfg)?;
    let c = &cfg.chain;
    let spec = ChainSpec::from_corner(&[c.center_x], c.t, c.ell, vec![c.v], c.tau, c.theta, cfg.shape.exponent()?)?;
    let chain = build_chain(&spec)?;
    let structure = check_chain(&chain);
    let bound = chain_oscillation(&f, &chain)?;
    let direct = double_oscillation(&f, &spec.start, &spec.target())?;
    let mut table = Table::new(&["part", "index", "x_lo", "x_hi", "t_lo", "t_hi"]);
    let mut row = |part: &str, i: usize, b: &Box| {
        table.push(vec![
            part.to_string(),
            i.to_string(),
            fmt_f64(b.space[0].lo),
            fmt_f64(b.space[0].hi),
            fmt_f64(b.time.lo),
            fmt_f64(b.time.hi),
        ])
    };
    match &chain.kind {
        ChainKind::Direct(d) => d.blocks.iter().enumerate().for_each(|(i, b)| row("block", i, b)),
        ChainKind::Refined(r) => {
            r.start_tiles.iter().enumerate().for_each(|(i, b)| row("start_tile", i, b));
            row("hub", 0, &r.hub_lower);
            row("hub", 1, &r.hub_upper);
            r.target_tiles.iter().enumerate().for_each(|(i, b)| row("target_tile", i, b));
        }
    }
    Ok(CommandOutput {
        checks: vec![
            Check::new("structure", structure.all(), format!("{structure:?}")),
            Check::new(
                "bound_dominates_direct",
                bound >= direct - CHAIN_TOL,
                format!("chain bound {bound}, direct {direct}"),
            ),
        ],
        results: json!({
            "source": name,
            "epsilon": chain.epsilon(),
            "chain_bound": bound,
            "direct_oscillation": direct,
            "structure": structure,
            "chain": chain,
        }),
        table: Some(table),
    })
}

/// CSV columns: `c,worst_lower,worst_upper,binding_lower,binding_upper`.
fn jn(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let (name, f) = source_field(cfg)?;
    let fam = cfg.family()?;
    let j = &cfg.jn;
    let c_grid = jn::log_spaced(j.c_min, j.c_max, j.c_count)?;
    let rep = jn_scan(&f, &fam, cfg.shape.gamma, &c_grid, j.moment_cap)?;
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    let mut table = Table::new(&["c", "worst_lower", "worst_upper", "binding_lower", "binding_upper"]);
    for i in 0..rep.c_grid.len() {
        table.push(vec![
            fmt_f64(rep.c_grid[i]),
            fmt_f64(rep.worst_lower[i]),
            fmt_f64(rep.worst_upper[i]),
            fmt_f64(rep.lower_moments[i]),
            fmt_f64(rep.upper_moments[i]),
        ]);
    }
    let at_zero = jn::mean_exp(&[1.0, -2.0, 3.5], 0.0);
    Ok(CommandOutput {
        checks: vec![
            Check::new("moment_one_at_zero", at_zero == 1.0, ""),
            Check::new(
                "moments_nondecreasing",
                nondecreasing(&rep.worst_lower) && nondecreasing(&rep.worst_upper),
                "",
            ),
            Check::new(
                "log_moments_convex",
                log_moments_convex(&rep.c_grid, &rep.worst_lower, 1e-9)
                    && log_moments_convex(&rep.c_grid, &rep.worst_upper, 1e-9),
                "",
            ),
        ],
        results: json!({ "source": name, "report": rep }),
        table: Some(table),
    })
}

fn nondecreasing_defined(s: &Signal) -> bool {
    let v: Vec<f64> = (0..s.len()).filter_map(|k| s.value(k)).collect();
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Shared 1D measurements for one signal.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OnesideRow {
    pub signal: String,
    pub norm_u: f64,
    pub norm_maximal: f64,
    pub ratio: Option<f64>,
    pub double_norm: f64,
    pub maximal_nondecreasing: Option<bool>,
    pub cz: Option<oneside::OsCzReport>,
    pub cz_lambda: Option<f64>,
    pub bad_part_constant: Option<f64>,
}

pub fn oneside_row(cfg: &RunConfig, name: &str, n: usize) -> Result<OnesideRow, Error> {
    let o = &cfg.oneside;
    let entry = list_signals()
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("unknown signal `{name}`")))?;
    let u = evaluate_signal(name, Interval::new(o.domain[0], o.domain[1]), n)?;
    let lengths = o.lengths.ladder()?;
    let fam = IntervalFamily::new(o.stride, lengths.clone())?;
    let big = os_maximal(&u, &lengths)?;
    let norm_u = os_bmo_norm(&u, &fam)?.value;
    let norm_maximal = os_bmo_norm(&big, &fam)?.value;
    let double_norm = os_double_norm(&u, &fam)?.value;
    let ratio = (norm_u > 0.0).then(|| norm_maximal / norm_u);
    let (mut cz, mut cz_lambda, mut bad_part_constant) = (None, None, None);
    if entry.nonnegative {
        let i = Interval::new(o.cz_interval[0], o.cz_interval[1]);
        let mean = os_cz(&u, &i, f64::MAX, 0)?.root_forward_mean;
        let lambda = oneside_lambda(mean, norm_u, o.cz_lambda_offset);
        let dec = os_cz(&u, &i, lambda, o.cz_depth)?;
        let rep = os_cz_verify(&dec, &u);
        if norm_u > 0.0 {
            bad_part_constant = Some(oneside::bad_part_constant(&rep, i.len(), norm_u));
        }
        cz = Some(rep);
        cz_lambda = Some(lambda);
    }
    Ok(OnesideRow {
        signal: name.to_string(),
        norm_u,
        norm_maximal,
        ratio,
        double_norm,
        maximal_nondecreasing: entry.increasing.then(|| nondecreasing_defined(&big)),
        cz,
        cz_lambda,
        bad_part_constant,
    })
}

/// `λ = mean + κ‖u‖_*` (or `mean + κ` for a zero norm), invariant under
/// adding constants to `u`.
pub fn oneside_lambda(root_mean: f64, norm: f64, kappa: f64) -> f64 {
    root_mean + kappa * if norm > 0.0 { norm } else { 1.0 }
}

/// CSV columns: `signal,norm_u,norm_maximal,ratio,double_norm,bad_part_constant`.
fn oneside(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let o = &cfg.oneside;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut table = Table::new(&["signal", "norm_u", "norm_maximal", "ratio", "double_norm", "bad_part_constant"]);
    for name in &o.signals {
        let r = oneside_row(cfg, name, o.n)?;
        checks.push(Check::new(
            format!("{name}:ratio_finite"),
            r.norm_maximal.is_finite() && r.ratio.is_none_or(f64::is_finite),
            "",
        ));
        if let Some(mono) = r.maximal_nondecreasing {
            checks.push(Check::new(format!("{name}:maximal_nondecreasing"), mono, ""));
            checks.push(Check::new(
                format!("{name}:zero_norms"),
                r.norm_u == 0.0 && r.norm_maximal == 0.0 && r.double_norm == 0.0,
                format!("{} {} {}", r.norm_u, r.norm_maximal, r.double_norm),
            ));
        }
        if let (Some(rep), Some(lambda)) = (&r.cz, r.cz_lambda) {
            checks.push(Check::new(
                format!("{name}:cz_contracts"),
                rep.disjoint
                    && rep.maximal
                    && rep.reconstruction_error <= RECONSTRUCTION_TOL
                    && rep.on_interval_g_max.is_none_or(|g| g <= lambda),
                format!("{rep:?}"),
            ));
        }
        table.push(vec![
            name.clone(),
            fmt_f64(r.norm_u),
            fmt_f64(r.norm_maximal),
            opt(r.ratio),
            fmt_f64(r.double_norm),
            opt(r.bad_part_constant),
        ]);
        rows.push(r);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chain_ok = 0usize;
    let mut worst_theta_ratio: f64 = 0.0;
    for _ in 0..o.chain_cases {
        let x = rng.gen_range(-1.0..1.0);
        let d = rng.gen_range(0.01..1.0);
        let h = d / rng.gen_range(0.02..0.99);
        let tr = interval_chain(x, x + d, h, 64)?;
        worst_theta_ratio = worst_theta_ratio.max(tr.theta_sum() / h);
        chain_ok += (tr.theta_sum() <= h && tr.strictly_decreasing()) as usize;
    }
    checks.push(Check::new(
        "interval_chains",
        chain_ok == o.chain_cases,
        format!("{chain_ok}/{} traces valid", o.chain_cases),
    ));
    Ok(CommandOutput {
        checks,
        results: json!({
            "signals": rows,
            "chain_cases": o.chain_cases,
            "worst_theta_sum_over_h": worst_theta_ratio,
        }),
        table: Some(table),
    })
}

/// `|e^t − e^{−t}|` on `[x0, x1] × [−T, T]`.
pub fn diverge_field(cfg: &RunConfig, window: f64) -> Result<SampledField, Error> {
    let d = &cfg.diverge;
    let grid = GridConfig {
        x: cfg.grid.x,
        t: [-window, window],
        nx: d.nx,
        nt: d.nt,
    };
    Ok(SampledField::sample(grid.spec()?, |_, t| (t.exp() - (-t).exp()).abs())?)
}

/// CSV columns: `window,value,ratio_to_previous`.
fn diverge(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let d = &cfg.diverge;
    let fam = parabmo_core::RectangleFamily::new(
        cfg.family.stride.to_vec(),
        d.ladder.ladder()?,
        cfg.shape.gamma,
        cfg.shape.exponent()?,
    )?;
    let mut values = Vec::new();
    let mut table = Table::new(&["window", "value", "ratio_to_previous"]);
    for &w in &d.windows {
        let f = diverge_field(cfg, w)?;
        let v = pbmo_seminorm(&f, &fam, PbmoDirection::Minus)?.value;
        let ratio = values.last().map(|&(_, prev): &(f64, f64)| v / prev);
        table.push(vec![fmt_f64(w), fmt_f64(v), opt(ratio)]);
        values.push((w, v));
    }
    let mut checks = Vec::new();
    for pair in values.windows(2) {
        let ((w0, v0), (w1, v1)) = (pair[0], pair[1]);
        if (w1 - 2.0 * w0).abs() <= 1e-12 * w1 {
            checks.push(Check::new(
                format!("doubling_{w0}_to_{w1}"),
                v1 >= 2.0 * v0 && v0 > 0.0,
                format!("{v0} -> {v1}"),
            ));
        }
    }
    Ok(CommandOutput {
        checks,
        results: json!({
            "windows": values.iter().map(|&(w, v)| json!({"window": w, "value": v})).collect::<Vec<_>>(),
        }),
        table: Some(table),
    })
}

/// CSV columns: `name,domain,nonnegative,increasing_in_time,time_independent`.
fn manifest() -> Result<CommandOutput, Error> {
    let m = corpus::manifest();
    let mut table = Table::new(&["name", "domain", "nonnegative", "increasing_in_time", "time_independent"]);
    for e in &m {
        table.push(vec![
            e.name.clone(),
            e.domain.clone(),
            e.flags.nonnegative.to_string(),
            e.flags.increasing_in_time.to_string(),
            e.flags.time_independent.to_string(),
        ]);
    }
    Ok(CommandOutput {
        checks: Vec::new(),
        results: json!({ "entries": m }),
        table: Some(table),
    })
}
