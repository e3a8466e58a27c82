//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines appear in `cargo test`
//! output; the process exits nonzero if any criterion fails.

use std::time::Instant;

use parabmo::commands::oneside_lambda;
use parabmo_core::chains::{check_chain, ChainKind};
use parabmo_core::corpus::{evaluate_signal, list_entries, list_signals};
use parabmo_core::czdecomp::{forward_box, stopped_region_nested, verify};
use parabmo_core::dyadic::exponent_sequence;
use parabmo_core::field::AveragePart;
use parabmo_core::geometry::{Box, Interval};
use parabmo_core::jn::{self, exp_moment, MomentSide};
use parabmo_core::maximal::{duality_check, hl_reduction_check, maximal_plain, maximal_star, sandwich_check};
use parabmo_core::oneside::{bad_part_constant, os_cz_verify, IntervalFamily, OsCzDecomposition, Signal};
use parabmo_core::seminorms::{bmo_variant_seminorm, double_oscillation, optimal_constant, pbmo_seminorm};
use parabmo_core::{
    build_chain, build_grid, chain_oscillation, decompose, interval_chain, jn_scan, os_bmo_norm, os_cz,
    os_double_norm, os_maximal, ChainSpec, CorpusEntry, CzConfig, Direction, Exponent, GridSpec, Ladder,
    MaximalConfig, PbmoDirection, RectangleFamily, SampledField, VariantSide,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn p(v: f64) -> Exponent {
    Exponent::new(v).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid(x: (f64, f64), t: (f64, f64), nx: usize, nt: usize) -> GridSpec {
    GridSpec::new_1d(x, t, nx, nt).unwrap()
}

/// Corpus entry on `[-1, 1]²`, shifted in time to start at its `t_min`.
fn corpus_grid(e: &CorpusEntry, n: usize) -> GridSpec {
    match e.t_min {
        Some(t0) => grid((-1.0, 1.0), (t0, t0 + 2.0), n, n),
        None => grid((-1.0, 1.0), (-1.0, 1.0), n, n),
    }
}

fn entry(name: &str) -> &'static CorpusEntry {
    list_entries().iter().find(|e| e.name == name).unwrap()
}

fn field(name: &str, n: usize) -> SampledField {
    let e = entry(name);
    e.evaluate(&corpus_grid(e, n)).unwrap()
}

fn ladder(min: f64, max: f64, ratio: f64) -> Ladder {
    Ladder::new(min, max, ratio).unwrap()
}

fn family(stride: usize, l: Ladder, gamma: f64) -> RectangleFamily {
    RectangleFamily::uniform(1, stride, l, gamma, p(2.0)).unwrap()
}

fn rel_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs().max(f64::MIN_POSITIVE)
}

fn random_field(g: GridSpec, r: &mut ChaCha8Rng) -> SampledField {
    let vals = (0..g.len()).map(|_| r.gen_range(-2.0..2.0)).collect();
    SampledField::from_values(g, vals).unwrap()
}

fn random_box(g: &GridSpec, r: &mut ChaCha8Rng) -> Box {
    let c = &g.cylinder;
    let span = |iv: &Interval, r: &mut ChaCha8Rng| {
        let a = r.gen_range(iv.lo..iv.hi);
        let b = r.gen_range(iv.lo..iv.hi);
        Interval::new(a.min(b), a.max(b) + 1e-3 * iv.len())
    };
    let x = span(&c.space[0], r);
    let t = span(&c.time, r);
    Box::new(vec![x], t).unwrap()
}

/// Smooth nonnegative field: a floor plus a few random bumps.
fn bumps(g: GridSpec, r: &mut ChaCha8Rng) -> SampledField {
    let c = g.cylinder.clone();
    let spec: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                r.gen_range(0.5..5.0),
                r.gen_range(c.space[0].lo..c.space[0].hi),
                r.gen_range(c.time.lo..c.time.hi),
                r.gen_range(0.05..0.3),
            )
        })
        .collect();
    SampledField::sample(g, |x, t| {
        0.1 + spec
            .iter()
            .map(|&(a, cx, ct, w)| a * (-((x[0] - cx).powi(2) + (t - ct).powi(2)) / (w * w)).exp())
            .sum::<f64>()
    })
    .unwrap()
}

// ---------------------------------------------------------------- 1

fn naive_objective(lower: &[f64], upper: &[f64], a: f64) -> f64 {
    let l: f64 = lower.iter().map(|&u| (u - a).max(0.0)).sum::<f64>() / lower.len() as f64;
    let u: f64 = upper.iter().map(|&u| (a - u).max(0.0)).sum::<f64>() / upper.len() as f64;
    l + u
}

fn criterion_1() -> Outcome {
    let mut r = rng(1);
    let mut worst_avg: f64 = 0.0;
    for _ in 0..1000 {
        let g = grid((-1.0, 1.0), (0.0, 2.0), r.gen_range(4..40), r.gen_range(4..40));
        let f = random_field(g.clone(), &mut r);
        let b = random_box(&g, &mut r);
        let Ok(rep) = f.box_average(&b, AveragePart::Full) else { continue };
        let members: Vec<f64> = (0..g.len()).filter(|&k| g.sample_in_box(k, &b)).map(|k| f.values()[k]).collect();
        if members.len() != rep.sample_count {
            return Err(format!("sample count {} vs {}", rep.sample_count, members.len()));
        }
        let direct = members.iter().sum::<f64>() / members.len() as f64;
        worst_avg = worst_avg.max((rep.mean - direct).abs() / direct.abs().max(1.0));
    }
    if worst_avg > 1e-10 {
        return Err(format!("prefix average deviation {worst_avg:e}"));
    }

    let mut worst_a: f64 = 0.0;
    for _ in 0..500 {
        let lower: Vec<f64> = (0..r.gen_range(1..40)).map(|_| r.gen_range(-3.0..3.0)).collect();
        let upper: Vec<f64> = (0..r.gen_range(1..40)).map(|_| r.gen_range(-3.0..3.0)).collect();
        let (_, v) = optimal_constant(&lower, &upper).unwrap();
        // the minimum of a convex piecewise-linear function sits on a
        // breakpoint, so the dense scan includes the samples themselves
        let scan = (0..=6000)
            .map(|i| -3.0 + 6.0 * i as f64 / 6000.0)
            .chain(lower.iter().chain(&upper).copied())
            .map(|a| naive_objective(&lower, &upper, a))
            .fold(f64::INFINITY, f64::min);
        worst_a = worst_a.max((v - scan).abs());
    }
    if worst_a > 1e-9 {
        return Err(format!("optimal constant deviation {worst_a:e}"));
    }

    let mut worst_d: f64 = 0.0;
    for _ in 0..200 {
        let g = grid((-1.0, 1.0), (0.0, 2.0), 24, 48);
        let f = random_field(g.clone(), &mut r);
        let x0 = r.gen_range(-1.0..0.0);
        let x1 = r.gen_range(-1.0..0.0);
        let ta = r.gen_range(0.0..0.8);
        let a = Box::new(vec![Interval::new(x0, x0 + 0.5)], Interval::new(ta, ta + 0.3)).unwrap();
        let tb = r.gen_range(ta + 0.35..1.6);
        let b = Box::new(vec![Interval::new(x1, x1 + 0.6)], Interval::new(tb, tb + 0.35)).unwrap();
        let fast = double_oscillation(&f, &a, &b).unwrap();
        let xa = f.samples_in(&a).unwrap();
        let xb = f.samples_in(&b).unwrap();
        let mut s = 0.0;
        for &u in &xa {
            for &v in &xb {
                s += (u - v).max(0.0);
            }
        }
        let slow = s / (xa.len() * xb.len()) as f64;
        worst_d = worst_d.max((fast - slow).abs() / slow.max(1.0));
    }
    if worst_d > 1e-10 {
        return Err(format!("double oscillation deviation {worst_d:e}"));
    }
    Ok(format!(
        "averages {worst_avg:.1e}, optimal constant {worst_a:.1e}, double oscillation {worst_d:.1e}"
    ))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let root = Box::new(vec![Interval::new(0.0, 1.0)], Interval::new(0.0, 1.0)).unwrap();
    let mut boundary_hits = 0;
    for pv in [1.5, 2.0, std::f64::consts::E, std::f64::consts::PI] {
        let depth = 12;
        let seq = exponent_sequence(p(pv), depth).unwrap();
        for i in 0..=depth {
            let e = seq.distortion_exponent(i);
            if e.abs() > 0.5 {
                return Err(format!("p = {pv}: distortion exponent {e} at generation {i}"));
            }
            boundary_hits += (e.abs() == 0.5) as usize;
        }
        let g = build_grid(root.clone(), p(pv), depth).unwrap();
        for gen in 0..depth {
            // whole generations while small, random members beyond
            let size = g.generation_size(gen);
            let ids: Vec<_> = if size <= 4096 {
                let all = g.generation(gen).unwrap();
                let total: f64 = all.iter().map(|id| g.materialize(id).measure()).sum();
                if total != root.measure() {
                    return Err(format!("p = {pv}: generation {gen} covers {total}"));
                }
                let mut boxes: Vec<Box> = all.iter().map(|id| g.materialize(id)).collect();
                boxes.sort_by(|a, b| a.time.lo.total_cmp(&b.time.lo).then(a.space[0].lo.total_cmp(&b.space[0].lo)));
                if boxes.windows(2).any(|w| !w[0].is_disjoint(&w[1])) {
                    return Err(format!("p = {pv}: generation {gen} overlaps"));
                }
                all
            } else {
                (0..64).map(|_| g.from_flat_index(gen, r.gen_range(0..size)).unwrap()).collect()
            };
            for id in ids {
                let parent = g.materialize(&id);
                let kids = g.children(&id).unwrap();
                let boxes: Vec<Box> = kids.iter().map(|k| g.materialize(k)).collect();
                let total: f64 = boxes.iter().map(Box::measure).sum();
                if total != parent.measure() {
                    return Err(format!("p = {pv}: children of {id:?} cover {total} of {}", parent.measure()));
                }
                for (i, b) in boxes.iter().enumerate() {
                    if !parent.contains_box(b) || boxes[i + 1..].iter().any(|o| !o.is_disjoint(b)) {
                        return Err(format!("p = {pv}: children of {id:?} not nested/disjoint"));
                    }
                    if g.parent(&kids[i]).unwrap() != id || g.from_flat_index(gen + 1, g.flat_index(&kids[i])).unwrap() != kids[i] {
                        return Err(format!("p = {pv}: index round trip failed below {id:?}"));
                    }
                }
            }
        }
    }
    for _ in 0..200 {
        let b = Box::new(
            vec![Interval::new(r.gen_range(-4..4) as f64 / 8.0, r.gen_range(4..12) as f64 / 8.0)],
            Interval::new(r.gen_range(-4..4) as f64 / 16.0, r.gen_range(4..12) as f64 / 16.0),
        )
        .unwrap();
        let dt = r.gen_range(-64..64) as f64 / 32.0;
        if b.translate_time(0.0) != b
            || b.translate_space(&[0.0]) != b
            || b.translate_time(dt).translate_time(-dt) != b
        {
            return Err(format!("translation identity failed for {b:?}"));
        }
    }
    Ok(format!(
        "partition/nesting/index exact for p in {{1.5, 2, e, pi}}, depth 12; distortion within [2^-1/2, 2^1/2] ({boundary_hits} generations on the boundary)"
    ))
}

// ---------------------------------------------------------------- 3

fn maximal_cfg(l: Ladder) -> MaximalConfig {
    MaximalConfig::new(0.5, p(2.0), l, Direction::Backward).unwrap()
}

fn criterion_3() -> Outcome {
    let cfg = maximal_cfg(ladder(0.125, 1.0, 2f64.powf(0.25)));
    let mut notes = Vec::new();
    for e in list_entries() {
        let f = field(e.name, 64);
        let d = duality_check(&f, &cfg).unwrap();
        if d.max_abs_deviation != 0.0 || d.mask_mismatches != 0 {
            return Err(format!("{}: duality deviation {}", e.name, d.max_abs_deviation));
        }
        if e.flags.nonnegative {
            let a = maximal_star(&f, &cfg).unwrap();
            let b = maximal_plain(&f, &cfg).unwrap();
            if (0..f.grid().len()).any(|k| a.value(k).map(f64::to_bits) != b.value(k).map(f64::to_bits)) {
                return Err(format!("{}: plain and star differ", e.name));
            }
        }
        if e.flags.time_independent {
            // tall enough that every spatially admissible rung fits in time
            // at the middle slice, with rungs coarse enough to resolve there
            let tall = e.evaluate(&grid((-1.0, 1.0), (-1.5, 1.5), 64, 96)).unwrap();
            let h = hl_reduction_check(&tall, &maximal_cfg(ladder(0.5, 1.0, 2f64.powf(0.25)))).unwrap();
            if h.compared == 0 || h.skipped != 0 {
                return Err(format!("{}: HL reduction compared {} and skipped {}", e.name, h.compared, h.skipped));
            }
            if h.time_dependence != 0.0 || h.max_abs_deviation != 0.0 {
                return Err(format!("{}: HL reduction deviation {}", e.name, h.max_abs_deviation));
            }
            notes.push(format!("{} ({} pts)", e.name, h.compared));
        }
    }
    Ok(format!("duality exact on {} entries; HL reduction exact on {}", list_entries().len(), notes.join(", ")))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let cfg = maximal_cfg(ladder(0.125, 1.0, 2f64.powf(0.25)));
    let mut compared = 0;
    for e in list_entries() {
        let rep = sandwich_check(&field(e.name, 128), &cfg).unwrap();
        if !rep.holds() {
            return Err(format!("{}: {rep:?}", e.name));
        }
        compared += rep.compared;
    }
    Ok(format!("violation 0 at {compared} lattice points over {} entries", list_entries().len()))
}

// ---------------------------------------------------------------- 5

fn boundedness_ratio(name: &str, n: usize, ratio: f64) -> (f64, f64, f64) {
    let f = field(name, n);
    // capped at the largest coarse rung whose rectangles fit in the time
    // window, so the finer ladder refines the same range of scales
    let l = ladder(0.125, 2f64.powf(-0.25), ratio);
    let fam = family(n / 32, l.clone(), 0.5);
    let mu = maximal_star(&f, &maximal_cfg(l)).unwrap();
    let nu = pbmo_seminorm(&f, &fam, PbmoDirection::Minus).unwrap().value;
    let nm = pbmo_seminorm(&mu, &fam, PbmoDirection::Minus).unwrap().value;
    (nm / nu, nu, nm)
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["log_heat_lifted", "step", "log_abs_x_lifted"] {
        let (base, nu, _) = boundedness_ratio(name, 128, 2f64.powf(0.25));
        let (fine, _, _) = boundedness_ratio(name, 256, 2f64.powf(0.25));
        let (dense, _, _) = boundedness_ratio(name, 128, 2f64.powf(0.125));
        let (dg, dl) = (rel_change(base, fine), rel_change(base, dense));
        ok &= base.is_finite() && nu > 0.0 && dg < 0.1 && dl < 0.1;
        lines.push(format!("{name}: C = {base:.4} (grid {:+.1}%, ladder {:+.1}%)", 100.0 * dg, 100.0 * dl));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let fam = family(2, ladder(0.125, 1.0, 2f64.powf(0.25)), 0.5);
    let mut names = Vec::new();
    for e in list_entries().iter().filter(|e| e.flags.increasing_in_time) {
        let f = field(e.name, 64);
        let vals = [
            pbmo_seminorm(&f, &fam, PbmoDirection::Minus).unwrap().value,
            bmo_variant_seminorm(&f, &fam, 0.5, 1.5, VariantSide::Plus).unwrap().value,
            bmo_variant_seminorm(&f, &fam, 0.5, 1.5, VariantSide::MinusNeg).unwrap().value,
        ];
        if vals.iter().any(|&v| v != 0.0) {
            return Err(format!("{}: {vals:?}", e.name));
        }
        names.push(e.name);
    }
    let lengths = ladder(1.0 / 32.0, 0.5, 2f64.powf(0.25));
    let fam1 = IntervalFamily::new(1, lengths.clone()).unwrap();
    for s in list_signals().iter().filter(|s| s.increasing) {
        let u = evaluate_signal(s.name, Interval::new(-1.0, 1.0), 256).unwrap();
        let big = os_maximal(&u, &lengths).unwrap();
        let vals = [
            os_bmo_norm(&u, &fam1).unwrap().value,
            os_double_norm(&u, &fam1).unwrap().value,
            os_bmo_norm(&big, &fam1).unwrap().value,
        ];
        if vals.iter().any(|&v| v != 0.0) {
            return Err(format!("{}: {vals:?}", s.name));
        }
        names.push(s.name);
    }
    Ok(format!("all estimates exactly 0 on {}", names.join(", ")))
}

// ---------------------------------------------------------------- 7

/// Brute-force PBMO⁻ over centers on every second lattice point and the
/// given ladder: samples gathered by direct membership tests, constant
/// found by scanning every breakpoint with plain sums.
fn brute_pbmo(f: &SampledField, ells: &[f64], gamma: f64, pv: f64) -> f64 {
    let g = f.grid();
    let cyl = g.cylinder.as_box();
    let mut best: f64 = 0.0;
    for flat in 0..g.len() {
        let idx = g.unflatten(flat);
        if idx.iter().any(|i| i % 2 != 0) {
            continue;
        }
        let (x, t) = g.point(flat);
        for &ell in ells {
            let s = ell.powf(pv);
            let space = vec![Interval::new(x[0] - ell / 2.0, x[0] + ell / 2.0)];
            let full = Box::new(space.clone(), Interval::new(t - s, t + s)).unwrap();
            if !cyl.contains_box(&full) {
                continue;
            }
            let lo = Box::new(space.clone(), Interval::new(t - s, t - (1.0 - gamma) * s)).unwrap();
            let hi = Box::new(space, Interval::new(t + (1.0 - gamma) * s, t + s)).unwrap();
            let gather = |b: &Box| -> Option<Vec<f64>> {
                let ks: Vec<usize> = (0..g.len()).filter(|&k| g.sample_in_box(k, b)).collect();
                let mut xs: Vec<usize> = ks.iter().map(|&k| g.unflatten(k)[0]).collect();
                let mut ts: Vec<usize> = ks.iter().map(|&k| g.unflatten(k)[1]).collect();
                xs.dedup();
                ts.sort();
                ts.dedup();
                (xs.len() >= 2 && ts.len() >= 2).then(|| ks.iter().map(|&k| f.values()[k]).collect())
            };
            let (Some(l), Some(u)) = (gather(&lo), gather(&hi)) else { continue };
            let v = l
                .iter()
                .chain(&u)
                .map(|&a| naive_objective(&l, &u, a))
                .fold(f64::INFINITY, f64::min);
            best = best.max(v);
        }
    }
    best
}

fn criterion_7() -> Outcome {
    let ells = [1.0];
    let fam = family(2, ladder(1.0, 1.0, 2.0), 0.5);
    let mut values = Vec::new();
    for w in [2.0, 4.0, 8.0] {
        let g = grid((-1.0, 1.0), (-w, w), 64, 64);
        let f = SampledField::sample(g, |_, t| (t.exp() - (-t).exp()).abs()).unwrap();
        let est = pbmo_seminorm(&f, &fam, PbmoDirection::Minus).unwrap().value;
        let oracle = brute_pbmo(&f, &ells, 0.5, 2.0);
        if (est - oracle).abs() > 1e-9 * oracle.max(1.0) {
            return Err(format!("T = {w}: estimate {est} vs brute force {oracle}"));
        }
        values.push(est);
    }
    let r1 = values[1] / values[0];
    let r2 = values[2] / values[1];
    let msg = format!("values {values:.4?}, ratios {r1:.2}, {r2:.2} (brute force agrees)");
    if r1 >= 2.0 && r2 >= 2.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 8

fn interval_nested(lower: &OsCzDecomposition, higher: &OsCzDecomposition) -> bool {
    higher.stopped.iter().all(|h| {
        lower
            .stopped
            .iter()
            .any(|l| l.interval.lo <= h.interval.lo && h.interval.hi <= l.interval.hi)
    })
}

fn criterion_8() -> Outcome {
    let root = Box::new(vec![Interval::new(0.0, 1.0)], Interval::new(0.0, 1.0)).unwrap();
    let dg = build_grid(root, p(2.0), 3).unwrap();
    let mut stopped = 0;
    for seed in 0..100u64 {
        let mut r = rng(800 + seed);
        let f = bumps(grid((0.0, 1.0), (0.0, 4.0), 64, 512), &mut r);
        let mean = f.box_average(&forward_box(&dg, &dg.root_id(), 2.0), AveragePart::Full).unwrap().mean;
        let lambda = mean * r.gen_range(1.05..3.0);
        let dec = decompose(&f, &dg, &CzConfig::new(lambda)).unwrap();
        let rep = verify(&dec, &f, &dg);
        if !rep.contracts_hold() || rep.reconstruction_error > 1e-12 {
            return Err(format!("parabolic seed {seed}: {rep:?}"));
        }
        let higher = decompose(&f, &dg, &CzConfig::new(lambda * r.gen_range(1.05..2.0))).unwrap();
        if !stopped_region_nested(&dg, &dec, &higher) {
            return Err(format!("parabolic seed {seed}: stopped regions not nested"));
        }
        stopped += rep.stopped_count;
    }
    let mut stopped_1d = 0;
    let i = Interval::new(1.0, 1.5);
    for seed in 0..100u64 {
        let mut r = rng(900 + seed);
        let spec: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| (r.gen_range(0.5..5.0), r.gen_range(0.0..4.0), r.gen_range(0.02..0.3)))
            .collect();
        let u = Signal::sample(Interval::new(0.0, 4.0), 512, |x| {
            0.1 + spec.iter().map(|&(a, c, w)| a * (-(x - c).powi(2) / (w * w)).exp()).sum::<f64>()
        })
        .unwrap();
        let mean = os_cz(&u, &i, f64::MAX, 0).unwrap().root_forward_mean;
        let lambda = mean * r.gen_range(1.05..3.0);
        let dec = os_cz(&u, &i, lambda, 8).unwrap();
        let rep = os_cz_verify(&dec, &u);
        let g_ok = rep.on_interval_g_max.is_none_or(|g| g <= lambda);
        if !(rep.disjoint && rep.maximal && g_ok && rep.reconstruction_error <= 1e-12) {
            return Err(format!("1D seed {seed}: {rep:?}"));
        }
        let higher = os_cz(&u, &i, lambda * r.gen_range(1.05..2.0), 8).unwrap();
        if !interval_nested(&dec, &higher) {
            return Err(format!("1D seed {seed}: stopped intervals not nested"));
        }
        stopped_1d += rep.stopped_count;
    }
    Ok(format!("100 + 100 seeds; {stopped} parabolic and {stopped_1d} 1D stopped boxes, all contracts exact"))
}

// ---------------------------------------------------------------- 9

fn chain_boxes(chain: &parabmo_core::chains::Chain) -> Vec<Box> {
    fn direct(d: &parabmo_core::chains::DirectChain, out: &mut Vec<Box>) {
        for list in [&d.blocks, &d.companions_plus, &d.companions_minus, &d.overlaps] {
            out.extend(list.iter().cloned());
        }
    }
    let mut out = vec![chain.spec.start.clone(), chain.spec.target()];
    match &chain.kind {
        ChainKind::Direct(d) => direct(d, &mut out),
        ChainKind::Refined(rc) => {
            out.extend(rc.start_tiles.iter().cloned());
            out.extend(rc.target_tiles.iter().cloned());
            out.push(rc.hub_lower.clone());
            out.push(rc.hub_upper.clone());
            for d in rc.to_hub.iter().chain(&rc.from_hub) {
                direct(d, &mut out);
            }
        }
    }
    out
}

/// Lattice over the hull of every box in the chain, fine enough that the
/// smallest box spans at least four samples per axis; `None` past 4M points.
fn chain_grid(chain: &parabmo_core::chains::Chain) -> Option<GridSpec> {
    let boxes = chain_boxes(chain);
    let (mut x0, mut x1, mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let (mut wx, mut wt) = (f64::INFINITY, f64::INFINITY);
    for b in &boxes {
        x0 = x0.min(b.space[0].lo);
        x1 = x1.max(b.space[0].hi);
        t0 = t0.min(b.time.lo);
        t1 = t1.max(b.time.hi);
        wx = wx.min(b.space[0].len());
        wt = wt.min(b.time.len());
    }
    let nx = ((x1 - x0) / (wx / 4.0)).ceil() as usize;
    let nt = ((t1 - t0) / (wt / 4.0)).ceil() as usize;
    (nx.saturating_mul(nt) <= 4_000_000).then(|| grid((x0, x1), (t0, t1), nx, nt))
}

fn criterion_9() -> Outcome {
    let mut r = rng(9);
    let (mut direct, mut refined, mut attempts, mut unresolved) = (0, 0, 0, 0);
    let mut worst_gap = f64::INFINITY;
    while direct + refined < 50 {
        attempts += 1;
        if attempts > 2000 {
            return Err(format!("only {} specs built", direct + refined));
        }
        // alternate between comfortable and tight time budgets
        let want_refined = (direct + refined) % 2 == 1;
        let theta: f64 = r.gen_range(0.3..0.7);
        let (pv, tau) = if want_refined {
            (3.0, r.gen_range(theta.max(1.0 - theta) + 0.05..1.5))
        } else {
            (2.0, r.gen_range(2.0..6.0))
        };
        let v = r.gen_range(-0.5..0.5);
        let spec = match ChainSpec::from_corner(&[0.5], 0.0, 1.0, vec![v], tau, theta, p(pv)) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let Ok(chain) = build_chain(&spec) else { continue };
        if !check_chain(&chain).all() {
            return Err(format!("structure check failed for {spec:?}: {:?}", check_chain(&chain)));
        }
        let Some(g) = chain_grid(&chain) else {
            unresolved += 1;
            continue;
        };
        let bump: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| (r.gen_range(0.5..5.0), r.gen_range(-0.5..2.0), r.gen_range(0.0..tau + 1.0), r.gen_range(0.1..0.5)))
            .collect();
        let u = SampledField::sample(g, |x, t| {
            (2.0 - t) * (1.0 + x[0])
                + bump
                    .iter()
                    .map(|&(a, cx, ct, w)| a * (-((x[0] - cx).powi(2) + (t - ct).powi(2)) / (w * w)).exp())
                    .sum::<f64>()
        })
        .unwrap();
        let bound = chain_oscillation(&u, &chain).map_err(|e| format!("{spec:?}: {e}"))?;
        let d = double_oscillation(&u, &spec.start, &spec.target()).unwrap();
        if bound < d - 1e-10 {
            return Err(format!("bound {bound} below direct {d} for {spec:?}"));
        }
        worst_gap = worst_gap.min(bound - d);
        match chain.kind {
            ChainKind::Direct(_) => direct += 1,
            ChainKind::Refined(_) => refined += 1,
        }
    }
    let msg = format!(
        "{direct} direct + {refined} refined chains; min(bound - direct) = {worst_gap:.3e}; {unresolved} chains too fine to sample"
    );
    if refined == 0 {
        Err(format!("no refined chain among the cases: {msg}"))
    } else {
        Ok(msg)
    }
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let f = field("log_heat", 64);
    let fam = family(4, ladder(0.25, 1.0, 2.0), 0.5);
    let c_grid = jn::default_c_grid();
    let base = jn_scan(&f, &fam, 0.5, &c_grid, 2.0).unwrap();
    let mut r = rng(10);
    for _ in 0..100 {
        let b = random_box(f.grid(), &mut r);
        if let Ok(m) = exp_moment(&f, &b, r.gen_range(-3.0..3.0), 0.0, MomentSide::Over) {
            if m != 1.0 {
                return Err(format!("moment {m} at c = 0"));
            }
        }
    }
    let mono = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    if !mono(&base.worst_lower) || !mono(&base.worst_upper) || !mono(&base.lower_moments) || !mono(&base.upper_moments) {
        return Err("moments not nondecreasing in c".into());
    }
    for s in [2.0, 0.5, 4.0] {
        let scaled = f.affine(s, 0.0).unwrap();
        let cs: Vec<f64> = c_grid.iter().map(|c| c / s).collect();
        let rep = jn_scan(&scaled, &fam, 0.5, &cs, 2.0).unwrap();
        if rep.worst_lower != base.worst_lower || rep.worst_upper != base.worst_upper || rep.c_star != base.c_star / s {
            return Err(format!("scaling by {s} is not exact: c* {} vs {}", rep.c_star, base.c_star / s));
        }
    }
    let product = |n: usize| {
        let f = field("log_heat", n);
        let fam = family(n / 16, ladder(0.25, 1.0, 2.0), 0.5);
        let rep = jn_scan(&f, &fam, 0.5, &c_grid, 2.0).unwrap();
        let norm = pbmo_seminorm(&f, &fam, PbmoDirection::Minus).unwrap().value;
        (rep.c_star * norm, rep.c_star, norm)
    };
    let (a, ca, na) = product(128);
    let (b, cb, nb) = product(256);
    let change = rel_change(a, b);
    let msg = format!(
        "c*·pbmo = {a:.4} (c* {ca:.4}, pbmo {na:.4}) at 128, {b:.4} (c* {cb:.4}, pbmo {nb:.4}) at 256, change {:.1}%; moments 1 at c = 0, monotone, scaling exact",
        100.0 * change
    );
    if change < 0.25 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 11

fn oneside_constants(name: &str, n: usize) -> (f64, f64, Option<f64>) {
    let lengths = ladder(1.0 / 32.0, 0.5, 2f64.powf(0.25));
    let fam = IntervalFamily::new(n / 256, lengths.clone()).unwrap();
    let u = evaluate_signal(name, Interval::new(-1.0, 1.0), n).unwrap();
    let big = os_maximal(&u, &lengths).unwrap();
    let nu = os_bmo_norm(&u, &fam).unwrap().value;
    let nb = os_bmo_norm(&big, &fam).unwrap().value;
    let i = Interval::new(-0.5, -0.25);
    let mean = os_cz(&u, &i, f64::MAX, 0).unwrap().root_forward_mean;
    let dec = os_cz(&u, &i, oneside_lambda(mean, nu, 0.25), 10).unwrap();
    let rep = os_cz_verify(&dec, &u);
    let l2 = (nu > 0.0).then(|| bad_part_constant(&rep, i.len(), nu));
    (nu, nb, l2)
}

fn criterion_11() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut nonzero_l2 = 0;
    for s in list_signals().iter().filter(|s| s.nonnegative) {
        let (nu, nb, l2) = oneside_constants(s.name, 256);
        let (nu2, nb2, l2b) = oneside_constants(s.name, 512);
        if nu == 0.0 {
            ok &= nb == 0.0 && nb2 == 0.0;
            lines.push(format!("{}: ‖u‖ = ‖U‖ = 0", s.name));
            continue;
        }
        let (c1, c2) = (nb / nu, nb2 / nu2);
        let dc = rel_change(c1, c2);
        ok &= c1.is_finite() && dc < 0.1;
        let l2_note = match (l2, l2b) {
            (Some(a), Some(b)) if a == 0.0 && b == 0.0 => "L² constant 0 at both".to_string(),
            (Some(a), Some(b)) => {
                nonzero_l2 += 1;
                let d = rel_change(a, b);
                ok &= d < 0.25;
                format!("L² constant {a:.4} ({:+.1}%)", 100.0 * d)
            }
            _ => "no L² constant".to_string(),
        };
        lines.push(format!("{}: C = {c1:.4} ({:+.1}%), {l2_note}", s.name, 100.0 * dc));
    }
    let mut r = rng(11);
    for _ in 0..200 {
        let x = r.gen_range(-2.0..2.0);
        let d = r.gen_range(0.01..1.0);
        let h = d / r.gen_range(0.01..0.99);
        let tr = interval_chain(x, x + d, h, 64).unwrap();
        if !(tr.theta_sum() <= h && tr.strictly_decreasing()) {
            return Err(format!("interval chain x = {x}, d = {d}, h = {h}: {tr:?}"));
        }
    }
    lines.push("200 interval chains valid".into());
    ok &= nonzero_l2 > 0;
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 12

/// Per-entry `pbmo / (bmo⁺ + (−bmo⁻))` at resolution `n`, after checking
/// the lower bound `max(bmo⁺, −bmo⁻) ≤ pbmo`.
fn comparison_ratios(n: usize) -> Result<Vec<(&'static str, f64)>, String> {
    let fam = family(n / 32, ladder(0.125, 1.0, 2f64.powf(0.25)), 0.5);
    let mut ratios = Vec::new();
    for e in list_entries() {
        let f = field(e.name, n);
        let pb = pbmo_seminorm(&f, &fam, PbmoDirection::Minus).unwrap().value;
        let bp = bmo_variant_seminorm(&f, &fam, 0.5, 1.5, VariantSide::Plus).unwrap().value;
        let bm = bmo_variant_seminorm(&f, &fam, 0.5, 1.5, VariantSide::MinusNeg).unwrap().value;
        // equality is attained on some witnesses, and the two sides round
        // different intermediates, so allow a few ulps
        if bp.max(bm) > pb + 8.0 * f64::EPSILON * pb {
            return Err(format!("{} at {n}: max({bp}, {bm}) > pbmo {pb}", e.name));
        }
        if bp + bm > 0.0 {
            ratios.push((e.name, pb / (bp + bm)));
        } else if pb != 0.0 {
            return Err(format!("{} at {n}: pbmo {pb} with both one-sided norms 0", e.name));
        }
    }
    Ok(ratios)
}

fn criterion_12() -> Outcome {
    let coarse = comparison_ratios(128)?;
    let fine = comparison_ratios(256)?;
    let c = |r: &[(&str, f64)]| r.iter().map(|x| x.1).fold(0.0, f64::max);
    let (c1, c2) = (c(&coarse), c(&fine));
    let mut worst: f64 = rel_change(c1, c2);
    let mut list = Vec::new();
    for ((name, a), (_, b)) in coarse.iter().zip(&fine) {
        worst = worst.max(rel_change(*a, *b));
        list.push(format!("{name} {a:.4}"));
    }
    let lo = coarse.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let msg = format!(
        "lower bound holds; C = {c1:.4} at 128, {c2:.4} at 256, largest refinement change {:.1}%; per entry: {} (spread {:.2}x)",
        100.0 * worst,
        list.join(", "),
        c1 / lo
    );
    if worst <= 0.25 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("exactness oracles", criterion_1),
        ("geometry and dyadic exactness", criterion_2),
        ("duality and reductions", criterion_3),
        ("sandwich", criterion_4),
        ("maximal boundedness ratios", criterion_5),
        ("zero norms for increasing entries", criterion_6),
        ("divergence of |e^t - e^-t|", criterion_7),
        ("CZ contracts", criterion_8),
        ("chain soundness", criterion_9),
        ("John-Nirenberg scanner", criterion_10),
        ("one-sided 1D toolkit", criterion_11),
        ("PBMO vs one-sided BMO comparison", criterion_12),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    let start = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                println!("FAIL {n:>2} {name} [{secs:.1}s]: {detail}");
                failed.push(n);
            }
        }
    }
    println!("acceptance: {} failed, total {:.1}s", failed.len(), start.elapsed().as_secs_f64());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
