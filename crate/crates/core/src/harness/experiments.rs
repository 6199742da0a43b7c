//! Experiment runners producing [`ExperimentReport`]s.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use crate::arithmetic::characters::characters_mod;
use crate::arithmetic::euler::{h_fq, h_q};
use crate::arithmetic::rho::rho_ab;
use crate::arithmetic::sieve::SieveTables;
use crate::bqf::Form;
use crate::composition::{ell_profile_direct, weigh_profile, CompositionContext};
use crate::error::{Error, Result};
use crate::harness::lambda::LambdaSpec;
use crate::harness::lattice::{ell_bound, for_row};
use crate::harness::report::{ratio, ExperimentConfig, ExperimentReport, Row};
use crate::harness::sums::{Compensated, SieveHarness, Twist};
use crate::numtheory::{gcd, totient};

/// Options shared by every runner.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions<'a> {
    pub tables: Option<&'a SieveTables>,
    pub timings: bool,
}

struct Prepared {
    ctx: CompositionContext,
    tables: Option<SieveTables>,
}

fn prepare(config: &ExperimentConfig, opts: &RunOptions) -> Result<Prepared> {
    config.validate()?;
    let ctx = match &config.ctx {
        Some(c) => {
            c.verify()?;
            c.clone()
        }
        None => CompositionContext::build(&config.form)?,
    };
    let tables = match opts.tables {
        Some(t) if t.limit() >= config.x => None,
        _ => Some(SieveTables::build(config.x.max(2))?),
    };
    Ok(Prepared { ctx, tables })
}

impl Prepared {
    fn tables<'a>(&'a self, opts: &RunOptions<'a>) -> &'a SieveTables {
        self.tables.as_ref().or(opts.tables).expect("tables prepared")
    }
}

struct Clock {
    on: bool,
    start: Instant,
    marks: BTreeMap<String, f64>,
}

impl Clock {
    fn new(on: bool) -> Self {
        Clock { on, start: Instant::now(), marks: BTreeMap::new() }
    }

    fn mark(&mut self, name: &str) {
        if self.on {
            self.marks.insert(name.to_string(), self.start.elapsed().as_secs_f64());
        }
    }

    fn finish(self, report: &mut ExperimentReport) {
        if self.on {
            report.runtimes = Some(self.marks);
        }
    }
}

/// `X, X/10, X/100`, dropping levels below 1.
pub fn trend_grid(x: u64) -> Vec<u64> {
    [x, x / 10, x / 100].into_iter().filter(|&v| v >= 1).collect()
}

/// Per-level totals of a weight over lattice rows `ℓ ≥ 1`, merged in row order.
fn grid_sums(
    f: &Form,
    grid: &[u64],
    terms: usize,
    row: impl Fn(i64, &mut dyn FnMut(u64, usize, f64)) + Sync,
) -> Vec<Vec<f64>> {
    let x = grid[0];
    let per_row: Vec<Vec<Vec<f64>>> = (1..=ell_bound(f, x))
        .into_par_iter()
        .map(|ell| {
            let mut acc = vec![vec![Compensated::default(); terms]; grid.len()];
            row(ell, &mut |n, k, v| {
                for (g, &xg) in grid.iter().enumerate() {
                    if n <= xg {
                        acc[g][k].add(v);
                    }
                }
            });
            acc.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect()
        })
        .collect();
    let mut total = vec![vec![Compensated::default(); terms]; grid.len()];
    for r in &per_row {
        for (g, level) in r.iter().enumerate() {
            for (k, &v) in level.iter().enumerate() {
                total[g][k].add(v);
            }
        }
    }
    total.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect()
}

/// LHS `Σ_{F ≤ X, F ≡ a (q)} λ(ℓ)Λ(F(ℓ,m))` against
/// `H_{F,q}·Σ_{F ≤ X, gcd(ℓ,γm)=1, gcd(F,P_F)=1, F ≡ a (q)} λ(ℓ)` on the trend grid.
pub fn theorem1_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    config.require_coprime_a()?;
    let mut clock = Clock::new(opts.timings);
    let prep = prepare(config, opts)?;
    let tables = prep.tables(opts);
    let ctx = &prep.ctx;
    clock.mark("setup");
    let f = ctx.form;
    let grid = trend_grid(config.x);
    let lam = config.lambda.dense(ell_bound(&f, config.x).max(0) as u64, Some(tables))?;
    let (q, a) = (config.q, config.a.rem_euclid(config.q as i64) as u64);
    let cf = ctx.cf;
    let sums = grid_sums(&f, &grid, 2, |ell, emit| {
        let w = lam[ell as usize];
        if w == 0.0 {
            return;
        }
        for_row(&f, config.x, ell, |m, n| {
            if n % q != a {
                return;
            }
            let v = tables.lambda(n);
            if v != 0.0 {
                emit(n, 0, w * v);
            }
            if gcd(ell, f.c()) == 1 && gcd(ell, m) == 1 && (n == 1 || tables.spf(n) > cf) {
                emit(n, 1, w);
            }
        });
    });
    clock.mark("sums");
    let h = h_fq(ctx, q, config.p_max)?;
    clock.mark("euler_product");
    let mut report = ExperimentReport::new("theorem1", config);
    report.set("H_Fq", h.value);
    report.set("H_Fq_tail", h.tail);
    report.set("C_F", ctx.cf as f64);
    for (g, &xg) in grid.iter().enumerate() {
        let (lhs, restricted) = (sums[g][0], sums[g][1]);
        let main = h.value * restricted;
        let mut row = Row::new();
        row.insert("x".into(), Some(xg as f64));
        row.insert("lhs".into(), Some(lhs));
        row.insert("restricted_sum".into(), Some(restricted));
        row.insert("main_term".into(), Some(main));
        let r = ratio(lhs, main);
        row.insert("ratio".into(), r.is_finite().then_some(r));
        row.insert("lhs_over_x".into(), Some(lhs / xg as f64));
        if g == 0 {
            report.set("lhs", lhs);
            report.set("restricted_sum", restricted);
            report.set("main_term", main);
            report.set("ratio", r);
            report.set("lhs_over_x", lhs / xg as f64);
        }
        report.rows.push(row);
    }
    clock.finish(&mut report);
    Ok(report)
}

/// LHS `Σ_{F ≤ X, F ≡ a, ℓ ≡ b (q)} Λ(ℓ)Λ(F(ℓ,m))` against
/// `H_q ρ(q;a,b)/(qφ(q)) · πX/√Δ` on the trend grid.
pub fn corollary2_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    config.require_coprime_a()?;
    config.require_coprime_b()?;
    let mut clock = Clock::new(opts.timings);
    let prep = prepare(config, opts)?;
    let tables = prep.tables(opts);
    let f = prep.ctx.form;
    clock.mark("setup");
    let (q, a) = (config.q, config.a.rem_euclid(config.q as i64) as u64);
    let lambda = LambdaSpec::von_mangoldt().restricted(config.b, q)?;
    let lam = lambda.dense(ell_bound(&f, config.x).max(0) as u64, Some(tables))?;
    let grid = trend_grid(config.x);
    let sums = grid_sums(&f, &grid, 1, |ell, emit| {
        let w = lam[ell as usize];
        if w == 0.0 {
            return;
        }
        for_row(&f, config.x, ell, |_, n| {
            if n % q == a {
                let v = tables.lambda(n);
                if v != 0.0 {
                    emit(n, 0, w * v);
                }
            }
        });
    });
    clock.mark("sums");
    let h = h_q(&f, q, config.p_max)?;
    clock.mark("euler_product");
    let local = rho_ab(q, config.a, config.b, &f) as f64;
    let density = h.value * local / (q as f64 * totient(q) as f64);
    let sqrt_delta = (f.delta() as f64).sqrt();
    let mut report = ExperimentReport::new("corollary2", config);
    report.set("H_q", h.value);
    report.set("H_q_tail", h.tail);
    report.set("rho_q_a_b", local);
    for (g, &xg) in grid.iter().enumerate() {
        let lhs = sums[g][0];
        let main = density * PI * xg as f64 / sqrt_delta;
        let r = ratio(lhs, main);
        let mut row = Row::new();
        row.insert("x".into(), Some(xg as f64));
        row.insert("lhs".into(), Some(lhs));
        row.insert("main_term".into(), Some(main));
        row.insert("ratio".into(), r.is_finite().then_some(r));
        if g == 0 {
            report.set("lhs", lhs);
            report.set("main_term", main);
            report.set("ratio", r);
        }
        report.rows.push(row);
    }
    clock.finish(&mut report);
    Ok(report)
}

fn twist_for(config: &ExperimentConfig) -> Twist {
    if config.q == 1 {
        Twist::trivial()
    } else {
        Twist::character(&characters_mod(config.q)[config.character])
    }
}

/// `R(X, D; χ) = Σ_{d ≤ D} |A_d − M_d|` and its ratio to `q³D^{1/4}X^{3/4}`.
pub fn level_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    let mut clock = Clock::new(opts.timings);
    let prep = prepare(config, opts)?;
    let tables = prep.tables(opts);
    let h = SieveHarness::new(&prep.ctx, config.x, &config.lambda, tables)?;
    let twist = twist_for(config);
    clock.mark("setup");
    let a = h.a_n();
    let d = config.level();
    let rem = h.remainders(&a, d, &twist)?;
    clock.mark("sums");
    let (x, q) = (config.x as f64, config.q as f64);
    let scale = q.powi(3) * (d as f64).powf(0.25) * x.powf(0.75);
    let mut report = ExperimentReport::new("level", config);
    report.set("D", d as f64);
    report.set("R", rem.total);
    report.set("scale", scale);
    report.set("ratio", rem.total / scale);
    let max = rem.terms.iter().map(|(_, ad, md)| (ad - md).norm()).fold(0.0, f64::max);
    report.set("max_abs_R_d", max);
    if let Some((_, a1, m1)) = rem.terms.first() {
        report.set("A_1_re", a1.re);
        report.set("M_1_re", m1.re);
    }
    clock.finish(&mut report);
    Ok(report)
}

/// `B(X; Y, Z; χ)` with `Y = Z = X^{1/4}` unless given.
pub fn bilinear_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    let mut clock = Clock::new(opts.timings);
    let prep = prepare(config, opts)?;
    let tables = prep.tables(opts);
    let x = config.x as f64;
    let y = config.y.unwrap_or(x.powf(0.25));
    let z = config.z.unwrap_or(x.powf(0.25));
    if y * z >= x {
        return Err(Error::Precondition(format!("YZ = {} must be below X = {x}", y * z)));
    }
    let h = SieveHarness::new(&prep.ctx, config.x, &config.lambda, tables)?;
    let twist = twist_for(config);
    clock.mark("setup");
    let a = h.a_n();
    let b = h.bilinear_b(&a, y, z, &twist)?;
    clock.mark("sums");
    let mut report = ExperimentReport::new("bilinear", config);
    report.set("Y", y);
    report.set("Z", z);
    report.set("B_re", b.re);
    report.set("B_im", b.im);
    report.set("abs_B", b.norm());
    report.set("abs_B_over_x", b.norm() / x);
    clock.finish(&mut report);
    Ok(report)
}

/// ℓ-multiset of `Re(w̄z)` over primitive Gaussian `w`, `z` with
/// `|w|² = m`, `|z|² = n`, divided by the four units.
pub fn gaussian_profile(m: u64, n: u64) -> Result<BTreeMap<i64, u64>> {
    let g = Form::new(1, 0, 1)?;
    let ws = g.primitive_representations(m as i128);
    let zs = g.primitive_representations(n as i128);
    let mut raw = BTreeMap::new();
    for &(w1, w2) in &ws {
        for &(z1, z2) in &zs {
            let ell = w1 * z1 + w2 * z2;
            if ell > 0 {
                *raw.entry(ell).or_insert(0u64) += 1;
            }
        }
    }
    let mut out = BTreeMap::new();
    for (ell, c) in raw {
        if c % 4 != 0 {
            return Err(Error::Verification(format!(
                "ℓ = {ell} appears {c} times for m = {m}, n = {n}"
            )));
        }
        out.insert(ell, c / 4);
    }
    Ok(out)
}

/// Checks `a_{mn} = ¼ Σ_{|w|²=m} Σ_{|z|²=n} λ(Re(w̄z))` for every coprime
/// `m, n` with `mn ≤ X`; a mismatch is a [`Error::Verification`].
pub fn fi_crosscheck(x: u64, lambda: &LambdaSpec) -> Result<ExperimentReport> {
    lambda.validate()?;
    let f = Form::new(1, 0, 1)?;
    let pairs: Vec<(u64, u64)> = (1..=x)
        .flat_map(|m| (1..=x / m).filter(move |&n| gcd(m as i64, n as i64) == 1).map(move |n| (m, n)))
        .collect();
    let outcomes: Vec<Result<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(m, n)| {
            let fi = gaussian_profile(m, n)?;
            let direct = ell_profile_direct(&f, m * n);
            if fi != direct {
                return Err(Error::Verification(format!(
                    "Gaussian sum differs from a_{} for m = {m}, n = {n}",
                    m * n
                )));
            }
            let lhs = weigh_profile(&fi, |l| lambda.value(l));
            let rhs = weigh_profile(&direct, |l| lambda.value(l));
            if lhs != rhs {
                return Err(Error::Verification(format!("values differ for m = {m}, n = {n}")));
            }
            Ok((lhs, rhs))
        })
        .collect();
    let mut total = Compensated::default();
    for o in outcomes {
        total.add(o?.0);
    }
    let mut cfg = ExperimentConfig::new(f, x);
    cfg.lambda = lambda.clone();
    let mut report = ExperimentReport::new("fi-check", &cfg);
    report.set("pairs_checked", pairs.len() as f64);
    report.set("mismatches", 0.0);
    report.set("sum_of_a_mn", total.value());
    Ok(report)
}

/// Summary of an `a_{mn}` decomposition cross-check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmnCheck {
    pub pairs: usize,
    pub mismatches: Vec<(u64, u64)>,
}

/// Compares the decomposition route with the direct `a_{mn}` for all
/// coprime `m, n ≤ bound` with `gcd(mn, P_F) = 1`, for each weight.
pub fn amn_crosscheck(ctx: &CompositionContext, bound: u64, lambdas: &[LambdaSpec]) -> Result<AmnCheck> {
    let survivors: Vec<u64> = (1..=bound).filter(|&k| ctx.coprime_to_pf(k)).collect();
    let pairs: Vec<(u64, u64)> = survivors
        .iter()
        .flat_map(|&m| survivors.iter().map(move |&n| (m, n)))
        .filter(|&(m, n)| gcd(m as i64, n as i64) == 1)
        .collect();
    let results: Vec<Result<Option<(u64, u64)>>> = pairs
        .par_iter()
        .map(|&(m, n)| {
            let direct = ell_profile_direct(&ctx.form, m * n);
            for lam in lambdas {
                let lhs = weigh_profile(&direct, |l| lam.value(l));
                let rhs = ctx.amn_via_decomposition(m, n, |l| lam.value(l))?;
                if lhs != rhs {
                    return Ok(Some((m, n)));
                }
            }
            Ok(None)
        })
        .collect();
    let mut mismatches = Vec::new();
    for r in results {
        if let Some(p) = r? {
            mismatches.push(p);
        }
    }
    Ok(AmnCheck { pairs: pairs.len(), mismatches })
}
