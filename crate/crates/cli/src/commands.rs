//! The four experiments. Each returns an `Outcome` whose rows follow the
//! input order of the sweep.

use dirnorm::moments::fourth_moment_scaled_remainder;
use dirnorm::{
    central_moment_closed_form, central_moment_oracle, error_sup, log_spaced,
    make_matched_gaussian, tv_bound_scale, tv_rate_slope, tv_rate_sweep, variance_experiment,
    DirichletParams, Error, KdeConfig, MomentSpec, RngStream, SimplexPoint, TrueDensity,
    TvSweepMethod,
};
use rayon::prelude::*;

use crate::args::{self, Command, ExpansionArgs, KdeArgs, MomentsArgs, SweepArgs, TvArgs};
use crate::{Cell, Cli, CliError, Config, Outcome, Table, DEFAULT_SEED};

pub const EXPANSION_COLUMNS: &[&str] = &["N", "eps_N", "E0", "E1", "E2", "exp0", "exp1", "exp2"];
pub const MOMENT_COLUMNS: &[&str] = &[
    "instance",
    "N",
    "eps_N",
    "indices",
    "order",
    "closed_form",
    "oracle",
    "rel_err",
    "n3_remainder",
];
pub const TV_COLUMNS: &[&str] = &["N", "eps_N", "tv", "tv_std_err", "bound_scale", "method"];
pub const KDE_COLUMNS: &[&str] = &["n", "b", "var_mc", "var_mc_stderr", "var_theory", "ratio"];

/// Relative tolerance for closed-form moments of order two and three.
pub const MOMENT_REL_TOL: f64 = 1e-12;
/// Largest allowed spread, max over min, of the N^3-scaled fourth-moment
/// remainder across the sweep.
pub const FOURTH_SPREAD: f64 = 4.0;

pub fn dispatch(cli: &Cli, cfg: &Config) -> Result<Outcome, CliError> {
    let seed = cfg.pick(cli.global.seed, "seed", args::parse_seed, DEFAULT_SEED)?;
    match &cli.command {
        Command::Expansion(a) => expansion(&model(cli, cfg)?, a, cfg),
        Command::Moments(a) => moments(&model(cli, cfg)?, a, cfg, seed),
        Command::Tv(a) => tv(&model(cli, cfg)?, a, cfg, seed),
        Command::Kde(a) => kde(a, cfg, seed),
    }
}

/// Parameters at unit scale; sweeps rescale them.
fn model(cli: &Cli, cfg: &Config) -> Result<DirichletParams, CliError> {
    let alpha = cfg
        .pick_opt(cli.global.alpha.clone(), "alpha", args::parse_list)?
        .ok_or_else(|| CliError::Usage("--alpha is required".into()))?;
    let beta = cfg.pick(cli.global.beta, "beta", args::parse_f64, 1.0)?;
    Ok(DirichletParams::new(alpha, beta, 1.0)?)
}

fn scales(a: &SweepArgs, cfg: &Config, defaults: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
    let lo = cfg.pick(a.n_min, "n-min", args::parse_f64, defaults.0)?;
    let hi = cfg.pick(a.n_max, "n-max", args::parse_f64, defaults.1)?;
    let count = cfg.pick(a.n_points, "n-points", args::parse_usize, defaults.2)?;
    if !(lo > 0.0 && hi >= lo) {
        return Err(CliError::Usage(format!(
            "need 0 < n-min <= n-max, got {lo} and {hi}"
        )));
    }
    if count == 0 || (count > 1 && hi == lo) {
        return Err(CliError::Usage(
            "n-points must be 1, or at least 2 with n-max > n-min".into(),
        ));
    }
    Ok(log_spaced(lo, hi, count))
}

pub fn expansion(
    template: &DirichletParams,
    a: &ExpansionArgs,
    cfg: &Config,
) -> Result<Outcome, CliError> {
    let ns = scales(&a.sweep, cfg, (10.0, 1e5, 40))?;
    let grid = cfg.pick(
        a.grid,
        "grid",
        args::parse_usize,
        dirnorm::expansion::DEFAULT_GRID,
    )?;
    let results: Vec<_> = ns
        .par_iter()
        .map(|&n| error_sup(&template.with_scale(n)?, grid))
        .collect();
    let mut table = Table::new(EXPANSION_COLUMNS);
    for r in results {
        match r {
            Ok(e) => {
                let mut row: Vec<Cell> = vec![e.scale.into(), e.eps.into()];
                row.extend(e.errors.iter().map(|&v| Cell::from(v)));
                row.extend(e.exponents.iter().map(|&v| Cell::from(v)));
                table.push(row);
            }
            Err(Error::EmptyRegion) => table.skip(),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome {
        table,
        summary: Vec::new(),
        failed: false,
    })
}

fn index_label(ix: &[usize]) -> String {
    ix.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// All sorted index tuples of the given length over `0..d`.
fn index_tuples(d: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t: Vec<usize>| {
                let start = t.last().copied().unwrap_or(0);
                (start..d).map(move |i| {
                    let mut next = t.clone();
                    next.push(i);
                    next
                })
            })
            .collect();
    }
    out
}

/// Closed form, exact value and, at order four, the scaled remainder.
type Evaluated = (f64, f64, Option<f64>);

struct MomentRow {
    instance: String,
    p: DirichletParams,
    indices: Vec<usize>,
}

/// Random parameters and index tuples drawn from stream `(seed, k)`.
fn random_moment_rows(seed: u64, k: u64) -> Result<Vec<MomentRow>, CliError> {
    let mut g = RngStream::new(seed, k).generator();
    let d = 1 + (g.next_u64() % 4) as usize;
    let alpha = (0..d).map(|_| 0.1 + 5.0 * g.uniform()).collect();
    let beta = 0.1 + 5.0 * g.uniform();
    let n = 1.0 + 99.0 * g.uniform();
    let p = DirichletParams::new(alpha, beta, n)?;
    let mut rows = Vec::new();
    for len in [2, 2, 3, 3] {
        let mut ix: Vec<usize> = (0..len)
            .map(|_| (g.next_u64() % d as u64) as usize)
            .collect();
        ix.sort_unstable();
        rows.push(MomentRow {
            instance: format!("random-{k}"),
            p: p.clone(),
            indices: ix,
        });
    }
    Ok(rows)
}

fn rel_err(value: f64, exact: f64) -> f64 {
    let diff = (value - exact).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / exact.abs()
    }
}

pub fn moments(
    template: &DirichletParams,
    a: &MomentsArgs,
    cfg: &Config,
    seed: u64,
) -> Result<Outcome, CliError> {
    let ns = scales(&a.sweep, cfg, (1e2, 1e4, 3))?;
    let random = cfg.pick(a.random, "random", args::parse_usize, 200)?;
    let d = template.dim();

    let mut rows = Vec::new();
    for &n in &ns {
        let p = template.with_scale(n)?;
        for len in [2, 3] {
            for ix in index_tuples(d, len) {
                rows.push(MomentRow {
                    instance: "given".into(),
                    p: p.clone(),
                    indices: ix,
                });
            }
        }
        for i in 0..d {
            rows.push(MomentRow {
                instance: "given".into(),
                p: p.clone(),
                indices: vec![i; 4],
            });
        }
    }
    for k in 0..random as u64 {
        rows.extend(random_moment_rows(seed, k)?);
    }

    let evaluated: Vec<Result<Evaluated, Error>> = rows
        .par_iter()
        .map(|row| {
            let spec = MomentSpec::new(row.indices.clone(), row.p.dim())?;
            let cf = central_moment_closed_form(&row.p, &spec)?.value;
            let exact = central_moment_oracle(&row.p, &row.indices)?;
            let remainder = if row.indices.len() == 4 {
                Some(fourth_moment_scaled_remainder(&row.p, row.indices[0])?)
            } else {
                None
            };
            Ok((cf, exact, remainder))
        })
        .collect();

    let mut table = Table::new(MOMENT_COLUMNS);
    let (mut checked, mut worst, mut bad) = (0usize, 0.0f64, 0usize);
    let mut spread: Vec<Vec<f64>> = vec![Vec::new(); d];
    for (row, r) in rows.iter().zip(evaluated) {
        let (cf, exact, remainder) = r?;
        let err = rel_err(cf, exact);
        match remainder {
            None => {
                checked += 1;
                worst = worst.max(err);
                if (cf - exact).abs() > MOMENT_REL_TOL * exact.abs() {
                    bad += 1;
                }
            }
            Some(s) => spread[row.indices[0]].push(s.abs()),
        }
        table.push(vec![
            row.instance.as_str().into(),
            row.p.scale().into(),
            row.p.eps().into(),
            index_label(&row.indices).into(),
            row.indices.len().into(),
            cf.into(),
            exact.into(),
            err.into(),
            remainder.map_or(Cell::Text(String::new()), Cell::Float),
        ]);
    }

    let mut summary = vec![format!(
        "orders 2-3: {checked} checks, {bad} above {MOMENT_REL_TOL:e}, worst relative error {worst:.3e}: {}",
        verdict(bad == 0)
    )];
    let mut failed = bad > 0;
    for (i, s) in spread.iter().enumerate() {
        let hi = s.iter().cloned().fold(0.0, f64::max);
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let ok = lo > 0.0 && hi / lo <= FOURTH_SPREAD;
        failed |= !ok;
        summary.push(format!(
            "order 4, coordinate {i}: N^3-scaled remainder in [{lo:.4e}, {hi:.4e}]: {}",
            verdict(ok)
        ));
    }
    Ok(Outcome {
        table,
        summary,
        failed,
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn tv(
    template: &DirichletParams,
    a: &TvArgs,
    cfg: &Config,
    seed: u64,
) -> Result<Outcome, CliError> {
    let ns = scales(&a.sweep, cfg, (10.0, 1e4, 20))?;
    let method_name = cfg.pick(
        a.method.clone(),
        "method",
        |s| Ok(s.to_string()),
        "quadrature".into(),
    )?;
    let method = match method_name.as_str() {
        "quadrature" => TvSweepMethod::Quadrature {
            max_refinement: cfg.pick(a.refinement, "refinement", args::parse_usize, 3)?,
        },
        "monte-carlo" | "monte_carlo" => TvSweepMethod::MonteCarlo {
            samples: cfg.pick(a.samples, "samples", args::parse_usize, 1_000_000)?,
            seed,
        },
        other => return Err(CliError::Usage(format!("unknown method `{other}`"))),
    };
    let estimates = tv_rate_sweep(template, &ns, method)?;
    let mut table = Table::new(TV_COLUMNS);
    for e in &estimates {
        let g = make_matched_gaussian(&template.with_scale(e.scale)?);
        table.push(vec![
            e.scale.into(),
            e.eps.into(),
            e.value.into(),
            e.std_error.into(),
            tv_bound_scale(&g).into(),
            e.method.to_string().into(),
        ]);
    }
    let slope = if estimates.len() >= 2 {
        format!("slope = {:.6}", tv_rate_slope(&estimates)?)
    } else {
        "slope = n/a (one scale)".into()
    };
    Ok(Outcome {
        table,
        summary: vec![slope],
        failed: false,
    })
}

fn parse_truth(s: &str) -> Result<TrueDensity, String> {
    match s.trim() {
        "uniform" => Ok(TrueDensity::Uniform),
        t => match t.strip_prefix("linear:") {
            Some(w) => Ok(TrueDensity::Linear(args::parse_list(w)?)),
            None => Err(format!("unknown density `{t}`")),
        },
    }
}

pub fn kde(a: &KdeArgs, cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let point = cfg.pick(a.point.clone(), "point", args::parse_list, vec![0.5])?;
    let bandwidths = cfg.pick(
        a.bandwidth.clone(),
        "bandwidth",
        args::parse_list,
        vec![0.005],
    )?;
    let sizes = cfg.pick(
        a.sample_size.clone(),
        "sample-size",
        args::parse_usize_list,
        vec![10_000],
    )?;
    let replicates = cfg.pick(a.replicates, "replicates", args::parse_usize, 400)?;
    let truth_flag = a
        .truth
        .as_deref()
        .map(parse_truth)
        .transpose()
        .map_err(CliError::Usage)?;
    let truth = cfg.pick(truth_flag, "truth", parse_truth, TrueDensity::Uniform)?;
    let s = SimplexPoint::new(point)?;

    let mut table = Table::new(KDE_COLUMNS);
    for &b in &bandwidths {
        for &n in &sizes {
            let cfg = KdeConfig::new(b, n, s.clone())?;
            let rep = variance_experiment(&truth, &cfg, replicates, seed)?;
            table.push(vec![
                rep.n.into(),
                rep.b.into(),
                rep.var_mc.into(),
                rep.var_mc_stderr.into(),
                rep.var_theory.into(),
                rep.ratio().into(),
            ]);
        }
    }
    Ok(Outcome {
        table,
        summary: Vec::new(),
        failed: false,
    })
}
