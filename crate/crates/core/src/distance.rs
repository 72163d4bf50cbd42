//! Total variation between the Dirichlet law and its matched Gaussian,
//! both viewed as measures on `R^d`.
//!
//! `TV = 1/2 int_S |K - phi| + 1/2 int_{R^d \ S} phi`: the Gaussian mass
//! outside the simplex counts in full.

use std::fmt;

use rayon::prelude::*;

use crate::densities::{matched_normal_log_pdf, DirichletDensity};
use crate::error::{Error, Result};
use crate::expansion::{check_scales, BulkRegion};
use crate::model::{delta_of, DirichletParams, MatchedGaussian, SimplexPoint};
use crate::quadrature::{breakpoints, Quadrature, SD_MULTIPLES};
use crate::sampling::{run_batches, DEFAULT_BATCHES};
use crate::stats::{Accumulator, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TvMethod {
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for TvMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TvMethod::Quadrature => "quadrature",
            TvMethod::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    pub method: TvMethod,
    /// Zero for quadrature.
    pub std_error: f64,
    pub scale: f64,
    pub eps: f64,
    /// Tolerance levels used (quadrature) or batches (Monte Carlo).
    pub refinements: usize,
}

/// Absolute tolerance of the outer integral at refinement level `k`.
pub fn level_tolerance(level: usize) -> f64 {
    1e-7 * 0.1f64.powi(level as i32)
}

/// Successive levels closer than this stop the refinement.
pub const REFINEMENT_CHANGE: f64 = 1e-5;
pub const MAX_QUADRATURE_DIM: usize = 2;
/// Half-width, in marginal standard deviations, of the box over which the
/// Gaussian mass off the simplex is integrated.
pub const OFF_SIMPLEX_BOX: f64 = 8.0;

fn inner_rule(tol: f64) -> Quadrature {
    Quadrature {
        abs_tol: tol,
        rel_tol: 0.0,
        max_panels: 400,
    }
}

/// `|K(x) - phi(x)|` on the simplex, formed from the two logs so that
/// nearly equal densities do not cancel.
struct Integrand<'a> {
    density: &'a DirichletDensity,
}

impl Integrand<'_> {
    fn gaussian(&self) -> &MatchedGaussian {
        self.density.gaussian()
    }

    fn abs_diff(&self, x: Vec<f64>) -> f64 {
        let lphi = matched_normal_log_pdf(self.gaussian(), &x).unwrap_or(f64::NEG_INFINITY);
        let Ok(point) = SimplexPoint::new(x) else {
            return lphi.exp();
        };
        let lk = self
            .density
            .log_pdf(&point)
            .map(|v| v.value)
            .unwrap_or(f64::NEG_INFINITY);
        let top = lk.max(lphi);
        if top == f64::NEG_INFINITY {
            return 0.0;
        }
        if top == f64::INFINITY {
            return f64::INFINITY;
        }
        -top.exp() * (-(lk - lphi).abs()).exp_m1()
    }

    fn normal(&self, x: Vec<f64>) -> f64 {
        matched_normal_log_pdf(self.gaussian(), &x)
            .map(f64::exp)
            .unwrap_or(0.0)
    }
}

fn tv_one_dim(it: &Integrand, tol: f64) -> f64 {
    let g = it.gaussian();
    let (r, sd) = (g.r()[0], g.marginal_sd(0));
    let rule = inner_rule(tol);
    let on = rule.integrate(
        |x| it.abs_diff(vec![x]),
        &breakpoints(0.0, 1.0, r, sd, &SD_MULTIPLES),
    );
    let (lo, hi) = (r - OFF_SIMPLEX_BOX * sd, r + OFF_SIMPLEX_BOX * sd);
    let mut off = 0.0;
    if lo < 0.0 {
        off += rule
            .integrate(
                |x| it.normal(vec![x]),
                &breakpoints(lo, 0.0, r, sd, &SD_MULTIPLES),
            )
            .value;
    }
    if hi > 1.0 {
        off += rule
            .integrate(
                |x| it.normal(vec![x]),
                &breakpoints(1.0, hi, r, sd, &SD_MULTIPLES),
            )
            .value;
    }
    0.5 * (on.value + off)
}

/// Conditional mean and standard deviation of `x_2` given `x_1` under the
/// matched Gaussian; the mean also locates the Dirichlet conditional mode.
fn conditional(g: &MatchedGaussian, x1: f64) -> (f64, f64) {
    let r = g.r();
    let mean = r[1] * (1.0 - x1) / (1.0 - r[0]);
    let var = (g.sigma(1, 1) - g.sigma(0, 1).powi(2) / g.sigma(0, 0)) / g.precision_scale();
    (mean, var.sqrt())
}

fn tv_two_dim(it: &Integrand, tol: f64) -> f64 {
    let g = it.gaussian();
    let (r1, sd1) = (g.r()[0], g.marginal_sd(0));
    let inner = inner_rule(0.1 * tol);
    let outer = Quadrature {
        abs_tol: tol,
        rel_tol: 0.0,
        max_panels: 2000,
    };

    let on = outer.integrate(
        |x1| {
            let (c, s) = conditional(g, x1);
            let pts = breakpoints(0.0, 1.0 - x1, c, s, &SD_MULTIPLES);
            inner.integrate(|x2| it.abs_diff(vec![x1, x2]), &pts).value
        },
        &breakpoints(0.0, 1.0, r1, sd1, &SD_MULTIPLES),
    );

    let (lo1, hi1) = (r1 - OFF_SIMPLEX_BOX * sd1, r1 + OFF_SIMPLEX_BOX * sd1);
    let (r2, sd2) = (g.r()[1], g.marginal_sd(1));
    let (lo2, hi2) = (r2 - OFF_SIMPLEX_BOX * sd2, r2 + OFF_SIMPLEX_BOX * sd2);
    let mut outer_pts = breakpoints(lo1, hi1, r1, sd1, &SD_MULTIPLES);
    outer_pts.extend([0.0, 1.0].into_iter().filter(|&v| v > lo1 && v < hi1));
    outer_pts.sort_by(f64::total_cmp);
    outer_pts.dedup();
    let off = outer.integrate(
        |x1| {
            let (c, s) = conditional(g, x1);
            let gauss = |x2: f64| it.normal(vec![x1, x2]);
            if !(0.0..=1.0).contains(&x1) {
                return inner
                    .integrate(gauss, &breakpoints(lo2, hi2, c, s, &SD_MULTIPLES))
                    .value;
            }
            let mut acc = 0.0;
            if lo2 < 0.0 {
                acc += inner
                    .integrate(gauss, &breakpoints(lo2, hi2.min(0.0), c, s, &SD_MULTIPLES))
                    .value;
            }
            let top = 1.0 - x1;
            if hi2 > top {
                acc += inner
                    .integrate(gauss, &breakpoints(lo2.max(top), hi2, c, s, &SD_MULTIPLES))
                    .value;
            }
            acc
        },
        &outer_pts,
    );
    0.5 * (on.value + off.value)
}

/// Quadrature TV at one tolerance level.
pub fn tv_quadrature_level(p: &DirichletParams, level: usize) -> Result<f64> {
    let density = DirichletDensity::new(p)?;
    let it = Integrand { density: &density };
    let tol = level_tolerance(level);
    let v = match p.dim() {
        1 => tv_one_dim(&it, tol),
        2 => tv_two_dim(&it, tol),
        d => {
            return Err(Error::Dimension {
                d,
                max: MAX_QUADRATURE_DIM,
            })
        }
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Quadrature TV, tightening the tolerance one decade at a time until two
/// successive levels differ by less than `REFINEMENT_CHANGE`, at most
/// `max_refinement + 1` levels.
pub fn tv_quadrature(p: &DirichletParams, max_refinement: usize) -> Result<TvEstimate> {
    if p.dim() > MAX_QUADRATURE_DIM {
        return Err(Error::Dimension {
            d: p.dim(),
            max: MAX_QUADRATURE_DIM,
        });
    }
    let mut value = tv_quadrature_level(p, 0)?;
    let mut levels = 1;
    while levels <= max_refinement {
        let next = tv_quadrature_level(p, levels)?;
        levels += 1;
        let change = (next - value).abs();
        value = next;
        if change < REFINEMENT_CHANGE {
            break;
        }
    }
    Ok(TvEstimate {
        value,
        method: TvMethod::Quadrature,
        std_error: 0.0,
        scale: p.scale(),
        eps: p.eps(),
        refinements: levels,
    })
}

/// `int_S K(x) dx` by the same nested rule, for `d <= 2`, to absolute
/// tolerance about `tol`.
pub fn dirichlet_mass(p: &DirichletParams, tol: f64) -> Result<f64> {
    let density = DirichletDensity::new(p)?;
    let g = density.gaussian();
    let k = |x: Vec<f64>| match SimplexPoint::new(x) {
        Ok(pt) => density.log_pdf(&pt).map(|v| v.density()).unwrap_or(0.0),
        Err(_) => 0.0,
    };
    let (r1, sd1) = (g.r()[0], g.marginal_sd(0));
    let outer_pts = breakpoints(0.0, 1.0, r1, sd1, &SD_MULTIPLES);
    match p.dim() {
        1 => Ok(inner_rule(tol).integrate(|x| k(vec![x]), &outer_pts).value),
        2 => {
            let inner = inner_rule(0.1 * tol);
            let outer = Quadrature {
                abs_tol: tol,
                rel_tol: 0.0,
                max_panels: 2000,
            };
            Ok(outer
                .integrate(
                    |x1| {
                        let (c, s) = conditional(g, x1);
                        let pts = breakpoints(0.0, 1.0 - x1, c, s, &SD_MULTIPLES);
                        inner.integrate(|x2| k(vec![x1, x2]), &pts).value
                    },
                    &outer_pts,
                )
                .value)
        }
        d => Err(Error::Dimension {
            d,
            max: MAX_QUADRATURE_DIM,
        }),
    }
}

pub const MIN_TV_SAMPLES: usize = 10_000;

/// `TV = E_P[(1 - phi/K)_+]` from Dirichlet draws, split into
/// `DEFAULT_BATCHES` batches; the standard error is that of the batch means.
pub fn tv_monte_carlo(p: &DirichletParams, samples: usize, seed: u64) -> Result<TvEstimate> {
    if samples < MIN_TV_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples,
            min: MIN_TV_SAMPLES,
        });
    }
    let density = DirichletDensity::new(p)?;
    let g = density.gaussian();
    let sums = run_batches(seed, 0, samples, DEFAULT_BATCHES, |gen, count| {
        let mut acc = Accumulator::default();
        for _ in 0..count {
            let x = gen.dirichlet(p);
            let lk = density
                .log_pdf(&x)
                .map(|v| v.value)
                .unwrap_or(f64::NEG_INFINITY);
            let lphi = matched_normal_log_pdf(g, x.coords()).unwrap_or(f64::NEG_INFINITY);
            let term = if lk == f64::NEG_INFINITY {
                0.0
            } else if lk == f64::INFINITY {
                1.0
            } else {
                (-(lphi - lk).exp_m1()).max(0.0)
            };
            acc.push(term);
        }
        acc
    });
    let means: Vec<f64> = sums.iter().map(Accumulator::mean).collect();
    let mut total = Accumulator::default();
    sums.iter().for_each(|s| total.merge(s));
    let batch = Summary::of(&means)?;
    Ok(TvEstimate {
        value: total.mean().clamp(0.0, 1.0),
        method: TvMethod::MonteCarlo,
        std_error: batch.std_error(),
        scale: p.scale(),
        eps: p.eps(),
        refinements: DEFAULT_BATCHES,
    })
}

/// `eps^{1/2} d sqrt(max r / min r)`, the rate in the TV bound without its
/// unstated constant.
pub fn tv_bound_scale(g: &MatchedGaussian) -> f64 {
    let r = g.r();
    let max = r.iter().cloned().fold(f64::MIN, f64::max);
    let min = r.iter().cloned().fold(f64::MAX, f64::min);
    g.eps().sqrt() * g.dim() as f64 * (max / min).sqrt()
}

/// Union bound `2 (d+1) exp(-N^{1/3} / 2)` on the probability of leaving the
/// bulk with `eta = 1/2`. Other `eta` are rejected. The value is not
/// clamped and may exceed 1.
pub fn bulk_escape_bound(p: &DirichletParams, eta: f64) -> Result<f64> {
    if eta != 0.5 {
        return Err(Error::Unsupported(format!(
            "escape bound is only available for eta = 1/2, got {eta}"
        )));
    }
    Ok(2.0 * (p.dim() + 1) as f64 * (-0.5 * p.scale().cbrt()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeEstimate {
    pub frequency: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl EscapeEstimate {
    /// One-sided 99% lower confidence limit of the escape probability.
    pub fn lower_99(&self) -> f64 {
        self.frequency - 2.326 * self.std_error
    }
}

/// Fraction of Dirichlet draws outside the bulk.
pub fn bulk_escape_frequency(
    p: &DirichletParams,
    bulk: BulkRegion,
    samples: usize,
    seed: u64,
) -> Result<EscapeEstimate> {
    if samples < MIN_TV_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples,
            min: MIN_TV_SAMPLES,
        });
    }
    let counts = run_batches(seed, 0, samples, DEFAULT_BATCHES, |gen, count| {
        (0..count)
            .filter(|_| {
                let x = gen.dirichlet(p);
                !delta_of(p, &x)
                    .map(|d| bulk.contains(&d, p.scale()))
                    .unwrap_or(false)
            })
            .count()
    });
    let outside: usize = counts.iter().sum();
    let f = outside as f64 / samples as f64;
    Ok(EscapeEstimate {
        frequency: f,
        std_error: (f * (1.0 - f) / samples as f64).sqrt(),
        samples,
    })
}

/// How `tv_rate_sweep` evaluates each point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TvSweepMethod {
    Quadrature { max_refinement: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

/// TV at each scale in ascending `scales`, in input order.
pub fn tv_rate_sweep(
    template: &DirichletParams,
    scales: &[f64],
    method: TvSweepMethod,
) -> Result<Vec<TvEstimate>> {
    check_scales(scales)?;
    match method {
        TvSweepMethod::Quadrature { max_refinement } => scales
            .par_iter()
            .map(|&n| tv_quadrature(&template.with_scale(n)?, max_refinement))
            .collect(),
        TvSweepMethod::MonteCarlo { samples, seed } => scales
            .iter()
            .map(|&n| tv_monte_carlo(&template.with_scale(n)?, samples, seed))
            .collect(),
    }
}

/// Least-squares slope of `ln TV` against `ln eps` over a sweep.
pub fn tv_rate_slope(estimates: &[TvEstimate]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.value > 0.0)
        .map(|e| (e.eps.ln(), e.value.ln()))
        .collect();
    crate::stats::least_squares_slope(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_matched_gaussian;

    fn params(alpha: &[f64], beta: f64, n: f64) -> DirichletParams {
        DirichletParams::new(alpha.to_vec(), beta, n).unwrap()
    }

    #[test]
    fn uniform_against_normal() {
        // mpmath: integral split at the two density crossings plus the exact
        // normal tail mass
        let tv = tv_quadrature(&params(&[1.0], 1.0, 1.0), 3).unwrap();
        assert!((tv.value - 0.197_677_959_017_531_38).abs() < 1e-7, "{tv:?}");
        assert_eq!(tv.std_error, 0.0);
        assert_eq!(tv.method, TvMethod::Quadrature);
    }

    #[test]
    fn decreases_with_scale() {
        let p = params(&[1.0, 2.0], 1.0, 1.0);
        let a = tv_quadrature(&p.with_scale(1e2).unwrap(), 2).unwrap().value;
        let b = tv_quadrature(&p.with_scale(1e4).unwrap(), 2).unwrap().value;
        assert!(b < a && b > 0.0, "{a} {b}");
    }

    #[test]
    fn dimension_limits() {
        let p = params(&[1.0; 3], 1.0, 10.0);
        assert!(tv_quadrature(&p, 1).is_err());
        assert!(tv_monte_carlo(&p, 9_999, 1).is_err());
    }

    #[test]
    fn bound_scale_examples() {
        let g = make_matched_gaussian(&params(&[1.0], 1.0, 10.0));
        assert!((tv_bound_scale(&g) - (1.0f64 / 20.0).sqrt()).abs() < 1e-15);
        let g = make_matched_gaussian(&params(&[1.0, 2.0], 1.0, 100.0));
        assert!((tv_bound_scale(&g) - 0.05 * 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn escape_bound_examples() {
        let v = bulk_escape_bound(&params(&[1.0], 1.0, 1e3), 0.5).unwrap();
        assert!((v - 4.0 * (-5.0f64).exp()).abs() < 1e-15);
        let v = bulk_escape_bound(&params(&[1.0, 1.0], 1.0, 8.0), 0.5).unwrap();
        assert!((v - 6.0 * (-1.0f64).exp()).abs() < 1e-14);
        assert!(v > 1.0);
        assert!(bulk_escape_bound(&params(&[1.0], 1.0, 8.0), 0.4).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible_and_consistent() {
        let p = params(&[1.0], 1.0, 100.0);
        let a = tv_monte_carlo(&p, 200_000, 5).unwrap();
        let b = tv_monte_carlo(&p, 200_000, 5).unwrap();
        assert_eq!(a, b);
        let q = tv_quadrature(&p, 3).unwrap();
        assert!(
            (a.value - q.value).abs() <= 3.0 * a.std_error,
            "{a:?} {q:?}"
        );
    }
}
