//! The Dirichlet kernel density estimator on the simplex and its
//! pointwise variance.
//!
//! At an interior point `s` with bandwidth `b`, each observation is scored
//! by the `Dirichlet(s/b + 1, (1 - ||s||_1)/b + 1)` density, which is the
//! parametrization `N = 1/b`, `alpha = s + b`, `beta = 1 - ||s||_1 + b`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::densities::DirichletDensity;
use crate::error::{Error, Result};
use crate::model::{DirichletParams, SimplexPoint};
use crate::sampling::{Generator, RngStream};
use crate::stats::Summary;

#[derive(Debug, Clone, PartialEq)]
pub struct KdeConfig {
    b: f64,
    n: usize,
    s: SimplexPoint,
}

/// Every coordinate of `s`, including `1 - ||s||_1`, must be at least
/// this many multiples of `sqrt(b)`.
pub const INTERIOR_MARGIN: f64 = 2.0;

impl KdeConfig {
    pub fn new(b: f64, n: usize, s: SimplexPoint) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter {
                name: "b",
                value: b,
                reason: "bandwidth must lie in (0, 1)",
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "sample size must be positive",
            });
        }
        let margin = INTERIOR_MARGIN * b.sqrt();
        if let Some(v) = s.extended().into_iter().find(|&v| v < margin) {
            return Err(Error::OutsideSimplex(format!(
                "evaluation point has coordinate {v} closer than {margin} to the boundary"
            )));
        }
        Ok(Self { b, n, s })
    }

    pub fn bandwidth(&self) -> f64 {
        self.b
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &SimplexPoint {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn with_sample_size(&self, n: usize) -> Result<Self> {
        Self::new(self.b, n, self.s.clone())
    }

    pub fn kernel_params(&self) -> Result<DirichletParams> {
        kernel_params(&self.s, self.b)
    }
}

/// Kernel parameters at any interior `s`, without the margin check.
pub fn kernel_params(s: &SimplexPoint, b: f64) -> Result<DirichletParams> {
    let alpha = s.coords().iter().map(|v| v + b).collect();
    DirichletParams::new(alpha, s.last() + b, 1.0 / b)
}

/// The estimate at `s` with bandwidth `b`, for any `s` in the simplex.
pub fn kde_at(data: &[SimplexPoint], s: &SimplexPoint, b: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InsufficientSamples { got: 0, min: 1 });
    }
    let kernel = DirichletDensity::new(&kernel_params(s, b)?)?;
    let mut total = 0.0;
    for x in data {
        let v = kernel.log_pdf(x)?.value;
        if v > f64::NEG_INFINITY {
            total += v.exp();
        }
    }
    Ok(total / data.len() as f64)
}

pub fn kde_evaluate(data: &[SimplexPoint], cfg: &KdeConfig) -> Result<f64> {
    kde_at(data, cfg.point(), cfg.bandwidth())
}

fn leading_variance(n: usize, b: f64, f_at_s: f64, coords: &[f64]) -> f64 {
    let d = (coords.len() - 1) as f64;
    let prod: f64 = coords.iter().product();
    f_at_s * b.powf(-0.5 * d) / (n as f64 * ((4.0 * PI).powf(d) * prod).sqrt())
}

/// Leading term `n^-1 b^{-d/2} f(s) / sqrt((4 pi)^d prod_{i<=d+1} s_i)`.
pub fn variance_theory(cfg: &KdeConfig, f_at_s: f64) -> f64 {
    leading_variance(cfg.n, cfg.b, f_at_s, &cfg.s.extended())
}

/// The same leading term with the kernel mean
/// `r_i = (s_i + b) / (1 + b (d+1))` in place of `s_i`.
pub fn variance_theory_kernel_mean(cfg: &KdeConfig, f_at_s: f64) -> f64 {
    let d = cfg.dim() as f64;
    let r: Vec<f64> = cfg
        .s
        .extended()
        .iter()
        .map(|v| (v + cfg.b) / (1.0 + cfg.b * (d + 1.0)))
        .collect();
    leading_variance(cfg.n, cfg.b, f_at_s, &r)
}

/// Densities on the simplex that can be sampled exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum TrueDensity {
    /// Constant `d!`.
    Uniform,
    /// `f(x) = (d+1)! sum_i w_i x_i / sum_i w_i` over the `d+1` coordinates,
    /// sampled by rejection from the uniform law.
    Linear(Vec<f64>),
}

impl TrueDensity {
    fn check(&self, d: usize) -> Result<()> {
        match self {
            TrueDensity::Uniform => Ok(()),
            TrueDensity::Linear(w) if w.len() != d + 1 => Err(Error::DimensionMismatch {
                expected: d + 1,
                got: w.len(),
            }),
            TrueDensity::Linear(w)
                if w.iter().any(|&v| v.is_nan() || v < 0.0) || w.iter().all(|&v| v == 0.0) =>
            {
                Err(Error::InvalidParameter {
                    name: "weights",
                    value: f64::NAN,
                    reason: "weights must be nonnegative and not all zero",
                })
            }
            TrueDensity::Linear(_) => Ok(()),
        }
    }

    pub fn at(&self, x: &SimplexPoint) -> Result<f64> {
        let d = x.dim();
        self.check(d)?;
        let factorial = |k: usize| (1..=k).product::<usize>() as f64;
        Ok(match self {
            TrueDensity::Uniform => factorial(d),
            TrueDensity::Linear(w) => {
                let dot: f64 = w.iter().zip(x.extended()).map(|(a, b)| a * b).sum();
                factorial(d + 1) * dot / w.iter().sum::<f64>()
            }
        })
    }

    pub fn sample(&self, d: usize, gen: &mut Generator) -> Result<SimplexPoint> {
        self.check(d)?;
        let uniform = DirichletParams::new(vec![1.0; d], 1.0, 1.0)?;
        Ok(match self {
            TrueDensity::Uniform => gen.dirichlet(&uniform),
            TrueDensity::Linear(w) => {
                let top = w.iter().cloned().fold(0.0, f64::max);
                loop {
                    let x = gen.dirichlet(&uniform);
                    let dot: f64 = w.iter().zip(x.extended()).map(|(a, b)| a * b).sum();
                    if gen.uniform() * top < dot {
                        break x;
                    }
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeVarianceReport {
    pub n: usize,
    pub b: f64,
    pub replicates: usize,
    pub mean_estimate: f64,
    pub var_mc: f64,
    pub var_mc_stderr: f64,
    pub var_theory: f64,
    pub f_at_s: f64,
}

impl KdeVarianceReport {
    pub fn ratio(&self) -> f64 {
        self.var_mc / self.var_theory
    }
}

pub const MIN_REPLICATES: usize = 100;

/// Replicate `k` draws its `n` observations from stream `(seed, k)`;
/// replicates run in parallel and are combined in index order.
pub fn kde_replicates(
    truth: &TrueDensity,
    cfg: &KdeConfig,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    truth.check(cfg.dim())?;
    let kernel = DirichletDensity::new(&cfg.kernel_params()?)?;
    (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut gen = RngStream::new(seed, k as u64).generator();
            let mut total = 0.0;
            for _ in 0..cfg.n {
                let x = truth.sample(cfg.dim(), &mut gen)?;
                let v = kernel.log_pdf(&x)?.value;
                if v > f64::NEG_INFINITY {
                    total += v.exp();
                }
            }
            Ok(total / cfg.n as f64)
        })
        .collect()
}

/// Monte Carlo variance of the estimate at `s` across independent data
/// sets, against the leading-order prediction.
pub fn variance_experiment(
    truth: &TrueDensity,
    cfg: &KdeConfig,
    replicates: usize,
    seed: u64,
) -> Result<KdeVarianceReport> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InsufficientSamples {
            got: replicates,
            min: MIN_REPLICATES,
        });
    }
    let est = kde_replicates(truth, cfg, replicates, seed)?;
    let s = Summary::of(&est)?;
    let m = replicates as f64;
    let m4 = est.iter().map(|v| (v - s.mean).powi(4)).sum::<f64>() / m;
    // large-sample variance of the sample variance
    let var_of_var = ((m4 - s.variance * s.variance * (m - 3.0) / (m - 1.0)) / m).max(0.0);
    let f_at_s = truth.at(cfg.point())?;
    Ok(KdeVarianceReport {
        n: cfg.n,
        b: cfg.b,
        replicates,
        mean_estimate: s.mean,
        var_mc: s.variance,
        var_mc_stderr: var_of_var.sqrt(),
        var_theory: variance_theory(cfg, f_at_s),
        f_at_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(KdeConfig::new(0.01, 10, point(&[0.5])).is_ok());
        assert!(KdeConfig::new(0.01, 10, point(&[0.1])).is_err());
        assert!(KdeConfig::new(0.0, 10, point(&[0.5])).is_err());
        assert!(KdeConfig::new(1.0, 10, point(&[0.5])).is_err());
        assert!(KdeConfig::new(0.01, 0, point(&[0.5])).is_err());
        assert!(KdeConfig::new(0.01, 10, point(&[0.45, 0.45])).is_err());
    }

    #[test]
    fn kernel_parametrization() {
        let cfg = KdeConfig::new(0.01, 1, point(&[0.3, 0.45])).unwrap();
        let k = cfg.kernel_params().unwrap();
        let shapes = k.shapes();
        for (a, s) in shapes.iter().zip([0.3, 0.45, 0.25]) {
            assert!((a - (s / 0.01 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_observation() {
        let cfg = KdeConfig::new(0.01, 1, point(&[0.5])).unwrap();
        let data = [point(&[0.5])];
        let v = kde_evaluate(&data, &cfg).unwrap();
        let direct = DirichletDensity::new(&cfg.kernel_params().unwrap())
            .unwrap()
            .log_pdf(&data[0])
            .unwrap()
            .density();
        assert_eq!(v, direct);
        assert!(v.is_finite() && v > 0.0);
        assert!(kde_evaluate(&[], &cfg).is_err());
    }

    #[test]
    fn theory_examples() {
        let cfg = KdeConfig::new(0.01, 10_000, point(&[0.5])).unwrap();
        assert!((variance_theory(&cfg, 1.0) - 1e-3 / PI.sqrt()).abs() < 1e-17);
        let cfg = KdeConfig::new(0.01, 100_000, point(&[1.0 / 3.0, 1.0 / 3.0])).unwrap();
        let expect = 2e-3 * 27f64.sqrt() / (4.0 * PI);
        assert!((variance_theory(&cfg, 2.0) - expect).abs() < 1e-15);
        let doubled = cfg.with_sample_size(200_000).unwrap();
        assert_eq!(
            variance_theory(&doubled, 2.0),
            variance_theory(&cfg, 2.0) / 2.0
        );
    }

    #[test]
    fn kernel_mean_substitution_is_order_b() {
        let s = point(&[0.3, 0.3]);
        let mut prev = f64::INFINITY;
        for b in [0.02, 0.01, 0.005, 0.0025] {
            let cfg = KdeConfig::new(b, 100, s.clone()).unwrap();
            let rel =
                (variance_theory_kernel_mean(&cfg, 1.0) / variance_theory(&cfg, 1.0) - 1.0).abs();
            assert!(rel / b < 5.0, "b={b}: {rel}");
            assert!(rel < prev);
            prev = rel;
        }
    }

    #[test]
    fn true_densities() {
        let x = point(&[0.2, 0.3]);
        assert_eq!(TrueDensity::Uniform.at(&x).unwrap(), 2.0);
        let lin = TrueDensity::Linear(vec![1.0, 0.0, 0.0]);
        assert!((lin.at(&x).unwrap() - 6.0 * 0.2).abs() < 1e-15);
        assert!(TrueDensity::Linear(vec![1.0, 2.0]).at(&x).is_err());
        assert!(TrueDensity::Linear(vec![0.0; 3]).at(&x).is_err());

        // E[x_1] under f = 6 x_1 on the 2-simplex is 1/2
        let mut gen = RngStream::new(4, 0).generator();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| lin.sample(2, &mut gen).unwrap().coord(0))
            .collect();
        let s = Summary::of(&draws).unwrap();
        assert!((s.mean - 0.5).abs() < 4.0 * s.std_error(), "{s:?}");
    }

    #[test]
    fn replicates_need_minimum() {
        let cfg = KdeConfig::new(0.01, 10, point(&[0.5])).unwrap();
        assert!(variance_experiment(&TrueDensity::Uniform, &cfg, 99, 1).is_err());
    }
}
