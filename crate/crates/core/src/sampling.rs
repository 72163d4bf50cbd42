//! Seeded random streams and the samplers built on them.
//!
//! Every stream is a ChaCha8 generator keyed by `seed` and positioned on
//! the independent sub-stream `stream_id`, so Monte Carlo work can be
//! split by replicate or batch index and still reproduce bit for bit.
//! The samplers below are implemented here rather than taken from a
//! distributions crate so that the output sequence is fixed by this code.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{DirichletParams, SimplexPoint};

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Number of independent batches a Monte Carlo run is split into.
pub const DEFAULT_BATCHES: usize = 20;

/// Identifies one reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn generator(&self) -> Generator {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        Generator { rng, spare: None }
    }
}

/// A positioned generator with the uniform, normal and gamma variates used
/// throughout the crate.
#[derive(Debug, Clone)]
pub struct Generator {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Generator {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1): the top 53 bits of one word,
    /// offset by half a step.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by the Marsaglia polar method; the second variate of
    /// each accepted pair is returned by the next call.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s < 1.0 && s > 0.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }

    /// `ln G` for `G ~ Gamma(shape, 1)`. Marsaglia-Tsang squeeze/rejection
    /// for `shape >= 1`; for `shape < 1`, `G = G' U^{1/shape}` with
    /// `G' ~ Gamma(shape + 1)`, kept in log form so tiny shapes do not
    /// underflow.
    pub fn ln_gamma_variate(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let boost = self.uniform().ln() / shape;
            return self.ln_gamma_variate(shape + 1.0) + boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return (d * v).ln();
            }
        }
    }

    pub fn gamma(&mut self, shape: f64) -> f64 {
        self.ln_gamma_variate(shape).exp()
    }

    pub fn standard_normal_vec(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.standard_normal()).collect()
    }

    /// Draw from `Dirichlet(N alpha, N beta)` as normalized gamma variates.
    pub fn dirichlet(&mut self, p: &DirichletParams) -> SimplexPoint {
        let d = p.dim();
        let logs: Vec<f64> = p
            .shapes()
            .iter()
            .map(|&a| self.ln_gamma_variate(a))
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let g: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = g.iter().sum();
        let x: Vec<f64> = g[..d].iter().map(|v| v / total).collect();
        SimplexPoint::new(x).expect("normalized gamma variates lie in the simplex")
    }
}

pub fn sample_dirichlet(p: &DirichletParams, gen: &mut Generator) -> SimplexPoint {
    gen.dirichlet(p)
}

pub fn sample_standard_normal(dim: usize, gen: &mut Generator) -> Vec<f64> {
    gen.standard_normal_vec(dim)
}

/// Split `total` draws into `batches` near-equal counts, larger counts first.
pub fn batch_sizes(total: usize, batches: usize) -> Vec<usize> {
    let (q, rem) = (total / batches, total % batches);
    (0..batches).map(|k| q + usize::from(k < rem)).collect()
}

/// Runs `work(generator, count)` for each batch on the stream
/// `(seed, first_stream + batch)`, in parallel, returning results in batch
/// order. Output depends on `seed`, `total` and `batches` only.
pub fn run_batches<T, F>(
    seed: u64,
    first_stream: u64,
    total: usize,
    batches: usize,
    work: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Generator, usize) -> T + Sync,
{
    batch_sizes(total, batches)
        .into_par_iter()
        .enumerate()
        .map(|(k, count)| {
            work(
                &mut RngStream::new(seed, first_stream + k as u64).generator(),
                count,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Summary;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut g = RngStream::new(7, 3).generator();
            (0..16).map(|_| g.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut g = RngStream::new(7, 3).generator();
            (0..16).map(|_| g.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut g = RngStream::new(7, 4).generator();
            (0..16).map(|_| g.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn batches_are_independent_of_pool_size() {
        assert_eq!(batch_sizes(10, 4), vec![3, 3, 2, 2]);
        let draw = |g: &mut Generator, n: usize| (0..n).map(|_| g.uniform()).sum::<f64>();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_batches(9, 0, 1001, 7, draw));
        let b = four.install(|| run_batches(9, 0, 1001, 7, draw));
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_is_open() {
        let mut g = RngStream::new(DEFAULT_SEED, 0).generator();
        for _ in 0..100_000 {
            let u = g.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let mut g = RngStream::new(DEFAULT_SEED, 1).generator();
        let z = sample_standard_normal(1_000_000, &mut g);
        let s = Summary::of(&z).unwrap();
        assert!(s.mean.abs() <= 4.0 * s.std_error(), "{s:?}");
        // var of the sample variance of N(0,1) is 2/(n-1)
        let se_var = (2.0 / (s.n - 1) as f64).sqrt();
        assert!((s.variance - 1.0).abs() <= 4.0 * se_var, "{s:?}");
    }

    #[test]
    fn gamma_moments_small_and_large_shape() {
        for shape in [0.05, 0.5, 1.0, 3.7, 250.0] {
            let mut g = RngStream::new(11, 0).generator();
            let v: Vec<f64> = (0..200_000).map(|_| g.gamma(shape)).collect();
            let s = Summary::of(&v).unwrap();
            let se = (shape / v.len() as f64).sqrt();
            assert!((s.mean - shape).abs() <= 4.0 * se, "shape {shape}: {s:?}");
        }
    }

    #[test]
    fn uniform_dirichlet_passes_kolmogorov_smirnov() {
        let p = DirichletParams::new(vec![1.0], 1.0, 1.0).unwrap();
        let mut g = RngStream::new(DEFAULT_SEED, 2).generator();
        let n = 100_000;
        let mut x: Vec<f64> = (0..n).map(|_| g.dirichlet(&p).coord(0)).collect();
        x.sort_by(f64::total_cmp);
        let ks = x
            .iter()
            .enumerate()
            .map(|(k, &v)| ((k + 1) as f64 / n as f64 - v).max(v - k as f64 / n as f64))
            .fold(0.0, f64::max);
        // asymptotic 1% critical value 1.628 / sqrt(n)
        assert!(ks < 1.628 / (n as f64).sqrt(), "{ks}");
    }

    #[test]
    fn dirichlet_tiny_shapes_stay_in_simplex() {
        let p = DirichletParams::new(vec![0.01, 0.02], 0.01, 0.5).unwrap();
        let mut g = RngStream::new(3, 0).generator();
        for _ in 0..10_000 {
            let x = g.dirichlet(&p);
            assert!(x.coords().iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(x.last() >= 0.0);
        }
    }
}
