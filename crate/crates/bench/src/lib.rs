//! Fixed instances shared by the benchmarks.

use dirnorm::{DirichletParams, KdeConfig, RngStream, SimplexPoint, TrueDensity};

/// The `alpha = (1, 2)`, `beta = 1` model at scale `n`.
pub fn planar(n: f64) -> DirichletParams {
    DirichletParams::new(vec![1.0, 2.0], 1.0, n).expect("valid parameters")
}

/// A `d`-dimensional model with unit weights at scale `n`.
pub fn flat(d: usize, n: f64) -> DirichletParams {
    DirichletParams::new(vec![1.0; d], 1.0, n).expect("valid parameters")
}

/// `count` uniform draws on the `d`-simplex from a fixed stream.
pub fn uniform_data(d: usize, count: usize) -> Vec<SimplexPoint> {
    let mut gen = RngStream::new(dirnorm::DEFAULT_SEED, 0).generator();
    (0..count)
        .map(|_| {
            TrueDensity::Uniform
                .sample(d, &mut gen)
                .expect("uniform sampling")
        })
        .collect()
}

/// The one-dimensional kernel estimator setup at `s = 1/2`.
pub fn kde_config(b: f64, n: usize) -> KdeConfig {
    KdeConfig::new(b, n, SimplexPoint::new(vec![0.5]).expect("interior")).expect("valid config")
}
