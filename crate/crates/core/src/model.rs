//! Parameters, simplex points and the matched-Gaussian geometry.
//!
//! Throughout, a `d`-dimensional Dirichlet law is described by `d` shape
//! weights `alpha`, one trailing weight `beta` and a scale `N`, giving the
//! distribution `Dirichlet(N alpha, N beta)`. The implicit `(d+1)`-th
//! coordinate of a point is `1 - sum(x)`, and `beta` plays the role of its
//! weight.

use crate::error::{Error, Result};

/// Negative coordinates down to this magnitude are rounded to zero.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Parameters of `Dirichlet(N alpha, N beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
    beta: f64,
    scale: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>, beta: f64, scale: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: 0.0,
                reason: "at least one shape weight is required",
            });
        }
        for &a in &alpha {
            check_positive("alpha", a)?;
        }
        check_positive("beta", beta)?;
        check_positive("N", scale)?;
        Ok(Self { alpha, beta, scale })
    }

    /// Same shape weights at a different scale `N`.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_positive("N", scale)?;
        Ok(Self {
            scale,
            ..self.clone()
        })
    }

    /// Simplex dimension `d`.
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The scale `N`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Weight of coordinate `i` in `0..=d`; index `d` is `beta`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == self.alpha.len() {
            self.beta
        } else {
            self.alpha[i]
        }
    }

    /// `||alpha||_1 + beta`.
    pub fn weight_sum(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta
    }

    /// Gamma shapes `N alpha_1, ..., N alpha_d, N beta` (length `d+1`).
    pub fn shapes(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .chain(std::iter::once(&self.beta))
            .map(|w| self.scale * w)
            .collect()
    }

    /// `N (||alpha||_1 + beta)`, the sum of all shapes.
    pub fn total_shape(&self) -> f64 {
        self.shapes().iter().sum()
    }

    /// The small parameter `1 / (N (||alpha||_1 + beta))`.
    pub fn eps(&self) -> f64 {
        1.0 / (self.scale * self.weight_sum())
    }
}

/// A point of the closed simplex `{x >= 0, sum(x) <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    x: Vec<f64>,
    x_last: f64,
}

impl SimplexPoint {
    /// Validates membership, clamping coordinates in `[-1e-12, 0)` to zero
    /// and a sum in `(1, 1 + 1e-12]` to a zero last coordinate.
    pub fn new(mut x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::OutsideSimplex("empty coordinate vector".into()));
        }
        for xi in x.iter_mut() {
            if !xi.is_finite() || *xi < -SIMPLEX_TOLERANCE {
                return Err(Error::OutsideSimplex(format!("coordinate {xi} < 0")));
            }
            if *xi < 0.0 {
                *xi = 0.0;
            }
        }
        let sum: f64 = x.iter().sum();
        let x_last = if sum <= 1.0 {
            1.0 - sum
        } else if sum <= 1.0 + SIMPLEX_TOLERANCE {
            0.0
        } else {
            return Err(Error::OutsideSimplex(format!("coordinate sum {sum} > 1")));
        };
        Ok(Self { x, x_last })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// The `d` free coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    /// The implicit coordinate `1 - sum(x)`.
    pub fn last(&self) -> f64 {
        self.x_last
    }

    /// Coordinate `i` in `0..=d`; index `d` is the implicit coordinate.
    pub fn coord(&self, i: usize) -> f64 {
        if i == self.x.len() {
            self.x_last
        } else {
            self.x[i]
        }
    }

    /// All `d+1` coordinates.
    pub fn extended(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push(self.x_last);
        v
    }

    pub fn is_interior(&self) -> bool {
        self.x_last > 0.0 && self.x.iter().all(|&v| v > 0.0)
    }
}

/// Mean and covariance structure of the normal law matched to a Dirichlet.
///
/// The Dirichlet covariance is `Sigma_r / (1 + 1/eps)` with
/// `Sigma_r = diag(r) - r r^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedGaussian {
    r: Vec<f64>,
    eps: f64,
}

impl MatchedGaussian {
    pub fn dim(&self) -> usize {
        self.r.len() - 1
    }

    /// Mean vector including the implicit coordinate (length `d+1`).
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `1 + 1/eps = N ||alpha||_1 + N beta + 1`.
    pub fn precision_scale(&self) -> f64 {
        1.0 + 1.0 / self.eps
    }

    /// `det(Sigma_r) = prod_{i=1}^{d+1} r_i`.
    pub fn det_sigma(&self) -> f64 {
        self.r.iter().product()
    }

    /// `sum_{i=1}^{d+1} ln r_i`, the log-determinant of `Sigma_r`.
    pub fn ln_det_sigma(&self) -> f64 {
        self.r.iter().map(|r| r.ln()).sum()
    }

    /// Entry `(i, j)` of `Sigma_r` for `i, j < d`.
    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        let diag = if i == j { self.r[i] } else { 0.0 };
        diag - self.r[i] * self.r[j]
    }

    /// Entry `(i, j)` of the closed-form inverse `delta_ij / r_i + 1 / r_{d+1}`.
    pub fn sigma_inv(&self, i: usize, j: usize) -> f64 {
        let diag = if i == j { 1.0 / self.r[i] } else { 0.0 };
        diag + 1.0 / self.r[self.dim()]
    }

    /// Dense `d x d` matrix of `Sigma_r`, row-major.
    pub fn sigma_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.sigma(i, j)).collect())
            .collect()
    }

    /// Dense `d x d` closed-form inverse of `Sigma_r`, row-major.
    pub fn sigma_inv_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.sigma_inv(i, j)).collect())
            .collect()
    }

    /// Marginal standard deviation of coordinate `i` (in `x` units).
    pub fn marginal_sd(&self, i: usize) -> f64 {
        (self.r[i] * (1.0 - self.r[i]) / self.precision_scale()).sqrt()
    }
}

/// Standardized coordinates `(x_i - r_i) (N ||alpha||_1 + N beta + 1)^{1/2}`.
///
/// Always has length `d+1`; the last entry is `-sum` of the others.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVector(Vec<f64>);

impl DeltaVector {
    /// Builds from the `d` free components, appending the implied last one.
    pub fn from_free(mut delta: Vec<f64>) -> Self {
        let last = -delta.iter().sum::<f64>();
        delta.push(last);
        Self(delta)
    }

    /// Wraps a full `(d+1)`-vector as is.
    pub fn from_extended(delta: Vec<f64>) -> Self {
        Self(delta)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of components, `d+1`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn make_matched_gaussian(p: &DirichletParams) -> MatchedGaussian {
    let total = p.weight_sum();
    let r = (0..=p.dim()).map(|i| p.weight(i) / total).collect();
    MatchedGaussian { r, eps: p.eps() }
}

/// Deviations `x_i - r_i` for `i <= d` with the last entry set to
/// `-sum` of the others, so that the deviations sum to zero exactly.
pub fn deviations(g: &MatchedGaussian, x: &[f64]) -> Result<Vec<f64>> {
    let d = g.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let mut dev: Vec<f64> = x.iter().zip(&g.r).map(|(xi, ri)| xi - ri).collect();
    dev.push(-dev.iter().sum::<f64>());
    Ok(dev)
}

/// Standardized coordinates of any `x` in `R^d`.
pub fn delta_from_coords(g: &MatchedGaussian, x: &[f64]) -> Result<DeltaVector> {
    let scale = g.precision_scale().sqrt();
    let dev = deviations(g, x)?;
    Ok(DeltaVector(dev.into_iter().map(|v| v * scale).collect()))
}

pub fn delta_of(p: &DirichletParams, x: &SimplexPoint) -> Result<DeltaVector> {
    delta_from_coords(&make_matched_gaussian(p), x.coords())
}

/// `delta^T Sigma_r^{-1} delta` over the first `d` components, using the
/// closed-form inverse: `sum_{i<=d} delta_i^2 / r_i + (sum_{i<=d} delta_i)^2 / r_{d+1}`.
pub fn sigma_inv_quadform(g: &MatchedGaussian, delta: &DeltaVector) -> f64 {
    let d = g.dim();
    let free = &delta.as_slice()[..d];
    let diag: f64 = free.iter().zip(&g.r).map(|(v, r)| v * v / r).sum();
    let s: f64 = free.iter().sum();
    diag + s * s / g.r[d]
}

/// The same quadratic form written as `sum_{i=1}^{d+1} delta_i^2 / r_i`.
pub fn sigma_inv_quadform_extended(g: &MatchedGaussian, delta: &DeltaVector) -> f64 {
    delta
        .as_slice()
        .iter()
        .zip(&g.r)
        .map(|(v, r)| v * v / r)
        .sum()
}
