//! Log-space Dirichlet and matched-normal densities.
//!
//! The Dirichlet log-density is evaluated in its Stirling-decomposed form
//!
//! ```text
//! ln K(x) = (d/2) ln M - (d/2) ln(2 pi) - (1/2) sum ln r_i
//!           + sum (a_i - 1) ln(x_i / r_i) + R(M) - sum R(a_i)
//! ```
//!
//! with shapes `a_i = N alpha_i` (and `N beta`), `M = sum a_i`, and
//! `R = ln_gamma_correction`. It is algebraically identical to the product
//! formula but never forms the `O(M ln M)` terms that cancel, which keeps
//! the absolute error near machine precision for `N` up to `10^5` and beyond.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    deviations, make_matched_gaussian, sigma_inv_quadform, DeltaVector, DirichletParams,
    MatchedGaussian, SimplexPoint,
};
use crate::special::{ln_gamma, ln_gamma_correction};

/// Natural log of a density value.
///
/// At the simplex boundary the value may be `-inf` (density vanishes) or
/// `+inf`; the latter is marked `boundary_singular`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    pub value: f64,
    pub boundary_singular: bool,
}

impl LogDensity {
    fn finite(value: f64) -> Self {
        Self {
            value,
            boundary_singular: false,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// `exp(value)`, with `-inf` mapping to zero.
    pub fn density(&self) -> f64 {
        self.value.exp()
    }
}

/// Dirichlet log-density with the normalizing constant precomputed.
#[derive(Debug, Clone)]
pub struct DirichletDensity {
    gaussian: MatchedGaussian,
    shapes: Vec<f64>,
    constant: f64,
}

impl DirichletDensity {
    pub fn new(p: &DirichletParams) -> Result<Self> {
        let gaussian = make_matched_gaussian(p);
        let shapes = p.shapes();
        let total: f64 = shapes.iter().sum();
        let d = p.dim() as f64;
        let mut constant = 0.5 * d * (total.ln() - (2.0 * PI).ln()) - 0.5 * gaussian.ln_det_sigma()
            + ln_gamma_correction(total)?;
        for &a in &shapes {
            constant -= ln_gamma_correction(a)?;
        }
        Ok(Self {
            gaussian,
            shapes,
            constant,
        })
    }

    pub fn gaussian(&self) -> &MatchedGaussian {
        &self.gaussian
    }

    pub fn dim(&self) -> usize {
        self.gaussian.dim()
    }

    pub fn log_pdf(&self, x: &SimplexPoint) -> Result<LogDensity> {
        let d = self.dim();
        if x.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
        let r = self.gaussian.r();
        let dev = deviations(&self.gaussian, x.coords())?;
        let mut acc = self.constant;
        let mut vanishes = false;
        let mut singular = false;
        for i in 0..=d {
            let a = self.shapes[i];
            if x.coord(i) == 0.0 {
                if a > 1.0 {
                    vanishes = true;
                } else if a < 1.0 {
                    singular = true;
                }
                continue;
            }
            acc += (a - 1.0) * (dev[i] / r[i]).ln_1p();
        }
        Ok(if singular {
            LogDensity {
                value: f64::INFINITY,
                boundary_singular: true,
            }
        } else if vanishes {
            LogDensity::finite(f64::NEG_INFINITY)
        } else {
            LogDensity::finite(acc)
        })
    }
}

/// Log of the `Dirichlet(N alpha, N beta)` density at `x`.
///
/// At a boundary coordinate with shape `a`: `-inf` if `a > 1`, the finite
/// limit if `a == 1`, and `+inf` (flagged singular) if `a < 1`. A singular
/// coordinate takes precedence over a vanishing one.
pub fn dirichlet_log_pdf(p: &DirichletParams, x: &SimplexPoint) -> Result<LogDensity> {
    DirichletDensity::new(p)?.log_pdf(x)
}

/// The textbook product formula `ln Gamma(M) - sum ln Gamma(a_i) + sum (a_i - 1) ln x_i`.
///
/// Loses about `M ln M` ulps to cancellation; kept as an independent
/// evaluation route for moderate `N`.
pub fn dirichlet_log_pdf_product_form(p: &DirichletParams, x: &SimplexPoint) -> Result<f64> {
    let shapes = p.shapes();
    let mut acc = ln_gamma(shapes.iter().sum())?;
    for (i, &a) in shapes.iter().enumerate() {
        acc += (a - 1.0) * x.coord(i).ln() - ln_gamma(a)?;
    }
    Ok(acc)
}

/// Log of `(1 + 1/eps)^{d/2} phi_{Sigma_r}(delta)` for standardized coordinates.
pub fn matched_normal_log_pdf_delta(g: &MatchedGaussian, delta: &DeltaVector) -> f64 {
    let d = g.dim() as f64;
    0.5 * d * (g.precision_scale().ln() - (2.0 * PI).ln())
        - 0.5 * g.ln_det_sigma()
        - 0.5 * sigma_inv_quadform(g, delta)
}

/// Log of the matched normal density at any `x` in `R^d`.
pub fn matched_normal_log_pdf(g: &MatchedGaussian, x: &[f64]) -> Result<f64> {
    let delta = crate::model::delta_from_coords(g, x)?;
    Ok(matched_normal_log_pdf_delta(g, &delta))
}

/// `ln K(x) - ln[(1 + 1/eps)^{d/2} phi(delta_x)]` with the two densities
/// precomputed; the evaluator behind every sweep.
#[derive(Debug, Clone)]
pub struct LogRatio {
    density: DirichletDensity,
}

impl LogRatio {
    pub fn new(p: &DirichletParams) -> Result<Self> {
        Ok(Self {
            density: DirichletDensity::new(p)?,
        })
    }

    pub fn gaussian(&self) -> &MatchedGaussian {
        self.density.gaussian()
    }

    pub fn density(&self) -> &DirichletDensity {
        &self.density
    }

    /// Log-ratio and the standardized coordinates it was computed from.
    pub fn eval(&self, x: &SimplexPoint) -> Result<(f64, DeltaVector)> {
        if !x.is_interior() {
            return Err(Error::Boundary);
        }
        let g = self.gaussian();
        let delta = crate::model::delta_from_coords(g, x.coords())?;
        let log_k = self.density.log_pdf(x)?.value;
        Ok((log_k - matched_normal_log_pdf_delta(g, &delta), delta))
    }
}

/// Log of the Dirichlet-to-matched-normal density ratio at an interior point.
pub fn log_ratio(p: &DirichletParams, x: &SimplexPoint) -> Result<f64> {
    LogRatio::new(p)?.eval(x).map(|(v, _)| v)
}
