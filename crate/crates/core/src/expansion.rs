//! Correction terms of the log-ratio expansion and the sup-error sweeps
//! that check their orders.
//!
//! At an interior point with standardized coordinates `delta`,
//!
//! ```text
//! ln K/phi = eps^{1/2} T1(delta) + eps T2(delta) + O(eps^{3/2})
//! ```
//!
//! and `E_k` is the sup over the box `||x - r||_inf <= eps^{1/2}` of the
//! error left after keeping the first `k` terms.

use rayon::prelude::*;

use crate::densities::LogRatio;
use crate::error::{Error, Result};
use crate::model::{
    delta_of, make_matched_gaussian, DeltaVector, DirichletParams, MatchedGaussian, SimplexPoint,
};

/// Number of terms kept in the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Zeroth = 0,
    First = 1,
    Second = 2,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::Zeroth, Order::First, Order::Second];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The exponent floor `(1 + k) / 2` expected for `log E_k / log eps`.
    pub fn exponent_floor(self) -> f64 {
        (1.0 + self.index() as f64) / 2.0
    }
}

impl TryFrom<usize> for Order {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        match k {
            0 => Ok(Order::Zeroth),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::Unsupported(format!("expansion order {k}"))),
        }
    }
}

/// The bulk `{x : |delta_i| <= eta N^{1/6} for all i <= d+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkRegion {
    eta: f64,
}

impl BulkRegion {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta < 1.0 {
            Ok(Self { eta })
        } else {
            Err(Error::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must lie in (0, 1)",
            })
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Radius `eta N^{1/6}` in standardized units.
    pub fn radius(&self, scale: f64) -> f64 {
        self.eta * scale.powf(1.0 / 6.0)
    }

    pub fn contains(&self, delta: &DeltaVector, scale: f64) -> bool {
        delta.max_abs() <= self.radius(scale)
    }

    pub fn contains_point(&self, p: &DirichletParams, x: &SimplexPoint) -> Result<bool> {
        Ok(self.contains(&delta_of(p, x)?, p.scale()))
    }
}

/// The `eps^{1/2}` coefficient
/// `-sum delta_i / r_i + (1/3) sum delta_i (delta_i / r_i)^2` over `i <= d+1`.
pub fn correction_t1(g: &MatchedGaussian, delta: &DeltaVector) -> f64 {
    let mut linear = 0.0;
    let mut cubic = 0.0;
    for (&v, &r) in delta.as_slice().iter().zip(g.r()) {
        let u = v / r;
        linear += u;
        cubic += v * u * u;
    }
    cubic / 3.0 - linear
}

/// The `eps` coefficient
/// `(1/2) sum (1 + r_i) (delta_i / r_i)^2 - (1/4) sum delta_i (delta_i / r_i)^3
///  - d/2 + (1/12) (1 - sum 1 / r_i)`.
pub fn correction_t2(g: &MatchedGaussian, delta: &DeltaVector) -> f64 {
    let mut quadratic = 0.0;
    let mut quartic = 0.0;
    let mut inv_sum = 0.0;
    for (&v, &r) in delta.as_slice().iter().zip(g.r()) {
        let u = v / r;
        quadratic += (1.0 + r) * u * u;
        quartic += v * u * u * u;
        inv_sum += 1.0 / r;
    }
    0.5 * quadratic - 0.25 * quartic - 0.5 * g.dim() as f64 + (1.0 - inv_sum) / 12.0
}

/// Truncated expansion of the log-ratio in terms of `delta`.
pub fn prediction_from_delta(g: &MatchedGaussian, delta: &DeltaVector, order: Order) -> f64 {
    let eps = g.eps();
    match order {
        Order::Zeroth => 0.0,
        Order::First => eps.sqrt() * correction_t1(g, delta),
        Order::Second => eps.sqrt() * correction_t1(g, delta) + eps * correction_t2(g, delta),
    }
}

pub fn expansion_prediction(p: &DirichletParams, x: &SimplexPoint, order: Order) -> Result<f64> {
    if !x.is_interior() {
        return Err(Error::Boundary);
    }
    let g = make_matched_gaussian(p);
    Ok(prediction_from_delta(&g, &delta_of(p, x)?, order))
}

/// Sup-errors of the three truncations over one box.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionErrors {
    pub scale: f64,
    pub eps: f64,
    pub errors: [f64; 3],
    pub exponents: [f64; 3],
    pub grid_points_per_axis: usize,
    pub points_evaluated: usize,
}

impl ExpansionErrors {
    pub fn error(&self, order: Order) -> f64 {
        self.errors[order.index()]
    }

    /// `log E_k / log eps`.
    pub fn exponent(&self, order: Order) -> f64 {
        self.exponents[order.index()]
    }
}

pub const DEFAULT_GRID: usize = 41;
pub const MAX_GRID_DIM: usize = 3;

fn check_grid(grid: usize) -> Result<()> {
    if grid >= 3 && grid % 2 == 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "grid",
            value: grid as f64,
            reason: "must be an odd integer >= 3",
        })
    }
}

fn fold_max(a: ([f64; 3], usize), b: ([f64; 3], usize)) -> ([f64; 3], usize) {
    (
        [a.0[0].max(b.0[0]), a.0[1].max(b.0[1]), a.0[2].max(b.0[2])],
        a.1 + b.1,
    )
}

/// Maximum of `|log_ratio - prediction_k|` for `k = 0, 1, 2` over a tensor
/// grid of `grid` points per axis spanning `||x - r||_inf <= eps^{1/2}`,
/// endpoints included. Points outside the open simplex are skipped.
///
/// The first axis is split across the rayon pool; the reduction is a max,
/// so the result does not depend on scheduling.
pub fn error_sup(p: &DirichletParams, grid: usize) -> Result<ExpansionErrors> {
    let d = p.dim();
    if d > MAX_GRID_DIM {
        return Err(Error::Dimension {
            d,
            max: MAX_GRID_DIM,
        });
    }
    check_grid(grid)?;
    let ratio = LogRatio::new(p)?;
    let g = ratio.gaussian();
    let half_width = g.eps().sqrt();
    let step = 2.0 * half_width / (grid - 1) as f64;
    let offset = |k: usize| -half_width + step * k as f64;

    let inner_points = grid.pow(d as u32 - 1);
    let (errors, count) = (0..grid)
        .into_par_iter()
        .map(|k0| {
            let mut acc = ([0.0f64; 3], 0usize);
            let mut x = vec![0.0; d];
            for flat in 0..inner_points {
                x[0] = g.r()[0] + offset(k0);
                let mut rest = flat;
                for (axis, xi) in x.iter_mut().enumerate().skip(1) {
                    *xi = g.r()[axis] + offset(rest % grid);
                    rest /= grid;
                }
                if x.iter().any(|&v| v <= 0.0) || x.iter().sum::<f64>() >= 1.0 {
                    continue;
                }
                let Ok(point) = SimplexPoint::new(x.clone()) else {
                    continue;
                };
                let Ok((lr, delta)) = ratio.eval(&point) else {
                    continue;
                };
                if !lr.is_finite() {
                    continue;
                }
                for order in Order::ALL {
                    let e = (lr - prediction_from_delta(g, &delta, order)).abs();
                    acc.0[order.index()] = acc.0[order.index()].max(e);
                }
                acc.1 += 1;
            }
            acc
        })
        .reduce(|| ([0.0; 3], 0), fold_max);

    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    let log_eps = g.eps().ln();
    Ok(ExpansionErrors {
        scale: p.scale(),
        eps: g.eps(),
        errors,
        exponents: errors.map(|e| e.ln() / log_eps),
        grid_points_per_axis: grid,
        points_evaluated: count,
    })
}

/// `count` log-spaced values from `lo` to `hi` inclusive; a single value is `lo`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| match k {
                    0 => lo,
                    k if k == count - 1 => hi,
                    _ => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

pub(crate) fn check_scales(scales: &[f64]) -> Result<()> {
    for &n in scales {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter {
                name: "N",
                value: n,
                reason: "must be positive and finite",
            });
        }
    }
    if scales.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter {
            name: "N",
            value: f64::NAN,
            reason: "scale values must be ascending",
        });
    }
    Ok(())
}

/// `error_sup` at each scale, in input order. Scales run in parallel.
pub fn exponent_sweep(
    template: &DirichletParams,
    scales: &[f64],
    grid: usize,
) -> Result<Vec<ExpansionErrors>> {
    check_scales(scales)?;
    scales
        .par_iter()
        .map(|&n| error_sup(&template.with_scale(n)?, grid))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(alpha: &[f64], beta: f64, n: f64) -> MatchedGaussian {
        make_matched_gaussian(&DirichletParams::new(alpha.to_vec(), beta, n).unwrap())
    }

    /// Second, separately written evaluation of the two correction
    /// coefficients: splits the sums into the `d` free terms and the implied
    /// last term instead of looping over `d+1` entries.
    fn t1_t2_split(r: &[f64], free: &[f64]) -> (f64, f64) {
        let d = free.len();
        let last = -free.iter().sum::<f64>();
        let term1 = |v: f64, r: f64| -v / r + v.powi(3) / (3.0 * r * r);
        let term2 = |v: f64, r: f64| {
            0.5 * (1.0 + r) * v * v / (r * r) - 0.25 * v.powi(4) / r.powi(3) - 1.0 / (12.0 * r)
        };
        let t1 = (0..d).map(|i| term1(free[i], r[i])).sum::<f64>() + term1(last, r[d]);
        let t2 = (0..d).map(|i| term2(free[i], r[i])).sum::<f64>() + term2(last, r[d])
            - d as f64 / 2.0
            + 1.0 / 12.0;
        (t1, t2)
    }

    #[test]
    fn t1_examples() {
        let g = gauss(&[1.0, 1.0], 1.0, 4.0);
        assert_eq!(
            correction_t1(&g, &DeltaVector::from_free(vec![0.0, 0.0])),
            0.0
        );

        let g = gauss(&[1.0, 2.0], 1.0, 4.0);
        let delta = DeltaVector::from_extended(vec![0.1, 0.2, -0.3]);
        // exact rational value: 0.4 - 0.384 / 3
        assert!((correction_t1(&g, &delta) - 0.272).abs() < 1e-14);
        let (t1, _) = t1_t2_split(g.r(), &[0.1, 0.2]);
        assert!((correction_t1(&g, &delta) - t1).abs() < 1e-14);
    }

    #[test]
    fn t1_vanishes_on_symmetric_beta() {
        let g = gauss(&[1.0], 1.0, 7.0);
        let mut t = -3.0;
        for _ in 0..100 {
            t += 0.0613;
            let v = correction_t1(&g, &DeltaVector::from_free(vec![t]));
            assert!(v.abs() <= 1e-15, "t={t}: {v}");
        }
    }

    #[test]
    fn t2_examples() {
        let g = gauss(&[1.0], 1.0, 5.0);
        let zero = DeltaVector::from_free(vec![0.0]);
        assert!((correction_t2(&g, &zero) + 0.75).abs() < 1e-15);

        let g = gauss(&[1.0, 1.0], 1.0, 5.0);
        let zero = DeltaVector::from_free(vec![0.0, 0.0]);
        assert!((correction_t2(&g, &zero) + 5.0 / 3.0).abs() < 1e-14);

        // r = (1/2, 1/2), delta = (1/2, -1/2): 3/2 - 1/4 - 1/2 - 1/4 = 1/2
        let g = gauss(&[1.0], 1.0, 5.0);
        let delta = DeltaVector::from_free(vec![0.5]);
        assert!((correction_t2(&g, &delta) - 0.5).abs() < 1e-15);

        let g = gauss(&[1.0, 2.0], 1.0, 5.0);
        let delta = DeltaVector::from_extended(vec![0.1, 0.2, -0.3]);
        // exact rational value: 1.12 - 0.1344 - 1 - 0.75
        assert!((correction_t2(&g, &delta) + 0.7644).abs() < 1e-14);
        let (_, t2) = t1_t2_split(g.r(), &[0.1, 0.2]);
        assert!((correction_t2(&g, &delta) - t2).abs() < 1e-14);
    }

    #[test]
    fn predictions() {
        let p = DirichletParams::new(vec![1.0], 1.0, 20.0).unwrap();
        let mid = SimplexPoint::new(vec![0.5]).unwrap();
        assert_eq!(expansion_prediction(&p, &mid, Order::Zeroth).unwrap(), 0.0);
        let v = expansion_prediction(&p, &mid, Order::Second).unwrap();
        assert!((v + 0.01875).abs() < 1e-15);

        let p = DirichletParams::new(vec![1.0, 2.0], 1.5, 3.0).unwrap();
        let g = make_matched_gaussian(&p);
        let at_mean = SimplexPoint::new(g.r()[..2].to_vec()).unwrap();
        let inv: f64 = g.r().iter().map(|r| 1.0 / r).sum();
        let expect = g.eps() * (-1.0 + (1.0 - inv) / 12.0);
        let v = expansion_prediction(&p, &at_mean, Order::Second).unwrap();
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn first_order_increment_scales_as_sqrt_eps() {
        let p0 = DirichletParams::new(vec![1.0, 2.0], 1.0, 1.0).unwrap();
        let delta = DeltaVector::from_free(vec![0.4, -0.7]);
        let pts: Vec<(f64, f64)> = log_spaced(1e2, 1e5, 8)
            .into_iter()
            .map(|n| {
                let g = make_matched_gaussian(&p0.with_scale(n).unwrap());
                let inc = prediction_from_delta(&g, &delta, Order::First)
                    - prediction_from_delta(&g, &delta, Order::Zeroth);
                (g.eps().ln(), inc.abs().ln())
            })
            .collect();
        let slope = crate::stats::least_squares_slope(&pts).unwrap();
        assert!((slope - 0.5).abs() <= 0.02, "{slope}");
    }

    #[test]
    fn grid_validation() {
        let p = DirichletParams::new(vec![1.0, 1.0], 1.0, 100.0).unwrap();
        assert!(error_sup(&p, 4).is_err());
        assert!(error_sup(&p, 1).is_err());
        let p4 = DirichletParams::new(vec![1.0; 4], 1.0, 100.0).unwrap();
        assert_eq!(error_sup(&p4, 5), Err(Error::Dimension { d: 4, max: 3 }));
    }

    #[test]
    fn coarse_grid_is_subset_of_fine() {
        let p = DirichletParams::new(vec![1.0, 1.0], 1.0, 1e3).unwrap();
        let coarse = error_sup(&p, 3).unwrap();
        let fine = error_sup(&p, 41).unwrap();
        for order in Order::ALL {
            let ratio = coarse.error(order) / fine.error(order);
            assert!((0.3..=1.0 + 1e-12).contains(&ratio), "{order:?}: {ratio}");
        }
    }

    #[test]
    fn one_dimensional_exponents() {
        let p = DirichletParams::new(vec![1.0], 1.0, 1e4).unwrap();
        let e = error_sup(&p, DEFAULT_GRID).unwrap();
        assert!(e.exponent(Order::Zeroth) >= 0.45, "{:?}", e);
        assert!(e.exponent(Order::Second) >= 1.45, "{:?}", e);
    }

    #[test]
    fn three_dimensional_grid_runs() {
        let p = DirichletParams::new(vec![1.0, 2.0, 1.0], 2.0, 1e3).unwrap();
        let e = error_sup(&p, 7).unwrap();
        assert_eq!(e.points_evaluated, 343);
        assert!(e.errors.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn bulk_membership() {
        assert!(BulkRegion::new(0.0).is_err());
        assert!(BulkRegion::new(1.0).is_err());
        let bulk = BulkRegion::new(0.5).unwrap();
        let p = DirichletParams::new(vec![1.0], 1.0, 64.0).unwrap();
        // radius 0.5 * 2 = 1; delta = (x - 1/2) * sqrt(129)
        let inside = SimplexPoint::new(vec![0.5 + 0.9 / 129f64.sqrt()]).unwrap();
        let outside = SimplexPoint::new(vec![0.5 + 1.1 / 129f64.sqrt()]).unwrap();
        assert!(bulk.contains_point(&p, &inside).unwrap());
        assert!(!bulk.contains_point(&p, &outside).unwrap());
    }

    #[test]
    fn sweep_preserves_order() {
        let p = DirichletParams::new(vec![1.0, 1.0], 1.0, 1.0).unwrap();
        let ns = log_spaced(10.0, 1e3, 5);
        let out = exponent_sweep(&p, &ns, 9).unwrap();
        assert_eq!(out.len(), 5);
        for (e, n) in out.iter().zip(&ns) {
            assert_eq!(e.scale, *n);
        }
        assert_eq!(exponent_sweep(&p, &[100.0], 9).unwrap().len(), 1);
        assert!(exponent_sweep(&p, &[100.0, 10.0], 9).is_err());
    }
}
