//! Central moments of the Dirichlet law: closed forms up to order four, an
//! exact rational oracle, and Monte Carlo checks of the event-restricted
//! moment bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expansion::BulkRegion;
use crate::model::{delta_of, make_matched_gaussian, DirichletParams};
use crate::sampling::{run_batches, DEFAULT_BATCHES};
use crate::stats::Accumulator;

/// A multiset of free coordinate indices in `0..d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MomentSpec {
    indices: Vec<usize>,
}

fn check_indices(indices: &[usize], d: usize) -> Result<()> {
    if indices.is_empty() || indices.len() > 4 {
        return Err(Error::Unsupported(format!(
            "moment of order {}",
            indices.len()
        )));
    }
    match indices.iter().find(|&&i| i >= d) {
        Some(&i) => Err(Error::InvalidParameter {
            name: "index",
            value: i as f64,
            reason: "coordinate index must be below the dimension",
        }),
        None => Ok(()),
    }
}

impl MomentSpec {
    /// Order 2 or 3 with any indices, or order 4 with all indices equal.
    pub fn new(mut indices: Vec<usize>, d: usize) -> Result<Self> {
        check_indices(&indices, d)?;
        indices.sort_unstable();
        match indices.len() {
            2 | 3 => {}
            4 if indices[0] == indices[3] => {}
            4 => {
                return Err(Error::Unsupported(format!(
                    "mixed fourth moment {indices:?} has no closed form"
                )))
            }
            n => return Err(Error::Unsupported(format!("moment of order {n}"))),
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn order(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralMoment {
    pub value: f64,
    /// The value is a leading term only, with an `O(N^-3)` remainder.
    pub asymptotic: bool,
}

fn second(r: &[f64], eps: f64, i: usize, j: usize) -> f64 {
    let ind = if i == j { 1.0 } else { 0.0 };
    eps * r[i] * (ind - r[j]) / (1.0 + eps)
}

/// `4 r_i r_j r_l - 2 r_i r_l [i=j] - 2 r_j r_l [i=l] - 2 r_i r_j [j=l] + 2 r_i [i=j=l]`,
/// evaluated per index pattern in factored form so that `r` near 1/2 does
/// not cancel.
fn third_numerator(r: &[f64], i: usize, j: usize, l: usize) -> f64 {
    let mut t = [i, j, l];
    t.sort_unstable();
    let [a, b, c] = t;
    if a == c {
        let ri = r[a];
        2.0 * ri * (1.0 - ri) * (1.0 - 2.0 * ri)
    } else if a == b {
        2.0 * r[a] * r[c] * (2.0 * r[a] - 1.0)
    } else if b == c {
        2.0 * r[c] * r[a] * (2.0 * r[c] - 1.0)
    } else {
        4.0 * r[a] * r[b] * r[c]
    }
}

fn third(r: &[f64], eps: f64, i: usize, j: usize, l: usize) -> f64 {
    eps * eps * third_numerator(r, i, j, l) / ((1.0 + eps) * (1.0 + 2.0 * eps))
}

pub fn central_moment_closed_form(p: &DirichletParams, spec: &MomentSpec) -> Result<CentralMoment> {
    check_indices(spec.indices(), p.dim())?;
    let g = make_matched_gaussian(p);
    let (r, eps) = (g.r(), g.eps());
    let ix = spec.indices();
    Ok(match ix.len() {
        2 => CentralMoment {
            value: second(r, eps, ix[0], ix[1]),
            asymptotic: false,
        },
        3 => CentralMoment {
            value: third(r, eps, ix[0], ix[1], ix[2]),
            asymptotic: false,
        },
        _ => {
            let ri = r[ix[0]];
            CentralMoment {
                value: 3.0 * eps * eps * ri * ri * (1.0 - ri).powi(2),
                asymptotic: true,
            }
        }
    })
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("parameters are finite")
}

fn rising(a: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut term = a.clone();
    for _ in 0..k {
        acc *= &term;
        term += BigRational::one();
    }
    acc
}

/// Exact parameters: shapes `N alpha_i`, `N beta` and their total, taken
/// from the binary values of `alpha`, `beta` and `N` without rounding.
struct ExactModel {
    shapes: Vec<BigRational>,
    total: BigRational,
}

impl ExactModel {
    fn new(p: &DirichletParams) -> Self {
        let n = exact(p.scale());
        let shapes: Vec<BigRational> = (0..=p.dim()).map(|i| &n * exact(p.weight(i))).collect();
        let total = shapes.iter().fold(BigRational::zero(), |acc, s| acc + s);
        Self { shapes, total }
    }

    fn mean(&self, i: usize) -> BigRational {
        &self.shapes[i] / &self.total
    }

    /// `E[prod X_i^{k_i}] = prod (a_i)_{k_i} / (A)_{sum k}` with rising factorials.
    fn raw(&self, indices: &[usize]) -> BigRational {
        let mut counts = vec![0u32; self.shapes.len()];
        for &i in indices {
            counts[i] += 1;
        }
        let num = counts
            .iter()
            .zip(&self.shapes)
            .fold(BigRational::one(), |acc, (&k, a)| acc * rising(a, k));
        num / rising(&self.total, indices.len() as u32)
    }

    /// `E[prod (X_i - r_i)]`, expanded over subsets of the factors.
    fn central(&self, indices: &[usize]) -> BigRational {
        let k = indices.len();
        let means: Vec<BigRational> = indices.iter().map(|&i| self.mean(i)).collect();
        let mut total = BigRational::zero();
        for mask in 0u32..(1 << k) {
            let mut chosen = Vec::with_capacity(k);
            let mut coef = BigRational::one();
            for (m, &i) in indices.iter().enumerate() {
                if mask & (1 << m) != 0 {
                    chosen.push(i);
                } else {
                    coef *= -&means[m];
                }
            }
            total += coef * self.raw(&chosen);
        }
        total
    }
}

/// Exact central moment as a rational number. Any multiset of up to four
/// coordinate indices in `0..=d` is accepted; index `d` is the implicit
/// last coordinate.
pub fn central_moment_exact(p: &DirichletParams, indices: &[usize]) -> Result<BigRational> {
    if indices.len() > 4 {
        return Err(Error::Unsupported(format!(
            "moment of order {}",
            indices.len()
        )));
    }
    if let Some(&i) = indices.iter().find(|&&i| i > p.dim()) {
        return Err(Error::InvalidParameter {
            name: "index",
            value: i as f64,
            reason: "coordinate index must not exceed the dimension",
        });
    }
    Ok(ExactModel::new(p).central(indices))
}

/// Exact raw moment `E[prod X_i]` over the multiset `indices`.
pub fn raw_moment_exact(p: &DirichletParams, indices: &[usize]) -> Result<BigRational> {
    if let Some(&i) = indices.iter().find(|&&i| i > p.dim()) {
        return Err(Error::InvalidParameter {
            name: "index",
            value: i as f64,
            reason: "coordinate index must not exceed the dimension",
        });
    }
    Ok(ExactModel::new(p).raw(indices))
}

/// The exact central moment rounded to `f64`.
pub fn central_moment_oracle(p: &DirichletParams, indices: &[usize]) -> Result<f64> {
    let v = central_moment_exact(p, indices)?;
    Ok(v.to_f64().unwrap_or(f64::NAN))
}

/// `N^3 (E[(X_i - r_i)^4] - leading term)`, with the difference taken in
/// exact arithmetic against the rational leading term.
pub fn fourth_moment_scaled_remainder(p: &DirichletParams, i: usize) -> Result<f64> {
    check_indices(&[i], p.dim())?;
    let m = ExactModel::new(p);
    let exact4 = m.central(&[i; 4]);
    let r = m.mean(i);
    let one = BigRational::one();
    let eps = &one / &m.total;
    let q = &one - &r;
    let leading = BigRational::from_integer(BigInt::from(3)) * &eps * &eps * &r * &r * &q * &q;
    let n = exact(p.scale());
    let scaled = (exact4 - leading) * &n * &n * &n;
    Ok(scaled.to_f64().unwrap_or(f64::NAN))
}

/// The event `A` in the restricted-moment bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// The whole simplex; `P(A^c) = 0` and both restricted moments are exact.
    Everything,
    Bulk(BulkRegion),
}

/// One estimated quantity against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub indices: Vec<usize>,
    /// Absolute value of the estimated left-hand side.
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
}

impl BoundCheck {
    /// The estimate exceeds the bound by more than three standard errors.
    pub fn violated(&self) -> bool {
        self.estimate > self.bound + 3.0 * self.std_error
    }

    /// The estimate sits at least three standard errors below the bound.
    pub fn holds_with_slack(&self) -> bool {
        self.estimate + 3.0 * self.std_error <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedMomentReport {
    pub samples: usize,
    pub complement_prob: f64,
    pub complement_prob_se: f64,
    /// `|E[(X_i - r_i) 1_A]|` against `eps^{1/2} P(A^c)^{1/2}`, for each `i`.
    pub first: Vec<BoundCheck>,
    /// `|E[(X_i - r_i)(X_j - r_j)(X_l - r_l) 1_A] - m_ijl|` against
    /// `eps^{3/2} P(A^c)^{1/4}`, for each multiset `{i, j, l}`.
    pub third: Vec<BoundCheck>,
}

impl RestrictedMomentReport {
    pub fn checks(&self) -> impl Iterator<Item = &BoundCheck> {
        self.first.iter().chain(&self.third)
    }

    pub fn any_violated(&self) -> bool {
        self.checks().any(BoundCheck::violated)
    }

    pub fn all_hold_with_slack(&self) -> bool {
        self.checks().all(BoundCheck::holds_with_slack)
    }
}

pub const MIN_RESTRICTED_SAMPLES: usize = 10_000;

fn triples(d: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            for l in j..d {
                out.push([i, j, l]);
            }
        }
    }
    out
}

/// Monte Carlo estimates of the restricted first and third central moments
/// on the event `A`, alongside their bounds. `P(A^c)` in the bounds is the
/// Monte Carlo frequency from the same draws.
pub fn restricted_moment_check(
    p: &DirichletParams,
    event: Event,
    samples: usize,
    seed: u64,
) -> Result<RestrictedMomentReport> {
    if samples < MIN_RESTRICTED_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples,
            min: MIN_RESTRICTED_SAMPLES,
        });
    }
    let d = p.dim();
    let g = make_matched_gaussian(p);
    let eps = g.eps();
    let trip = triples(d);
    let closed: Vec<f64> = trip
        .iter()
        .map(|t| third(g.r(), eps, t[0], t[1], t[2]))
        .collect();

    let bulk = match event {
        Event::Everything => {
            let exact = |indices: Vec<usize>| BoundCheck {
                indices,
                estimate: 0.0,
                std_error: 0.0,
                bound: 0.0,
            };
            return Ok(RestrictedMomentReport {
                samples,
                complement_prob: 0.0,
                complement_prob_se: 0.0,
                first: (0..d).map(|i| exact(vec![i])).collect(),
                third: trip.iter().map(|t| exact(t.to_vec())).collect(),
            });
        }
        Event::Bulk(b) => b,
    };

    // slot 0: indicator of A^c; then d first moments; then the triples
    let slots = 1 + d + trip.len();
    let batches = run_batches(seed, 0, samples, DEFAULT_BATCHES, |gen, count| {
        let mut acc = vec![Accumulator::default(); slots];
        let mut dev = vec![0.0; d];
        for _ in 0..count {
            let x = gen.dirichlet(p);
            let inside = delta_of(p, &x)
                .map(|delta| bulk.contains(&delta, p.scale()))
                .unwrap_or(false);
            acc[0].push(if inside { 0.0 } else { 1.0 });
            for (i, v) in dev.iter_mut().enumerate() {
                *v = if inside { x.coord(i) - g.r()[i] } else { 0.0 };
            }
            for i in 0..d {
                acc[1 + i].push(dev[i]);
            }
            for (k, t) in trip.iter().enumerate() {
                acc[1 + d + k].push(dev[t[0]] * dev[t[1]] * dev[t[2]]);
            }
        }
        acc
    });
    let mut total = vec![Accumulator::default(); slots];
    for batch in &batches {
        for (t, b) in total.iter_mut().zip(batch) {
            t.merge(b);
        }
    }

    let pc = total[0].mean();
    let first = (0..d)
        .map(|i| BoundCheck {
            indices: vec![i],
            estimate: total[1 + i].mean().abs(),
            std_error: total[1 + i].std_error(),
            bound: eps.sqrt() * pc.sqrt(),
        })
        .collect();
    let third = trip
        .iter()
        .enumerate()
        .map(|(k, t)| BoundCheck {
            indices: t.to_vec(),
            estimate: (total[1 + d + k].mean() - closed[k]).abs(),
            std_error: total[1 + d + k].std_error(),
            bound: eps.powf(1.5) * pc.powf(0.25),
        })
        .collect();
    Ok(RestrictedMomentReport {
        samples,
        complement_prob: pc,
        complement_prob_se: total[0].std_error(),
        first,
        third,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: &[f64], beta: f64, n: f64) -> DirichletParams {
        DirichletParams::new(alpha.to_vec(), beta, n).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MomentSpec::new(vec![0], 2).is_err());
        assert!(MomentSpec::new(vec![0, 2], 2).is_err());
        assert!(MomentSpec::new(vec![0, 0, 0, 1], 2).is_err());
        assert!(MomentSpec::new(vec![0; 5], 2).is_err());
        assert_eq!(
            MomentSpec::new(vec![1, 0, 1], 2).unwrap().indices(),
            &[0, 1, 1]
        );
        assert_eq!(MomentSpec::new(vec![1; 4], 2).unwrap().order(), 4);
    }

    #[test]
    fn uniform_moments() {
        let p = params(&[1.0], 1.0, 1.0);
        let v = central_moment_closed_form(&p, &MomentSpec::new(vec![0, 0], 1).unwrap()).unwrap();
        assert!((v.value - 1.0 / 12.0).abs() < 1e-16);
        assert!(!v.asymptotic);
        let v = central_moment_closed_form(&p, &MomentSpec::new(vec![0; 3], 1).unwrap()).unwrap();
        assert!(v.value.abs() < 1e-17);
        assert_eq!(
            central_moment_exact(&p, &[0; 4]).unwrap(),
            BigRational::new(1.into(), 80.into())
        );
        assert_eq!(
            central_moment_exact(&p, &[0; 3]).unwrap(),
            BigRational::zero()
        );
        assert_eq!(central_moment_exact(&p, &[]).unwrap(), BigRational::one());
        assert!(
            central_moment_closed_form(&p, &MomentSpec::new(vec![0; 4], 1).unwrap())
                .unwrap()
                .asymptotic
        );
    }

    #[test]
    fn covariance_example() {
        let p = params(&[1.0, 2.0], 1.0, 3.0);
        let v = central_moment_closed_form(&p, &MomentSpec::new(vec![0, 1], 2).unwrap()).unwrap();
        assert!((v.value + 1.0 / 104.0).abs() < 1e-17);
        assert_eq!(
            central_moment_exact(&p, &[0, 1]).unwrap(),
            BigRational::new((-1).into(), 104.into())
        );
    }

    #[test]
    fn first_moment_is_zero_and_mean_recovered() {
        let p = params(&[1.5, 0.25], 2.0, 7.0);
        for i in 0..=2 {
            assert!(central_moment_exact(&p, &[i]).unwrap().is_zero());
        }
        let r = make_matched_gaussian(&p).r().to_vec();
        assert!((raw_moment_exact(&p, &[1]).unwrap().to_f64().unwrap() - r[1]).abs() < 1e-16);
    }

    #[test]
    fn factored_third_numerator_matches_literal_formula() {
        let r = [0.15, 0.3, 0.2, 0.35];
        let ind = |c: bool| if c { 1.0 } else { 0.0 };
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    let literal = 4.0 * r[i] * r[j] * r[l]
                        - 2.0 * r[i] * r[l] * ind(i == j)
                        - 2.0 * r[j] * r[l] * ind(i == l)
                        - 2.0 * r[i] * r[j] * ind(j == l)
                        + 2.0 * r[i] * ind(i == j && j == l);
                    let v = third_numerator(&r, i, j, l);
                    assert!((v - literal).abs() < 1e-15, "{i}{j}{l}: {v} vs {literal}");
                }
            }
        }
    }

    #[test]
    fn pure_third_moment_specialization() {
        let p = params(&[0.7, 1.9], 2.3, 13.0);
        let g = make_matched_gaussian(&p);
        let (r, eps) = (g.r()[1], g.eps());
        let special =
            eps * eps * 2.0 * r * (1.0 - r) * (1.0 - 2.0 * r) / ((1.0 + eps) * (1.0 + 2.0 * eps));
        let v = central_moment_closed_form(&p, &MomentSpec::new(vec![1; 3], 2).unwrap()).unwrap();
        assert!((v.value - special).abs() <= 1e-14 * special.abs());
    }

    #[test]
    fn closed_forms_match_oracle_on_fixed_instances() {
        let p = params(&[1.0, 2.0, 0.5], 1.5, 4.5);
        for ix in [
            vec![0, 0],
            vec![0, 2],
            vec![1, 1, 2],
            vec![0, 1, 2],
            vec![2, 2, 2],
        ] {
            let cf =
                central_moment_closed_form(&p, &MomentSpec::new(ix.clone(), 3).unwrap()).unwrap();
            let or = central_moment_oracle(&p, &ix).unwrap();
            assert!(
                (cf.value - or).abs() <= 1e-14 * or.abs(),
                "{ix:?}: {} vs {or}",
                cf.value
            );
        }
    }

    #[test]
    fn restricted_moments_everything_is_exact() {
        let p = params(&[1.0], 1.0, 100.0);
        let rep = restricted_moment_check(&p, Event::Everything, 10_000, 1).unwrap();
        assert_eq!(rep.complement_prob, 0.0);
        assert!(rep.checks().all(|c| c.estimate == 0.0 && c.bound == 0.0));
        assert!(!rep.any_violated());
        assert!(restricted_moment_check(&p, Event::Everything, 9_999, 1).is_err());
    }
}
