//! Error sweeps of the truncated expansions on the box around the mean.

use dirnorm::expansion::{exponent_sweep, DEFAULT_GRID};
use dirnorm::{error_sup, log_spaced, DirichletParams, Error, Order};

fn alpha_grid() -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a1 in [1.0, 2.0, 3.0] {
        for a2 in [1.0, 2.0, 3.0, 4.0] {
            out.push(vec![a1, a2]);
        }
    }
    out
}

#[test]
fn corrections_reduce_the_error_at_large_scale() {
    for beta in [1.0, 2.0, 3.0] {
        for alpha in alpha_grid() {
            let p = DirichletParams::new(alpha.clone(), beta, 1e3).unwrap();
            let e = error_sup(&p, DEFAULT_GRID).unwrap();
            assert!(
                e.errors[2] < e.errors[1] && e.errors[1] < e.errors[0],
                "{alpha:?} {beta}: {:?}",
                e.errors
            );
        }
    }
}

#[test]
fn local_exponents_approach_the_expansion_orders() {
    for (alpha, beta) in [
        (vec![1.0, 1.0], 1.0),
        (vec![2.0, 3.0], 2.0),
        (vec![3.0, 4.0], 1.0),
    ] {
        let p = DirichletParams::new(alpha.clone(), beta, 1.0).unwrap();
        let sweep = exponent_sweep(&p, &[1e5, 1e6], DEFAULT_GRID).unwrap();
        for order in Order::ALL {
            let k = order.index();
            let slope =
                (sweep[1].errors[k] / sweep[0].errors[k]).ln() / (sweep[1].eps / sweep[0].eps).ln();
            assert!(
                (slope - order.exponent_floor()).abs() <= 0.05,
                "{alpha:?} {beta} order {k}: {slope}"
            );
        }
    }
}

#[test]
fn exponents_rise_with_scale() {
    let p = DirichletParams::new(vec![1.0, 1.0], 1.0, 1.0).unwrap();
    let sweep = exponent_sweep(&p, &log_spaced(10.0, 1e5, 12), DEFAULT_GRID).unwrap();
    assert_eq!(sweep.len(), 12);
    for order in Order::ALL {
        let k = order.index();
        assert!(sweep.iter().all(|e| e.exponents[k].is_finite()));
        assert!(sweep[11].exponents[k] > sweep[4].exponents[k], "order {k}");
    }
}

#[test]
fn empty_box_is_reported() {
    // at N this small the whole box leaves the simplex along one axis only,
    // so the grid still has interior points
    let p = DirichletParams::new(vec![1.0, 1.0], 1.0, 0.01).unwrap();
    match error_sup(&p, 3) {
        Ok(e) => assert!(e.points_evaluated >= 1),
        Err(err) => assert_eq!(err, Error::EmptyRegion),
    }
}
