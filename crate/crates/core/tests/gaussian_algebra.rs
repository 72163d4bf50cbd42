//! Closed-form covariance geometry against generic dense linear algebra.

use dirnorm::densities::{matched_normal_log_pdf, matched_normal_log_pdf_delta};
use dirnorm::model::{delta_from_coords, sigma_inv_quadform, sigma_inv_quadform_extended};
use dirnorm::sampling::RngStream;
use dirnorm::{make_matched_gaussian, DirichletParams};
use nalgebra::{DMatrix, DVector};

fn random_params(stream: u64) -> DirichletParams {
    let mut g = RngStream::new(0xA1, stream).generator();
    let d = 1 + (g.next_u64() % 5) as usize;
    let alpha = (0..d).map(|_| 0.2 + 4.8 * g.uniform()).collect();
    let beta = 0.2 + 4.8 * g.uniform();
    let n = 10f64.powf(3.0 * g.uniform());
    DirichletParams::new(alpha, beta, n).unwrap()
}

fn max_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(1.0);
    (a - b).amax() / scale
}

#[test]
fn determinant_and_inverse_match_lu() {
    for k in 0..100 {
        let p = random_params(k);
        let g = make_matched_gaussian(&p);
        let d = g.dim();
        let sigma = DMatrix::from_fn(d, d, |i, j| g.sigma(i, j));
        let closed_inv = DMatrix::from_fn(d, d, |i, j| g.sigma_inv(i, j));

        let lu_det = sigma.clone().lu().determinant();
        assert!(
            (g.det_sigma() - lu_det).abs() <= 1e-12 * lu_det.abs(),
            "instance {k}: {} vs {lu_det}",
            g.det_sigma()
        );

        let lu_inv = sigma
            .clone()
            .lu()
            .try_inverse()
            .expect("covariance is nonsingular");
        assert!(
            max_rel(&closed_inv, &lu_inv) <= 1e-12,
            "instance {k}: inverse mismatch"
        );

        let product = &sigma * &closed_inv;
        assert!(
            (product - DMatrix::identity(d, d)).amax() <= 1e-12,
            "instance {k}"
        );
    }
}

#[test]
fn dense_matrices_agree_with_entries() {
    let g = make_matched_gaussian(&DirichletParams::new(vec![1.0, 2.0], 1.0, 1.0).unwrap());
    assert_eq!(
        g.sigma_matrix(),
        vec![vec![0.1875, -0.125], vec![-0.125, 0.25]]
    );
    assert_eq!(g.sigma_inv_matrix(), vec![vec![8.0, 4.0], vec![4.0, 6.0]]);
}

#[test]
fn normal_density_matches_dense_formula() {
    for k in 0..100 {
        let p = random_params(1000 + k);
        let g = make_matched_gaussian(&p);
        let d = g.dim();
        let mut rng = RngStream::new(0xA2, k).generator();
        let x: Vec<f64> = (0..d)
            .map(|i| g.r()[i] + 2.0 * g.marginal_sd(i) * rng.standard_normal())
            .collect();

        // covariance of x itself: Sigma_r / (1 + 1/eps)
        let cov = DMatrix::from_fn(d, d, |i, j| g.sigma(i, j) / g.precision_scale());
        let dev = DVector::from_iterator(d, x.iter().zip(g.r()).map(|(a, b)| a - b));
        let chol = cov
            .clone()
            .cholesky()
            .expect("covariance is positive definite");
        let solved = chol.solve(&dev);
        let quad = dev.dot(&solved);
        let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let dense = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + quad);

        let closed = matched_normal_log_pdf(&g, &x).unwrap();
        assert!(
            (closed - dense).abs() <= 1e-10 * dense.abs().max(1.0),
            "instance {k}: {closed} vs {dense}"
        );

        let delta = delta_from_coords(&g, &x).unwrap();
        let a = sigma_inv_quadform(&g, &delta);
        let b = sigma_inv_quadform_extended(&g, &delta);
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        assert_eq!(closed, matched_normal_log_pdf_delta(&g, &delta));
    }
}
