mod common;

use rayon::prelude::*;
use saddle_exit::dynsys::{mono, spectral_data, PolynomialField, SpectralOptions};
use saddle_exit::mc::{ks_band_99, ks_statistic};
use saddle_exit::sde::{simulate_linearized_on, NoiseStream, ReferenceOrbit};
use saddle_exit::theory::{
    default_t_read, estimate_n, sigma_via_adjoint, AdjointOptions, ExitLawParams, LimitLaw, Side,
};
use saddle_exit::Model;

/// `N̂` on `n` independent linearized paths.
fn n_hats(model: &Model, x0: &[f64], n: u64, seed: u64) -> Vec<f64> {
    let s = spectral_data(model, SpectralOptions::default()).unwrap();
    let t_read = default_t_read(&s);
    let orbit = ReferenceOrbit::new(model, x0, 1e-3, t_read).unwrap();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(seed, i);
            let p = simulate_linearized_on(&orbit, &s, 1.0, &mut noise).unwrap();
            estimate_n(&p, &s, t_read)
        })
        .collect()
}

struct Moments {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Moments { mean, var, se_mean: (var / n).sqrt(), se_var: ((m4 - var * var) / n).sqrt() }
}

fn adjoint(model: &Model, x0: &[f64]) -> f64 {
    let s = spectral_data(model, SpectralOptions::default()).unwrap();
    sigma_via_adjoint(model, &s, x0, &AdjointOptions::default()).unwrap().sigma
}

#[test]
fn n_hat_is_centered_with_half_variance() {
    let model = common::matrix_model(&[vec![1.0, 0.0], vec![0.0, -2.0]], 1.0);
    let m = moments(&n_hats(&model, &[0.0, 0.0], 100_000, 5));
    assert!((m.var - 0.5).abs() <= 3.0 * m.se_var, "var {} se {}", m.var, m.se_var);
    assert!(m.mean.abs() <= 4.0 * m.se_mean, "mean {}", m.mean);
}

#[test]
fn non_normal_origin_variance_uses_ell_norm() {
    let model = common::matrix_model(&[vec![1.0, 1.0], vec![0.0, -1.0]], 1.0);
    let sigma = adjoint(&model, &[0.0, 0.0]);
    assert!((sigma * sigma - 0.625).abs() < 1e-9);
    let m = moments(&n_hats(&model, &[0.0, 0.0], 30_000, 6));
    assert!((m.var - sigma * sigma).abs() <= 3.0 * m.se_var, "var {} vs {}", m.var, sigma * sigma);
}

#[test]
fn stable_axis_start_matches_mc() {
    let f = PolynomialField::new(2, vec![mono(0, 1.0, &[1, 0]), mono(0, -1.0, &[3, 0]), mono(1, -1.0, &[0, 1])]).unwrap();
    let model = common::ball_model(f, 0.5);
    let x0 = [0.0, 0.3];
    let sigma = adjoint(&model, &x0);
    let m = moments(&n_hats(&model, &x0, 100_000, 7));
    // std(N̂) = √var, with delta-method standard error se_var / (2σ).
    let sd = m.var.sqrt();
    assert!((sd - sigma).abs() <= 3.0 * m.se_var / (2.0 * sd), "{sd} vs {sigma}");
}

#[test]
fn off_origin_kernel_matches_mc() {
    // b = (x + xy, -y): the stable-axis start changes σ away from 1/√2.
    let f = PolynomialField::new(2, vec![mono(0, 1.0, &[1, 0]), mono(0, 1.0, &[1, 1]), mono(1, -1.0, &[0, 1])]).unwrap();
    let model = common::ball_model(f, 1.0);
    let x0 = [0.0, 0.3];
    let sigma = adjoint(&model, &x0);
    // σ² = ∫₀¹ u e^{c u} du with c = 2 y0.
    let c: f64 = 0.6;
    let exact = (c.exp() * (1.0 / c - 1.0 / (c * c)) + 1.0 / (c * c)).sqrt();
    assert!((sigma - exact).abs() < 1e-8, "{sigma} vs {exact}");
    let m = moments(&n_hats(&model, &x0, 30_000, 8));
    let sd = m.var.sqrt();
    assert!((sd - sigma).abs() <= 3.0 * m.se_var / (2.0 * sd), "{sd} vs {sigma}");
}

#[test]
fn n_hat_settles_geometrically() {
    let model = common::matrix_model(&[vec![1.0, 0.3], vec![0.2, -1.0]], 1.0);
    let s = spectral_data(&model, SpectralOptions::default()).unwrap();
    let lag = 2.0 / s.gap;
    let reads: Vec<f64> = (1..=5).map(|k| k as f64 * lag).collect();
    let t_end = reads[reads.len() - 1] + lag;
    let orbit = ReferenceOrbit::new(&model, &[0.0, 0.0], 1e-3, t_end).unwrap();
    let diffs: Vec<Vec<f64>> = (0..400u64)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(9, i);
            let p = simulate_linearized_on(&orbit, &s, 1.0, &mut noise).unwrap();
            reads.iter().map(|&t| (estimate_n(&p, &s, t) - estimate_n(&p, &s, t + lag)).abs()).collect()
        })
        .collect();
    let medians: Vec<f64> = (0..reads.len())
        .map(|k| {
            let mut col: Vec<f64> = diffs.iter().map(|d| d[k]).collect();
            col.sort_by(f64::total_cmp);
            col[col.len() / 2]
        })
        .collect();
    // Least-squares slope of ln(median) against t.
    let n = reads.len() as f64;
    let mx = reads.iter().sum::<f64>() / n;
    let ly: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let slope = reads.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / reads.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(-slope > 0.0, "fitted rate {}", -slope);
}

#[test]
fn sampler_matches_cdf() {
    let law = LimitLaw::new(ExitLawParams {
        q_plus: vec![1.0, 0.0],
        q_minus: vec![-1.0, 0.0],
        h_plus: 0.0,
        h_minus: 0.2,
        sigma: std::f64::consts::FRAC_1_SQRT_2,
        lambda: 1.0,
    })
    .unwrap();
    let n = 1_000_000;
    let mut noise = NoiseStream::new(12, 0);
    let draws: Vec<(Side, f64)> = (0..n).map(|_| law.sample(&mut noise)).collect();
    for side in [Side::Plus, Side::Minus] {
        let xs: Vec<f64> = draws.iter().filter(|d| d.0 == side).map(|d| d.1).collect();
        let d = ks_statistic(&xs, |t| law.cdf(side, t));
        assert!(d <= ks_band_99(xs.len()), "{side:?}: {d}");
    }
    let all: Vec<f64> = draws.iter().map(|d| d.1).collect();
    assert!(ks_statistic(&all, |t| law.mixture_cdf(t)) <= 1.63 / (n as f64).sqrt());
}
