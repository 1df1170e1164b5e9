mod common;

use saddle_exit::dynsys::{spectral_data, SpectralOptions};
use saddle_exit::mc::{
    compare_to_limit, convergence_sweep, ks_band_99, ks_statistic, lemma_tests, run_batch, samples_csv, sweep_csv,
    CompareOptions, LemmaOptions,
};
use saddle_exit::sde::{NoiseStream, SdeOptions};
use saddle_exit::theory::{analyze, AnalysisOptions, ExitLawParams, LimitLaw, Side};
use saddle_exit::{Error, Model};

fn linear_law() -> LimitLaw<f64> {
    LimitLaw::new(ExitLawParams {
        q_plus: vec![1.0, 0.0],
        q_minus: vec![-1.0, 0.0],
        h_plus: 0.0,
        h_minus: 0.0,
        sigma: std::f64::consts::FRAC_1_SQRT_2,
        lambda: 1.0,
    })
    .unwrap()
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn empty_batch_is_rejected() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let s = spectral_data(&model, SpectralOptions::default()).unwrap();
    let err = run_batch(&model, &s, &linear_law(), &[0.0, 0.0], 1e-3, 0, 1, &SdeOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
    let err = run_batch(&model, &s, &linear_law(), &[0.0, 0.0], -1e-3, 5, 1, &SdeOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
    let err = run_batch(&model, &s, &linear_law(), &[2.0, 0.0], 1e-3, 5, 1, &SdeOptions::default()).unwrap_err();
    assert_eq!(err, Error::NotInterior);
}

#[test]
fn batch_is_reproducible_and_prefix_stable() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let s = spectral_data(&model, SpectralOptions::default()).unwrap();
    let opts = SdeOptions::default();
    let a = run_batch(&model, &s, &linear_law(), &[0.0, 0.0], 1e-3, 200, 5, &opts).unwrap();
    let b = in_pool(3, || run_batch(&model, &s, &linear_law(), &[0.0, 0.0], 1e-3, 200, 5, &opts).unwrap());
    assert_eq!(samples_csv(&a), samples_csv(&b));
    // Trajectory i does not depend on n.
    let c = run_batch(&model, &s, &linear_law(), &[0.0, 0.0], 1e-3, 50, 5, &opts).unwrap();
    assert_eq!(&a[..50], &c[..]);
    let d = run_batch(&model, &s, &linear_law(), &[0.0, 0.0], 1e-3, 200, 6, &opts).unwrap();
    assert_ne!(samples_csv(&a), samples_csv(&d));
}

#[test]
fn ks_accepts_exact_samples_at_every_size() {
    let law = LimitLaw::new(ExitLawParams {
        q_plus: vec![1.0],
        q_minus: vec![-1.0],
        h_plus: 0.3,
        h_minus: -0.2,
        sigma: 0.6,
        lambda: 1.5,
    })
    .unwrap();
    for n in [1_000u64, 10_000, 100_000] {
        let mut noise = NoiseStream::new(77, n);
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for _ in 0..n {
            match law.sample(&mut noise) {
                (Side::Plus, t) => plus.push(t),
                (Side::Minus, t) => minus.push(t),
            }
        }
        let kp = ks_statistic(&plus, |t| law.cdf(Side::Plus, t));
        let km = ks_statistic(&minus, |t| law.cdf(Side::Minus, t));
        assert!(kp <= ks_band_99(plus.len()), "n = {n}: {kp}");
        assert!(km <= ks_band_99(minus.len()), "n = {n}: {km}");
        // The wrong side's law is rejected once n is large.
        if n == 100_000 {
            let wrong = ks_statistic(&plus, |t| law.cdf(Side::Minus, t));
            assert!(wrong > 3.0 * ks_band_99(plus.len()), "{wrong}");
        }
    }
}

#[test]
fn report_accounts_for_every_sample() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let s = spectral_data(&model, SpectralOptions::default()).unwrap();
    let law = linear_law();
    let samples = run_batch(&model, &s, &law, &[0.0, 0.0], 1e-3, 2_000, 11, &SdeOptions::default()).unwrap();
    let r = compare_to_limit(&samples, &law, &CompareOptions::new(2.0)).unwrap();
    assert_eq!(r.n, r.n_used + r.n_capped + r.n_ambiguous);
    assert_eq!(r.n_used, r.n_plus + r.n_minus);
    assert!(r.n_capped as f64 <= 1e-3 * r.n as f64, "{}", r.n_capped);
    assert!((r.side_fraction_plus + r.side_fraction_minus + r.ambiguous_fraction - 1.0).abs() < 1e-12);
    assert!(r.ks_plus <= r.ks_band_plus && r.ks_minus <= r.ks_band_minus, "{} {}", r.ks_plus, r.ks_minus);

    let few = &samples[..150];
    assert!(matches!(
        compare_to_limit(few, &law, &CompareOptions::new(2.0)),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn linear_field_coupling_is_exact() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let s = spectral_data(&model, SpectralOptions::default()).unwrap();
    let opts = LemmaOptions { n: 300, gronwall_seeds: 20, ..LemmaOptions::default() };
    let r = lemma_tests(&model, &s, &[0.0, 0.0], &opts).unwrap();
    assert!(r.coupling.exact, "{:?}", r.coupling);
    assert!(r.coupling.pass);
    assert!(r.gronwall.pass, "{:?}", r.gronwall);
}

fn cubic_setup() -> (Model, LimitLaw<f64>, saddle_exit::dynsys::SpectralData<f64>) {
    let model = common::cubic_saddle(1.0, 0.5);
    let a = analyze(&model, &[0.0, 0.0], &AnalysisOptions::default()).unwrap();
    (model, a.law, a.spectral)
}

#[test]
fn cubic_law_fit_improves_as_noise_shrinks() {
    let (model, law, s) = cubic_setup();
    let compare = CompareOptions::new(1.0);
    let report = |eps: f64| {
        let samples = run_batch(&model, &s, &law, &[0.0, 0.0], eps, 4_000, 3, &SdeOptions::default()).unwrap();
        compare_to_limit(&samples, &law, &compare).unwrap()
    };
    let (coarse, fine) = (report(1e-1), report(1e-5));
    let worst = |r: &saddle_exit::ComparisonReport| r.ks_plus.max(r.ks_minus);
    assert!(worst(&fine) < worst(&coarse), "{} vs {}", worst(&fine), worst(&coarse));
    assert!(worst(&fine) <= fine.ks_band_plus.max(fine.ks_band_minus), "{}", worst(&fine));
    assert!(fine.n_capped as f64 <= 1e-3 * fine.n as f64);
    // Median of the centered times sits within a few MC standard errors of
    // the limit; there is no monotone trend to test at this sample size.
    assert!(fine.median_error.abs() < 0.05, "{}", fine.median_error);
}

#[test]
fn sweep_csv_is_thread_independent() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let s = spectral_data(&model, SpectralOptions::default()).unwrap();
    let law = linear_law();
    let eps = [1e-2, 1e-3, 1e-4];
    let run = |threads| {
        in_pool(threads, || {
            sweep_csv(&convergence_sweep(&model, &s, &law, &[0.0, 0.0], &eps, 400, 9, &SdeOptions::default()).unwrap())
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(16));
    assert_eq!(one.lines().count(), 4);

    let bad = convergence_sweep(&model, &s, &law, &[0.0, 0.0], &[1e-2, 1e-2, 1e-3], 10, 9, &SdeOptions::default());
    assert!(matches!(bad, Err(Error::InvalidInput(_))));
}
