mod common;

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use saddle_exit::dynsys::{mono, spectral_data, Domain, PolynomialField, SpectralOptions, VectorFieldModel};
use saddle_exit::flow::{
    boundary_hits, h_constants, integrate_flow, unstable_curve_point, CurveOptions, FlowOptions, HGrid, StepControl,
};
use saddle_exit::linalg::norm;
use saddle_exit::Model;

fn spec(model: &Model) -> saddle_exit::Spectral {
    spectral_data(model, SpectralOptions::default()).unwrap()
}

fn one_d(terms: Vec<saddle_exit::dynsys::Monomial<f64>>, half_width: f64) -> Model {
    let f = PolynomialField::new(1, terms).unwrap();
    VectorFieldModel::with_default_enclosure(Arc::new(f), Domain::boxed(vec![-half_width], vec![half_width]).unwrap())
        .unwrap()
}

#[test]
fn exponential_growth_exit_time() {
    let model = one_d(vec![mono(0, 1.0, &[1])], 1.0);
    let fr = integrate_flow(&model, &[1e-3], 50.0, &FlowOptions::default()).unwrap();
    assert_abs_diff_eq!(fr.exit_time, 1e3f64.ln(), epsilon = 1e-7);
    assert_abs_diff_eq!(fr.exit_point[0], 1.0, epsilon = 1e-9);
}

#[test]
fn fixed_step_rk4_exit_time() {
    let model = one_d(vec![mono(0, 1.0, &[1])], 1.0);
    let opts = FlowOptions { step: StepControl::fixed(1e-3), ..FlowOptions::default() };
    let fr = integrate_flow(&model, &[1e-3], 50.0, &opts).unwrap();
    assert_abs_diff_eq!(fr.exit_time, 6.9078, epsilon = 1e-4);
}

#[test]
fn stable_axis_never_exits() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let fr = integrate_flow(&model, &[0.0, 0.5], 30.0, &FlowOptions::default()).unwrap();
    assert!(!fr.exited());
    assert!(fr.exit_time.is_infinite());
    assert!(norm(&fr.exit_point) < 1e-10);
}

#[test]
fn cubic_travel_time_matches_quadrature() {
    let model = common::cubic_saddle(0.0, 0.5);
    let fr = integrate_flow(&model, &[0.1, 0.0], 50.0, &FlowOptions::default()).unwrap();
    let oracle = common::quad(&|x| 1.0 / (x - x * x * x), 0.1, 0.5, 1e-13);
    assert_abs_diff_eq!(fr.exit_time, oracle, epsilon = 1e-8);
    assert!(model.domain().g(&fr.exit_point).abs() <= 1e-10);
}

#[test]
fn linear_curve_points_lie_on_axis() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let s = spec(&model);
    let opts = CurveOptions::default();
    for sign in [1i8, -1] {
        let p = unstable_curve_point(&model, &s, 0.1, sign, &opts).unwrap();
        assert_abs_diff_eq!(p[0], 0.1 * sign as f64, epsilon = 1e-10);
        assert!(p[1].abs() < 1e-10);
    }
}

#[test]
fn quadratic_curve_profile() {
    // b = (x, -y + x²): invariance gives γ₂(x) = x²/3.
    let f = PolynomialField::new(2, vec![mono(0, 1.0, &[1, 0]), mono(1, -1.0, &[0, 1]), mono(1, 1.0, &[2, 0])]).unwrap();
    let model = common::ball_model(f, 1.0);
    let s = spec(&model);
    let delta = 0.05;
    let p = unstable_curve_point(&model, &s, delta, 1, &CurveOptions::default()).unwrap();
    assert_abs_diff_eq!(p[0], delta, epsilon = 1e-10);
    assert!((p[1] - delta * delta / 3.0).abs() <= 1e-3 * delta * delta, "{p:?}");
}

#[test]
fn boundary_hits_ball_and_box() {
    let model = common::linear_saddle(1.0, 1.0, 1.0);
    let c = boundary_hits(&model, &spec(&model), &CurveOptions::default()).unwrap();
    assert!(saddle_exit::linalg::distance(&c.q_plus, &[1.0, 0.0]) < 1e-8);
    assert!(saddle_exit::linalg::distance(&c.q_minus, &[-1.0, 0.0]) < 1e-8);

    let f = saddle_exit::dynsys::registry::linear_saddle(1.0, 1.0).unwrap();
    let boxed = VectorFieldModel::with_default_enclosure(
        Arc::new(f),
        Domain::boxed(vec![-2.0, -1.0], vec![2.0, 1.0]).unwrap(),
    )
    .unwrap();
    let c = boundary_hits(&boxed, &spec(&boxed), &CurveOptions::default()).unwrap();
    assert!(saddle_exit::linalg::distance(&c.q_plus, &[2.0, 0.0]) < 1e-8);
    assert!(saddle_exit::linalg::distance(&c.q_minus, &[-2.0, 0.0]) < 1e-8);
    assert!(c.transversality_plus > 1.0);

    let cubic = common::cubic_saddle(0.0, 0.5);
    let c = boundary_hits(&cubic, &spec(&cubic), &CurveOptions::default()).unwrap();
    assert!(saddle_exit::linalg::distance(&c.q_plus, &[0.5, 0.0]) < 1e-8);
    assert!(saddle_exit::linalg::distance(&c.q_minus, &[-0.5, 0.0]) < 1e-8);
}

#[test]
fn transverse_deviation_is_quadratic() {
    let model = common::cubic_saddle(1.0, 0.5);
    let s = spec(&model);
    let c = boundary_hits(&model, &s, &CurveOptions::default()).unwrap();
    let mut pts: Vec<(f64, f64)> = c
        .gamma_samples
        .iter()
        .filter(|(d, _)| *d > 0.0)
        .map(|(d, p)| (*d, norm(&s.project_l(p))))
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let fit = pts[..2].iter().map(|(d, r)| r / (d * d)).fold(0.0, f64::max);
    for (d, r) in &pts[2..] {
        assert!(*r <= 1.05 * fit * d * d, "δ={d}: {r} vs C={fit}");
    }
}

fn h_of(model: &Model) -> saddle_exit::HConstants {
    let s = spec(model);
    let opts = CurveOptions::default();
    let c = boundary_hits(model, &s, &opts).unwrap();
    h_constants(model, &s, &c, &HGrid::default(), &opts).unwrap()
}

#[test]
fn linear_h_constants() {
    let h = h_of(&common::linear_saddle(1.0, 1.0, 1.0));
    assert_abs_diff_eq!(h.h_plus, 0.0, epsilon = 1e-7);
    assert_abs_diff_eq!(h.h_minus, 0.0, epsilon = 1e-7);
    let h = h_of(&common::linear_saddle(2.0, 1.0, 1.0));
    assert_abs_diff_eq!(h.h_plus, 0.0, epsilon = 1e-7);
    let h = h_of(&common::linear_saddle(2.0, 1.0, std::f64::consts::E));
    assert_abs_diff_eq!(h.h_plus, 0.5, epsilon = 1e-7);
    assert_abs_diff_eq!(h.h_minus, 0.5, epsilon = 1e-7);
}

#[test]
fn one_dimensional_cubic_h() {
    let model = one_d(vec![mono(0, 1.0, &[1]), mono(0, -1.0, &[3])], 0.5);
    let h = h_of(&model);
    // Partial fractions: ln(1/2) - ½ln(3/4).
    let closed = 0.5f64.ln() - 0.5 * 0.75f64.ln();
    // Independent oracle: ln δ + ∫_δ^{1/2} dy/(y - y³) as δ → 0, written as a
    // convergent integral.
    let oracle = 0.5f64.ln() + common::quad(&|y| if y == 0.0 { 0.0 } else { 1.0 / (y - y * y * y) - 1.0 / y }, 0.0, 0.5, 1e-14);
    assert_abs_diff_eq!(closed, oracle, epsilon = 1e-10);
    assert_abs_diff_eq!(h.h_plus, oracle, epsilon = 1e-5);
    assert_abs_diff_eq!(h.h_minus, oracle, epsilon = 1e-5);
}

#[test]
fn h_table_error_contracts() {
    let h = h_of(&common::cubic_saddle(1.0, 0.5));
    for table in [&h.raw_plus, &h.raw_minus] {
        let n = table.len();
        for k in n - 3..n - 1 {
            let (e0, e1) = ((table[k].1 - h.h_plus).abs(), (table[k + 1].1 - h.h_plus).abs());
            assert!(e1 <= 0.7 * e0, "k={k}: {e1} vs {e0}");
        }
    }
    assert!(h.extrapolation_error_estimate < 1e-3);
}

#[test]
fn cubic_h_matches_truth_card() {
    let model = common::cubic_saddle(1.0, 0.5);
    let h = h_of(&model);
    let card = saddle_exit::dynsys::registry::cubic_saddle_card(1.0, 1.0, 1.0, 0.5).unwrap();
    assert_abs_diff_eq!(h.h_plus, card.h_plus, epsilon = 1e-4);
    assert_abs_diff_eq!(h.h_minus, card.h_minus, epsilon = 1e-4);
}
