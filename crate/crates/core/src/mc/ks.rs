/// One-sample Kolmogorov–Smirnov distance `sup |F_n - F|` of `data` against
/// a continuous CDF. `data` need not be sorted.
pub fn ks_statistic(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 99% critical value `1.628/√n` of the one-sample KS distance.
pub fn ks_band_99(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_distance() {
        // Midpoints of n equal cells are 1/(2n) away from the uniform CDF.
        let n = 50;
        let data: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&data, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn single_point() {
        assert!((ks_statistic(&[0.3], |x| x) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn order_invariant() {
        let a = [0.9, 0.1, 0.5, 0.33];
        let b = [0.1, 0.33, 0.5, 0.9];
        assert_eq!(ks_statistic(&a, |x| x), ks_statistic(&b, |x| x));
    }
}
