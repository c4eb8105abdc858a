//! Smooth lower surrogate for the minimum of a vector.

use ndarray::{Array1, ArrayView1};

/// softmin(v) = -(1/beta) ln((1/M) sum_m exp(-beta v_m)), evaluated with a
/// max-shift so no exponential overflows. Sandwich property:
/// min(v) <= softmin(v, beta) <= min(v) + ln(M)/beta.
pub fn softmin(values: ArrayView1<f64>, beta: f64) -> f64 {
    assert!(!values.is_empty(), "softmin of empty vector");
    assert!(beta > 0.0, "softmin needs beta > 0");
    let shift = values.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let sum: f64 = values.iter().map(|&v| (-beta * (v - shift)).exp()).sum();
    shift - (sum / values.len() as f64).ln() / beta
}

/// d softmin / d v_m: the softmax weights of -beta*v, summing to 1 and
/// concentrating on the smallest entries as beta grows.
pub(crate) fn softmin_weights(values: ArrayView1<f64>, beta: f64) -> Array1<f64> {
    let shift = values.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let mut w: Array1<f64> = values.mapv(|v| (-beta * (v - shift)).exp());
    let total = w.sum();
    w /= total;
    w
}
