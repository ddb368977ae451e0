//! The normalized semicircle density (1/2π)√(4 − y²) on [−2, 2].

use std::f64::consts::PI;

pub fn density(y: f64) -> f64 {
    if y.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - y * y).sqrt() / (2.0 * PI)
    }
}

pub fn cdf(y: f64) -> f64 {
    if y <= -2.0 {
        0.0
    } else if y >= 2.0 {
        1.0
    } else {
        0.5 + y * (4.0 - y * y).sqrt() / (4.0 * PI) + (y / 2.0).asin() / PI
    }
}

/// ∫₀² y ρ(y) dy, the mean of the positive half: 4/(3π).
pub fn positive_mean() -> f64 {
    4.0 / (3.0 * PI)
}

/// Kolmogorov–Smirnov distance between a sample and the semicircle law.
pub fn ks_distance(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = cdf(y);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
