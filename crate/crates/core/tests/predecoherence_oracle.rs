//! Fluctuation-matrix statistics against closed forms.

use faer::c64;
use intricacy_core::predecoherence::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

#[test]
fn wigner_scaled_elements_have_variance_one_over_n() {
    let n = 256;
    let m = sample_fluctuation_matrix(&DisorderSpec::new(n, NoiseFamily::GammaMatched, 31)).unwrap();
    let w = m.wigner_scaled();
    let mut off = Vec::new();
    let mut diag = Vec::new();
    for j in 0..n {
        diag.push(w[(j, j)].re);
        for i in (j + 1)..n {
            off.push(w[(i, j)].norm_sqr());
        }
    }
    let mean_sq = off.iter().sum::<f64>() / off.len() as f64;
    // Exp(1) − 1 has kurtosis 9, so the diagonal needs more than one matrix.
    let spec = DisorderSpec::new(n, NoiseFamily::GammaMatched, 31);
    for index in 1..8 {
        let w = sample_indexed(&spec, index).unwrap().wigner_scaled();
        diag.extend((0..n).map(|j| w[(j, j)].re));
    }
    let (_, diag_var) = moments(&diag);
    let target = 1.0 / n as f64;
    assert!((mean_sq / target - 1.0).abs() < 0.03, "off-diagonal E|w|² · N = {}", mean_sq * n as f64);
    // 2048 values: one standard error of the variance is about 6%.
    assert!((diag_var / target - 1.0).abs() < 0.2, "diagonal Var · N = {}", diag_var * n as f64);
    assert!(m.trace().norm() < 1e-12);
}

/// Sums of N elementary draws behave like the single aggregate draw that
/// the sampler uses in their place.
#[test]
fn elementary_sums_match_their_aggregate_law() {
    let n = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gamma = Gamma::new(1.0 / n as f64, 1.0).unwrap();
    let poisson = Poisson::new(1.0 / n as f64).unwrap();
    let sums = |f: &mut dyn FnMut() -> f64| -> Vec<f64> {
        (0..20_000).map(|_| (0..n).map(|_| f() - 1.0 / n as f64).sum()).collect()
    };
    let g = sums(&mut || gamma.sample(&mut rng));
    let p = sums(&mut || poisson.sample(&mut rng));
    for (name, s) in [("gamma", g), ("poisson", p)] {
        let (mean, var) = moments(&s);
        assert!(mean.abs() < 0.03, "{name} mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "{name} variance {var}");
    }
}

#[test]
fn noise_families_agree_on_k() {
    let gamma = ensemble(&DisorderSpec::new(256, NoiseFamily::GammaMatched, 8), 12).unwrap();
    let poisson = ensemble(&DisorderSpec::new(256, NoiseFamily::PoissonLiteral, 8), 12).unwrap();
    let target = 4.0 / (3.0 * std::f64::consts::PI);
    assert!((gamma.mean_k - target).abs() / target < 0.01, "{}", gamma.mean_k);
    assert!((poisson.mean_k - target).abs() / target < 0.01, "{}", poisson.mean_k);
    assert!((gamma.mean_k - poisson.mean_k).abs() < 0.005);
}

#[test]
fn haar_rotation_leaves_k_unchanged() {
    let mut spec = DisorderSpec::new(96, NoiseFamily::GammaMatched, 3);
    let plain = split_positive_negative(&sample_fluctuation_matrix(&spec).unwrap()).unwrap();
    spec.haar_rotation = true;
    let rotated = split_positive_negative(&sample_fluctuation_matrix(&spec).unwrap()).unwrap();
    assert!((plain.k() - rotated.k()).abs() < 1e-10);
}

#[test]
fn k_is_half_the_trace_norm() {
    let m = sample_fluctuation_matrix(&DisorderSpec::new(64, NoiseFamily::PoissonLiteral, 17)).unwrap();
    let split = split_positive_negative(&m).unwrap();
    let trace_norm: f64 = m.eigenvalues().unwrap().iter().map(|l| l.abs()).sum();
    assert!((split.k_plus + split.k_minus - trace_norm).abs() < 1e-12);
    assert!((split.k_plus - split.k_minus).abs() < 1e-12);
}

#[test]
fn rotated_spectrum_is_far_from_the_semicircle() {
    let mut spec = DisorderSpec::new(256, NoiseFamily::GammaMatched, 2);
    spec.construction = Construction::RotatedSpectrum;
    let m = sample_fluctuation_matrix(&spec).unwrap();
    assert!(semicircle_test(&m).unwrap() > 0.2);
    let one = c64::new(1.0, 0.0);
    assert!(m.trace().norm() < 1e-12 * one.norm());
}
