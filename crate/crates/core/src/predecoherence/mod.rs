//! Random-matrix model of predecoherent disorder.
//!
//! A fluctuation matrix Δρ is a traceless self-adjoint N×N block. Its split
//! Δρ = ρ₊ − ρ₋ into positive and negative parts gives
//! K = Tr ρ₊ = Tr ρ₋, which tends to 4/(3π) for large N.
//!
//! Two constructions are available:
//!
//! * [`Construction::Superposed`] (default): every matrix element is the sum
//!   of N independent elementary fluctuations drawn from the noise family,
//!   so `N·Δρ` is a Wigner matrix with element variance 1/N and Δρ itself
//!   has its spectrum on [−2/N, 2/N]·strength.
//! * [`Construction::RotatedSpectrum`]: δpₙ drawn directly as eigenvalues and
//!   rotated by a Haar unitary, U·diag(δp)·U†. The spectrum is δp itself, so
//!   this mode does not follow the semicircle; it is kept for comparison.

mod haar;
pub mod semicircle;

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::rng;

pub use haar::{ginibre, haar_unitary};

/// Distribution of the elementary probability fluctuations pₙ, mean and
/// variance both 1/N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// Gamma with shape 1/N and unit scale.
    #[default]
    GammaMatched,
    /// Poisson with mean 1/N.
    PoissonLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    #[default]
    Superposed,
    RotatedSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderSpec {
    pub size: usize,
    pub family: NoiseFamily,
    pub construction: Construction,
    /// Conjugate a superposed sample by an extra Haar unitary. The spectrum
    /// is unchanged; only the eigenvector basis is randomized again.
    pub haar_rotation: bool,
    /// Overall scale of the fluctuations (1 reproduces K → 4/(3π)).
    pub strength: f64,
    pub seed: u64,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        Self {
            size: 1024,
            family: NoiseFamily::GammaMatched,
            construction: Construction::Superposed,
            haar_rotation: false,
            strength: 1.0,
            seed: 0,
        }
    }
}

impl DisorderSpec {
    pub fn new(size: usize, family: NoiseFamily, seed: u64) -> Self {
        Self {
            size,
            family,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.size < 2 {
            errors.push(FieldError::new("size", format!("must be at least 2, got {}", self.size)));
        }
        if !(self.strength.is_finite() && self.strength > 0.0) {
            errors.push(FieldError::new("strength", format!("must be positive, got {}", self.strength)));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

/// Sum of N elementary fluctuations pₙ − 1/N. For both families the sum has
/// a closed form: Gamma(1/N)·N = Exp(1) and Poisson(1/N)·N = Poisson(1).
fn aggregate<R: Rng + ?Sized>(family: NoiseFamily, rng: &mut R) -> f64 {
    match family {
        NoiseFamily::GammaMatched => {
            let x: f64 = Exp1.sample(rng);
            x - 1.0
        }
        NoiseFamily::PoissonLiteral => {
            let x: f64 = Poisson::new(1.0).expect("unit mean").sample(rng);
            x - 1.0
        }
    }
}

fn elementary<R: Rng + ?Sized>(family: NoiseFamily, n: usize, rng: &mut R) -> f64 {
    let mean = 1.0 / n as f64;
    let p: f64 = match family {
        NoiseFamily::GammaMatched => Gamma::new(mean, 1.0).expect("positive shape").sample(rng),
        NoiseFamily::PoissonLiteral => Poisson::new(mean).expect("positive mean").sample(rng),
    };
    p - mean
}

#[derive(Debug, Clone)]
pub struct FluctuationMatrix {
    matrix: Mat<c64>,
    /// Multiplier taking the eigenvalues to the unit-variance Wigner scale.
    wigner_scale: f64,
    spec: Option<DisorderSpec>,
}

impl FluctuationMatrix {
    /// Wraps an arbitrary matrix, which must be self-adjoint and traceless.
    pub fn from_hermitian(matrix: Mat<c64>) -> Result<Self> {
        let n = matrix.nrows();
        if n < 2 || matrix.ncols() != n {
            return Err(Error::config("matrix", "must be square with N ≥ 2"));
        }
        let scale = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| matrix[(i, j)].norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..=i {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::config("matrix", format!("not self-adjoint at ({i}, {j})")));
                }
            }
        }
        let fm = Self {
            matrix,
            wigner_scale: n as f64,
            spec: None,
        };
        if fm.trace().norm() > 1e-12 * n as f64 * scale {
            return Err(Error::config("matrix", "trace must vanish"));
        }
        Ok(fm)
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn spec(&self) -> Option<&DisorderSpec> {
        self.spec.as_ref()
    }

    pub fn trace(&self) -> c64 {
        (0..self.size()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// The matrix on the Wigner scale, element variance 1/N.
    pub fn wigner_scaled(&self) -> Mat<c64> {
        let s = self.wigner_scale;
        Mat::from_fn(self.size(), self.size(), |i, j| self.matrix[(i, j)] * s)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut values = self
            .matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigensolver("non-finite eigenvalue".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

/// Samples Δρ for `spec`, drawing from stream 0 of the spec's seed.
pub fn sample_fluctuation_matrix(spec: &DisorderSpec) -> Result<FluctuationMatrix> {
    sample_indexed(spec, 0)
}

/// Samples member `index` of the ensemble defined by `spec`.
pub fn sample_indexed(spec: &DisorderSpec, index: u64) -> Result<FluctuationMatrix> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, rng::DOMAIN_PREDECOHERENCE, index);
    let n = spec.size;
    let nf = n as f64;
    let mut m = match spec.construction {
        Construction::Superposed => {
            let w = superposed_wigner(spec.family, n, &mut rng);
            if spec.haar_rotation {
                let u = haar_unitary(n, &mut rng);
                &u * &w * u.adjoint()
            } else {
                w
            }
        }
        Construction::RotatedSpectrum => {
            let mut dp: Vec<f64> = (0..n).map(|_| elementary(spec.family, n, &mut rng)).collect();
            let mean = dp.iter().sum::<f64>() / nf;
            dp.iter_mut().for_each(|d| *d -= mean);
            let u = haar_unitary(n, &mut rng);
            // scale δp up to the Wigner scale so both modes share `wigner_scale`
            let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * dp[j] * nf);
            &scaled * u.adjoint()
        }
    };
    hermitize_traceless(&mut m);
    let factor = spec.strength / nf;
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] *= factor;
        }
    }
    Ok(FluctuationMatrix {
        matrix: m,
        wigner_scale: nf / spec.strength,
        spec: Some(spec.clone()),
    })
}

fn superposed_wigner(family: NoiseFamily, n: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let off = 1.0 / (2.0 * n as f64).sqrt();
    let diag = 1.0 / (n as f64).sqrt();
    let mut w = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        w[(j, j)] = c64::new(aggregate(family, rng) * diag, 0.0);
        for i in (j + 1)..n {
            let z = c64::new(aggregate(family, rng), aggregate(family, rng)) * off;
            w[(i, j)] = z;
            w[(j, i)] = z.conj();
        }
    }
    w
}

/// Exact self-adjointness and zero trace after any roundoff.
fn hermitize_traceless(m: &mut Mat<c64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    let shift = (0..n).map(|i| m[(i, i)].re).sum::<f64>() / n as f64;
    for i in 0..n {
        m[(i, i)] = c64::new(m[(i, i)].re - shift, 0.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitResult {
    pub k_plus: f64,
    pub k_minus: f64,
    /// Ascending spectrum of Δρ.
    pub eigenvalues: Vec<f64>,
    /// KS distance of the Wigner-scaled spectrum to the semicircle.
    pub semicircle_distance: f64,
}

impl SplitResult {
    pub fn k(&self) -> f64 {
        0.5 * (self.k_plus + self.k_minus)
    }
}

pub fn split_positive_negative(m: &FluctuationMatrix) -> Result<SplitResult> {
    let eigenvalues = m.eigenvalues()?;
    let k_plus = eigenvalues.iter().filter(|&&l| l > 0.0).sum::<f64>();
    let k_minus = -eigenvalues.iter().filter(|&&l| l < 0.0).sum::<f64>();
    let scaled: Vec<f64> = eigenvalues.iter().map(|l| l * m.wigner_scale).collect();
    Ok(SplitResult {
        k_plus,
        k_minus,
        semicircle_distance: semicircle::ks_distance(&scaled),
        eigenvalues,
    })
}

/// KS distance between the Wigner-scaled spectrum of `m` and the semicircle.
pub fn semicircle_test(m: &FluctuationMatrix) -> Result<f64> {
    Ok(split_positive_negative(m)?.semicircle_distance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStats {
    pub index: u64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub size: usize,
    pub family: NoiseFamily,
    pub construction: Construction,
    pub samples: Vec<SampleStats>,
    pub mean_k: f64,
    /// Standard error of `mean_k`.
    pub k_std_error: f64,
    pub mean_ks: f64,
    pub target_k: f64,
    pub relative_deviation: f64,
}

/// Splits `count` independent samples; runs in parallel, with results
/// identical to a serial loop.
pub fn ensemble(spec: &DisorderSpec, count: usize) -> Result<EnsembleSummary> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::config("samples", "must be at least 1"));
    }
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let split = split_positive_negative(&sample_indexed(spec, index)?)?;
            Ok(SampleStats {
                index,
                k_plus: split.k_plus,
                k_minus: split.k_minus,
                ks: split.semicircle_distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = count as f64;
    let ks: Vec<f64> = samples.iter().map(|s| 0.5 * (s.k_plus + s.k_minus)).collect();
    let mean_k = ks.iter().sum::<f64>() / n;
    let var = if count > 1 {
        ks.iter().map(|k| (k - mean_k).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let target_k = semicircle::positive_mean() * spec.strength;
    Ok(EnsembleSummary {
        size: spec.size,
        family: spec.family,
        construction: spec.construction,
        mean_ks: samples.iter().map(|s| s.ks).sum::<f64>() / n,
        samples,
        mean_k,
        k_std_error: (var / n).sqrt(),
        target_k,
        relative_deviation: (mean_k - target_k) / target_k,
    })
}
