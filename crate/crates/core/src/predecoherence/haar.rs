//! Haar-distributed unitary matrices.

use faer::{c64, Mat};
use rand::Rng;
use rand_distr::StandardNormal;

/// Complex Ginibre matrix with E|z|² = 1.
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat<c64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re * scale, im * scale)
    })
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal moved into Q, which makes the factorization unique and the
/// distribution exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat<c64> {
    let z = ginibre(n, rng);
    let qr = z.qr();
    let r = qr.R();
    let mut q = qr.compute_Q();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}
