//! Haar-distributed two-qubit unitaries.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::gate::{Mat4, C64, ZERO};

/// Draws a Haar-random element of U(4).
///
/// A complex Ginibre matrix (i.i.d. standard complex normal entries) is
/// orthonormalized column by column. Gram–Schmidt yields the QR factor with a
/// real positive `R` diagonal, which is exactly the phase normalization that
/// makes `Q` Haar distributed. Each column is projected twice so the result
/// is unitary to machine precision.
pub fn haar_random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let mut m = Mat4::zeros();
    for c in 0..4 {
        for r in 0..4 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(r, c)] = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    for c in 0..4 {
        for _pass in 0..2 {
            for prev in 0..c {
                let mut dot = ZERO;
                for r in 0..4 {
                    dot += m[(r, prev)].conj() * m[(r, c)];
                }
                for r in 0..4 {
                    let v = m[(r, prev)];
                    m[(r, c)] -= dot * v;
                }
            }
        }
        let norm = (0..4).map(|r| m[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..4 {
            m[(r, c)] /= norm;
        }
    }
    m
}
