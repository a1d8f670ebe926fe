//! Numerical KAK (Cartan) decomposition of two-qubit unitaries.
//!
//! Any `U ∈ U(4)` factors as `e^{iγ}·(A1 ⊗ B1)·N(a, b, c)·(A2 ⊗ B2)` with
//! single-qubit `A`, `B` and the canonical core `N = exp(i(aXX + bYY + cZZ))`.
//! In the magic (Bell) basis local gates become real orthogonal and `N` is
//! diagonal, so the core coordinates come from the eigenphases of `UᵀU`
//! there. The coordinates are then folded into the Weyl chamber
//! `π/4 ≥ a ≥ b ≥ |c|` using local symmetries whose effect on the outer
//! factors is applied as exact matrix identities.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{Matrix4, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gate::{
    pauli_x, pauli_y, pauli_z, phase_distance4, unitarity_defect4, zyz_from_matrix, GateParams,
    Mat2, Mat4, C64, I, ZERO,
};

/// Inputs further than this from unitary are rejected.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Entangling coordinates below this magnitude are treated as exactly zero.
pub const ZERO_ANGLE_TOLERANCE: f64 = 1e-12;

const RECONSTRUCTION_TOLERANCE: f64 = 1e-10;

/// Real-combination weights used to diagonalize `UᵀU` simultaneously in its
/// real and imaginary parts. Fixed so decompositions are reproducible.
const EIGEN_MIXES: [(f64, f64); 6] = [
    (1.260_206_611_224_938_8, 0.223_178_490_467_220_27),
    (0.411_879_334_901_124, 1.093_714_289_338_701),
    (-0.736_491_822_150_447, 0.918_373_024_563_108),
    (1.0, 0.0),
    (0.0, 1.0),
    (0.577_215_664_901_532_9, -1.309_016_994_374_947),
];

/// Number of CNOTs a gate with these canonical coordinates needs.
pub fn cnot_count(entangling: &[f64; 3]) -> usize {
    let [a, b, c] = entangling.map(f64::abs);
    if a < ZERO_ANGLE_TOLERANCE && b < ZERO_ANGLE_TOLERANCE && c < ZERO_ANGLE_TOLERANCE {
        0
    } else if b < ZERO_ANGLE_TOLERANCE && c < ZERO_ANGLE_TOLERANCE {
        2
    } else {
        3
    }
}

/// True when `π/4 ≥ a ≥ b ≥ |c|` (within `tol`).
pub fn in_weyl_chamber(entangling: &[f64; 3], tol: f64) -> bool {
    let [a, b, c] = *entangling;
    a <= std::f64::consts::FRAC_PI_4 + tol && a + tol >= b && b + tol >= c.abs()
}

fn magic_basis() -> Mat4 {
    let s = C64::from(FRAC_1_SQRT_2);
    let si = I * FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let m = Mat4::new(
        s,    si,   ZERO, ZERO,
        ZERO, ZERO, si,   s,
        ZERO, ZERO, si,   -s,
        s,    -si,  ZERO, ZERO,
    );
    m
}

/// Splits `k = high ⊗ low` into its factors.
fn factor_local(k: &Mat4) -> Result<(Mat2, Mat2)> {
    let block = |hr: usize, hc: usize| -> Mat2 {
        Mat2::new(
            k[(2 * hr, 2 * hc)],
            k[(2 * hr, 2 * hc + 1)],
            k[(2 * hr + 1, 2 * hc)],
            k[(2 * hr + 1, 2 * hc + 1)],
        )
    };
    let (mut best, mut best_norm) = ((0, 0), -1.0);
    for hr in 0..2 {
        for hc in 0..2 {
            let n = block(hr, hc).norm_squared();
            if n > best_norm {
                best_norm = n;
                best = (hr, hc);
            }
        }
    }
    let b = block(best.0, best.1);
    let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
    if det.norm() < 1e-6 {
        return Err(Error::Decomposition("local factor is not a tensor product".into()));
    }
    let low = b / det.sqrt();
    let low_adj = low.adjoint();
    let mut high = Mat2::zeros();
    for hr in 0..2 {
        for hc in 0..2 {
            high[(hr, hc)] = (low_adj * block(hr, hc)).trace() * 0.5;
        }
    }
    Ok((high, low))
}

fn pauli(axis: usize) -> Mat2 {
    match axis {
        0 => pauli_x(),
        1 => pauli_y(),
        _ => pauli_z(),
    }
}

/// `U ∝ (post_high ⊗ post_low)·N(core)·(pre_high ⊗ pre_low)`, phase ignored.
struct Factored {
    post_high: Mat2,
    post_low: Mat2,
    core: [f64; 3],
    pre_high: Mat2,
    pre_low: Mat2,
}

impl Factored {
    /// `c_k → c_k − m·π/2`, compensated by `(P_k ⊗ P_k)^m` on the pre side.
    fn reduce(&mut self, axis: usize) {
        let m = (self.core[axis] / FRAC_PI_2).round();
        self.core[axis] -= m * FRAC_PI_2;
        if (m as i64).rem_euclid(2) == 1 {
            let p = pauli(axis);
            self.pre_high = p * self.pre_high;
            self.pre_low = p * self.pre_low;
        }
    }

    /// Negates the two coordinates other than `keep` by conjugating with
    /// `P_keep ⊗ I`.
    fn negate_pair(&mut self, keep: usize) {
        let p = pauli(keep);
        self.core
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| *i != keep)
            .for_each(|(_, v)| *v = -*v);
        self.post_high *= p;
        self.pre_high = p * self.pre_high;
    }

    /// Exchanges coordinates `j` and `k` via `V = (P_j + P_k)/√2`, which
    /// swaps the two Paulis under conjugation.
    fn swap(&mut self, j: usize, k: usize) {
        let v = (pauli(j) + pauli(k)) * C64::from(FRAC_1_SQRT_2);
        self.core.swap(j, k);
        self.post_high *= v;
        self.post_low *= v;
        self.pre_high = v * self.pre_high;
        self.pre_low = v * self.pre_low;
    }

    fn canonicalize(&mut self) {
        for axis in 0..3 {
            self.reduce(axis);
        }
        // Sort by magnitude, descending.
        for _ in 0..2 {
            for j in 0..2 {
                if self.core[j].abs() < self.core[j + 1].abs() {
                    self.swap(j, j + 1);
                }
            }
        }
        match (self.core[0] < 0.0, self.core[1] < 0.0) {
            (true, true) => self.negate_pair(2),
            (true, false) => self.negate_pair(1),
            (false, true) => self.negate_pair(0),
            (false, false) => {}
        }
    }
}

/// Decomposes a two-qubit unitary into canonical [`GateParams`].
///
/// The entangling coordinates land in the Weyl chamber and the returned
/// parameters reconstruct `u` exactly (global phase included) to 1e-10.
pub fn kak_decompose(u: &Mat4) -> Result<GateParams> {
    let defect = unitarity_defect4(u);
    if defect.is_nan() || defect > UNITARITY_TOLERANCE {
        return Err(Error::Decomposition(format!(
            "input is not unitary (defect {defect:.3e})"
        )));
    }

    let det = u.determinant();
    let su = u * C64::from_polar(1.0, -det.arg() / 4.0);
    let magic = magic_basis();
    let magic_adj = magic.adjoint();
    let up = magic_adj * su * magic;
    let m2 = up.transpose() * up;

    let mut basis: Option<(Matrix4<f64>, [C64; 4])> = None;
    for &(wr, wi) in &EIGEN_MIXES {
        let mixed = Matrix4::<f64>::from_fn(|r, c| wr * m2[(r, c)].re + wi * m2[(r, c)].im);
        let eig = SymmetricEigen::new(mixed);
        let p = eig.eigenvectors;
        let pc = p.map(C64::from);
        let d = pc.transpose() * m2 * pc;
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|rc| d[rc].norm())
            .fold(0.0, f64::max);
        if off < 1e-11 {
            basis = Some((p, [d[(0, 0)], d[(1, 1)], d[(2, 2)], d[(3, 3)]]));
            break;
        }
    }
    let (mut p, diag) =
        basis.ok_or_else(|| Error::Decomposition("failed to diagonalize UᵀU".into()))?;
    if p.determinant() < 0.0 {
        for r in 0..4 {
            p[(r, 3)] = -p[(r, 3)];
        }
    }

    let mut theta = diag.map(|z| 0.5 * z.arg());
    let pc = p.map(C64::from);
    let phases = |theta: &[f64; 4]| {
        Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|i, _| C64::from_polar(1.0, -theta[i])))
    };
    let mut left = up * pc * phases(&theta);
    if left.map(|z| z.re).determinant() < 0.0 {
        theta[0] += PI;
        left = up * pc * phases(&theta);
    }

    let a = 0.25 * (theta[0] - theta[1] + theta[2] - theta[3]);
    let b = 0.25 * (-theta[0] + theta[1] + theta[2] - theta[3]);
    let c = 0.25 * (theta[0] + theta[1] - theta[2] - theta[3]);

    let k1 = magic * left * magic_adj;
    let k2 = magic * pc.transpose() * magic_adj;
    let (post_high, post_low) = factor_local(&k1)?;
    let (pre_high, pre_low) = factor_local(&k2)?;

    let mut f = Factored {
        post_high,
        post_low,
        core: [a, b, c],
        pre_high,
        pre_low,
    };
    f.canonicalize();

    let mut params = GateParams::identity();
    params.entangling = f.core;
    let (e, _) = zyz_from_matrix(&f.pre_low);
    params.pre_rotations[..3].copy_from_slice(&e);
    let (e, _) = zyz_from_matrix(&f.pre_high);
    params.pre_rotations[3..].copy_from_slice(&e);
    let (e, _) = zyz_from_matrix(&f.post_low);
    params.post_rotations[..3].copy_from_slice(&e);
    let (e, _) = zyz_from_matrix(&f.post_high);
    params.post_rotations[3..].copy_from_slice(&e);

    let unphased = params.matrix();
    params.global_phase = (unphased.adjoint() * u).trace().arg();

    let err = max_abs_diff(&params.matrix(), u);
    if err.is_nan() || err > RECONSTRUCTION_TOLERANCE {
        // Only reachable if the phase alignment failed; report the aligned distance too.
        return Err(Error::Decomposition(format!(
            "reconstruction error {err:.3e} (up to phase {:.3e})",
            phase_distance4(&params.matrix(), u)
        )));
    }
    Ok(params)
}

pub(crate) fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Re-expresses arbitrary parameters in canonical form.
pub fn canonicalize(params: &GateParams) -> GateParams {
    kak_decompose(&params.matrix()).expect("parameterized gates are unitary")
}
