//! Two-qubit gate algebra.
//!
//! A gate acting on qubits `(q, q+1)` is a 4×4 unitary in the local basis
//! `index = bit(q) + 2·bit(q+1)`; tensor products are therefore written
//! `kron(high, low)`. Every gate is stored in the parameterized form
//!
//! ```text
//! G = e^{iγ} · (Zyz(post_high) ⊗ Zyz(post_low)) · N(a, b, c) · (Zyz(pre_high) ⊗ Zyz(pre_low))
//! N(a, b, c) = exp(i·(a·XX + b·YY + c·ZZ))
//! Zyz(φ, θ, λ) = Rz(φ)·Ry(θ)·Rz(λ)
//! ```
//!
//! giving 15 structural angles plus one global phase.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Structural angles per gate (global phase excluded).
pub const STRUCTURAL_PARAMS: usize = 15;

/// Serialized length: structural angles followed by the global phase.
pub const SERIALIZED_PARAMS: usize = 16;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

pub fn rz(theta: f64) -> Mat2 {
    let h = 0.5 * theta;
    Mat2::new(C64::from_polar(1.0, -h), ZERO, ZERO, C64::from_polar(1.0, h))
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    Mat2::new(C64::from(c), C64::from(-s), C64::from(s), C64::from(c))
}

/// `Rz(phi)·Ry(theta)·Rz(lambda)`.
pub fn zyz(angles: &[f64]) -> Mat2 {
    rz(angles[0]) * ry(angles[1]) * rz(angles[2])
}

/// Euler angles of `Zyz(angles)†`.
pub fn zyz_inverse(angles: &[f64]) -> [f64; 3] {
    [-angles[2], -angles[1], -angles[0]]
}

/// Decomposes a single-qubit unitary as `e^{iα}·Rz(φ)·Ry(θ)·Rz(λ)`.
///
/// Returns `([φ, θ, λ], α)` with `θ ∈ [0, π]`.
pub fn zyz_from_matrix(u: &Mat2) -> ([f64; 3], f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let alpha = 0.5 * det.arg();
    let su = u * C64::from_polar(1.0, -alpha);
    let (a, b) = (su[(0, 0)], su[(1, 0)]);
    let theta = 2.0 * b.norm().atan2(a.norm());
    // su = [[e^{-i(φ+λ)/2} cos, ...], [e^{i(φ-λ)/2} sin, ...]]
    let (phi, lambda) = if b.norm() < 1e-14 {
        (-2.0 * a.arg(), 0.0)
    } else if a.norm() < 1e-14 {
        (2.0 * b.arg(), 0.0)
    } else {
        let sum = -2.0 * a.arg();
        let diff = 2.0 * b.arg();
        (0.5 * (sum + diff), 0.5 * (sum - diff))
    };
    ([phi, theta, lambda], alpha)
}

/// `high ⊗ low` in the local two-qubit basis.
pub fn kron(high: &Mat2, low: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for hi_r in 0..2 {
        for hi_c in 0..2 {
            let h = high[(hi_r, hi_c)];
            for lo_r in 0..2 {
                for lo_c in 0..2 {
                    out[(2 * hi_r + lo_r, 2 * hi_c + lo_c)] = h * low[(lo_r, lo_c)];
                }
            }
        }
    }
    out
}

/// `exp(i·(a·XX + b·YY + c·ZZ))`.
pub fn canonical_core(a: f64, b: f64, c: f64) -> Mat4 {
    let ep = C64::from_polar(1.0, c);
    let em = C64::from_polar(1.0, -c);
    let (s_m, c_m) = (a - b).sin_cos();
    let (s_p, c_p) = (a + b).sin_cos();
    let mut m = Mat4::zeros();
    m[(0, 0)] = ep * c_m;
    m[(0, 3)] = I * ep * s_m;
    m[(3, 0)] = I * ep * s_m;
    m[(3, 3)] = ep * c_m;
    m[(1, 1)] = em * c_p;
    m[(1, 2)] = I * em * s_p;
    m[(2, 1)] = I * em * s_p;
    m[(2, 2)] = em * c_p;
    m
}

/// `P⊗P` for the Pauli selected by `axis` (0 = X, 1 = Y, 2 = Z).
fn pauli_pair(axis: usize) -> Mat4 {
    let p = match axis {
        0 => pauli_x(),
        1 => pauli_y(),
        _ => pauli_z(),
    };
    kron(&p, &p)
}

pub fn cnot_high_to_low() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn cnot_low_to_high() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(2, 2)] = ONE;
    m[(1, 3)] = ONE;
    m[(3, 1)] = ONE;
    m
}

/// Largest elementwise modulus of `U†U − I`.
pub fn unitarity_defect4(u: &Mat4) -> f64 {
    let p = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((p[(r, c)] - target).norm());
        }
    }
    worst
}

/// Elementwise distance between `a` and `b` after removing the best global phase.
pub fn phase_distance4(a: &Mat4, b: &Mat4) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max)
}

/// Parameters of one two-qubit gate.
///
/// `pre_rotations` and `post_rotations` hold Euler ZYZ angles
/// `[φ_low, θ_low, λ_low, φ_high, θ_high, λ_high]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct GateParams {
    pub pre_rotations: [f64; 6],
    pub entangling: [f64; 3],
    pub post_rotations: [f64; 6],
    pub global_phase: f64,
}

impl GateParams {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn matrix(&self) -> Mat4 {
        let [a, b, c] = self.entangling;
        let pre = kron(&zyz(&self.pre_rotations[3..]), &zyz(&self.pre_rotations[..3]));
        let post = kron(&zyz(&self.post_rotations[3..]), &zyz(&self.post_rotations[..3]));
        post * canonical_core(a, b, c) * pre * C64::from_polar(1.0, self.global_phase)
    }

    /// Parameters of the adjoint gate, computed in closed form.
    pub fn inverse(&self) -> Self {
        let mut pre = [0.0; 6];
        let mut post = [0.0; 6];
        pre[..3].copy_from_slice(&zyz_inverse(&self.post_rotations[..3]));
        pre[3..].copy_from_slice(&zyz_inverse(&self.post_rotations[3..]));
        post[..3].copy_from_slice(&zyz_inverse(&self.pre_rotations[..3]));
        post[3..].copy_from_slice(&zyz_inverse(&self.pre_rotations[3..]));
        Self {
            pre_rotations: pre,
            entangling: self.entangling.map(|x| -x),
            post_rotations: post,
            global_phase: -self.global_phase,
        }
    }

    /// Structural angles in gradient order: pre (6), entangling (3), post (6).
    pub fn structural(&self) -> [f64; STRUCTURAL_PARAMS] {
        let mut out = [0.0; STRUCTURAL_PARAMS];
        out[..6].copy_from_slice(&self.pre_rotations);
        out[6..9].copy_from_slice(&self.entangling);
        out[9..].copy_from_slice(&self.post_rotations);
        out
    }

    pub fn set_structural(&mut self, values: &[f64]) {
        self.pre_rotations.copy_from_slice(&values[..6]);
        self.entangling.copy_from_slice(&values[6..9]);
        self.post_rotations.copy_from_slice(&values[9..15]);
    }

    pub fn to_array(&self) -> [f64; SERIALIZED_PARAMS] {
        let mut out = [0.0; SERIALIZED_PARAMS];
        out[..STRUCTURAL_PARAMS].copy_from_slice(&self.structural());
        out[STRUCTURAL_PARAMS] = self.global_phase;
        out
    }

    pub fn from_array(values: &[f64; SERIALIZED_PARAMS]) -> Self {
        let mut p = Self::identity();
        p.set_structural(&values[..STRUCTURAL_PARAMS]);
        p.global_phase = values[STRUCTURAL_PARAMS];
        p
    }

    /// Partial derivatives of [`GateParams::matrix`] with respect to each
    /// structural angle, in [`GateParams::structural`] order.
    pub fn matrix_derivatives(&self) -> [Mat4; STRUCTURAL_PARAMS] {
        let [a, b, c] = self.entangling;
        let phase = C64::from_polar(1.0, self.global_phase);
        let core = canonical_core(a, b, c) * phase;
        let half = C64::new(0.0, -0.5);

        let euler = |angles: &[f64]| -> (Mat2, [Mat2; 3]) {
            let (zp, yt, zl) = (rz(angles[0]), ry(angles[1]), rz(angles[2]));
            let full = zp * yt * zl;
            let d_phi = pauli_z() * full * half;
            let d_theta = zp * pauli_y() * yt * zl * half;
            let d_lambda = full * pauli_z() * half;
            (full, [d_phi, d_theta, d_lambda])
        };

        let (pre_lo, d_pre_lo) = euler(&self.pre_rotations[..3]);
        let (pre_hi, d_pre_hi) = euler(&self.pre_rotations[3..]);
        let (post_lo, d_post_lo) = euler(&self.post_rotations[..3]);
        let (post_hi, d_post_hi) = euler(&self.post_rotations[3..]);
        let pre = kron(&pre_hi, &pre_lo);
        let post = kron(&post_hi, &post_lo);
        let post_core = post * core;
        let core_pre = core * pre;

        let mut out = [Mat4::zeros(); STRUCTURAL_PARAMS];
        for k in 0..3 {
            out[k] = post_core * kron(&pre_hi, &d_pre_lo[k]);
            out[3 + k] = post_core * kron(&d_pre_hi[k], &pre_lo);
            out[6 + k] = post * pauli_pair(k) * core_pre * I;
            out[9 + k] = kron(&post_hi, &d_post_lo[k]) * core_pre;
            out[12 + k] = kron(&d_post_hi[k], &post_lo) * core_pre;
        }
        out
    }
}

impl Serialize for GateParams {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GateParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = <[f64; SERIALIZED_PARAMS]>::deserialize(deserializer)?;
        Ok(Self::from_array(&values))
    }
}
