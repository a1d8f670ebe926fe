//! OpenQASM 2.0 export over the native set `{rz, ry, cx}` (plus `x` for
//! standalone flips).
//!
//! Each placement is canonicalized, then its canonical core is replaced by
//! a CNOT template whose outer single-qubit layers merge with the local
//! factors:
//!
//! * zero core: no CNOT;
//! * `(a, 0, 0)`: `exp(iaXX) = Ry(π/2)^⊗2 · CX·Rz(−2a)_low·CX · Ry(−π/2)^⊗2`;
//! * otherwise the three-CNOT template
//!   `N ≐ Rz(π/2)_low · CX↓ · Ry(−2b−π/2)_high · CX↑ · (Ry(2a+π/2) ⊗ Rz(−2c−π/2)) · CX↓ · Rz(−π/2)_high`
//!   where `CX↓` has the high qubit as control.

use std::fmt::Write as _;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::gate::{ry, rz, zyz_from_matrix, GateParams, Mat2};
use crate::harness::derive_seed;
use crate::kak::{canonicalize, cnot_count};

/// Rotations smaller than this are dropped from the stream.
const NEGLIGIBLE_ANGLE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NativeGate {
    Rz { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Cx { control: usize, target: usize },
    X { qubit: usize },
}

impl NativeGate {
    fn shifted(self, offset: usize) -> Self {
        match self {
            NativeGate::Rz { qubit, angle } => NativeGate::Rz {
                qubit: qubit + offset,
                angle,
            },
            NativeGate::Ry { qubit, angle } => NativeGate::Ry {
                qubit: qubit + offset,
                angle,
            },
            NativeGate::Cx { control, target } => NativeGate::Cx {
                control: control + offset,
                target: target + offset,
            },
            NativeGate::X { qubit } => NativeGate::X {
                qubit: qubit + offset,
            },
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, NativeGate::Cx { .. })
    }
}

const LOW: usize = 0;
const HIGH: usize = 1;

fn push_local(ops: &mut Vec<NativeGate>, qubit: usize, u: &Mat2) {
    // u ≐ Rz(φ)·Ry(θ)·Rz(λ): emitted in time order λ, θ, φ.
    let ([phi, theta, lambda], _) = zyz_from_matrix(u);
    if lambda.abs() > NEGLIGIBLE_ANGLE {
        ops.push(NativeGate::Rz { qubit, angle: lambda });
    }
    if theta.abs() > NEGLIGIBLE_ANGLE {
        ops.push(NativeGate::Ry { qubit, angle: theta });
    }
    if phi.abs() > NEGLIGIBLE_ANGLE {
        ops.push(NativeGate::Rz { qubit, angle: phi });
    }
}

fn push_layer(ops: &mut Vec<NativeGate>, high: &Mat2, low: &Mat2) {
    push_local(ops, LOW, low);
    push_local(ops, HIGH, high);
}

const CX_DOWN: NativeGate = NativeGate::Cx {
    control: HIGH,
    target: LOW,
};
const CX_UP: NativeGate = NativeGate::Cx {
    control: LOW,
    target: HIGH,
};

/// Native sequence (time order, local qubits 0 = low, 1 = high) equal to the
/// gate up to global phase.
pub fn decompose_gate(params: &GateParams) -> Vec<NativeGate> {
    let p = canonicalize(params);
    let zyz3 = |v: &[f64]| crate::gate::zyz(v);
    let (pre_l, pre_h) = (zyz3(&p.pre_rotations[0..3]), zyz3(&p.pre_rotations[3..6]));
    let (post_l, post_h) = (zyz3(&p.post_rotations[0..3]), zyz3(&p.post_rotations[3..6]));
    let [a, b, c] = p.entangling;
    let id = Mat2::identity();
    let mut ops = Vec::new();
    match cnot_count(&p.entangling) {
        0 => push_layer(&mut ops, &(post_h * pre_h), &(post_l * pre_l)),
        2 => {
            push_layer(&mut ops, &(ry(-FRAC_PI_2) * pre_h), &(ry(-FRAC_PI_2) * pre_l));
            ops.push(CX_DOWN);
            push_local(&mut ops, LOW, &rz(-2.0 * a));
            ops.push(CX_DOWN);
            push_layer(&mut ops, &(post_h * ry(FRAC_PI_2)), &(post_l * ry(FRAC_PI_2)));
        }
        _ => {
            push_layer(&mut ops, &(rz(-FRAC_PI_2) * pre_h), &pre_l);
            ops.push(CX_DOWN);
            push_layer(&mut ops, &ry(2.0 * a + FRAC_PI_2), &rz(-2.0 * c - FRAC_PI_2));
            ops.push(CX_UP);
            push_layer(&mut ops, &ry(-2.0 * b - FRAC_PI_2), &id);
            ops.push(CX_DOWN);
            push_layer(&mut ops, &post_h, &(post_l * rz(FRAC_PI_2)));
        }
    }
    ops
}

/// Full native stream of a circuit in layer order, trailing flips last.
pub fn native_stream(circuit: &Circuit) -> Vec<NativeGate> {
    let mut ops = Vec::new();
    for g in circuit.placements() {
        ops.extend(decompose_gate(&g.params).into_iter().map(|op| op.shifted(g.qubit_low)));
    }
    ops.extend(circuit.final_flips().iter().map(|&q| NativeGate::X { qubit: q }));
    ops
}

pub fn emit_qasm(circuit: &Circuit) -> String {
    let n = circuit.n();
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{n}];");
    let _ = writeln!(out, "creg c[{n}];");
    for op in native_stream(circuit) {
        let _ = match op {
            NativeGate::Rz { qubit, angle } => writeln!(out, "rz({angle}) q[{qubit}];"),
            NativeGate::Ry { qubit, angle } => writeln!(out, "ry({angle}) q[{qubit}];"),
            NativeGate::Cx { control, target } => writeln!(out, "cx q[{control}],q[{target}];"),
            NativeGate::X { qubit } => writeln!(out, "x q[{qubit}];"),
        };
    }
    out.push_str("measure q -> c;\n");
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCount {
    pub two_qubit: usize,
    pub single_qubit: usize,
}

pub fn gate_count(circuit: &Circuit) -> GateCount {
    let ops = native_stream(circuit);
    let two_qubit = ops.iter().filter(|o| o.is_two_qubit()).count();
    GateCount {
        two_qubit,
        single_qubit: ops.len() - two_qubit,
    }
}

/// `prc_n{n}_d{d}_s{seedhash}.qasm`, the hash being the circuit's derived seed.
pub fn qasm_file_name(circuit: &Circuit) -> String {
    let hash = derive_seed(circuit.seed().unwrap_or(0), circuit.n(), circuit.d(), 0);
    format!("prc_n{}_d{}_s{:016x}.qasm", circuit.n(), circuit.d(), hash)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_exact_inverse_peaking, build_reference_circuit, derive_subcircuit};
    use crate::gate::{canonical_core, cnot_high_to_low, cnot_low_to_high, kron, phase_distance4, Mat4};
    use crate::haar::haar_random_unitary;
    use crate::kak::kak_decompose;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Multiplies out a local native sequence; test oracle.
    fn replay(ops: &[NativeGate]) -> Mat4 {
        let id = Mat2::identity();
        let mut m = Mat4::identity();
        for op in ops {
            let g = match *op {
                NativeGate::Rz { qubit: 0, angle } => kron(&id, &rz(angle)),
                NativeGate::Rz { qubit: 1, angle } => kron(&rz(angle), &id),
                NativeGate::Ry { qubit: 0, angle } => kron(&id, &ry(angle)),
                NativeGate::Ry { qubit: 1, angle } => kron(&ry(angle), &id),
                NativeGate::Cx { control: 1, target: 0 } => cnot_high_to_low(),
                NativeGate::Cx { control: 0, target: 1 } => cnot_low_to_high(),
                other => panic!("unexpected {other:?}"),
            };
            m = g * m;
        }
        m
    }

    fn cnots(ops: &[NativeGate]) -> usize {
        ops.iter().filter(|o| o.is_two_qubit()).count()
    }

    #[test]
    fn identity_needs_no_cnot() {
        let ops = decompose_gate(&GateParams::identity());
        assert_eq!(cnots(&ops), 0);
        assert!(phase_distance4(&replay(&ops), &Mat4::identity()) < 1e-10);
    }

    #[test]
    fn cnot_class_uses_two() {
        let p = kak_decompose(&cnot_high_to_low()).unwrap();
        let ops = decompose_gate(&p);
        assert!(cnots(&ops) <= 2);
        assert!(phase_distance4(&replay(&ops), &cnot_high_to_low()) < 1e-10);
        let core = kak_decompose(&canonical_core(0.3, 0.0, 0.0)).unwrap();
        assert_eq!(cnots(&decompose_gate(&core)), 2);
    }

    #[test]
    fn haar_gates_use_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let u = haar_random_unitary(&mut rng);
            let ops = decompose_gate(&kak_decompose(&u).unwrap());
            assert_eq!(cnots(&ops), 3);
            assert!(phase_distance4(&replay(&ops), &u) < 1e-10);
        }
    }

    #[test]
    fn non_canonical_params_are_handled() {
        let p = GateParams::from_array(&[
            0.1, 2.0, -0.4, 1.0, 0.2, 0.3, 1.9, -2.2, 0.7, 0.5, 0.6, -0.1, 0.3, 0.2, 0.9, 0.25,
        ]);
        let ops = decompose_gate(&p);
        assert!(phase_distance4(&replay(&ops), &p.matrix()) < 1e-10);
    }

    #[test]
    fn empty_two_qubit_circuit() {
        let text = emit_qasm(&Circuit::empty(2, 2).unwrap());
        assert_eq!(
            text,
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[2];\nmeasure q -> c;\n"
        );
        assert_eq!(gate_count(&Circuit::empty(2, 2).unwrap()), GateCount::default());
    }

    #[test]
    fn six_by_ten_counts() {
        let reference = build_reference_circuit(6, 10, 21).unwrap();
        let c = derive_subcircuit(&reference, 6, 10).unwrap();
        // Six even layers of three gates, four odd layers of two.
        assert_eq!(c.two_qubit_gate_count(), 26);
        assert_eq!(c.generic_gate_count(), 26);
        assert_eq!(gate_count(&c).two_qubit, 78);
        let mirror = build_exact_inverse_peaking(&c).unwrap();
        assert_eq!(gate_count(&mirror).two_qubit, 78);
    }

    #[test]
    fn output_is_stable() {
        let c = build_reference_circuit(4, 6, 1).unwrap();
        assert_eq!(emit_qasm(&c), emit_qasm(&c.clone()));
        assert!(qasm_file_name(&c).starts_with("prc_n4_d6_s"));
    }
}
