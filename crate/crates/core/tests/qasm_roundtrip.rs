mod common;

use common::{parse_qasm, quick_config, replay, total_variation};
use prc_core::bits::BitString;
use prc_core::circuit::{build_exact_inverse_peaking, build_reference_circuit, derive_subcircuit, retarget};
use prc_core::qasm::{emit_qasm, gate_count};
use prc_core::sim::full_distribution;
use prc_core::suite::generate_suite;

#[test]
fn mirror_circuit_replays_to_zero_peak() {
    let reference = build_reference_circuit(4, 8, 5).unwrap();
    let c = build_exact_inverse_peaking(&derive_subcircuit(&reference, 4, 8).unwrap()).unwrap();
    let program = parse_qasm(&emit_qasm(&c));
    assert!(program.measured);
    let probs = replay(&program);
    assert!((probs[0] - 1.0).abs() < 1e-9, "P(0000) = {}", probs[0]);
}

#[test]
fn optimized_suite_replays_within_tolerance() {
    let config = quick_config(vec![2, 3, 5, 6], vec![2, 5, 8], 17);
    for cell in generate_suite(&config).unwrap() {
        let c = &cell.circuit;
        let text = emit_qasm(c);
        let program = parse_qasm(&text);
        assert_eq!(program.qubits, c.n());
        let cnots = program.ops.iter().filter(|o| matches!(o, common::Op::Cx(..))).count();
        assert_eq!(cnots, gate_count(c).two_qubit);
        let tv = total_variation(&replay(&program), full_distribution(c).unwrap().probs());
        assert!(tv <= 1e-9, "n={} d={} tv={tv:e}", c.n(), c.d());
    }
}

#[test]
fn retargeted_circuits_replay_with_flips() {
    let reference = build_reference_circuit(5, 7, 9).unwrap();
    let base = derive_subcircuit(&reference, 5, 7).unwrap();
    for mask in [0b00001u64, 0b10000, 0b10101, 0b11111] {
        let s = BitString::new(5, mask).unwrap();
        let c = retarget(&base, &s).unwrap();
        let tv = total_variation(&replay(&parse_qasm(&emit_qasm(&c))), full_distribution(&c).unwrap().probs());
        assert!(tv <= 1e-9, "mask {mask:05b} tv={tv:e}");
    }
}

#[test]
fn retarget_keeps_cnot_count_when_flips_are_fused() {
    // Even depth on an even register: the final layer covers every qubit,
    // so all flips fuse into existing gates.
    let reference = build_reference_circuit(6, 8, 2).unwrap();
    let base = derive_subcircuit(&reference, 6, 8).unwrap();
    let before = gate_count(&base).two_qubit;
    for mask in 0..64u64 {
        let c = retarget(&base, &BitString::new(6, mask).unwrap()).unwrap();
        assert!(c.final_flips().is_empty());
        assert_eq!(gate_count(&c).two_qubit, before, "mask {mask:06b}");
    }
}

#[test]
fn export_is_byte_stable() {
    let reference = build_reference_circuit(6, 10, 33).unwrap();
    let c = derive_subcircuit(&reference, 6, 10).unwrap();
    let again = derive_subcircuit(&build_reference_circuit(6, 10, 33).unwrap(), 6, 10).unwrap();
    assert_eq!(emit_qasm(&c), emit_qasm(&again));
    assert_eq!(gate_count(&c), gate_count(&again));
}
