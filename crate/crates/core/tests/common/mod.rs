//! Test-only helpers: a QASM subset reader that replays the gate stream on
//! its own statevector, plus small suite builders.
#![allow(dead_code)]

use num_complex::Complex64;
use prc_core::optimizer::OptimizerConfig;
use prc_core::suite::{GenerateConfig, TargetMode};

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Rz(usize, f64),
    Ry(usize, f64),
    Cx(usize, usize),
    X(usize),
}

#[derive(Debug)]
pub struct Program {
    pub qubits: usize,
    pub ops: Vec<Op>,
    pub measured: bool,
}

fn index(arg: &str) -> usize {
    let arg = arg.trim();
    let open = arg.find('[').unwrap_or_else(|| panic!("bad operand {arg}"));
    arg[open + 1..arg.len() - 1].parse().unwrap()
}

/// Parses the subset of OpenQASM 2.0 the exporter writes.
pub fn parse_qasm(text: &str) -> Program {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("OPENQASM 2.0;"));
    assert_eq!(lines.next(), Some("include \"qelib1.inc\";"));
    let mut qubits = None;
    let mut ops = Vec::new();
    let mut measured = false;
    for line in lines {
        let stmt = line.trim().strip_suffix(';').unwrap_or_else(|| panic!("missing ';' in {line}"));
        assert!(!measured, "statement after measurement: {line}");
        if let Some(rest) = stmt.strip_prefix("qreg ") {
            qubits = Some(index(rest));
        } else if let Some(rest) = stmt.strip_prefix("creg ") {
            assert_eq!(Some(index(rest)), qubits);
        } else if stmt == "measure q -> c" {
            measured = true;
        } else if let Some(rest) = stmt.strip_prefix("cx ") {
            let (c, t) = rest.split_once(',').unwrap();
            ops.push(Op::Cx(index(c), index(t)));
        } else if let Some(rest) = stmt.strip_prefix("x ") {
            ops.push(Op::X(index(rest)));
        } else {
            let (head, operand) = stmt.split_once(' ').unwrap();
            let open = head.find('(').unwrap();
            let angle: f64 = head[open + 1..head.len() - 1].parse().unwrap();
            match &head[..open] {
                "rz" => ops.push(Op::Rz(index(operand), angle)),
                "ry" => ops.push(Op::Ry(index(operand), angle)),
                other => panic!("unexpected gate {other}"),
            }
        }
    }
    Program {
        qubits: qubits.expect("no qreg"),
        ops,
        measured,
    }
}

type M2 = [[Complex64; 2]; 2];

fn rz(t: f64) -> M2 {
    let z = Complex64::new(0.0, 0.0);
    [[Complex64::from_polar(1.0, -t / 2.0), z], [z, Complex64::from_polar(1.0, t / 2.0)]]
}

fn ry(t: f64) -> M2 {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    let r = |x: f64| Complex64::new(x, 0.0);
    [[r(c), r(-s)], [r(s), r(c)]]
}

/// Output probabilities of a parsed program started from `|0…0⟩`
/// (qubit 0 is the least significant bit of the index).
pub fn replay(program: &Program) -> Vec<f64> {
    let n = program.qubits;
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
    psi[0] = Complex64::new(1.0, 0.0);
    let single = |psi: &mut Vec<Complex64>, q: usize, m: M2| {
        let bit = 1 << q;
        for i in 0..psi.len() {
            if i & bit == 0 {
                let (a, b) = (psi[i], psi[i | bit]);
                psi[i] = m[0][0] * a + m[0][1] * b;
                psi[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    };
    for op in &program.ops {
        match *op {
            Op::Rz(q, t) => single(&mut psi, q, rz(t)),
            Op::Ry(q, t) => single(&mut psi, q, ry(t)),
            Op::X(q) => {
                let bit = 1 << q;
                for i in 0..psi.len() {
                    if i & bit == 0 {
                        psi.swap(i, i | bit);
                    }
                }
            }
            Op::Cx(c, t) => {
                let (cb, tb) = (1 << c, 1 << t);
                for i in 0..psi.len() {
                    if i & cb != 0 && i & tb == 0 {
                        psi.swap(i, i | tb);
                    }
                }
            }
        }
    }
    psi.iter().map(|a| a.norm_sqr()).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Generation settings with a reduced optimizer budget for quick tests.
pub fn quick_config(qubits: Vec<usize>, depths: Vec<usize>, seed: u64) -> GenerateConfig {
    GenerateConfig {
        qubits,
        depths,
        seed,
        target: TargetMode::Random,
        optimizer: OptimizerConfig {
            stage1_iters: 300,
            stage2_iters: 200,
            ..OptimizerConfig::default()
        },
    }
}

/// Suite of exact-inverse circuits (peak on `0ⁿ`, even depths only) cut from
/// one reference circuit.
pub fn mirror_suite(qubits: &[usize], depths: &[usize], seed: u64) -> prc_core::suite::Suite {
    use prc_core::circuit::{build_exact_inverse_peaking, build_reference_circuit, derive_subcircuit};
    let n_max = *qubits.iter().max().unwrap();
    let d_max = *depths.iter().max().unwrap();
    let reference = build_reference_circuit(n_max, d_max, seed).unwrap();
    let mut suite = prc_core::suite::Suite::new();
    for &n in qubits {
        for &d in depths {
            let c = build_exact_inverse_peaking(&derive_subcircuit(&reference, n, d).unwrap()).unwrap();
            let profile = prc_core::profile::peak_profile(&c).unwrap();
            suite.insert(c, profile).unwrap();
        }
    }
    suite
}
