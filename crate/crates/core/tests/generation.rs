mod common;

use common::quick_config;
use prc_core::bits::BitString;
use prc_core::circuit::{build_reference_circuit, derive_subcircuit, retarget};
use prc_core::optimizer::OptimizerConfig;
use prc_core::sim::full_distribution;
use prc_core::suite::{generate_suite, write_suite, GenerateConfig, TargetMode};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn retarget_permutes_the_distribution(n in 2usize..7, d in 2usize..9, seed in any::<u64>(), mask in any::<u64>()) {
        let reference = build_reference_circuit(n, d, seed).unwrap();
        let base = derive_subcircuit(&reference, n, d).unwrap();
        let s = BitString::new(n, mask & ((1 << n) - 1)).unwrap();
        let moved = retarget(&base, &s).unwrap();
        prop_assert_eq!(moved.target(), base.target().xor(&s).unwrap());
        let before = full_distribution(&base).unwrap();
        let after = full_distribution(&moved).unwrap();
        for x in 0..1usize << n {
            let y = x ^ s.value() as usize;
            prop_assert!((after.probs()[y] - before.probs()[x]).abs() < 1e-12);
        }
        // Applying the same mask twice restores the original distribution.
        let back = full_distribution(&retarget(&moved, &s).unwrap()).unwrap();
        prop_assert!(back.total_variation(&before).unwrap() < 1e-12);
    }
}

#[test]
fn generation_is_reproducible_on_disk() {
    let config = quick_config(vec![2, 4], vec![3, 6], 42);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_suite(a.path(), &config, &generate_suite(&config).unwrap()).unwrap();
    write_suite(b.path(), &config, &generate_suite(&config).unwrap()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for name in names {
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn generated_circuits_peak_on_their_target() {
    let config = GenerateConfig {
        target: TargetMode::Zero,
        ..quick_config(vec![3, 5], vec![4, 7], 8)
    };
    for cell in generate_suite(&config).unwrap() {
        let dist = full_distribution(&cell.circuit).unwrap();
        let argmax = (0..dist.probs().len())
            .max_by(|&a, &b| dist.probs()[a].total_cmp(&dist.probs()[b]))
            .unwrap();
        assert_eq!(argmax as u64, cell.circuit.target().value());
        assert_eq!(cell.profile.target, cell.circuit.target());
        assert!(cell.profile.p_peak > 0.5, "n={} d={}", cell.circuit.n(), cell.circuit.d());
    }
}

/// Spearman rank correlation (average ranks for ties).
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (m(&rx), m(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    if sx == 0.0 || sy == 0.0 {
        0.0
    } else {
        cov / (sx * sy)
    }
}

#[test]
fn peak_probability_falls_with_width() {
    // Fixed depth, equal (small) optimizer budget per cell.
    let qubits = [5, 10, 15, 20];
    let config = GenerateConfig {
        qubits: qubits.to_vec(),
        depths: vec![8],
        seed: 3,
        target: TargetMode::Random,
        optimizer: OptimizerConfig {
            stage1_iters: 25,
            stage2_iters: 0,
            ..OptimizerConfig::default()
        },
    };
    let cells = generate_suite(&config).unwrap();
    let p: Vec<f64> = cells.iter().map(|c| c.profile.p_peak).collect();
    let n: Vec<f64> = cells.iter().map(|c| c.circuit.n() as f64).collect();
    let rho = spearman(&n, &p);
    assert!(rho <= 0.0, "p_peak {p:?}, rank correlation {rho}");
}
