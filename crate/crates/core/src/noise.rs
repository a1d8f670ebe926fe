//! Synthetic device noise.
//!
//! Channels always compose as coherent perturbation, then global
//! depolarizing mixture, then readout flips.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::sim::{ProbabilityDistribution, ShotHistogram};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Depolarizing error per standalone single-qubit gate.
    pub p1: f64,
    /// Depolarizing error per two-qubit gate.
    pub p2: f64,
    /// Per-bit readout flip probability.
    pub readout_epsilon: f64,
    /// Relative spread of entangling-angle over-rotations.
    pub coherent_delta: f64,
    /// Mixed into every per-run seed.
    pub seed: u64,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p1", self.p1)?;
        check_probability("p2", self.p2)?;
        check_probability("readout_epsilon", self.readout_epsilon)?;
        if self.coherent_delta.is_nan() || self.coherent_delta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "coherent_delta = {} must be non-negative",
                self.coherent_delta
            )));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.readout_epsilon == 0.0 && self.coherent_delta == 0.0
    }
}

/// `(1 − p1)^(standalone 1q gates) · (1 − p2)^(2q gates)`.
pub fn effective_fidelity(circuit: &Circuit, p1: f64, p2: f64) -> Result<f64> {
    check_probability("p1", p1)?;
    check_probability("p2", p2)?;
    Ok((1.0 - p1).powi(circuit.single_qubit_gate_count() as i32)
        * (1.0 - p2).powi(circuit.two_qubit_gate_count() as i32))
}

/// `p′(x) = f·p(x) + (1 − f)/2ⁿ`.
pub fn depolarize(dist: &ProbabilityDistribution, f: f64) -> Result<ProbabilityDistribution> {
    check_probability("fidelity", f)?;
    let mut out = dist.clone();
    let uniform = (1.0 - f) / (1u64 << dist.n()) as f64;
    for p in out.probs_mut() {
        *p = f * *p + uniform;
    }
    Ok(out)
}

/// Flips each bit of each recorded shot independently with probability `epsilon`.
pub fn readout_flip<R: Rng + ?Sized>(hist: &ShotHistogram, epsilon: f64, rng: &mut R) -> Result<ShotHistogram> {
    check_probability("readout_epsilon", epsilon)?;
    if epsilon == 0.0 {
        return Ok(hist.clone());
    }
    let n = hist.n();
    let all = BitString::ones(n);
    if epsilon == 1.0 {
        let counts = hist
            .counts()
            .iter()
            .map(|(b, c)| (b.xor(&all).expect("same width"), *c))
            .collect();
        return ShotHistogram::from_counts(n, counts);
    }
    let coin = Bernoulli::new(epsilon).expect("probability checked");
    let mut counts: BTreeMap<BitString, u64> = BTreeMap::new();
    for (b, &c) in hist.counts() {
        for _ in 0..c {
            let mut mask = 0u64;
            for q in 0..n {
                if coin.sample(rng) {
                    mask |= 1 << q;
                }
            }
            let flipped = BitString::new(n, b.value() ^ mask).expect("mask within width");
            *counts.entry(flipped).or_insert(0) += 1;
        }
    }
    ShotHistogram::from_counts(n, counts)
}

/// Exact readout channel on a distribution: independent per-bit flips.
pub fn readout_channel(dist: &ProbabilityDistribution, epsilon: f64) -> Result<ProbabilityDistribution> {
    check_probability("readout_epsilon", epsilon)?;
    let mut out = dist.clone();
    if epsilon == 0.0 {
        return Ok(out);
    }
    let probs = out.probs_mut();
    for q in 0..dist.n() {
        let s = 1usize << q;
        for block in probs.chunks_mut(2 * s) {
            let (lo, hi) = block.split_at_mut(s);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (1.0 - epsilon) * x + epsilon * y;
                *b = epsilon * x + (1.0 - epsilon) * y;
            }
        }
    }
    Ok(out)
}

/// Scales every gate's entangling angles by independent factors `1 + δ·g`,
/// `g ~ N(0, 1)`, drawn in placement order.
pub fn perturb_coherent<R: Rng + ?Sized>(circuit: &Circuit, delta: f64, rng: &mut R) -> Result<Circuit> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidArgument(format!("coherent delta {delta} must be non-negative")));
    }
    if delta == 0.0 {
        return Ok(circuit.clone());
    }
    Ok(circuit.map_params(|g| {
        let mut p = g.params;
        for a in p.entangling.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *a *= 1.0 + delta * z;
        }
        p
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_exact_inverse_peaking, build_reference_circuit, derive_subcircuit};
    use crate::metrics::relative_peakedness;
    use crate::sim::{full_distribution, sample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point_mass(n: usize, at: usize) -> ProbabilityDistribution {
        let mut p = vec![0.0; 1 << n];
        p[at] = 1.0;
        ProbabilityDistribution::new(n, p).unwrap()
    }

    #[test]
    fn effective_fidelity_examples() {
        let c = build_reference_circuit(4, 5, 0).unwrap();
        assert_eq!(effective_fidelity(&c, 0.0, 0.0).unwrap(), 1.0);
        let m = c.two_qubit_gate_count() as i32;
        assert!((effective_fidelity(&c, 0.0, 0.01).unwrap() - 0.99f64.powi(m)).abs() < 1e-15);
        let empty = Circuit::empty(3, 2).unwrap();
        assert_eq!(effective_fidelity(&empty, 0.3, 0.3).unwrap(), 1.0);
        assert!((0.99f64.powi(10) - 0.9044).abs() < 1e-4);
        assert!(effective_fidelity(&c, 1.5, 0.0).is_err());
    }

    #[test]
    fn depolarize_examples() {
        let d = point_mass(2, 0);
        assert_eq!(depolarize(&d, 1.0).unwrap(), d);
        assert!(depolarize(&d, 0.0).unwrap().probs().iter().all(|&p| p == 0.25));
        assert_eq!(depolarize(&d, 0.5).unwrap().probs(), &[0.625, 0.125, 0.125, 0.125]);
        assert!(depolarize(&d, -0.1).is_err());
    }

    #[test]
    fn readout_extremes() {
        let dist = point_mass(3, 0b011);
        let h = sample(&dist, 40, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(readout_flip(&h, 0.0, &mut rng).unwrap(), h);
        let all = readout_flip(&h, 1.0, &mut rng).unwrap();
        assert_eq!(all.count(&"100".parse().unwrap()), 40);
    }

    #[test]
    fn readout_survival_matches_binomial() {
        let dist = point_mass(5, 0);
        let shots = 100_000;
        let h = sample(&dist, shots, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let out = readout_flip(&h, 0.01, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(out.shots(), shots);
        let frac = out.count(&BitString::zeros(5)) as f64 / shots as f64;
        assert!((frac - 0.99f64.powi(5)).abs() < 0.005, "{frac}");
    }

    #[test]
    fn readout_half_gives_uniform_marginals() {
        let dist = point_mass(4, 0b1010);
        let shots = 100_000u64;
        let h = sample(&dist, shots, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let out = readout_flip(&h, 0.5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for q in 0..4 {
            let ones: u64 = out.counts().iter().filter(|(b, _)| b.bit(q)).map(|(_, c)| c).sum();
            let expected = shots as f64 / 2.0;
            // Chi-square with one degree of freedom; 10.83 is the 0.1% critical value.
            let chi2 = 2.0 * (ones as f64 - expected).powi(2) / expected;
            assert!(chi2 < 10.83, "qubit {q}: chi2 {chi2}");
        }
    }

    #[test]
    fn readout_channel_matches_sampling_expectation() {
        let dist = point_mass(2, 0);
        let out = readout_channel(&dist, 0.1).unwrap();
        let expected = [0.81, 0.09, 0.09, 0.01];
        for (a, b) in out.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn coherent_perturbation() {
        let c = build_reference_circuit(4, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(perturb_coherent(&c, 0.0, &mut rng).unwrap(), c);
        let a = perturb_coherent(&c, 0.05, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = perturb_coherent(&c, 0.05, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (ga, gc) in a.placements().zip(c.placements()) {
            assert_eq!(ga.qubit_low, gc.qubit_low);
            assert_eq!(ga.params.pre_rotations, gc.params.pre_rotations);
        }
        assert!(perturb_coherent(&c, -1.0, &mut rng).is_err());
    }

    #[test]
    fn small_overrotation_keeps_mirror_peak() {
        for seed in 0..20 {
            let reference = build_reference_circuit(6, 8, seed).unwrap();
            let c = build_exact_inverse_peaking(&derive_subcircuit(&reference, 6, 8).unwrap()).unwrap();
            let noisy = perturb_coherent(&c, 0.05, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let dist = full_distribution(&noisy).unwrap();
            let p0 = dist.probs()[0];
            assert!(p0 < 1.0);
            assert!(dist.probs()[1..].iter().all(|&p| p < p0), "seed {seed}");
        }
    }

    #[test]
    fn depolarizing_keeps_argmax_and_lowers_contrast() {
        let reference = build_reference_circuit(5, 6, 2).unwrap();
        let dist = full_distribution(&reference).unwrap();
        let top = dist
            .probs()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let target = BitString::new(5, top as u64).unwrap();
        let mut last = f64::INFINITY;
        for f in [1.0, 0.8, 0.5, 0.2, 0.05] {
            let noisy = depolarize(&dist, f).unwrap();
            let argmax = noisy
                .probs()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, top);
            let c = relative_peakedness(&noisy, &target).unwrap();
            assert!(c < last);
            last = c;
        }
    }
}
