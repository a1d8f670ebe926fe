//! Dense statevector simulation.
//!
//! Amplitude index `i` holds basis state `i`, qubit `q` being bit `q` of the
//! index. Gates only ever act on adjacent pairs, so the 4×4 kernel walks
//! blocks of `4·2^q` amplitudes and combines the four quarter-slices.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gate::{Mat2, Mat4, C64, ONE, ZERO};

/// Largest register the simulator will allocate (2^26 amplitudes, 1 GiB).
pub const MAX_SIM_QUBITS: usize = 26;

/// Below this many qubits kernels stay on the calling thread.
const PARALLEL_THRESHOLD: usize = 14;
const MIN_PAR_LEN: usize = 1 << 12;

pub fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_SIM_QUBITS {
        return Err(Error::Capacity {
            n,
            max: MAX_SIM_QUBITS,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(Self { n, amps })
    }

    pub fn basis_state(b: &BitString) -> Result<Self> {
        check_capacity(b.len())?;
        let mut amps = vec![ZERO; 1 << b.len()];
        amps[b.index()] = ONE;
        Ok(Self { n: b.len(), amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn amplitude(&self, b: &BitString) -> C64 {
        self.amps[b.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_two_qubit(&mut self, qubit_low: usize, m: &Mat4) {
        apply_two_qubit(&mut self.amps, self.n, qubit_low, m);
    }

    pub fn apply_single(&mut self, qubit: usize, m: &Mat2) {
        apply_single(&mut self.amps, self.n, qubit, m);
    }

    pub fn apply_x(&mut self, qubit: usize) {
        let s = 1usize << qubit;
        for block in self.amps.chunks_mut(2 * s) {
            let (lo, hi) = block.split_at_mut(s);
            lo.swap_with_slice(hi);
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        if self.n >= PARALLEL_THRESHOLD {
            self.amps.par_iter().map(|a| a.norm_sqr()).collect()
        } else {
            self.amps.iter().map(|a| a.norm_sqr()).collect()
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[inline]
fn mix4(m: &Mat4, a0: &mut C64, a1: &mut C64, a2: &mut C64, a3: &mut C64) {
    let v = [*a0, *a1, *a2, *a3];
    let row = |r: usize| m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3];
    *a0 = row(0);
    *a1 = row(1);
    *a2 = row(2);
    *a3 = row(3);
}

/// Applies `m` to qubits `(qubit_low, qubit_low + 1)` in place.
pub fn apply_two_qubit(amps: &mut [C64], n: usize, qubit_low: usize, m: &Mat4) {
    debug_assert!(qubit_low + 1 < n);
    apply_two_qubit_on(amps, qubit_low, m, n >= PARALLEL_THRESHOLD);
}

fn apply_two_qubit_on(amps: &mut [C64], qubit_low: usize, m: &Mat4, parallel: bool) {
    let s = 1usize << qubit_low;
    let block = |chunk: &mut [C64]| {
        let (q0, rest) = chunk.split_at_mut(s);
        let (q1, rest) = rest.split_at_mut(s);
        let (q2, q3) = rest.split_at_mut(s);
        if s >= MIN_PAR_LEN && parallel {
            (q0, q1, q2, q3)
                .into_par_iter()
                .with_min_len(MIN_PAR_LEN)
                .for_each(|(a0, a1, a2, a3)| mix4(m, a0, a1, a2, a3));
        } else {
            for j in 0..s {
                mix4(m, &mut q0[j], &mut q1[j], &mut q2[j], &mut q3[j]);
            }
        }
    };
    if parallel {
        amps.par_chunks_mut(4 * s).for_each(block);
    } else {
        amps.chunks_mut(4 * s).for_each(block);
    }
}

/// Applies `m` to `qubit` in place.
pub fn apply_single(amps: &mut [C64], n: usize, qubit: usize, m: &Mat2) {
    let s = 1usize << qubit;
    let block = |chunk: &mut [C64]| {
        let (lo, hi) = chunk.split_at_mut(s);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[(0, 0)] * x + m[(0, 1)] * y;
            *b = m[(1, 0)] * x + m[(1, 1)] * y;
        }
    };
    if n >= PARALLEL_THRESHOLD {
        amps.par_chunks_mut(2 * s).for_each(block);
    } else {
        amps.chunks_mut(2 * s).for_each(block);
    }
}

/// Applies layers `range` of `circuit` (and the trailing flips when the range
/// reaches the end) to `state`.
pub fn run_layers(circuit: &Circuit, range: std::ops::Range<usize>, state: &mut StateVector) {
    let end = range.end;
    for layer in &circuit.layers()[range] {
        for g in layer {
            state.apply_two_qubit(g.qubit_low, &g.params.matrix());
        }
    }
    if end == circuit.d() {
        for &q in circuit.final_flips() {
            state.apply_x(q);
        }
    }
}

/// `U|0ⁿ⟩`.
pub fn run(circuit: &Circuit) -> Result<StateVector> {
    let mut state = StateVector::zero_state(circuit.n())?;
    run_layers(circuit, 0..circuit.d(), &mut state);
    Ok(state)
}

/// `⟨target|U|0ⁿ⟩`.
pub fn peak_amplitude(circuit: &Circuit, target: &BitString) -> Result<C64> {
    if target.len() != circuit.n() {
        return Err(Error::LengthMismatch {
            expected: circuit.n(),
            found: target.len(),
        });
    }
    Ok(run(circuit)?.amplitude(target))
}

pub fn peak_probability(circuit: &Circuit) -> Result<f64> {
    Ok(peak_amplitude(circuit, &circuit.target())?.norm_sqr())
}

pub fn full_distribution(circuit: &Circuit) -> Result<ProbabilityDistribution> {
    let state = run(circuit)?;
    Ok(ProbabilityDistribution {
        n: circuit.n(),
        probs: state.probabilities(),
    })
}

/// Exact output distribution over all `2ⁿ` outcomes, indexed by basis state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl ProbabilityDistribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_capacity(n)?;
        if probs.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                found: probs.len(),
            });
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probs_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn probability(&self, b: &BitString) -> f64 {
        self.probs[b.index()]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total-variation distance to another distribution of equal width.
    pub fn total_variation(&self, other: &ProbabilityDistribution) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

/// Measurement counts keyed by outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotHistogram {
    n: usize,
    shots: u64,
    counts: BTreeMap<BitString, u64>,
}

impl ShotHistogram {
    pub fn from_counts(n: usize, counts: BTreeMap<BitString, u64>) -> Result<Self> {
        if counts.keys().any(|b| b.len() != n) {
            return Err(Error::InvalidArgument("outcome width differs from n".into()));
        }
        let shots = counts.values().sum();
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(Self { n, shots, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn count(&self, b: &BitString) -> u64 {
        self.counts.get(b).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<BitString, u64> {
        &self.counts
    }

    /// Outcomes by descending count, ties broken by ascending outcome.
    pub fn ranked(&self) -> Vec<(BitString, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(b, c)| (*b, *c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }
}

/// Draws `shots` outcomes from `dist`.
pub fn sample<R: Rng + ?Sized>(
    dist: &ProbabilityDistribution,
    shots: u64,
    rng: &mut R,
) -> Result<ShotHistogram> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let index = WeightedIndex::new(dist.probs.iter().map(|p| p.max(0.0)))
        .map_err(|e| Error::InvalidArgument(format!("cannot sample distribution: {e}")))?;
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let i = index.sample(rng);
        let b = BitString::new(dist.n, i as u64).expect("index below 2^n");
        *counts.entry(b).or_insert(0) += 1;
    }
    Ok(ShotHistogram {
        n: dist.n,
        shots,
        counts,
    })
}
