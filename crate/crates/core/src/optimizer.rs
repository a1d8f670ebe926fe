//! Peaking-half optimization.
//!
//! The objective is `p(θ) = |⟨s|P(θ)R|0ⁿ⟩|²`. Its gradient with respect to
//! the 15 structural angles of every peaking gate comes from one forward run
//! and one reverse sweep: walking back through the peaking gates we keep
//! `ψ` (state before the gate) and `χ` (the target pulled back through the
//! later gates), and `∂A/∂θ = Σ_ij ∂G_ij T_ij` with
//! `T_ij = Σ_rest conj(χ[rest,i]) ψ[rest,j]`.
//!
//! Stage 1 runs unconstrained L-BFGS on `−p`, stage 2 runs Adam from the best
//! point found so far. Both stop early once the gradient norm or the gap
//! `1 − p` to the global maximum drops to `stop_tol`; stage 1 also stops when
//! an iteration's relative decrease of `−p` falls below `lbfgs_ftol`.

use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gate::{GateParams, Mat4, C64, STRUCTURAL_PARAMS, ZERO};
use crate::sim::{run_layers, StateVector};

const PARALLEL_THRESHOLD: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub stage1_iters: usize,
    pub stage2_iters: usize,
    pub lbfgs_memory: usize,
    /// Stage 1 stops when the relative objective decrease falls below this.
    pub lbfgs_ftol: f64,
    pub adam_step: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Stage 2 stops once the best objective has gained less than `stop_tol`
    /// over this many iterations; 0 disables the check.
    pub adam_patience: usize,
    pub stop_tol: f64,
    /// Standard deviation of a Gaussian jitter added to the starting angles.
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            stage1_iters: 5000,
            stage2_iters: 10000,
            lbfgs_memory: 10,
            lbfgs_ftol: 2.220446049250313e-9,
            adam_step: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            adam_patience: 1000,
            stop_tol: 1e-9,
            init_noise: 0.0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.adam_step > 0.0
            && (0.0..1.0).contains(&self.adam_beta1)
            && (0.0..1.0).contains(&self.adam_beta2)
            && self.adam_eps > 0.0
            && self.stop_tol >= 0.0
            && self.lbfgs_ftol >= 0.0
            && self.init_noise >= 0.0
            && self.lbfgs_memory >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid optimizer config {self:?}")))
        }
    }
}

/// Objective history of one optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    /// Best-so-far objective after each iteration, starting with the initial value.
    pub objective: Vec<f64>,
    pub stage1_iters: usize,
    pub stage2_iters: usize,
    pub wall_time_secs: f64,
}

impl OptimizationTrace {
    pub fn initial(&self) -> f64 {
        self.objective[0]
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("trace starts with initial value")
    }

    pub fn summary(&self) -> OptimizationSummary {
        OptimizationSummary {
            initial_objective: self.initial(),
            final_objective: self.final_objective(),
            stage1_iters: self.stage1_iters,
            stage2_iters: self.stage2_iters,
        }
    }
}

/// Deterministic part of a trace, stored alongside optimized circuits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub stage1_iters: usize,
    pub stage2_iters: usize,
}

/// `p` and its gradient for a fixed random half.
pub struct PeakObjective<'a> {
    circuit: &'a Circuit,
    target: BitString,
    after_random: StateVector,
    gates: Vec<(usize, GateParams)>,
}

impl<'a> PeakObjective<'a> {
    pub fn new(circuit: &'a Circuit, target: BitString) -> Result<Self> {
        if target.len() != circuit.n() {
            return Err(Error::LengthMismatch {
                expected: circuit.n(),
                found: target.len(),
            });
        }
        let mut after_random = StateVector::zero_state(circuit.n())?;
        let r = circuit.random_depth();
        run_layers(circuit, 0..r, &mut after_random);
        let gates = circuit
            .peaking_placements()
            .map(|g| (g.qubit_low, g.params))
            .collect();
        Ok(Self {
            circuit,
            target,
            after_random,
            gates,
        })
    }

    pub fn dimension(&self) -> usize {
        self.gates.len() * STRUCTURAL_PARAMS
    }

    fn gate_params(&self, x: &[f64]) -> Vec<GateParams> {
        self.gates
            .iter()
            .zip(x.chunks_exact(STRUCTURAL_PARAMS))
            .map(|((_, p), v)| {
                let mut p = *p;
                p.set_structural(v);
                p
            })
            .collect()
    }

    fn forward(&self, params: &[GateParams]) -> StateVector {
        let mut psi = self.after_random.clone();
        for ((q, _), p) in self.gates.iter().zip(params) {
            psi.apply_two_qubit(*q, &p.matrix());
        }
        for &f in self.circuit.final_flips() {
            psi.apply_x(f);
        }
        psi
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.forward(&self.gate_params(x)).amplitude(&self.target).norm_sqr()
    }

    /// Returns `(p, ∇p)`.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let params = self.gate_params(x);
        let mut psi = self.forward(&params);
        let amp = psi.amplitude(&self.target);
        let mut chi = StateVector::basis_state(&self.target).expect("width checked");
        for &f in self.circuit.final_flips() {
            psi.apply_x(f);
            chi.apply_x(f);
        }
        let n = self.circuit.n();
        let mut grad = vec![0.0; self.dimension()];
        for (k, ((q, _), p)) in self.gates.iter().zip(&params).enumerate().rev() {
            let adj = p.matrix().adjoint();
            psi.apply_two_qubit(*q, &adj);
            let t = reduced_overlap(chi.amplitudes(), psi.amplitudes(), n, *q);
            for (j, d) in p.matrix_derivatives().iter().enumerate() {
                let da: C64 = d.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
                grad[k * STRUCTURAL_PARAMS + j] = 2.0 * (amp.conj() * da).re;
            }
            chi.apply_two_qubit(*q, &adj);
        }
        (amp.norm_sqr(), grad)
    }
}

/// `T_ij = Σ_rest conj(χ[rest, i]) ψ[rest, j]` on qubits `(q, q+1)`, returned
/// in nalgebra layout so that `Σ_ij G_ij T_ij` is an element-wise product.
fn reduced_overlap(chi: &[C64], psi: &[C64], n: usize, q: usize) -> Mat4 {
    let s = 1usize << q;
    let block = |(c, p): (&[C64], &[C64])| {
        let mut acc = Mat4::zeros();
        for j in 0..s {
            let cv = [c[j], c[j + s], c[j + 2 * s], c[j + 3 * s]];
            let pv = [p[j], p[j + s], p[j + 2 * s], p[j + 3 * s]];
            for a in 0..4 {
                let ca = cv[a].conj();
                if ca == ZERO {
                    continue;
                }
                for b in 0..4 {
                    acc[(a, b)] += ca * pv[b];
                }
            }
        }
        acc
    };
    if n >= PARALLEL_THRESHOLD {
        chi.par_chunks(4 * s)
            .zip(psi.par_chunks(4 * s))
            .map(block)
            .reduce(Mat4::zeros, |a, b| a + b)
    } else {
        chi.chunks(4 * s)
            .zip(psi.chunks(4 * s))
            .map(block)
            .fold(Mat4::zeros(), |a, b| a + b)
    }
}

/// `p` of a circuit at its stored target.
pub fn objective(circuit: &Circuit) -> Result<f64> {
    crate::sim::peak_probability(circuit)
}

/// Gradient of `p` with respect to the peaking-half structural angles, in
/// [`Circuit::peaking_parameters`] order.
pub fn peak_gradient(circuit: &Circuit) -> Result<(f64, Vec<f64>)> {
    let obj = PeakObjective::new(circuit, circuit.target())?;
    Ok(obj.value_and_gradient(&circuit.peaking_parameters()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Best {
    x: Vec<f64>,
    p: f64,
}

impl Best {
    fn offer(&mut self, x: &[f64], p: f64) {
        if p > self.p {
            self.p = p;
            self.x.copy_from_slice(x);
        }
    }
}

/// L-BFGS on `f = −p`. Returns the number of iterations performed.
fn lbfgs(
    obj: &PeakObjective,
    x: &mut Vec<f64>,
    config: &OptimizerConfig,
    best: &mut Best,
    trace: &mut Vec<f64>,
) -> usize {
    let (p0, g0) = obj.value_and_gradient(x);
    let mut f = -p0;
    let mut g: Vec<f64> = g0.iter().map(|v| -v).collect();
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iters = 0;
    while iters < config.stage1_iters {
        let gnorm = norm(&g);
        if gnorm <= config.stop_tol || 1.0 + f <= config.stop_tol {
            break;
        }
        // Two-loop recursion.
        let mut dir: Vec<f64> = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &dir);
            for (d, yv) in dir.iter_mut().zip(y) {
                *d -= a * yv;
            }
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or(1.0 / gnorm.max(1.0));
        for d in dir.iter_mut() {
            *d *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &dir);
            for (d, sv) in dir.iter_mut().zip(s) {
                *d += (a - b) * sv;
            }
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &dir);
        }

        // Armijo backtracking.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (pt, gt) = obj.value_and_gradient(&trial);
            if -pt <= f + 1e-4 * step * slope {
                accepted = Some((trial, pt, gt));
                break;
            }
            step *= 0.5;
        }
        iters += 1;
        let Some((x_new, p_new, g_raw)) = accepted else {
            trace.push(best.p);
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let g_new: Vec<f64> = g_raw.iter().map(|v| -v).collect();
        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == config.lbfgs_memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let decrease = f + p_new;
        *x = x_new;
        f = -p_new;
        g = g_new;
        best.offer(x, p_new);
        trace.push(best.p);
        if decrease <= config.lbfgs_ftol * f.abs().max(1.0) {
            break;
        }
    }
    iters
}

/// Adam ascent on `p`. Returns the number of iterations performed.
fn adam(
    obj: &PeakObjective,
    x: &mut [f64],
    config: &OptimizerConfig,
    best: &mut Best,
    trace: &mut Vec<f64>,
) -> usize {
    let mut m = vec![0.0; x.len()];
    let mut v = vec![0.0; x.len()];
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let mut iters = 0;
    let mut checkpoint = best.p;
    while iters < config.stage2_iters {
        let (p, g) = obj.value_and_gradient(x);
        best.offer(x, p);
        if norm(&g) <= config.stop_tol || 1.0 - p <= config.stop_tol {
            break;
        }
        if config.adam_patience > 0 && iters > 0 && iters % config.adam_patience == 0 {
            if best.p - checkpoint < config.stop_tol {
                break;
            }
            checkpoint = best.p;
        }
        iters += 1;
        let c1 = 1.0 - b1.powi(iters as i32);
        let c2 = 1.0 - b2.powi(iters as i32);
        for i in 0..x.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            x[i] += config.adam_step * (m[i] / c1) / ((v[i] / c2).sqrt() + config.adam_eps);
        }
        trace.push(best.p);
    }
    let p = obj.value(x);
    best.offer(x, p);
    if let Some(last) = trace.last_mut() {
        *last = best.p;
    }
    iters
}

/// Maximizes the target probability over the peaking-half angles.
///
/// The random half, the target, and all gate placements are left untouched;
/// the returned circuit holds the best point seen.
pub fn optimize(circuit: &Circuit, config: &OptimizerConfig) -> Result<(Circuit, OptimizationTrace)> {
    config.validate()?;
    if circuit.peaking_param_count() == 0 {
        return Err(Error::NothingToOptimize);
    }
    let start = Instant::now();
    let obj = PeakObjective::new(circuit, circuit.target())?;
    let mut x = circuit.peaking_parameters();
    let p_init = obj.value(&x);
    if config.init_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for xi in x.iter_mut() {
            let g: f64 = rng.sample(rand_distr::StandardNormal);
            *xi += config.init_noise * g;
        }
    }
    let mut best = Best {
        x: circuit.peaking_parameters(),
        p: p_init,
    };
    let p_start = obj.value(&x);
    best.offer(&x, p_start);
    let mut trace = vec![best.p];

    let stage1 = lbfgs(&obj, &mut x, config, &mut best, &mut trace);
    let mut x = best.x.clone();
    let stage2 = adam(&obj, &mut x, config, &mut best, &mut trace);

    let out = circuit.with_peaking_parameters(&best.x)?;
    Ok((
        out,
        OptimizationTrace {
            objective: trace,
            stage1_iters: stage1,
            stage2_iters: stage2,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    ))
}
