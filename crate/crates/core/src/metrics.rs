//! Peak identification, relative peakedness, fidelity error, and ΔF grids.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::harness::{BenchmarkMatrix, CellStatus};
use crate::sim::{ProbabilityDistribution, ShotHistogram};

/// Anything that assigns frequencies to outcomes.
pub trait Outcomes {
    fn width(&self) -> usize;

    /// `(freq(target), max over x ≠ target of freq(x))`.
    fn peak_and_competitor(&self, target: &BitString) -> (f64, f64);

    /// True iff the target is strictly more frequent than every other outcome.
    fn target_dominates(&self, target: &BitString) -> bool;
}

impl Outcomes for ShotHistogram {
    fn width(&self) -> usize {
        self.n()
    }

    fn peak_and_competitor(&self, target: &BitString) -> (f64, f64) {
        let shots = self.shots() as f64;
        let (t, c) = self.count_and_competitor(target);
        (t as f64 / shots, c as f64 / shots)
    }

    fn target_dominates(&self, target: &BitString) -> bool {
        let (t, c) = self.count_and_competitor(target);
        t > c
    }
}

impl ShotHistogram {
    fn count_and_competitor(&self, target: &BitString) -> (u64, u64) {
        let competitor = self
            .counts()
            .iter()
            .filter(|(b, _)| *b != target)
            .map(|(_, &c)| c)
            .max()
            .unwrap_or(0);
        (self.count(target), competitor)
    }
}

impl Outcomes for ProbabilityDistribution {
    fn width(&self) -> usize {
        self.n()
    }

    fn peak_and_competitor(&self, target: &BitString) -> (f64, f64) {
        let t = target.index();
        let competitor = self
            .probs()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != t)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max);
        (self.probs()[t], competitor)
    }

    fn target_dominates(&self, target: &BitString) -> bool {
        let (t, c) = self.peak_and_competitor(target);
        t > c
    }
}

fn check_width<O: Outcomes + ?Sized>(o: &O, target: &BitString) -> Result<()> {
    if o.width() != target.len() {
        return Err(Error::LengthMismatch {
            expected: o.width(),
            found: target.len(),
        });
    }
    Ok(())
}

/// Strict-majority peak identification; ties are failures.
pub fn identify<O: Outcomes + ?Sized>(outcomes: &O, target: &BitString) -> Result<bool> {
    check_width(outcomes, target)?;
    Ok(outcomes.target_dominates(target))
}

/// `(p̂_peak − p̂_second)/(p̂_peak + p̂_second)`; negative when a competitor wins.
pub fn relative_peakedness<O: Outcomes + ?Sized>(outcomes: &O, target: &BitString) -> Result<f64> {
    check_width(outcomes, target)?;
    let (p, q) = outcomes.peak_and_competitor(target);
    contrast(p, q)
}

fn contrast(p: f64, q: f64) -> Result<f64> {
    if p + q <= 0.0 {
        return Err(Error::UndefinedMetric(
            "target and competitor frequencies are both zero".into(),
        ));
    }
    Ok((p - q) / (p + q))
}

/// `1 − c_exp / c_max`, unclamped.
pub fn fidelity_error(c_exp: f64, c_max: f64) -> Result<f64> {
    if c_max <= 0.0 || c_max.is_nan() {
        return Err(Error::InvalidArgument(format!("c_max must be positive, got {c_max}")));
    }
    Ok(1.0 - c_exp / c_max)
}

/// Display form of a fidelity error.
pub fn clamp_unit(f: f64) -> f64 {
    f.clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub identified: bool,
    pub p_hat_peak: f64,
    pub p_hat_second: f64,
    pub c_exp: f64,
    /// Raw fidelity error; may leave `[0, 1]` through sampling noise.
    pub f_raw: f64,
    pub f: f64,
}

impl RunMetrics {
    pub fn evaluate<O: Outcomes + ?Sized>(outcomes: &O, target: &BitString, c_max: f64) -> Result<Self> {
        check_width(outcomes, target)?;
        let (p, q) = outcomes.peak_and_competitor(target);
        let c_exp = contrast(p, q)?;
        let f_raw = fidelity_error(c_exp, c_max)?;
        Ok(Self {
            identified: outcomes.target_dominates(target),
            p_hat_peak: p,
            p_hat_second: q,
            c_exp,
            f_raw,
            f: clamp_unit(f_raw),
        })
    }
}

/// One cell of a ΔF grid; `delta` is absent unless both sides identified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaCell {
    pub n: usize,
    pub d: usize,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub qubits: Vec<usize>,
    pub depths: Vec<usize>,
    pub cells: Vec<DeltaCell>,
}

impl DeltaGrid {
    pub fn get(&self, n: usize, d: usize) -> Option<&DeltaCell> {
        self.cells.iter().find(|c| c.n == n && c.d == d)
    }
}

/// `ΔF(n, d) = F_a − F_b` over cells identified in both matrices, using the
/// display (clamped) cell means so values stay in `[−1, 1]`.
pub fn delta_matrix(a: &BenchmarkMatrix, b: &BenchmarkMatrix) -> Result<DeltaGrid> {
    let domain = |m: &BenchmarkMatrix| -> Vec<(usize, usize)> { m.cells.iter().map(|c| (c.n, c.d)).collect() };
    if domain(a) != domain(b) {
        return Err(Error::DomainMismatch(
            "matrices cover different (n, d) grids".into(),
        ));
    }
    let cells = a
        .cells
        .iter()
        .zip(&b.cells)
        .map(|(ca, cb)| {
            let delta = match (ca.status, cb.status, ca.mean_f, cb.mean_f) {
                (CellStatus::Identified, CellStatus::Identified, Some(fa), Some(fb)) => {
                    Some(clamp_unit(fa) - clamp_unit(fb))
                }
                _ => None,
            };
            DeltaCell {
                n: ca.n,
                d: ca.d,
                delta,
            }
        })
        .collect();
    Ok(DeltaGrid {
        qubits: a.config.qubits.clone(),
        depths: a.config.depths.clone(),
        cells,
    })
}
