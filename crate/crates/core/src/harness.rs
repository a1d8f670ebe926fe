//! Benchmark-matrix protocol: repetitions, shot policy, adaptive skipping,
//! aggregation, and persistence.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::metrics::{Outcomes, RunMetrics};
use crate::noise::{
    depolarize, effective_fidelity, perturb_coherent, readout_channel, readout_flip, NoiseSpec,
};
use crate::profile::PeakProfile;
use crate::sim::{full_distribution, sample, ProbabilityDistribution, ShotHistogram};
use crate::suite::Suite;

pub const MATRIX_SCHEMA_VERSION: u32 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-record seed; a pure function of its four inputs.
pub fn derive_seed(master: u64, n: usize, d: usize, rep: usize) -> u64 {
    [n as u64, d as u64, rep as u64]
        .iter()
        .fold(splitmix64(master), |h, &v| splitmix64(h ^ v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotPolicy {
    pub base: f64,
    pub min_shots: u64,
    pub max_shots: u64,
    /// Overrides the formula with a constant shot count.
    pub fixed: Option<u64>,
}

impl Default for ShotPolicy {
    fn default() -> Self {
        Self {
            base: 250.0,
            min_shots: 200,
            max_shots: 1_000_000,
            fixed: None,
        }
    }
}

impl ShotPolicy {
    pub fn fixed(shots: u64) -> Self {
        Self {
            fixed: Some(shots),
            ..Self::default()
        }
    }

    /// `clamp(base · 2^(n/2) · (1 + d/25), min, max)`, rounded up.
    pub fn shots(&self, n: usize, d: usize) -> u64 {
        if let Some(s) = self.fixed {
            return s;
        }
        let raw = self.base * 2f64.powf(n as f64 / 2.0) * (1.0 + d as f64 / 25.0);
        (raw.ceil() as u64).clamp(self.min_shots, self.max_shots)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Finite shots through the full noisy sampling pipeline.
    #[default]
    Sampled,
    /// Infinite-shot limit: metrics on the exact noisy distribution.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub qubits: Vec<usize>,
    pub depths: Vec<usize>,
    pub reps: usize,
    pub threshold: usize,
    pub skip_window: usize,
    pub shots: ShotPolicy,
    pub noise: NoiseSpec,
    pub backend: BackendKind,
    pub seed: u64,
    pub top_k: usize,
    /// Omit wall-clock fields so output is byte-reproducible.
    pub deterministic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            qubits: (2..=20).collect(),
            depths: (2..=50).collect(),
            reps: 5,
            threshold: 3,
            skip_window: 5,
            shots: ShotPolicy::default(),
            noise: NoiseSpec::default(),
            backend: BackendKind::default(),
            seed: 0,
            top_k: 8,
            deterministic: true,
            output: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.threshold > self.reps {
            return bad("threshold exceeds reps");
        }
        if self.skip_window == 0 {
            return bad("skip window must be at least 1");
        }
        if self.qubits.is_empty() || self.depths.is_empty() {
            return bad("empty qubit or depth list");
        }
        if self.qubits.iter().any(|&n| n < 2) || self.depths.iter().any(|&d| d < 2) {
            return bad("grid needs n >= 2 and d >= 2");
        }
        if self.shots.fixed == Some(0) || self.shots.min_shots == 0 || self.shots.min_shots > self.shots.max_shots {
            return bad("invalid shot policy");
        }
        self.noise.validate()
    }

    /// Reads a JSON or (by `.toml` extension) TOML config.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config_err = |message: String| Error::Config {
            path: path.to_path_buf(),
            message,
        };
        let config: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| config_err(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?
        };
        config.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(config)
    }

    /// Grid cells in row-major `(n, d)` order.
    pub fn grid(&self) -> Vec<(usize, usize)> {
        let mut qubits = self.qubits.clone();
        qubits.sort_unstable();
        qubits.dedup();
        let mut depths = self.depths.clone();
        depths.sort_unstable();
        depths.dedup();
        qubits
            .iter()
            .flat_map(|&n| depths.iter().map(move |&d| (n, d)))
            .collect()
    }
}

/// What a backend hands back for one execution.
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Shots(ShotHistogram),
    Exact(ProbabilityDistribution),
}

impl Observation {
    pub fn outcomes(&self) -> &dyn Outcomes {
        match self {
            Observation::Shots(h) => h,
            Observation::Exact(d) => d,
        }
    }

    /// The `k` most frequent outcomes, ties broken by ascending outcome.
    pub fn top_k(&self, k: usize) -> Vec<TopEntry> {
        match self {
            Observation::Shots(h) => {
                let shots = h.shots() as f64;
                h.ranked()
                    .into_iter()
                    .take(k)
                    .map(|(b, c)| TopEntry {
                        bitstring: b,
                        frequency: c as f64 / shots,
                    })
                    .collect()
            }
            Observation::Exact(d) => {
                let mut idx: Vec<usize> = (0..d.probs().len()).collect();
                let key = |&i: &usize| (std::cmp::Reverse(ordered(d.probs()[i])), i);
                if k < idx.len() {
                    idx.select_nth_unstable_by_key(k, key);
                    idx.truncate(k);
                }
                idx.sort_by_key(key);
                idx.into_iter()
                    .map(|i| TopEntry {
                        bitstring: BitString::new(d.n(), i as u64).expect("index below 2^n"),
                        frequency: d.probs()[i],
                    })
                    .collect()
            }
        }
    }
}

fn ordered(x: f64) -> u64 {
    // Total order on non-negative finite floats.
    x.max(0.0).to_bits()
}

/// Executes a circuit and reports outcome frequencies.
pub trait Backend: Sync {
    fn execute(&self, circuit: &Circuit, shots: u64, rng: &mut ChaCha8Rng) -> Result<Observation>;
}

/// Noisy sampling: coherent perturbation, ideal distribution, depolarizing
/// mixture, `shots` samples, readout flips.
#[derive(Clone, Debug, Default)]
pub struct SampledBackend {
    pub noise: NoiseSpec,
}

impl Backend for SampledBackend {
    fn execute(&self, circuit: &Circuit, shots: u64, rng: &mut ChaCha8Rng) -> Result<Observation> {
        let c = perturb_coherent(circuit, self.noise.coherent_delta, rng)?;
        let f = effective_fidelity(&c, self.noise.p1, self.noise.p2)?;
        let dist = depolarize(&full_distribution(&c)?, f)?;
        let hist = sample(&dist, shots, rng)?;
        Ok(Observation::Shots(readout_flip(&hist, self.noise.readout_epsilon, rng)?))
    }
}

/// Infinite-shot limit of [`SampledBackend`]; ignores the shot count.
#[derive(Clone, Debug, Default)]
pub struct ExactBackend {
    pub noise: NoiseSpec,
}

impl Backend for ExactBackend {
    fn execute(&self, circuit: &Circuit, _shots: u64, rng: &mut ChaCha8Rng) -> Result<Observation> {
        let c = perturb_coherent(circuit, self.noise.coherent_delta, rng)?;
        let f = effective_fidelity(&c, self.noise.p1, self.noise.p2)?;
        let dist = depolarize(&full_distribution(&c)?, f)?;
        Ok(Observation::Exact(readout_channel(&dist, self.noise.readout_epsilon)?))
    }
}

/// Never identifies: every shot lands on the target with qubit 0 flipped.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysFailBackend;

impl Backend for AlwaysFailBackend {
    fn execute(&self, circuit: &Circuit, shots: u64, _rng: &mut ChaCha8Rng) -> Result<Observation> {
        let t = circuit.target();
        let wrong = BitString::new(t.len(), t.value() ^ 1)?;
        let hist = ShotHistogram::from_counts(t.len(), [(wrong, shots)].into_iter().collect())?;
        Ok(Observation::Shots(hist))
    }
}

pub fn backend_for(config: &BenchConfig) -> Box<dyn Backend> {
    match config.backend {
        BackendKind::Sampled => Box::new(SampledBackend {
            noise: config.noise.clone(),
        }),
        BackendKind::Exact => Box::new(ExactBackend {
            noise: config.noise.clone(),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopEntry {
    pub bitstring: BitString,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub d: usize,
    pub rep: usize,
    pub seed: u64,
    pub shots: u64,
    pub metrics: RunMetrics,
    pub top_k: Vec<TopEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Identified,
    NonIdentified,
    Skipped,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Identified => "identified",
            CellStatus::NonIdentified => "non_identified",
            CellStatus::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub d: usize,
    pub status: CellStatus,
    pub shots: u64,
    pub identified_reps: usize,
    /// Mean raw fidelity error over identified reps.
    pub mean_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BitString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit_hash: Option<String>,
    pub reps: Vec<RunRecord>,
}

impl CellResult {
    pub fn skipped(n: usize, d: usize, shots: u64, circuit_hash: Option<String>) -> Self {
        Self {
            n,
            d,
            status: CellStatus::Skipped,
            shots,
            identified_reps: 0,
            mean_f: None,
            target: None,
            circuit_hash,
            reps: Vec::new(),
        }
    }

    /// Applies the threshold rule and identified-rep averaging.
    pub fn aggregate(
        n: usize,
        d: usize,
        shots: u64,
        threshold: usize,
        reps: Vec<RunRecord>,
        circuit_hash: Option<String>,
    ) -> Self {
        let identified: Vec<f64> = reps
            .iter()
            .filter(|r| r.metrics.identified)
            .map(|r| r.metrics.f_raw)
            .collect();
        let mean_f = (!identified.is_empty())
            .then(|| identified.iter().sum::<f64>() / identified.len() as f64);
        let status = if identified.len() >= threshold {
            CellStatus::Identified
        } else {
            CellStatus::NonIdentified
        };
        Self {
            n,
            d,
            status,
            shots,
            identified_reps: identified.len(),
            mean_f,
            target: None,
            circuit_hash,
            reps,
        }
    }
}

/// Runs every repetition of one cell.
pub fn run_cell(
    circuit: &Circuit,
    profile: &PeakProfile,
    backend: &dyn Backend,
    config: &BenchConfig,
) -> Result<CellResult> {
    let (n, d) = (circuit.n(), circuit.d());
    if profile.target != circuit.target() {
        return Err(Error::ProfileMismatch {
            n,
            d,
            reason: format!("profile peak {} vs circuit target {}", profile.target, circuit.target()),
        });
    }
    let shots = config.shots.shots(n, d);
    let mut records = Vec::with_capacity(config.reps);
    for rep in 0..config.reps {
        let seed = derive_seed(config.seed, n, d, rep);
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ config.noise.seed));
        let start = Instant::now();
        let obs = backend.execute(circuit, shots, &mut rng)?;
        let metrics = RunMetrics::evaluate(obs.outcomes(), &circuit.target(), profile.c_max)?;
        records.push(RunRecord {
            n,
            d,
            rep,
            seed,
            shots,
            metrics,
            top_k: obs.top_k(config.top_k),
            wall_time_secs: (!config.deterministic).then(|| start.elapsed().as_secs_f64()),
        });
    }
    let mut cell = CellResult::aggregate(n, d, shots, config.threshold, records, None);
    cell.target = Some(circuit.target());
    Ok(cell)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMatrix {
    pub schema_version: u32,
    pub config: BenchConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite_hash: Option<String>,
    /// Every grid cell exactly once, sorted by `(n, d)`.
    pub cells: Vec<CellResult>,
}

impl BenchmarkMatrix {
    pub fn get(&self, n: usize, d: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.n == n && c.d == d)
    }

    pub fn qubits(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().map(|c| c.n).collect();
        v.dedup();
        v
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().map(|c| c.d).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |source| Error::Parse {
            path: path.to_path_buf(),
            source,
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if found != MATRIX_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                path: path.to_path_buf(),
                found,
                expected: MATRIX_SCHEMA_VERSION,
            });
        }
        serde_json::from_value(value).map_err(parse_err)
    }

    /// Flat table: `n,d,status,identified_reps,mean_f,shots`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "d", "status", "identified_reps", "mean_f", "shots"])?;
        for c in &self.cells {
            w.write_record([
                c.n.to_string(),
                c.d.to_string(),
                c.status.as_str().to_string(),
                c.identified_reps.to_string(),
                c.mean_f.map(|f| f.to_string()).unwrap_or_default(),
                c.shots.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// Runs the whole grid.
///
/// Within a qubit row depths ascend; once `skip_window` consecutive executed
/// cells fail to identify, the rest of the row is skipped. Any identified
/// cell resets the count. Rows run in parallel on the current rayon pool.
pub fn run_matrix(suite: &Suite, config: &BenchConfig, backend: &dyn Backend) -> Result<BenchmarkMatrix> {
    config.validate()?;
    let grid = config.grid();
    for &(n, d) in &grid {
        let entry = suite.get(n, d).ok_or(Error::MissingCell { n, d })?;
        if entry.circuit.n() != n || entry.circuit.d() != d {
            return Err(Error::ProfileMismatch {
                n,
                d,
                reason: "suite entry has different dimensions".into(),
            });
        }
    }
    let mut qubits: Vec<usize> = grid.iter().map(|c| c.0).collect();
    qubits.dedup();
    let rows: Vec<Result<Vec<CellResult>>> = qubits
        .par_iter()
        .map(|&n| {
            let mut misses = 0;
            let mut row = Vec::new();
            for &(_, d) in grid.iter().filter(|c| c.0 == n) {
                let entry = suite.get(n, d).expect("checked above");
                let hash = Some(entry.hash.clone());
                if misses >= config.skip_window {
                    let mut cell = CellResult::skipped(n, d, config.shots.shots(n, d), hash);
                    cell.target = Some(entry.circuit.target());
                    row.push(cell);
                    continue;
                }
                let mut cell = run_cell(&entry.circuit, &entry.profile, backend, config)?;
                cell.circuit_hash = hash;
                if cell.status == CellStatus::Identified {
                    misses = 0;
                } else {
                    misses += 1;
                }
                row.push(cell);
            }
            Ok(row)
        })
        .collect();
    let mut cells = Vec::with_capacity(grid.len());
    for row in rows {
        cells.extend(row?);
    }
    Ok(BenchmarkMatrix {
        schema_version: MATRIX_SCHEMA_VERSION,
        config: config.clone(),
        suite_hash: suite.manifest_hash.clone(),
        cells,
    })
}
