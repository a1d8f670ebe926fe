//! Generated circuit suites: one optimized circuit per `(n, d)` cell, all
//! carved from a single reference circuit, plus a manifest tying them
//! together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::circuit::{build_reference_circuit, derive_subcircuit, retarget, Circuit, CircuitDocument};
use crate::error::{Error, Result};
use crate::harness::derive_seed;
use crate::optimizer::{optimize, OptimizationTrace, OptimizerConfig};
use crate::profile::{peak_profile, PeakProfile};

pub const SUITE_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "suite.json";

/// Reference dimensions used unless the requested grid is larger.
pub const DEFAULT_REFERENCE_QUBITS: usize = 20;
pub const DEFAULT_REFERENCE_DEPTH: usize = 50;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn circuit_file_name(n: usize, d: usize) -> String {
    format!("circuit_n{n}_d{d}.json")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Peak on `0ⁿ`.
    Zero,
    /// Peak on a seeded random bitstring per cell.
    #[default]
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub qubits: Vec<usize>,
    pub depths: Vec<usize>,
    pub seed: u64,
    pub target: TargetMode,
    pub optimizer: OptimizerConfig,
}

impl GenerateConfig {
    pub fn reference_dims(&self) -> (usize, usize) {
        let n = self.qubits.iter().copied().max().unwrap_or(0);
        let d = self.depths.iter().copied().max().unwrap_or(0);
        (n.max(DEFAULT_REFERENCE_QUBITS), d.max(DEFAULT_REFERENCE_DEPTH))
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() || self.depths.is_empty() {
            return Err(Error::InvalidArgument("empty qubit or depth range".into()));
        }
        if self.qubits.iter().any(|&n| n < 2) || self.depths.iter().any(|&d| d < 2) {
            return Err(Error::InvalidDimension("grid needs n >= 2 and d >= 2".into()));
        }
        if let Some(&n) = self.qubits.iter().find(|&&n| n > crate::sim::MAX_SIM_QUBITS) {
            return Err(Error::Capacity {
                n,
                max: crate::sim::MAX_SIM_QUBITS,
            });
        }
        self.optimizer.validate()
    }

    pub fn grid(&self) -> Vec<(usize, usize)> {
        let mut q = self.qubits.clone();
        q.sort_unstable();
        q.dedup();
        let mut d = self.depths.clone();
        d.sort_unstable();
        d.dedup();
        q.iter().flat_map(|&n| d.iter().map(move |&dd| (n, dd))).collect()
    }
}

pub struct GeneratedCell {
    pub circuit: Circuit,
    pub profile: PeakProfile,
    pub trace: OptimizationTrace,
}

impl GeneratedCell {
    pub fn document(&self) -> CircuitDocument {
        let mut doc = CircuitDocument::new(&self.circuit);
        doc.profile = Some(self.profile.clone());
        doc.optimization = Some(self.trace.summary());
        doc
    }
}

/// Target bitstring for a cell under `mode`.
pub fn cell_target(mode: TargetMode, seed: u64, n: usize, d: usize) -> BitString {
    match mode {
        TargetMode::Zero => BitString::zeros(n),
        TargetMode::Random => {
            let bits = derive_seed(seed, n, d, usize::MAX);
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            BitString::new(n, bits & mask).expect("masked to width")
        }
    }
}

/// Derives, retargets, optimizes, and profiles one cell.
///
/// If the optimized distribution peaks somewhere other than the requested
/// target, the circuit's target is moved to the actual peak and the profile
/// keeps the mismatch flag.
pub fn generate_cell(reference: &Circuit, n: usize, d: usize, config: &GenerateConfig) -> Result<GeneratedCell> {
    let derived = derive_subcircuit(reference, n, d)?.with_seed(Some(config.seed));
    let target = cell_target(config.target, config.seed, n, d);
    let start = retarget(&derived, &target)?;
    let opt = OptimizerConfig {
        seed: config.optimizer.seed ^ derive_seed(config.seed, n, d, 0),
        ..config.optimizer.clone()
    };
    let (circuit, trace) = optimize(&start, &opt)?;
    let profile = peak_profile(&circuit)?;
    let circuit = circuit.with_target(profile.target)?;
    Ok(GeneratedCell {
        circuit,
        profile,
        trace,
    })
}

/// Generates every grid cell in parallel; output order is the sorted grid.
pub fn generate_suite(config: &GenerateConfig) -> Result<Vec<GeneratedCell>> {
    config.validate()?;
    let (n_max, d_max) = config.reference_dims();
    let reference = build_reference_circuit(n_max, d_max, config.seed)?;
    config
        .grid()
        .par_iter()
        .map(|&(n, d)| generate_cell(&reference, n, d, config))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub n: usize,
    pub d: usize,
    pub file: String,
    pub sha256: String,
    pub p_peak: f64,
    pub target_mismatch: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub reference_qubits: usize,
    pub reference_depth: usize,
    pub target: TargetMode,
    pub optimizer: OptimizerConfig,
    pub entries: Vec<SuiteEntry>,
}

/// Writes one JSON file per cell and the manifest into `dir`.
pub fn write_suite(dir: &Path, config: &GenerateConfig, cells: &[GeneratedCell]) -> Result<SuiteManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(cells.len());
    for cell in cells {
        let (n, d) = (cell.circuit.n(), cell.circuit.d());
        let text = cell.document().to_json()? + "\n";
        let file = circuit_file_name(n, d);
        let path = dir.join(&file);
        std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
        entries.push(SuiteEntry {
            n,
            d,
            file,
            sha256: sha256_hex(text.as_bytes()),
            p_peak: cell.profile.p_peak,
            target_mismatch: cell.profile.target_mismatch,
        });
    }
    let (reference_qubits, reference_depth) = config.reference_dims();
    let manifest = SuiteManifest {
        schema_version: SUITE_SCHEMA_VERSION,
        seed: config.seed,
        reference_qubits,
        reference_depth,
        target: config.target,
        optimizer: config.optimizer.clone(),
        entries,
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub struct SuiteCircuit {
    pub circuit: Circuit,
    pub profile: PeakProfile,
    pub hash: String,
    pub path: Option<PathBuf>,
}

/// Circuits with their profiles, keyed by `(n, d)`.
#[derive(Default)]
pub struct Suite {
    cells: BTreeMap<(usize, usize), SuiteCircuit>,
    pub manifest_hash: Option<String>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an in-memory circuit; its hash covers the serialized document.
    pub fn insert(&mut self, circuit: Circuit, profile: PeakProfile) -> Result<()> {
        let mut doc = CircuitDocument::new(&circuit);
        doc.profile = Some(profile.clone());
        let hash = sha256_hex((doc.to_json()? + "\n").as_bytes());
        self.cells.insert(
            (circuit.n(), circuit.d()),
            SuiteCircuit {
                circuit,
                profile,
                hash,
                path: None,
            },
        );
        Ok(())
    }

    pub fn get(&self, n: usize, d: usize) -> Option<&SuiteCircuit> {
        self.cells.get(&(n, d))
    }

    pub fn iter(&self) -> impl Iterator<Item = &SuiteCircuit> {
        self.cells.values()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Loads every circuit listed in a manifest, checking file hashes.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let bytes = std::fs::read(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: SuiteManifest = serde_json::from_slice(&bytes).map_err(|source| Error::Parse {
            path: manifest_path.to_path_buf(),
            source,
        })?;
        if manifest.schema_version != SUITE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                path: manifest_path.to_path_buf(),
                found: manifest.schema_version,
                expected: SUITE_SCHEMA_VERSION,
            });
        }
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let mut suite = Suite {
            cells: BTreeMap::new(),
            manifest_hash: Some(sha256_hex(&bytes)),
        };
        for e in &manifest.entries {
            let path = dir.join(&e.file);
            let cell_err = |message: String| Error::CellFile {
                n: e.n,
                d: e.d,
                path: path.clone(),
                message,
            };
            let text = std::fs::read(&path).map_err(|err| cell_err(err.to_string()))?;
            let hash = sha256_hex(&text);
            if hash != e.sha256 {
                return Err(cell_err("file hash differs from manifest".into()));
            }
            let doc = CircuitDocument::read(&path).map_err(|err| cell_err(err.to_string()))?;
            let circuit = doc.circuit().map_err(|err| cell_err(err.to_string()))?;
            if (circuit.n(), circuit.d()) != (e.n, e.d) {
                return Err(cell_err("circuit dimensions differ from manifest".into()));
            }
            let profile = doc.profile.ok_or_else(|| cell_err("no peak profile".into()))?;
            suite.cells.insert(
                (e.n, e.d),
                SuiteCircuit {
                    circuit,
                    profile,
                    hash,
                    path: Some(path),
                },
            );
        }
        Ok(suite)
    }
}
