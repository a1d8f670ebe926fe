//! Brick-wall circuits split into a random half and a peaking half.
//!
//! A circuit of depth `d` has `random_depth = ⌊d/2⌋` random layers followed
//! by `d − random_depth` peaking layers. Random layers alternate between even
//! alignment (pairs `(0,1), (2,3), …`) and odd alignment (`(1,2), (3,4), …`)
//! starting even. The peaking half mirrors that sequence at the midpoint, so
//! the first peaking layer repeats the alignment of the last random layer;
//! an extra peaking layer (odd `d`) continues the alternation. Two-qubit
//! registers cannot interleave and use the pair `(0,1)` in every layer.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::gate::{kron, pauli_x, GateParams, Mat2, STRUCTURAL_PARAMS};
use crate::haar::haar_random_unitary;
use crate::kak::{cnot_count, kak_decompose};

pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateRole {
    Random,
    Peaking,
}

pub fn random_depth(d: usize) -> usize {
    d / 2
}

pub fn peaking_depth(d: usize) -> usize {
    d - d / 2
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if n < 2 || d < 2 {
        return Err(Error::InvalidDimension(format!(
            "need n >= 2 and d >= 2, got n={n}, d={d}"
        )));
    }
    if n > crate::bits::MAX_BITS {
        return Err(Error::InvalidDimension(format!("n={n} exceeds {}", crate::bits::MAX_BITS)));
    }
    Ok(())
}

/// Alignment of `layer` in an `(n, d)` brick wall.
pub fn layer_alignment(n: usize, d: usize, layer: usize) -> Alignment {
    if n == 2 {
        return Alignment::Even;
    }
    let r = random_depth(d) as i64;
    let l = layer as i64;
    let mirrored = if l < r { l } else { 2 * r - 1 - l };
    if mirrored.rem_euclid(2) == 0 {
        Alignment::Even
    } else {
        Alignment::Odd
    }
}

/// Lower qubits of the gates of one layer with the given alignment.
pub fn alignment_pairs(n: usize, alignment: Alignment) -> Vec<usize> {
    let start = match alignment {
        Alignment::Even => 0,
        Alignment::Odd => 1,
    };
    (start..n.saturating_sub(1)).step_by(2).collect()
}

/// Per-layer lower-qubit indices of every gate in an `(n, d)` brick wall.
pub fn brickwall_layout(n: usize, d: usize) -> Result<Vec<Vec<usize>>> {
    check_dims(n, d)?;
    Ok((0..d)
        .map(|layer| alignment_pairs(n, layer_alignment(n, d, layer)))
        .collect())
}

/// One two-qubit gate on qubits `(qubit_low, qubit_low + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatePlacement {
    pub layer: usize,
    pub qubit_low: usize,
    pub role: GateRole,
    pub params: GateParams,
}

/// An immutable peaked-random-circuit instance.
///
/// `final_flips` lists qubits that receive a standalone X after the last
/// layer (retargeting onto qubits the final layer does not touch).
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    d: usize,
    random_depth: usize,
    layers: Vec<Vec<GatePlacement>>,
    target: BitString,
    final_flips: Vec<usize>,
    seed: Option<u64>,
}

impl Circuit {
    /// Assembles and validates a circuit.
    pub fn from_layers(
        n: usize,
        d: usize,
        layers: Vec<Vec<GatePlacement>>,
        target: BitString,
        final_flips: Vec<usize>,
        seed: Option<u64>,
    ) -> Result<Self> {
        check_dims(n, d)?;
        if layers.len() != d {
            return Err(Error::InvalidDimension(format!(
                "expected {d} layers, found {}",
                layers.len()
            )));
        }
        if target.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: target.len(),
            });
        }
        let r = random_depth(d);
        for (li, layer) in layers.iter().enumerate() {
            let allowed = alignment_pairs(n, layer_alignment(n, d, li));
            let mut seen = BTreeSet::new();
            for g in layer {
                if g.layer != li {
                    return Err(Error::InvalidDimension(format!(
                        "gate in layer {li} labelled layer {}",
                        g.layer
                    )));
                }
                if g.qubit_low + 1 >= n || !allowed.contains(&g.qubit_low) {
                    return Err(Error::InvalidDimension(format!(
                        "gate at qubit {} not allowed in layer {li}",
                        g.qubit_low
                    )));
                }
                if !seen.insert(g.qubit_low) {
                    return Err(Error::InvalidDimension(format!(
                        "duplicate gate at qubit {} in layer {li}",
                        g.qubit_low
                    )));
                }
                let expected_role = if li < r {
                    GateRole::Random
                } else {
                    GateRole::Peaking
                };
                if g.role != expected_role {
                    return Err(Error::InvalidDimension(format!(
                        "gate in layer {li} has role {:?}",
                        g.role
                    )));
                }
            }
        }
        let mut flips = final_flips;
        flips.sort_unstable();
        flips.dedup();
        if flips.iter().any(|&q| q >= n) {
            return Err(Error::InvalidDimension("final flip outside register".into()));
        }
        let mut layers = layers;
        for layer in &mut layers {
            layer.sort_by_key(|g| g.qubit_low);
        }
        Ok(Self {
            n,
            d,
            random_depth: r,
            layers,
            target,
            final_flips: flips,
            seed,
        })
    }

    /// A circuit with every layer empty.
    pub fn empty(n: usize, d: usize) -> Result<Self> {
        check_dims(n, d)?;
        Self::from_layers(n, d, vec![Vec::new(); d], BitString::zeros(n), Vec::new(), None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn random_depth(&self) -> usize {
        self.random_depth
    }

    pub fn peaking_depth(&self) -> usize {
        self.d - self.random_depth
    }

    pub fn layers(&self) -> &[Vec<GatePlacement>] {
        &self.layers
    }

    pub fn target(&self) -> BitString {
        self.target
    }

    pub fn final_flips(&self) -> &[usize] {
        &self.final_flips
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_target(mut self, target: BitString) -> Result<Self> {
        if target.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: target.len(),
            });
        }
        self.target = target;
        Ok(self)
    }

    pub fn placements(&self) -> impl Iterator<Item = &GatePlacement> {
        self.layers.iter().flatten()
    }

    pub fn peaking_placements(&self) -> impl Iterator<Item = &GatePlacement> {
        self.layers[self.random_depth..].iter().flatten()
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Standalone single-qubit gates (the trailing X flips).
    pub fn single_qubit_gate_count(&self) -> usize {
        self.final_flips.len()
    }

    /// Placements whose canonical core needs three CNOTs.
    pub fn generic_gate_count(&self) -> usize {
        self.placements()
            .filter(|g| {
                let canon = crate::kak::canonicalize(&g.params);
                cnot_count(&canon.entangling) == 3
            })
            .count()
    }

    pub fn peaking_param_count(&self) -> usize {
        self.peaking_placements().count() * STRUCTURAL_PARAMS
    }

    /// Structural angles of every peaking gate, in layer then qubit order.
    pub fn peaking_parameters(&self) -> Vec<f64> {
        self.peaking_placements()
            .flat_map(|g| g.params.structural())
            .collect()
    }

    /// Copy with the peaking-half angles replaced; the random half is untouched.
    pub fn with_peaking_parameters(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.peaking_param_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} peaking parameters, got {}",
                self.peaking_param_count(),
                values.len()
            )));
        }
        let mut out = self.clone();
        let mut chunks = values.chunks_exact(STRUCTURAL_PARAMS);
        for layer in &mut out.layers[self.random_depth..] {
            for g in layer {
                g.params.set_structural(chunks.next().expect("length checked"));
            }
        }
        Ok(out)
    }

    /// Copy with per-gate parameters rewritten by `f`.
    pub fn map_params(&self, mut f: impl FnMut(&GatePlacement) -> GateParams) -> Self {
        let mut out = self.clone();
        for layer in &mut out.layers {
            for g in layer {
                g.params = f(g);
            }
        }
        out
    }
}

fn haar_gate(rng: &mut ChaCha8Rng) -> GateParams {
    kak_decompose(&haar_random_unitary(rng)).expect("Haar samples are unitary to machine precision")
}

/// A fully Haar-random `(n_max, d_max)` circuit with target `0ⁿ`.
///
/// Gates are drawn layer by layer, lowest qubit first, from a ChaCha8 stream
/// seeded with `seed`.
pub fn build_reference_circuit(n_max: usize, d_max: usize, seed: u64) -> Result<Circuit> {
    let layout = brickwall_layout(n_max, d_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random_depth(d_max);
    let layers = layout
        .iter()
        .enumerate()
        .map(|(li, pairs)| {
            pairs
                .iter()
                .map(|&q| GatePlacement {
                    layer: li,
                    qubit_low: q,
                    role: if li < r {
                        GateRole::Random
                    } else {
                        GateRole::Peaking
                    },
                    params: haar_gate(&mut rng),
                })
                .collect()
        })
        .collect();
    Circuit::from_layers(n_max, d_max, layers, BitString::zeros(n_max), Vec::new(), Some(seed))
}

/// Carves an `(n, d)` circuit out of a reference circuit.
///
/// Random layer `i` comes from reference random layer `i` and peaking layer
/// `j` from reference peaking layer `j`, restricted to qubits `0..n`. The
/// result is laid out per [`brickwall_layout`]`(n, d)`; where that places a
/// gate at a position the reference layer does not occupy (mirror parity
/// differs, or the two-qubit chain), the parameters of the reference gate at
/// `q − 1`, else `q + 1`, are used.
pub fn derive_subcircuit(reference: &Circuit, n: usize, d: usize) -> Result<Circuit> {
    check_dims(n, d)?;
    if n > reference.n || d > reference.d {
        return Err(Error::InvalidDimension(format!(
            "({n}, {d}) exceeds reference ({}, {})",
            reference.n, reference.d
        )));
    }
    let layout = brickwall_layout(n, d)?;
    let r = random_depth(d);
    let mut layers = Vec::with_capacity(d);
    for (li, pairs) in layout.iter().enumerate() {
        let (role, source) = if li < r {
            (GateRole::Random, li)
        } else {
            (GateRole::Peaking, reference.random_depth + (li - r))
        };
        let src = &reference.layers[source];
        let find = |q: usize| src.iter().find(|g| g.qubit_low == q).map(|g| g.params);
        let mut layer = Vec::with_capacity(pairs.len());
        for &q in pairs {
            let params = find(q)
                .or_else(|| q.checked_sub(1).and_then(find))
                .or_else(|| find(q + 1))
                .ok_or_else(|| {
                    Error::InvalidDimension(format!(
                        "reference layer {source} has no gate near qubit {q}"
                    ))
                })?;
            layer.push(GatePlacement {
                layer: li,
                qubit_low: q,
                role,
                params,
            });
        }
        layers.push(layer);
    }
    Circuit::from_layers(n, d, layers, BitString::zeros(n), Vec::new(), reference.seed)
}

/// Replaces the peaking half by the layer-reversed, gate-wise inverse of the
/// random half, so the circuit maps `|0ⁿ⟩` to itself.
pub fn build_exact_inverse_peaking(circuit: &Circuit) -> Result<Circuit> {
    if !circuit.d.is_multiple_of(2) {
        return Err(Error::Unsupported(format!(
            "mirror inverse needs even depth, got d={}",
            circuit.d
        )));
    }
    let r = circuit.random_depth;
    let mut layers: Vec<Vec<GatePlacement>> = circuit.layers[..r].to_vec();
    for j in 0..r {
        let src = &circuit.layers[r - 1 - j];
        layers.push(
            src.iter()
                .map(|g| GatePlacement {
                    layer: r + j,
                    qubit_low: g.qubit_low,
                    role: GateRole::Peaking,
                    params: g.params.inverse(),
                })
                .collect(),
        );
    }
    Circuit::from_layers(
        circuit.n,
        circuit.d,
        layers,
        BitString::zeros(circuit.n),
        Vec::new(),
        circuit.seed,
    )
}

/// Moves the peak by XOR with `s`.
///
/// Each flipped qubit gets an X fused into the final-layer gate that touches
/// it (the gate is re-decomposed); qubits the final layer misses get a
/// standalone X after the last layer, toggling any already present. The
/// stored target becomes `target ⊕ s`.
pub fn retarget(circuit: &Circuit, s: &BitString) -> Result<Circuit> {
    if s.len() != circuit.n {
        return Err(Error::LengthMismatch {
            expected: circuit.n,
            found: s.len(),
        });
    }
    let mut out = circuit.clone();
    let last = circuit.d - 1;
    let mut flips: BTreeSet<usize> = out.final_flips.iter().copied().collect();
    for q in (0..circuit.n).filter(|&q| s.bit(q)) {
        let gate = out.layers[last]
            .iter_mut()
            .find(|g| g.qubit_low == q || g.qubit_low + 1 == q);
        match gate {
            Some(g) => {
                let x_on = if g.qubit_low == q {
                    kron(&Mat2::identity(), &pauli_x())
                } else {
                    kron(&pauli_x(), &Mat2::identity())
                };
                g.params = kak_decompose(&(x_on * g.params.matrix()))?;
            }
            None => {
                if !flips.remove(&q) {
                    flips.insert(q);
                }
            }
        }
    }
    out.final_flips = flips.into_iter().collect();
    out.target = circuit.target.xor(s)?;
    Ok(out)
}

/// On-disk form of a circuit, optionally carrying its peak profile and an
/// optimization summary.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CircuitDocument {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub random_depth: usize,
    pub target: BitString,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub final_flips: Vec<usize>,
    pub layers: Vec<Vec<GatePlacement>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<crate::profile::PeakProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimization: Option<crate::optimizer::OptimizationSummary>,
}

impl CircuitDocument {
    pub fn new(circuit: &Circuit) -> Self {
        Self {
            schema_version: CIRCUIT_SCHEMA_VERSION,
            n: circuit.n,
            d: circuit.d,
            random_depth: circuit.random_depth,
            target: circuit.target,
            seed: circuit.seed,
            final_flips: circuit.final_flips.clone(),
            layers: circuit.layers.clone(),
            profile: None,
            optimization: None,
        }
    }

    pub fn circuit(&self) -> Result<Circuit> {
        if self.schema_version != CIRCUIT_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "circuit schema version {} (expected {CIRCUIT_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let c = Circuit::from_layers(
            self.n,
            self.d,
            self.layers.clone(),
            self.target,
            self.final_flips.clone(),
            self.seed,
        )?;
        if c.random_depth != self.random_depth {
            return Err(Error::InvalidDimension(format!(
                "random_depth {} inconsistent with d={}",
                self.random_depth, self.d
            )));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Self = serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if doc.schema_version != CIRCUIT_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                path: path.to_path_buf(),
                found: doc.schema_version,
                expected: CIRCUIT_SCHEMA_VERSION,
            });
        }
        Ok(doc)
    }
}
