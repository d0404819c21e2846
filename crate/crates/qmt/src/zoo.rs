//! Model builders: feature maps (ZFM, ZZFM, AE), ansatzes (RA, SU2, QCNN),
//! model assembly, a small SPSA trainer, and weights persistence.
//!
//! Layer anatomy matters here because the mutation operators navigate models
//! through the `SectionTag`s the builders attach: every ansatz instruction
//! carries its (layer, block, role) coordinates, and [`LayerStructure`]
//! reconstructs the grouping from a tagged circuit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{
    Bindings, BlockRole, Circuit, CircuitError, GateKind, Instruction, ParamExpr, SectionTag,
    Symbol,
};
use crate::data::Dataset;
use crate::seed;
use crate::sim::{self, SimError};

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("feature map is {feature_map} qubit(s) wide but ansatz expects {ansatz}")]
    WidthMismatch { feature_map: usize, ansatz: usize },
    #[error("expected {expected} feature(s), got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error("expected {expected} weight(s), got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("{n_features} feature(s) exceed the {capacity}-amplitude capacity of {n_qubits} qubit(s)")]
    TooManyFeatures { n_features: usize, capacity: usize, n_qubits: usize },
    #[error("amplitude encoding is undefined for an all-zero feature vector")]
    ZeroVector,
    #[error("invalid width: {0}")]
    InvalidWidth(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("iterations must be >= 1")]
    ZeroIterations,
    #[error("weights file fingerprint {got} does not match model fingerprint {expected}")]
    FingerprintMismatch { expected: String, got: String },
    #[error("weights file is missing symbol `{0}`")]
    MissingWeight(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMapKind {
    Zfm,
    Zzfm,
    Ae,
}

impl FeatureMapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMapKind::Zfm => "zfm",
            FeatureMapKind::Zzfm => "zzfm",
            FeatureMapKind::Ae => "ae",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Ra,
    Su2,
    Qcnn,
}

impl AnsatzKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnsatzKind::Ra => "ra",
            AnsatzKind::Su2 => "su2",
            AnsatzKind::Qcnn => "qcnn",
        }
    }
}

/// Data-encoding circuit fragment. For ZFM/ZZFM the feature symbols are the
/// raw features `x[i]`; for AE they are the synthetic rotation angles
/// `ae[k]` of the state-preparation cascade, computed per sample by
/// [`QnnModel::feature_bindings`].
#[derive(Debug, Clone)]
pub struct FeatureMapFragment {
    pub kind: FeatureMapKind,
    pub n_features: usize,
    pub n_qubits: usize,
    pub instructions: Vec<Instruction>,
    pub feature_symbols: Vec<Symbol>,
}

/// Trainable circuit fragment plus the qubits it wants measured.
#[derive(Debug, Clone)]
pub struct AnsatzFragment {
    pub kind: AnsatzKind,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub instructions: Vec<Instruction>,
    pub weight_symbols: Vec<Symbol>,
    pub measured: Vec<usize>,
}

/// One tagged block of an ansatz layer, as instruction indices into the
/// model circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRef {
    pub role: BlockRole,
    pub instructions: Vec<usize>,
}

/// Grouping of a circuit's `AnsatzLayer`-tagged instructions into layers of
/// blocks, reconstructed from section tags. Block references are disjoint
/// and exhaustive over the tagged instructions.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStructure {
    pub layers: Vec<Vec<BlockRef>>,
}

impl LayerStructure {
    pub fn from_circuit(circuit: &Circuit) -> Self {
        let mut grouped: BTreeMap<usize, BTreeMap<usize, (BlockRole, Vec<usize>)>> = BTreeMap::new();
        for (idx, inst) in circuit.instructions().iter().enumerate() {
            if let SectionTag::AnsatzLayer { layer, block, role } = inst.tag {
                grouped
                    .entry(layer)
                    .or_default()
                    .entry(block)
                    .and_modify(|(_, v)| v.push(idx))
                    .or_insert((role, vec![idx]));
            }
        }
        let layers = grouped
            .into_values()
            .map(|blocks| {
                blocks
                    .into_values()
                    .map(|(role, instructions)| BlockRef { role, instructions })
                    .collect()
            })
            .collect();
        LayerStructure { layers }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }
}

/// A complete QNN: tagged circuit, symbol inventory, and decoder config.
#[derive(Debug, Clone)]
pub struct QnnModel {
    pub circuit: Circuit,
    pub feature_map: FeatureMapKind,
    pub ansatz: AnsatzKind,
    pub n_features: usize,
    pub feature_symbols: Vec<Symbol>,
    pub weight_symbols: Vec<Symbol>,
    pub n_classes: usize,
}

fn xsym(i: usize) -> Symbol {
    Symbol::new(format!("x[{i}]"))
}

fn aesym(i: usize) -> Symbol {
    Symbol::new(format!("ae[{i}]"))
}

fn wsym(i: usize) -> Symbol {
    Symbol::new(format!("theta[{i}]"))
}

/// Build a feature-map fragment.
///
/// ZFM repeats `reps` times: H on every qubit, then `p(2 x_i)` on qubit i.
/// ZZFM adds, per rep and entangled pair (i, j): `cx(i,j)`,
/// `p(2 (pi - x_i)(pi - x_j))` on j, `cx(i,j)`; pairs are linear neighbors
/// unless `full_entanglement` selects all i < j. AE emits the multiplexed-RY
/// state-preparation cascade (`reps` is irrelevant there and ignored).
pub fn build_feature_map(
    kind: FeatureMapKind,
    n_features: usize,
    n_qubits: usize,
    reps: usize,
    full_entanglement: bool,
) -> Result<FeatureMapFragment, ZooError> {
    if n_qubits == 0 {
        return Err(ZooError::InvalidWidth("feature map needs at least 1 qubit".into()));
    }
    match kind {
        FeatureMapKind::Zfm | FeatureMapKind::Zzfm => {
            if n_features != n_qubits {
                return Err(ZooError::FeatureCount { expected: n_qubits, got: n_features });
            }
            let mut instructions = Vec::new();
            let feature_symbols: Vec<Symbol> = (0..n_features).map(xsym).collect();
            for _ in 0..reps.max(1) {
                for q in 0..n_qubits {
                    instructions.push(Instruction::gate1(GateKind::H, q).with_tag(SectionTag::FeatureMap));
                }
                for (q, sym) in feature_symbols.iter().enumerate() {
                    let angle = ParamExpr::product(vec![
                        ParamExpr::constant(2.0),
                        ParamExpr::Symbol(sym.clone()),
                    ]);
                    instructions
                        .push(Instruction::gate1p(GateKind::P, q, angle).with_tag(SectionTag::FeatureMap));
                }
                if kind == FeatureMapKind::Zzfm {
                    let pairs: Vec<(usize, usize)> = if full_entanglement {
                        (0..n_qubits)
                            .flat_map(|i| (i + 1..n_qubits).map(move |j| (i, j)))
                            .collect()
                    } else {
                        (0..n_qubits.saturating_sub(1)).map(|i| (i, i + 1)).collect()
                    };
                    for (i, j) in pairs {
                        let angle = ParamExpr::product(vec![
                            ParamExpr::constant(2.0),
                            ParamExpr::pi_minus(feature_symbols[i].clone()),
                            ParamExpr::pi_minus(feature_symbols[j].clone()),
                        ]);
                        instructions.push(Instruction::gate2(GateKind::Cx, i, j).with_tag(SectionTag::FeatureMap));
                        instructions.push(Instruction::gate1p(GateKind::P, j, angle).with_tag(SectionTag::FeatureMap));
                        instructions.push(Instruction::gate2(GateKind::Cx, i, j).with_tag(SectionTag::FeatureMap));
                    }
                }
            }
            Ok(FeatureMapFragment { kind, n_features, n_qubits, instructions, feature_symbols })
        }
        FeatureMapKind::Ae => {
            let capacity = 1usize << n_qubits;
            if n_features > capacity {
                return Err(ZooError::TooManyFeatures { n_features, capacity, n_qubits });
            }
            let mut instructions = Vec::new();
            let mut feature_symbols = Vec::with_capacity(capacity - 1);
            let mut next = 0usize;
            for d in 0..n_qubits {
                let target = n_qubits - 1 - d;
                let k = 1usize << d;
                for i in 0..k {
                    let sym = aesym(next);
                    next += 1;
                    instructions.push(
                        Instruction::gate1p(GateKind::Ry, target, ParamExpr::Symbol(sym.clone()))
                            .with_tag(SectionTag::FeatureMap),
                    );
                    feature_symbols.push(sym);
                    if d > 0 {
                        let bit = if i + 1 == k {
                            d - 1
                        } else {
                            (i + 1).trailing_zeros() as usize
                        };
                        let control = n_qubits - d + bit;
                        instructions.push(
                            Instruction::gate2(GateKind::Cx, control, target)
                                .with_tag(SectionTag::FeatureMap),
                        );
                    }
                }
            }
            Ok(FeatureMapFragment { kind, n_features, n_qubits, instructions, feature_symbols })
        }
    }
}

/// Rotation angles (in cascade emission order) that load `features`,
/// L2-normalized and zero-padded, as the amplitudes of an `n_qubits`-qubit
/// state. This is the classical half of amplitude encoding; the circuit half
/// is [`build_feature_map`] with [`FeatureMapKind::Ae`].
pub fn amplitude_angles(features: &[f64], n_qubits: usize) -> Result<Vec<f64>, ZooError> {
    let capacity = 1usize << n_qubits;
    if features.len() > capacity {
        return Err(ZooError::TooManyFeatures {
            n_features: features.len(),
            capacity,
            n_qubits,
        });
    }
    let norm = features.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(ZooError::ZeroVector);
    }
    let mut level: Vec<f64> = (0..capacity)
        .map(|i| features.get(i).copied().unwrap_or(0.0) / norm)
        .collect();
    // Binary split tree: alphas[d][t] rotates the qubit at depth d for the
    // subtree t (t = top-d bits of the basis index). The leaf level sees the
    // signed amplitudes, so signs are reproduced exactly.
    let mut alphas: Vec<Vec<f64>> = vec![Vec::new(); n_qubits];
    for d in (0..n_qubits).rev() {
        let half = 1usize << d;
        let mut next = Vec::with_capacity(half);
        let mut alpha = Vec::with_capacity(half);
        for t in 0..half {
            let c0 = level[2 * t];
            let c1 = level[2 * t + 1];
            alpha.push(2.0 * c1.atan2(c0));
            next.push((c0 * c0 + c1 * c1).sqrt());
        }
        alphas[d] = alpha;
        level = next;
    }
    let mut out = Vec::with_capacity(capacity - 1);
    for alpha in &alphas {
        out.extend(multiplexed_ry_angles(alpha));
    }
    Ok(out)
}

/// Gray-code decomposition of a multiplexed RY: plain rotation angles in the
/// order the cascade interleaves them with its CX gates.
fn multiplexed_ry_angles(alpha: &[f64]) -> Vec<f64> {
    let k = alpha.len();
    (0..k)
        .map(|i| {
            let gray = i ^ (i >> 1);
            alpha
                .iter()
                .enumerate()
                .map(|(j, &a)| if (j & gray).count_ones() % 2 == 1 { -a } else { a })
                .sum::<f64>()
                / k as f64
        })
        .collect()
}

/// Build an ansatz fragment.
///
/// RA: `reps` layers of [RY rotation block, CX-chain entangle block] plus a
/// final rotation-only layer; SU2 is the same shape with RY and RZ rotation
/// blocks. QCNN alternates convolution and pooling layers that halve the
/// active-qubit set until one qubit remains (`reps` is irrelevant there and
/// ignored); only that qubit is measured.
pub fn build_ansatz(kind: AnsatzKind, n_qubits: usize, reps: usize) -> Result<AnsatzFragment, ZooError> {
    if n_qubits == 0 {
        return Err(ZooError::InvalidWidth("ansatz needs at least 1 qubit".into()));
    }
    match kind {
        AnsatzKind::Ra | AnsatzKind::Su2 => {
            if reps == 0 {
                return Err(ZooError::InvalidWidth("reps must be >= 1".into()));
            }
            let mut instructions = Vec::new();
            let mut weight_symbols = Vec::new();
            let mut next = 0usize;
            let rotation_block = |layer: usize,
                                      block: usize,
                                      gate: GateKind,
                                      instructions: &mut Vec<Instruction>,
                                      weight_symbols: &mut Vec<Symbol>,
                                      next: &mut usize| {
                for q in 0..n_qubits {
                    let sym = wsym(*next);
                    *next += 1;
                    instructions.push(
                        Instruction::gate1p(gate, q, ParamExpr::Symbol(sym.clone())).with_tag(
                            SectionTag::AnsatzLayer { layer, block, role: BlockRole::Rotation },
                        ),
                    );
                    weight_symbols.push(sym);
                }
            };
            for layer in 0..=reps {
                let mut block = 0;
                rotation_block(layer, block, GateKind::Ry, &mut instructions, &mut weight_symbols, &mut next);
                block += 1;
                if kind == AnsatzKind::Su2 {
                    rotation_block(layer, block, GateKind::Rz, &mut instructions, &mut weight_symbols, &mut next);
                    block += 1;
                }
                if layer < reps {
                    for q in 0..n_qubits.saturating_sub(1) {
                        instructions.push(Instruction::gate2(GateKind::Cx, q, q + 1).with_tag(
                            SectionTag::AnsatzLayer { layer, block, role: BlockRole::Entangle },
                        ));
                    }
                }
            }
            Ok(AnsatzFragment {
                kind,
                n_qubits,
                n_layers: reps + 1,
                instructions,
                weight_symbols,
                measured: (0..n_qubits).collect(),
            })
        }
        AnsatzKind::Qcnn => {
            if n_qubits < 2 || !n_qubits.is_power_of_two() {
                return Err(ZooError::InvalidWidth(format!(
                    "qcnn width must be a power of two >= 2, got {n_qubits}"
                )));
            }
            let mut instructions = Vec::new();
            let mut weight_symbols = Vec::new();
            let mut next = 0usize;
            let take = |instructions: &mut Vec<Instruction>,
                            weight_symbols: &mut Vec<Symbol>,
                            next: &mut usize,
                            gate: GateKind,
                            qubits: Vec<usize>,
                            tag: SectionTag| {
                let sym = wsym(*next);
                *next += 1;
                instructions
                    .push(Instruction::new(gate, qubits, Some(ParamExpr::Symbol(sym.clone()))).with_tag(tag));
                weight_symbols.push(sym);
            };
            let mut active: Vec<usize> = (0..n_qubits).collect();
            let mut layer = 0usize;
            while active.len() > 1 {
                // convolution layer: three blocks per sliding neighbor pair
                for (pair, win) in active.windows(2).enumerate() {
                    let (a, b) = (win[0], win[1]);
                    let base = 3 * pair;
                    let rot = |block| SectionTag::AnsatzLayer { layer, block, role: BlockRole::Rotation };
                    take(&mut instructions, &mut weight_symbols, &mut next, GateKind::Ry, vec![a], rot(base));
                    take(&mut instructions, &mut weight_symbols, &mut next, GateKind::Ry, vec![b], rot(base));
                    instructions.push(Instruction::gate2(GateKind::Cx, a, b).with_tag(
                        SectionTag::AnsatzLayer { layer, block: base + 1, role: BlockRole::Entangle },
                    ));
                    take(&mut instructions, &mut weight_symbols, &mut next, GateKind::Ry, vec![a], rot(base + 2));
                    take(&mut instructions, &mut weight_symbols, &mut next, GateKind::Ry, vec![b], rot(base + 2));
                }
                layer += 1;
                // pooling layer: CRY(src -> tgt), then src leaves the active set
                let mut survivors = Vec::with_capacity(active.len() / 2);
                for (block, pair) in active.chunks(2).enumerate() {
                    let (src, tgt) = (pair[0], pair[1]);
                    take(
                        &mut instructions,
                        &mut weight_symbols,
                        &mut next,
                        GateKind::Cry,
                        vec![src, tgt],
                        SectionTag::AnsatzLayer { layer, block, role: BlockRole::Entangle },
                    );
                    survivors.push(tgt);
                }
                layer += 1;
                active = survivors;
            }
            Ok(AnsatzFragment {
                kind,
                n_qubits,
                n_layers: layer,
                instructions,
                weight_symbols,
                measured: active,
            })
        }
    }
}

/// Concatenate a feature map and an ansatz into a model, attaching the
/// ansatz's measurement choice.
pub fn assemble(
    feature_map: &FeatureMapFragment,
    ansatz: &AnsatzFragment,
    n_classes: usize,
) -> Result<QnnModel, ZooError> {
    if feature_map.n_qubits != ansatz.n_qubits {
        return Err(ZooError::WidthMismatch {
            feature_map: feature_map.n_qubits,
            ansatz: ansatz.n_qubits,
        });
    }
    let mut circuit = Circuit::new(feature_map.n_qubits);
    for inst in feature_map.instructions.iter().chain(&ansatz.instructions) {
        circuit.push(inst.clone())?;
    }
    circuit.set_measured(ansatz.measured.iter().copied())?;
    let model = QnnModel {
        circuit,
        feature_map: feature_map.kind,
        ansatz: ansatz.kind,
        n_features: feature_map.n_features,
        feature_symbols: feature_map.feature_symbols.clone(),
        weight_symbols: ansatz.weight_symbols.clone(),
        n_classes,
    };
    model.validate()?;
    Ok(model)
}

impl QnnModel {
    /// Layer/block grouping reconstructed from section tags.
    pub fn layers(&self) -> LayerStructure {
        LayerStructure::from_circuit(&self.circuit)
    }

    pub fn n_weights(&self) -> usize {
        self.weight_symbols.len()
    }

    /// Structural invariants: feature symbols only in feature-map
    /// instructions, weight symbols in exactly one (layer, block), layer
    /// structure exhaustive over tagged instructions.
    pub fn validate(&self) -> Result<(), ZooError> {
        let features: BTreeSet<&Symbol> = self.feature_symbols.iter().collect();
        let weights: BTreeSet<&Symbol> = self.weight_symbols.iter().collect();
        let mut weight_homes: BTreeMap<&Symbol, BTreeSet<(usize, usize)>> = BTreeMap::new();
        for inst in self.circuit.instructions() {
            let mut syms = BTreeSet::new();
            if let Some(a) = &inst.angle {
                a.free_symbols(&mut syms);
            }
            for sym in &syms {
                let in_features = features.contains(sym);
                let in_weights = weights.contains(sym);
                match inst.tag {
                    SectionTag::FeatureMap => {
                        if !in_features {
                            return Err(ZooError::InvalidWidth(format!(
                                "non-feature symbol `{sym}` inside the feature map"
                            )));
                        }
                    }
                    SectionTag::AnsatzLayer { layer, block, .. } => {
                        if !in_weights {
                            return Err(ZooError::InvalidWidth(format!(
                                "non-weight symbol `{sym}` inside the ansatz"
                            )));
                        }
                        weight_homes
                            .entry(self.weight_symbols.iter().find(|w| *w == sym).unwrap())
                            .or_default()
                            .insert((layer, block));
                    }
                    _ => {
                        return Err(ZooError::InvalidWidth(format!(
                            "symbol `{sym}` outside feature map and ansatz"
                        )))
                    }
                }
            }
        }
        for (sym, homes) in &weight_homes {
            if homes.len() != 1 {
                return Err(ZooError::InvalidWidth(format!(
                    "weight `{sym}` appears in {} blocks",
                    homes.len()
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 fingerprint over the circuit's canonical form and the symbol
    /// inventory; identifies the model in weights files and mutant records.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.circuit.canonical_form());
        for sym in self.feature_symbols.iter().chain(&self.weight_symbols) {
            hasher.update(sym.as_str().as_bytes());
            hasher.update([0u8]);
        }
        hasher.update(self.n_classes.to_le_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Bindings for the feature symbols only. ZFM/ZZFM bind the raw features;
    /// AE computes the state-preparation angles for the sample.
    pub fn feature_bindings(&self, features: &[f64]) -> Result<Bindings, ZooError> {
        if features.len() != self.n_features {
            return Err(ZooError::FeatureCount { expected: self.n_features, got: features.len() });
        }
        let values: Vec<f64> = match self.feature_map {
            FeatureMapKind::Zfm | FeatureMapKind::Zzfm => features.to_vec(),
            FeatureMapKind::Ae => amplitude_angles(features, self.circuit.n_qubits())?,
        };
        debug_assert_eq!(values.len(), self.feature_symbols.len());
        Ok(self
            .feature_symbols
            .iter()
            .cloned()
            .zip(values)
            .collect())
    }

    /// Full bindings for one (sample, weight-vector) pair.
    pub fn bindings(&self, features: &[f64], weights: &[f64]) -> Result<Bindings, ZooError> {
        if weights.len() != self.weight_symbols.len() {
            return Err(ZooError::WeightCount {
                expected: self.weight_symbols.len(),
                got: weights.len(),
            });
        }
        let mut bindings = self.feature_bindings(features)?;
        for (sym, &w) in self.weight_symbols.iter().zip(weights) {
            bindings.insert(sym.clone(), w);
        }
        Ok(bindings)
    }

    /// Predict the label for one sample: bind, run, sample, decode.
    pub fn predict(
        &self,
        features: &[f64],
        weights: &[f64],
        shots: u64,
        seed: u64,
    ) -> Result<usize, ZooError> {
        let bindings = self.bindings(features, weights)?;
        let bound = self.circuit.bind(&bindings)?;
        Ok(sim::predict_bound(&bound, self.n_classes, shots, seed)?)
    }
}

/// Serialized trained weights plus the fingerprint of the model they belong
/// to. Keys are sorted, so serialization is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsFile {
    pub fingerprint: String,
    pub weights: BTreeMap<String, f64>,
}

pub fn save_weights(model: &QnnModel, weights: &[f64], path: impl AsRef<Path>) -> Result<(), ZooError> {
    if weights.len() != model.weight_symbols.len() {
        return Err(ZooError::WeightCount {
            expected: model.weight_symbols.len(),
            got: weights.len(),
        });
    }
    let file = WeightsFile {
        fingerprint: model.fingerprint(),
        weights: model
            .weight_symbols
            .iter()
            .map(|s| s.as_str().to_string())
            .zip(weights.iter().copied())
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_weights(model: &QnnModel, path: impl AsRef<Path>) -> Result<Vec<f64>, ZooError> {
    let file: WeightsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let expected = model.fingerprint();
    if file.fingerprint != expected {
        return Err(ZooError::FingerprintMismatch { expected, got: file.fingerprint });
    }
    model
        .weight_symbols
        .iter()
        .map(|s| {
            file.weights
                .get(s.as_str())
                .copied()
                .ok_or_else(|| ZooError::MissingWeight(s.as_str().to_string()))
        })
        .collect()
}

/// SPSA training configuration. The defaults follow the standard gain
/// schedule (alpha 0.602, gamma 0.101).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub iterations: usize,
    pub shots: u64,
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig { iterations: 200, shots: 100, a: 0.6, c: 0.3, alpha: 0.602, gamma: 0.101 }
    }
}

/// Train by simultaneous-perturbation stochastic approximation on the
/// misclassification rate. Weights start uniform in [-pi, pi] from the seed;
/// the best-loss iterate is returned. Deterministic in (model, data, config,
/// seed).
pub fn train_spsa(
    model: &QnnModel,
    train: &Dataset,
    config: &SpsaConfig,
    seed: u64,
) -> Result<Vec<f64>, ZooError> {
    if train.is_empty() {
        return Err(ZooError::EmptyTrainingSet);
    }
    if config.iterations == 0 {
        return Err(ZooError::ZeroIterations);
    }
    let dim = model.weight_symbols.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, "spsa-init", 0));
    let mut theta: Vec<f64> =
        (0..dim).map(|_| rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI)).collect();

    let mut eval_id = 0u64;
    let loss = |weights: &[f64], eval_id: &mut u64| -> Result<f64, ZooError> {
        *eval_id += 1;
        let mut wrong = 0usize;
        for (i, (sample, &label)) in train.samples.iter().zip(&train.labels).enumerate() {
            let s = seed::derive2(seed, "spsa-loss", &eval_id.to_string(), i as u64);
            if model.predict(sample, weights, config.shots, s)? != label {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / train.len() as f64)
    };

    let mut best = theta.clone();
    let mut best_loss = loss(&theta, &mut eval_id)?;
    let stability = 0.1 * config.iterations as f64;
    for k in 0..config.iterations {
        let ak = config.a / (k as f64 + 1.0 + stability).powf(config.alpha);
        let ck = config.c / (k as f64 + 1.0).powf(config.gamma);
        let delta: Vec<f64> =
            (0..dim).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
        let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
        let l_plus = loss(&plus, &mut eval_id)?;
        let l_minus = loss(&minus, &mut eval_id)?;
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t -= ak * (l_plus - l_minus) / (2.0 * ck * d);
        }
        let l = loss(&theta, &mut eval_id)?;
        if l < best_loss {
            best_loss = l;
            best = theta.clone();
        }
    }
    Ok(best)
}

/// Fraction of `data` the model classifies correctly with the given weights.
pub fn accuracy(
    model: &QnnModel,
    data: &Dataset,
    weights: &[f64],
    shots: u64,
    seed: u64,
) -> Result<f64, ZooError> {
    let mut correct = 0usize;
    for (i, (sample, &label)) in data.samples.iter().zip(&data.labels).enumerate() {
        let s = seed::derive2(seed, "accuracy", "", i as u64);
        if model.predict(sample, weights, shots, s)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
