//! Mutant generation: the seven directed QML operators (APC, DFC, APGC, LS,
//! ILS, ALA, ALD) plus five exhaustive baseline operators (gate add/remove/
//! replace, measurement add/remove), and canonical-form deduplication.
//!
//! Every mutant is fully determined by its [`OperatorKind`] descriptor, so
//! regeneration from (model fingerprint, config, seed) is bit-reproducible.
//! DFC mutants do not touch the circuit at all: they carry an input-space
//! transform and are evaluated by feeding transformed features to the
//! original model.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{BlockRole, Circuit, GateKind, Instruction, ParamExpr, SectionTag};
use crate::data::FeatureKind;
use crate::seed;
use crate::zoo::QnnModel;

#[derive(Debug, Error, PartialEq)]
pub enum MutateError {
    #[error("transform expects {expected:?} features, got {got}")]
    FeatureShape { expected: FeatureKind, got: usize },
    #[error("image transform applied to a tabular dataset")]
    KindMismatch,
}

/// Report family of an operator, as printed in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    Apc,
    Dfc,
    Apgc,
    Ls,
    Ils,
    Ala,
    Ald,
    GateAdd,
    GateRemove,
    GateReplace,
    MeasAdd,
    MeasRemove,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Apc,
        Family::Dfc,
        Family::Apgc,
        Family::Ls,
        Family::Ils,
        Family::Ala,
        Family::Ald,
        Family::GateAdd,
        Family::GateRemove,
        Family::GateReplace,
        Family::MeasAdd,
        Family::MeasRemove,
    ];

    pub const DIRECTED: [Family; 7] = [
        Family::Apc,
        Family::Dfc,
        Family::Apgc,
        Family::Ls,
        Family::Ils,
        Family::Ala,
        Family::Ald,
    ];

    pub const BASELINE: [Family; 5] = [
        Family::GateAdd,
        Family::GateRemove,
        Family::GateReplace,
        Family::MeasAdd,
        Family::MeasRemove,
    ];

    /// Row label used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Apc => "APC",
            Family::Dfc => "DFC",
            Family::Apgc => "APGC",
            Family::Ls => "LS",
            Family::Ils => "ILS",
            Family::Ala => "ALA",
            Family::Ald => "ALD",
            Family::GateAdd => "Add",
            Family::GateRemove => "Delete",
            Family::GateReplace => "Change",
            Family::MeasAdd => "MeasAdd",
            Family::MeasRemove => "MeasRemove",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            Family::Apc => "apc",
            Family::Dfc => "dfc",
            Family::Apgc => "apgc",
            Family::Ls => "ls",
            Family::Ils => "ils",
            Family::Ala => "ala",
            Family::Ald => "ald",
            Family::GateAdd => "add",
            Family::GateRemove => "delete",
            Family::GateReplace => "change",
            Family::MeasAdd => "measadd",
            Family::MeasRemove => "measremove",
        }
    }

    pub fn is_directed(self) -> bool {
        Family::DIRECTED.contains(&self)
    }
}

/// APC parameter rewrite applied to every rotation weight of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamChange {
    Zero,
    SignFlip,
    Add(f64),
    Scale(f64),
}

/// DFC per-feature operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureOp {
    Add(f64),
    Mul(f64),
    SignFlip,
    OneMinus,
}

impl FeatureOp {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            FeatureOp::Add(v) => x + v,
            FeatureOp::Mul(v) => x * v,
            FeatureOp::SignFlip => -x,
            FeatureOp::OneMinus => 1.0 - x,
        }
    }
}

/// DFC whole-image operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageOp {
    Crop,
    Rot90,
    Rot180,
    Rot270,
    FlipH,
    FlipV,
}

/// Input-space mutation: either a per-feature pair rewrite or a whole-image
/// transform. Applied to the sample before the original model runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureTransform {
    Pair { i: usize, j: usize, op_i: FeatureOp, op_j: FeatureOp },
    Image(ImageOp),
}

impl FeatureTransform {
    pub fn apply(&self, features: &[f64], kind: FeatureKind) -> Result<Vec<f64>, MutateError> {
        match self {
            FeatureTransform::Pair { i, j, op_i, op_j } => {
                if *i >= features.len() || *j >= features.len() {
                    return Err(MutateError::FeatureShape { expected: kind, got: features.len() });
                }
                let mut out = features.to_vec();
                out[*i] = op_i.apply(features[*i]);
                out[*j] = op_j.apply(features[*j]);
                Ok(out)
            }
            FeatureTransform::Image(op) => {
                let FeatureKind::Image { height, width } = kind else {
                    return Err(MutateError::KindMismatch);
                };
                if features.len() != height * width {
                    return Err(MutateError::FeatureShape { expected: kind, got: features.len() });
                }
                Ok(apply_image_op(*op, features, height, width))
            }
        }
    }
}

fn apply_image_op(op: ImageOp, img: &[f64], h: usize, w: usize) -> Vec<f64> {
    let at = |r: usize, c: usize| img[r * w + c];
    match op {
        ImageOp::Crop => {
            // keep the central 3/4-side window in place, zero the border
            let ch = ((h * 3) / 4).max(1);
            let cw = ((w * 3) / 4).max(1);
            let top = (h - ch) / 2;
            let left = (w - cw) / 2;
            let mut out = vec![0.0; h * w];
            for r in top..top + ch {
                for c in left..left + cw {
                    out[r * w + c] = at(r, c);
                }
            }
            out
        }
        ImageOp::Rot90 => {
            // clockwise; output is w x h row-major
            let mut out = Vec::with_capacity(h * w);
            for i in 0..w {
                for j in 0..h {
                    out.push(at(h - 1 - j, i));
                }
            }
            out
        }
        ImageOp::Rot180 => {
            let mut out = Vec::with_capacity(h * w);
            for i in 0..h {
                for j in 0..w {
                    out.push(at(h - 1 - i, w - 1 - j));
                }
            }
            out
        }
        ImageOp::Rot270 => {
            // counter-clockwise; output is w x h row-major
            let mut out = Vec::with_capacity(h * w);
            for i in 0..w {
                for j in 0..h {
                    out.push(at(j, w - 1 - i));
                }
            }
            out
        }
        ImageOp::FlipH => {
            let mut out = Vec::with_capacity(h * w);
            for i in 0..h {
                for j in 0..w {
                    out.push(at(i, w - 1 - j));
                }
            }
            out
        }
        ImageOp::FlipV => {
            let mut out = Vec::with_capacity(h * w);
            for i in 0..h {
                for j in 0..w {
                    out.push(at(h - 1 - i, j));
                }
            }
            out
        }
    }
}

/// Weight initialization of an ALA-inserted layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerInit {
    Random { seed: u64 },
    CopyLayer,
}

/// ALD deletion target within a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeleteTarget {
    Full,
    RotationsOnly,
    EntanglersOnly,
}

/// Complete, deterministic description of one mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OperatorKind {
    Apc { layer: usize, change: ParamChange },
    Dfc { transform: FeatureTransform },
    Apgc { gate: usize, new_kind: GateKind },
    Ls { first: usize, second: usize },
    Ils { layer: usize, order: Vec<usize> },
    Ala { position: usize, init: LayerInit },
    Ald { layer: usize, target: DeleteTarget },
    GateAdd { kind: GateKind, qubits: Vec<usize>, position: usize },
    GateRemove { gate: usize },
    GateReplace { gate: usize, new_kind: GateKind },
    MeasAdd { qubit: usize },
    MeasRemove { qubit: usize },
}

impl OperatorKind {
    pub fn family(&self) -> Family {
        match self {
            OperatorKind::Apc { .. } => Family::Apc,
            OperatorKind::Dfc { .. } => Family::Dfc,
            OperatorKind::Apgc { .. } => Family::Apgc,
            OperatorKind::Ls { .. } => Family::Ls,
            OperatorKind::Ils { .. } => Family::Ils,
            OperatorKind::Ala { .. } => Family::Ala,
            OperatorKind::Ald { .. } => Family::Ald,
            OperatorKind::GateAdd { .. } => Family::GateAdd,
            OperatorKind::GateRemove { .. } => Family::GateRemove,
            OperatorKind::GateReplace { .. } => Family::GateReplace,
            OperatorKind::MeasAdd { .. } => Family::MeasAdd,
            OperatorKind::MeasRemove { .. } => Family::MeasRemove,
        }
    }
}

/// Realized mutant artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MutantPayload {
    Circuit(Circuit),
    InputTransform(FeatureTransform),
}

/// One mutant: descriptor, realized payload, and provenance. A `None`
/// payload means realization itself failed; such mutants are pre-marked
/// incompetent with the failure reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: String,
    pub family: Family,
    pub operator: OperatorKind,
    pub payload: Option<MutantPayload>,
    pub incompetent: Option<String>,
    pub provenance: String,
}

impl Mutant {
    pub fn circuit(&self) -> Option<&Circuit> {
        match &self.payload {
            Some(MutantPayload::Circuit(c)) => Some(c),
            _ => None,
        }
    }
}

/// Generation output: mutants plus human-readable notes about skipped
/// layers or empty operators.
#[derive(Debug, Default)]
pub struct Generated {
    pub mutants: Vec<Mutant>,
    pub notes: Vec<String>,
}

impl Generated {
    pub fn merge(&mut self, other: Generated) {
        self.mutants.extend(other.mutants);
        self.notes.extend(other.notes);
    }
}

/// Operator configuration. Defaults match the directed radian sets the
/// engine is built around.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MutateConfig {
    pub apc_add: Vec<f64>,
    pub apc_scale: Vec<f64>,
    pub dfc_add: Vec<f64>,
    pub dfc_mul: Vec<f64>,
    pub dfc_all_pairs: bool,
    pub ils_full_permutations: bool,
    pub gate_set: Vec<GateKind>,
    pub baseline_angle: f64,
}

impl Default for MutateConfig {
    fn default() -> Self {
        MutateConfig {
            apc_add: vec![-PI, -PI / 2.0, PI / 2.0, PI],
            apc_scale: vec![0.5, 2.0],
            dfc_add: vec![PI / 2.0, PI],
            dfc_mul: vec![0.5, 2.0],
            dfc_all_pairs: false,
            ils_full_permutations: false,
            gate_set: GateKind::ALL.to_vec(),
            baseline_angle: PI / 2.0,
        }
    }
}

struct Emitter {
    family: Family,
    next: usize,
    provenance: String,
    out: Generated,
}

impl Emitter {
    fn new(family: Family, provenance: String) -> Self {
        Emitter { family, next: 0, provenance, out: Generated::default() }
    }

    fn circuit(&mut self, operator: OperatorKind, circuit: Result<Circuit, crate::circuit::CircuitError>) {
        let id = format!("{}-{:04}", self.family.id_prefix(), self.next);
        self.next += 1;
        let (payload, incompetent) = match circuit {
            Ok(c) => {
                let incompetent = c
                    .measured_qubits()
                    .is_empty()
                    .then(|| "no measured qubits".to_string());
                (Some(MutantPayload::Circuit(c)), incompetent)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        self.out.mutants.push(Mutant {
            id,
            family: self.family,
            operator,
            payload,
            incompetent,
            provenance: self.provenance.clone(),
        });
    }

    fn transform(&mut self, transform: FeatureTransform) {
        let id = format!("{}-{:04}", self.family.id_prefix(), self.next);
        self.next += 1;
        self.out.mutants.push(Mutant {
            id,
            family: self.family,
            operator: OperatorKind::Dfc { transform: transform.clone() },
            payload: Some(MutantPayload::InputTransform(transform)),
            incompetent: None,
            provenance: self.provenance.clone(),
        });
    }

    fn note(&mut self, note: impl Into<String>) {
        self.out.notes.push(note.into());
    }

    fn finish(self) -> Generated {
        self.out
    }
}

fn layer_indices(circuit: &Circuit, layer: usize) -> Vec<usize> {
    circuit
        .instructions()
        .iter()
        .enumerate()
        .filter(|(_, inst)| inst.tag.layer_index() == Some(layer))
        .map(|(idx, _)| idx)
        .collect()
}

fn clone_at(circuit: &Circuit, indices: &[usize]) -> Vec<Instruction> {
    indices.iter().map(|&i| circuit.instructions()[i].clone()).collect()
}

/// APC: per layer, rewrite every rotation-block weight expression with one
/// parameter change from the configured sets.
pub fn gen_apc(model: &QnnModel, config: &MutateConfig) -> Generated {
    let mut em = Emitter::new(Family::Apc, model.fingerprint());
    let structure = model.layers();
    let mut changes: Vec<ParamChange> = vec![ParamChange::Zero, ParamChange::SignFlip];
    changes.extend(config.apc_add.iter().map(|&v| ParamChange::Add(v)));
    changes.extend(config.apc_scale.iter().map(|&v| ParamChange::Scale(v)));
    for (layer, blocks) in structure.layers.iter().enumerate() {
        let targets: Vec<usize> = blocks
            .iter()
            .filter(|b| b.role == BlockRole::Rotation)
            .flat_map(|b| b.instructions.iter().copied())
            .filter(|&i| model.circuit.instructions()[i].angle.is_some())
            .collect();
        if targets.is_empty() {
            em.note(format!("apc: layer {layer} has no rotation parameters, skipped"));
            continue;
        }
        for &change in &changes {
            let mut instructions: Vec<Instruction> = model.circuit.instructions().to_vec();
            for &idx in &targets {
                let angle = instructions[idx].angle.take().expect("target has an angle");
                instructions[idx].angle = Some(match change {
                    ParamChange::Zero => ParamExpr::Const(0.0),
                    ParamChange::SignFlip => angle.neg(),
                    ParamChange::Add(v) => ParamExpr::sum(vec![angle, ParamExpr::Const(v)]),
                    ParamChange::Scale(v) => ParamExpr::product(vec![ParamExpr::Const(v), angle]),
                });
            }
            em.circuit(
                OperatorKind::Apc { layer, change },
                model.circuit.with_instructions(instructions),
            );
        }
    }
    em.finish()
}

/// DFC: input-space mutants. Tabular data gets every ordered combination of
/// per-feature operations on each (adjacent, or all if configured) feature
/// pair; image data gets the six whole-image transforms.
pub fn gen_dfc(model: &QnnModel, kind: FeatureKind, config: &MutateConfig) -> Generated {
    let mut em = Emitter::new(Family::Dfc, model.fingerprint());
    match kind {
        FeatureKind::Tabular => {
            let n = model.n_features;
            let mut ops: Vec<FeatureOp> = Vec::new();
            ops.extend(config.dfc_add.iter().map(|&v| FeatureOp::Add(v)));
            ops.extend(config.dfc_mul.iter().map(|&v| FeatureOp::Mul(v)));
            ops.push(FeatureOp::SignFlip);
            ops.push(FeatureOp::OneMinus);
            let pairs: Vec<(usize, usize)> = if config.dfc_all_pairs {
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
            } else {
                (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect()
            };
            if pairs.is_empty() {
                em.note("dfc: fewer than 2 features, no pairs".to_string());
            }
            for (i, j) in pairs {
                for &op_i in &ops {
                    for &op_j in &ops {
                        em.transform(FeatureTransform::Pair { i, j, op_i, op_j });
                    }
                }
            }
        }
        FeatureKind::Image { .. } => {
            for op in [
                ImageOp::Crop,
                ImageOp::Rot90,
                ImageOp::Rot180,
                ImageOp::Rot270,
                ImageOp::FlipH,
                ImageOp::FlipV,
            ] {
                em.transform(FeatureTransform::Image(op));
            }
        }
    }
    em.finish()
}

fn apgc_replacements(kind: GateKind) -> &'static [GateKind] {
    match kind {
        GateKind::Rx | GateKind::Ry => &[GateKind::Rz],
        GateKind::Rz => &[GateKind::Rx, GateKind::Ry],
        _ => &[],
    }
}

/// APGC: swap each rotation gate for one with a different qubit effect
/// (amplitude vs phase), keeping the angle expression.
pub fn gen_apgc(model: &QnnModel) -> Generated {
    let mut em = Emitter::new(Family::Apgc, model.fingerprint());
    for (gate, inst) in model.circuit.instructions().iter().enumerate() {
        for &new_kind in apgc_replacements(inst.kind) {
            let mut instructions = model.circuit.instructions().to_vec();
            instructions[gate].kind = new_kind;
            em.circuit(
                OperatorKind::Apgc { gate, new_kind },
                model.circuit.with_instructions(instructions),
            );
        }
    }
    if em.out.mutants.is_empty() {
        em.note("apgc: no rotation gates in model".to_string());
    }
    em.finish()
}

fn swap_layer_groups(circuit: &Circuit, first: usize, second: usize) -> Vec<Instruction> {
    let group_a = layer_indices(circuit, first);
    let group_b = layer_indices(circuit, second);
    let set_a: BTreeSet<usize> = group_a.iter().copied().collect();
    let set_b: BTreeSet<usize> = group_b.iter().copied().collect();
    let mut out = Vec::with_capacity(circuit.instructions().len());
    for (idx, inst) in circuit.instructions().iter().enumerate() {
        if set_a.contains(&idx) {
            if Some(&idx) == group_a.first() {
                out.extend(clone_at(circuit, &group_b));
            }
        } else if set_b.contains(&idx) {
            if Some(&idx) == group_b.first() {
                out.extend(clone_at(circuit, &group_a));
            }
        } else {
            out.push(inst.clone());
        }
    }
    out
}

/// LS: swap each unordered pair of ansatz layers in place; parameters
/// travel with their gates.
pub fn gen_ls(model: &QnnModel) -> Generated {
    let mut em = Emitter::new(Family::Ls, model.fingerprint());
    let n_layers = model.layers().n_layers();
    if n_layers < 2 {
        em.note("ls: fewer than 2 layers, no swaps".to_string());
        return em.finish();
    }
    for first in 0..n_layers {
        for second in first + 1..n_layers {
            let instructions = swap_layer_groups(&model.circuit, first, second);
            em.circuit(
                OperatorKind::Ls { first, second },
                model.circuit.with_instructions(instructions),
            );
        }
    }
    em.finish()
}

fn permute_layer_blocks(circuit: &Circuit, blocks: &[crate::zoo::BlockRef], order: &[usize]) -> Vec<Instruction> {
    let layer_set: BTreeSet<usize> =
        blocks.iter().flat_map(|b| b.instructions.iter().copied()).collect();
    let first = layer_set.iter().next().copied();
    let mut out = Vec::with_capacity(circuit.instructions().len());
    for (idx, inst) in circuit.instructions().iter().enumerate() {
        if layer_set.contains(&idx) {
            if Some(idx) == first {
                for &b in order {
                    out.extend(clone_at(circuit, &blocks[b].instructions));
                }
            }
        } else {
            out.push(inst.clone());
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut items, &mut out);
    out.sort();
    out
}

/// ILS: reorder the blocks inside one layer. By default the generating set
/// is adjacent transpositions; the config can request all permutations.
pub fn gen_ils(model: &QnnModel, config: &MutateConfig) -> Generated {
    let mut em = Emitter::new(Family::Ils, model.fingerprint());
    let structure = model.layers();
    for (layer, blocks) in structure.layers.iter().enumerate() {
        if blocks.len() < 2 {
            em.note(format!("ils: layer {layer} has a single block, skipped"));
            continue;
        }
        let orders: Vec<Vec<usize>> = if config.ils_full_permutations {
            permutations(blocks.len())
                .into_iter()
                .filter(|p| p.iter().enumerate().any(|(i, &v)| i != v))
                .collect()
        } else {
            (0..blocks.len() - 1)
                .map(|b| {
                    let mut order: Vec<usize> = (0..blocks.len()).collect();
                    order.swap(b, b + 1);
                    order
                })
                .collect()
        };
        for order in orders {
            let instructions = permute_layer_blocks(&model.circuit, blocks, &order);
            em.circuit(
                OperatorKind::Ils { layer, order: order.clone() },
                model.circuit.with_instructions(instructions),
            );
        }
    }
    em.finish()
}

fn insert_layer_after(
    circuit: &Circuit,
    position: usize,
    init: LayerInit,
) -> Vec<Instruction> {
    let template = layer_indices(circuit, position);
    let insert_at = template.last().map(|&i| i + 1).unwrap_or(circuit.instructions().len());
    let mut rng = match init {
        LayerInit::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        LayerInit::CopyLayer => None,
    };
    let mut inserted = Vec::with_capacity(template.len());
    for &idx in &template {
        let mut inst = circuit.instructions()[idx].clone();
        if let SectionTag::AnsatzLayer { layer, .. } = &mut inst.tag {
            *layer = position + 1;
        }
        if let (Some(rng), Some(_)) = (rng.as_mut(), inst.angle.as_ref()) {
            inst.angle = Some(ParamExpr::Const(rng.gen_range(-PI..=PI)));
        }
        inserted.push(inst);
    }
    let mut out = Vec::with_capacity(circuit.instructions().len() + inserted.len());
    for (idx, inst) in circuit.instructions().iter().enumerate() {
        if idx == insert_at {
            out.append(&mut inserted);
        }
        let mut inst = inst.clone();
        if let SectionTag::AnsatzLayer { layer, .. } = &mut inst.tag {
            if *layer > position {
                *layer += 1;
            }
        }
        out.push(inst);
    }
    out.append(&mut inserted);
    out
}

/// ALA: after every layer, insert a structural copy of it, once with fresh
/// uniform [-pi, pi] weights (seeded per position) and once copying the
/// template's weight expressions. No new symbols are introduced, so every
/// ALA mutant binds.
pub fn gen_ala(model: &QnnModel, campaign_seed: u64) -> Generated {
    let mut em = Emitter::new(Family::Ala, model.fingerprint());
    let n_layers = model.layers().n_layers();
    if n_layers == 0 {
        em.note("ala: model has no layers".to_string());
        return em.finish();
    }
    for position in 0..n_layers {
        let random = LayerInit::Random { seed: seed::derive(campaign_seed, "ala-random", position as u64) };
        for init in [random, LayerInit::CopyLayer] {
            let instructions = insert_layer_after(&model.circuit, position, init);
            em.circuit(
                OperatorKind::Ala { position, init },
                model.circuit.with_instructions(instructions),
            );
        }
    }
    em.finish()
}

/// ALD: delete a whole layer, its rotation blocks, or its entangler blocks.
/// Variants whose deletion set is empty are skipped.
pub fn gen_ald(model: &QnnModel) -> Generated {
    let mut em = Emitter::new(Family::Ald, model.fingerprint());
    let structure = model.layers();
    for (layer, blocks) in structure.layers.iter().enumerate() {
        for target in [DeleteTarget::Full, DeleteTarget::RotationsOnly, DeleteTarget::EntanglersOnly] {
            let doomed: BTreeSet<usize> = blocks
                .iter()
                .filter(|b| match target {
                    DeleteTarget::Full => true,
                    DeleteTarget::RotationsOnly => b.role == BlockRole::Rotation,
                    DeleteTarget::EntanglersOnly => b.role == BlockRole::Entangle,
                })
                .flat_map(|b| b.instructions.iter().copied())
                .collect();
            if doomed.is_empty() {
                em.note(format!("ald: layer {layer} {target:?} deletes nothing, skipped"));
                continue;
            }
            let instructions: Vec<Instruction> = model
                .circuit
                .instructions()
                .iter()
                .enumerate()
                .filter(|(idx, _)| !doomed.contains(idx))
                .map(|(_, inst)| inst.clone())
                .collect();
            em.circuit(
                OperatorKind::Ald { layer, target },
                model.circuit.with_instructions(instructions),
            );
        }
    }
    em.finish()
}

/// Baseline gate operators, exhaustive over the configured gate set:
/// insertion at every slot, removal of every gate, same-arity replacement.
pub fn gen_baseline_gates(model: &QnnModel, config: &MutateConfig) -> Generated {
    let provenance = model.fingerprint();
    let n = model.circuit.n_qubits();
    let slots = model.circuit.instructions().len() + 1;

    let mut add = Emitter::new(Family::GateAdd, provenance.clone());
    for position in 0..slots {
        for &kind in &config.gate_set {
            let angle = kind.is_parameterized().then_some(ParamExpr::Const(config.baseline_angle));
            if kind.arity() == 1 {
                for q in 0..n {
                    let mut instructions = model.circuit.instructions().to_vec();
                    instructions.insert(position, Instruction::new(kind, vec![q], angle.clone()));
                    add.circuit(
                        OperatorKind::GateAdd { kind, qubits: vec![q], position },
                        model.circuit.with_instructions(instructions),
                    );
                }
            } else {
                for a in 0..n {
                    for b in 0..n {
                        if a == b {
                            continue;
                        }
                        let mut instructions = model.circuit.instructions().to_vec();
                        instructions.insert(position, Instruction::new(kind, vec![a, b], angle.clone()));
                        add.circuit(
                            OperatorKind::GateAdd { kind, qubits: vec![a, b], position },
                            model.circuit.with_instructions(instructions),
                        );
                    }
                }
            }
        }
    }
    let mut out = add.finish();

    let mut remove = Emitter::new(Family::GateRemove, provenance.clone());
    for gate in 0..model.circuit.instructions().len() {
        let instructions: Vec<Instruction> = model
            .circuit
            .instructions()
            .iter()
            .enumerate()
            .filter(|(idx, _)| *idx != gate)
            .map(|(_, inst)| inst.clone())
            .collect();
        remove.circuit(
            OperatorKind::GateRemove { gate },
            model.circuit.with_instructions(instructions),
        );
    }
    out.merge(remove.finish());

    let mut replace = Emitter::new(Family::GateReplace, provenance);
    for (gate, inst) in model.circuit.instructions().iter().enumerate() {
        for &new_kind in &config.gate_set {
            if new_kind == inst.kind
                || new_kind.arity() != inst.kind.arity()
                || new_kind.is_parameterized() != inst.kind.is_parameterized()
            {
                continue;
            }
            let mut instructions = model.circuit.instructions().to_vec();
            instructions[gate].kind = new_kind;
            replace.circuit(
                OperatorKind::GateReplace { gate, new_kind },
                model.circuit.with_instructions(instructions),
            );
        }
    }
    out.merge(replace.finish());
    out
}

/// Baseline measurement operators: add a measurement on each unmeasured
/// qubit, remove each existing one. A mutant left with no measured qubits is
/// pre-marked incompetent.
pub fn gen_baseline_measurement(model: &QnnModel) -> Generated {
    let provenance = model.fingerprint();
    let measured = model.circuit.measured_qubits().clone();

    let mut add = Emitter::new(Family::MeasAdd, provenance.clone());
    for qubit in 0..model.circuit.n_qubits() {
        if measured.contains(&qubit) {
            continue;
        }
        let mut circuit = model.circuit.clone();
        add.circuit(OperatorKind::MeasAdd { qubit }, circuit.measure(qubit).map(|_| circuit));
    }
    let mut out = add.finish();

    let mut remove = Emitter::new(Family::MeasRemove, provenance);
    for &qubit in &measured {
        let mut circuit = model.circuit.clone();
        let keep: Vec<usize> = measured.iter().copied().filter(|&q| q != qubit).collect();
        remove.circuit(OperatorKind::MeasRemove { qubit }, circuit.set_measured(keep).map(|_| circuit));
    }
    out.merge(remove.finish());
    out
}

/// All seven directed operators in a fixed order.
pub fn generate_directed(
    model: &QnnModel,
    kind: FeatureKind,
    config: &MutateConfig,
    campaign_seed: u64,
) -> Generated {
    let mut out = gen_apc(model, config);
    out.merge(gen_dfc(model, kind, config));
    out.merge(gen_apgc(model));
    out.merge(gen_ls(model));
    out.merge(gen_ils(model, config));
    out.merge(gen_ala(model, campaign_seed));
    out.merge(gen_ald(model));
    out
}

/// The five exhaustive baseline operators.
pub fn generate_baseline(model: &QnnModel, config: &MutateConfig) -> Generated {
    let mut out = gen_baseline_gates(model, config);
    out.merge(gen_baseline_measurement(model));
    out
}

/// One discarded mutant and the kept representative it duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discarded {
    pub id: String,
    pub family: Family,
    pub kept: String,
}

/// Outcome of [`dedup`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub generated: usize,
    pub kept: usize,
    pub discarded: Vec<Discarded>,
}

/// Drop mutants whose realized artifact duplicates an earlier one: circuit
/// payloads compare by canonical form (so same-moment commuting placements
/// merge), input transforms by descriptor equality. The first mutant of each
/// group survives.
pub fn dedup(mutants: Vec<Mutant>) -> (Vec<Mutant>, RedundancyReport) {
    let generated = mutants.len();
    let mut seen: HashMap<Vec<u8>, String> = HashMap::new();
    let mut kept = Vec::new();
    let mut report = RedundancyReport { generated, kept: 0, discarded: Vec::new() };
    for mutant in mutants {
        let key: Vec<u8> = match &mutant.payload {
            Some(MutantPayload::Circuit(c)) => {
                let mut k = b"circuit:".to_vec();
                k.extend(c.canonical_form());
                k
            }
            Some(MutantPayload::InputTransform(t)) => {
                let mut k = b"transform:".to_vec();
                k.extend(serde_json::to_vec(t).expect("transform serializes"));
                k
            }
            None => {
                let mut k = b"invalid:".to_vec();
                k.extend(mutant.id.as_bytes());
                k
            }
        };
        match seen.get(&key) {
            Some(kept_id) => report.discarded.push(Discarded {
                id: mutant.id.clone(),
                family: mutant.family,
                kept: kept_id.clone(),
            }),
            None => {
                seen.insert(key, mutant.id.clone());
                kept.push(mutant);
            }
        }
    }
    report.kept = kept.len();
    (kept, report)
}
