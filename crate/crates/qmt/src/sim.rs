//! Dense statevector simulation with shot-based sampling and label decoding.
//!
//! State is a complex amplitude vector of length `2^n`; qubit 0 is the least
//! significant bit of the basis-state index. Simulation of one circuit is
//! single-threaded over a privately owned state; callers parallelize across
//! circuits, each with its own derived seed.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, GateKind, Instruction};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("gate {0} has an unbound angle; bind the circuit before running")]
    UnboundAngle(GateKind),
    #[error("no measured qubits")]
    NoMeasuredQubits,
    #[error("shots must be >= 1")]
    ZeroShots,
}

/// Measured-bitstring histogram. Keys have width `|measured|` with the
/// largest measured qubit leftmost; values sum to the shot count.
pub type ShotCounts = BTreeMap<String, u64>;

/// Complex amplitude vector over the computational basis.
#[derive(Debug, Clone)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// The all-zeros basis state |0…0⟩.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amplitudes }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// A gate unitary as a row-major `dim x dim` complex matrix (`dim` is 2 or 4).
/// Two-qubit matrices act on the local basis `(bit of qubits[0] << 1) | bit
/// of qubits[1]`, so the first operand of cx/cp/cry is the control.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    pub dim: usize,
    pub elems: Vec<Complex64>,
}

impl Unitary {
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.elems[row * self.dim + col]
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The unitary matrix for a gate kind. Parameterized kinds require an angle
/// in radians; fixed kinds reject one.
pub fn gate_unitary(kind: GateKind, angle: Option<f64>) -> Result<Unitary, SimError> {
    if kind.is_parameterized() && angle.is_none() {
        return Err(SimError::UnboundAngle(kind));
    }
    let theta = angle.unwrap_or(0.0);
    let half = theta / 2.0;
    let (cos, sin) = (half.cos(), half.sin());
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let elems = match kind {
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]
        }
        GateKind::X => vec![zero, one, one, zero],
        GateKind::Y => vec![zero, c(0.0, -1.0), c(0.0, 1.0), zero],
        GateKind::Z => vec![one, zero, zero, c(-1.0, 0.0)],
        GateKind::S => vec![one, zero, zero, c(0.0, 1.0)],
        GateKind::T => {
            let p = std::f64::consts::FRAC_PI_4;
            vec![one, zero, zero, c(p.cos(), p.sin())]
        }
        GateKind::P => vec![one, zero, zero, c(theta.cos(), theta.sin())],
        GateKind::Rx => vec![c(cos, 0.0), c(0.0, -sin), c(0.0, -sin), c(cos, 0.0)],
        GateKind::Ry => vec![c(cos, 0.0), c(-sin, 0.0), c(sin, 0.0), c(cos, 0.0)],
        GateKind::Rz => vec![c(cos, -sin), zero, zero, c(cos, sin)],
        GateKind::Cx => vec![
            one, zero, zero, zero, //
            zero, one, zero, zero, //
            zero, zero, zero, one, //
            zero, zero, one, zero,
        ],
        GateKind::Cz => vec![
            one, zero, zero, zero, //
            zero, one, zero, zero, //
            zero, zero, one, zero, //
            zero, zero, zero, c(-1.0, 0.0),
        ],
        GateKind::Cp => vec![
            one, zero, zero, zero, //
            zero, one, zero, zero, //
            zero, zero, one, zero, //
            zero, zero, zero, c(theta.cos(), theta.sin()),
        ],
        GateKind::Cry => vec![
            one, zero, zero, zero, //
            zero, one, zero, zero, //
            zero, zero, c(cos, 0.0), c(-sin, 0.0), //
            zero, zero, c(sin, 0.0), c(cos, 0.0),
        ],
        GateKind::Swap => vec![
            one, zero, zero, zero, //
            zero, zero, one, zero, //
            zero, one, zero, zero, //
            zero, zero, zero, one,
        ],
    };
    let dim = if kind.arity() == 1 { 2 } else { 4 };
    Ok(Unitary { dim, elems })
}

fn apply_1q(state: &mut Statevector, u: &Unitary, qubit: usize) {
    let mask = 1usize << qubit;
    let dim = state.amplitudes.len();
    let (u00, u01, u10, u11) = (u.at(0, 0), u.at(0, 1), u.at(1, 0), u.at(1, 1));
    for i in 0..dim {
        if i & mask == 0 {
            let j = i | mask;
            let a0 = state.amplitudes[i];
            let a1 = state.amplitudes[j];
            state.amplitudes[i] = u00 * a0 + u01 * a1;
            state.amplitudes[j] = u10 * a0 + u11 * a1;
        }
    }
}

fn apply_2q(state: &mut Statevector, u: &Unitary, qa: usize, qb: usize) {
    let mask_a = 1usize << qa;
    let mask_b = 1usize << qb;
    let dim = state.amplitudes.len();
    for i in 0..dim {
        if i & mask_a == 0 && i & mask_b == 0 {
            // local basis index = (bit of qa << 1) | bit of qb
            let idx = [i, i | mask_b, i | mask_a, i | mask_a | mask_b];
            let v: Vec<Complex64> = idx.iter().map(|&k| state.amplitudes[k]).collect();
            for (row, &k) in idx.iter().enumerate() {
                state.amplitudes[k] = (0..4).map(|col| u.at(row, col) * v[col]).sum();
            }
        }
    }
}

/// Apply one bound instruction to the state in place.
pub fn apply_gate(state: &mut Statevector, inst: &Instruction) -> Result<(), SimError> {
    let angle = match &inst.angle {
        Some(expr) => Some(expr.as_const().ok_or(SimError::UnboundAngle(inst.kind))?),
        None => None,
    };
    let u = gate_unitary(inst.kind, angle)?;
    match inst.qubits.len() {
        1 => apply_1q(state, &u, inst.qubits[0]),
        _ => apply_2q(state, &u, inst.qubits[0], inst.qubits[1]),
    }
    debug_assert!((state.norm() - 1.0).abs() < 1e-10, "norm drifted after {}", inst.kind);
    Ok(())
}

/// Run a fully bound circuit on |0…0⟩.
pub fn run(circuit: &Circuit) -> Result<Statevector, SimError> {
    let mut state = Statevector::zero(circuit.n_qubits());
    for inst in circuit.instructions() {
        apply_gate(&mut state, inst)?;
    }
    Ok(state)
}

fn bitstring_for(index: usize, measured: &BTreeSet<usize>) -> String {
    // largest measured qubit leftmost
    measured
        .iter()
        .rev()
        .map(|&q| if index & (1 << q) != 0 { '1' } else { '0' })
        .collect()
}

/// Exact marginal probabilities over the measured qubits. Only outcomes
/// with nonzero probability appear; absent keys have probability 0.
pub fn marginal_probabilities(
    state: &Statevector,
    measured: &BTreeSet<usize>,
) -> Result<BTreeMap<String, f64>, SimError> {
    if measured.is_empty() {
        return Err(SimError::NoMeasuredQubits);
    }
    let mut probs: BTreeMap<String, f64> = BTreeMap::new();
    for (index, amp) in state.amplitudes.iter().enumerate() {
        let p = amp.norm_sqr();
        if p > 0.0 {
            *probs.entry(bitstring_for(index, measured)).or_insert(0.0) += p;
        }
    }
    Ok(probs)
}

/// Multinomial draw of `shots` outcomes from the marginal distribution over
/// the measured qubits, using a deterministic generator seeded by `seed`.
pub fn sample(
    state: &Statevector,
    measured: &BTreeSet<usize>,
    shots: u64,
    seed: u64,
) -> Result<ShotCounts, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let probs = marginal_probabilities(state, measured)?;
    let keys: Vec<&String> = probs.keys().collect();
    let weights: Vec<f64> = probs.values().copied().collect();
    let dist = WeightedIndex::new(&weights).expect("probabilities sum to 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = ShotCounts::new();
    for _ in 0..shots {
        let k = keys[dist.sample(&mut rng)];
        *counts.entry(k.clone()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Decode one measured bitstring to a class label: a single measured qubit
/// reads out its bit value; wider registers decode as the bitstring's
/// integer value modulo `n_classes`.
pub fn decode_label(bitstring: &str, n_classes: usize) -> usize {
    let value = usize::from_str_radix(bitstring, 2).expect("bitstring is binary");
    if bitstring.len() == 1 {
        value
    } else {
        value % n_classes
    }
}

/// Most frequent decoded label over a shot histogram; ties break toward the
/// smaller label index.
pub fn label_from_counts(counts: &ShotCounts, n_classes: usize) -> usize {
    let mut per_label: BTreeMap<usize, u64> = BTreeMap::new();
    for (bits, n) in counts {
        *per_label.entry(decode_label(bits, n_classes)).or_insert(0) += n;
    }
    let mut best = (usize::MAX, 0u64);
    for (&label, &n) in &per_label {
        if n > best.1 {
            best = (label, n);
        }
    }
    best.0
}

/// Bound circuit → sampled shots → decoded label.
pub fn predict_bound(
    circuit: &Circuit,
    n_classes: usize,
    shots: u64,
    seed: u64,
) -> Result<usize, SimError> {
    let state = run(circuit)?;
    let counts = sample(&state, circuit.measured_qubits(), shots, seed)?;
    Ok(label_from_counts(&counts, n_classes))
}
