//! Gate-level intermediate representation of parameterized quantum circuits.
//!
//! A [`Circuit`] is an ordered list of [`Instruction`]s over a fixed number
//! of qubits plus a set of measured qubits. Gate angles are symbolic
//! [`ParamExpr`] trees so the same circuit structure can be bound to
//! different data samples and weight vectors. Every instruction carries a
//! [`SectionTag`] recording whether it belongs to the feature map, an ansatz
//! layer block, or neither; the mutation operators navigate the circuit
//! through these tags.
//!
//! Bit-ordering convention: qubit 0 is the least-significant bit of measured
//! bitstrings and of statevector indices.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors raised by circuit construction and binding.
#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },
    #[error("duplicate qubit {0} in multi-qubit gate")]
    DuplicateQubit(usize),
    #[error("gate {0} expects {1} qubit operand(s), got {2}")]
    WrongArity(GateKind, usize, usize),
    #[error("gate {0} requires an angle")]
    MissingAngle(GateKind),
    #[error("gate {0} takes no angle")]
    SuperfluousAngle(GateKind),
    #[error("missing binding for symbol `{0}`")]
    MissingSymbol(String),
    #[error("non-finite value bound to symbol `{0}`")]
    NonFiniteBinding(String),
    #[error("angle expression evaluated to a non-finite value")]
    NonFiniteAngle,
}

/// A named circuit parameter, e.g. `x[0]` for a feature or `theta[3]` for a
/// trainable weight.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        Symbol(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Symbol-to-radians assignment used by [`Circuit::bind`].
pub type Bindings = BTreeMap<Symbol, f64>;

/// The fixed gate set. Each kind has a fixed arity (1 or 2 qubits) and a
/// fixed parameter count (0 or 1 angle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    P,
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    Cp,
    Cry,
    Swap,
}

impl GateKind {
    pub const ALL: [GateKind; 15] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::T,
        GateKind::P,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Cp,
        GateKind::Cry,
        GateKind::Swap,
    ];

    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::H
            | GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::S
            | GateKind::T
            | GateKind::P
            | GateKind::Rx
            | GateKind::Ry
            | GateKind::Rz => 1,
            GateKind::Cx | GateKind::Cz | GateKind::Cp | GateKind::Cry | GateKind::Swap => 2,
        }
    }

    /// Whether the gate takes one angle parameter.
    pub fn is_parameterized(self) -> bool {
        matches!(
            self,
            GateKind::P | GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Cp | GateKind::Cry
        )
    }

    /// Whether the gate is invariant under swapping its two operands.
    /// Symmetric gates are stored with ascending qubit order so that
    /// canonicalization identifies both operand orders.
    pub fn is_symmetric(self) -> bool {
        matches!(self, GateKind::Cz | GateKind::Swap)
    }

    /// Lowercase OpenQASM 3 name.
    pub fn qasm_name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::P => "p",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Cp => "cp",
            GateKind::Cry => "cry",
            GateKind::Swap => "swap",
        }
    }

    pub fn from_qasm_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.qasm_name() == name)
    }

    /// Stable numeric id used in canonical-form sort keys.
    pub fn id(self) -> u8 {
        GateKind::ALL.iter().position(|k| *k == self).unwrap() as u8
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.qasm_name())
    }
}

/// Symbolic angle expression: constants, symbol references, negation, sums
/// and products. This closed grammar covers every angle the builders need
/// (including the ZZ feature map's products of `(pi - x_i)` terms) while
/// keeping evaluation and free-symbol analysis exact; arbitrary functions
/// are not representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamExpr {
    Const(f64),
    Symbol(Symbol),
    Neg(Box<ParamExpr>),
    Sum(Vec<ParamExpr>),
    Product(Vec<ParamExpr>),
}

impl ParamExpr {
    pub fn constant(value: f64) -> Self {
        ParamExpr::Const(value)
    }

    pub fn symbol(sym: impl Into<String>) -> Self {
        ParamExpr::Symbol(Symbol::new(sym))
    }

    // part of the constructor family, not an operator overload
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        ParamExpr::Neg(Box::new(self))
    }

    pub fn sum(terms: Vec<ParamExpr>) -> Self {
        ParamExpr::Sum(terms)
    }

    pub fn product(factors: Vec<ParamExpr>) -> Self {
        ParamExpr::Product(factors)
    }

    /// The `(pi - x)` term used by the ZZ feature map.
    pub fn pi_minus(sym: Symbol) -> Self {
        ParamExpr::Sum(vec![
            ParamExpr::Const(std::f64::consts::PI),
            ParamExpr::Neg(Box::new(ParamExpr::Symbol(sym))),
        ])
    }

    /// Evaluate under a full binding. Fails on missing symbols and on
    /// non-finite results.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, CircuitError> {
        let v = self.eval_inner(bindings)?;
        if !v.is_finite() {
            return Err(CircuitError::NonFiniteAngle);
        }
        Ok(v)
    }

    fn eval_inner(&self, bindings: &Bindings) -> Result<f64, CircuitError> {
        match self {
            ParamExpr::Const(c) => Ok(*c),
            ParamExpr::Symbol(s) => bindings
                .get(s)
                .copied()
                .ok_or_else(|| CircuitError::MissingSymbol(s.0.clone())),
            ParamExpr::Neg(e) => Ok(-e.eval_inner(bindings)?),
            ParamExpr::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval_inner(bindings)?;
                }
                Ok(acc)
            }
            ParamExpr::Product(factors) => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval_inner(bindings)?;
                }
                Ok(acc)
            }
        }
    }

    /// Collect the exact set of free symbols.
    pub fn free_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            ParamExpr::Const(_) => {}
            ParamExpr::Symbol(s) => {
                out.insert(s.clone());
            }
            ParamExpr::Neg(e) => e.free_symbols(out),
            ParamExpr::Sum(es) | ParamExpr::Product(es) => {
                for e in es {
                    e.free_symbols(out);
                }
            }
        }
    }

    /// Deterministic serialization used by canonical forms. Constants are
    /// printed with the shortest digit string that round-trips the f64.
    pub fn canonical_text(&self) -> String {
        match self {
            ParamExpr::Const(c) => format!("{c:?}"),
            ParamExpr::Symbol(s) => format!("${}", s.0),
            ParamExpr::Neg(e) => format!("neg({})", e.canonical_text()),
            ParamExpr::Sum(es) => {
                let parts: Vec<String> = es.iter().map(|e| e.canonical_text()).collect();
                format!("sum({})", parts.join(","))
            }
            ParamExpr::Product(es) => {
                let parts: Vec<String> = es.iter().map(|e| e.canonical_text()).collect();
                format!("prod({})", parts.join(","))
            }
        }
    }

    /// True when the expression contains no symbols.
    pub fn is_constant(&self) -> bool {
        let mut syms = BTreeSet::new();
        self.free_symbols(&mut syms);
        syms.is_empty()
    }

    /// The constant value, if the expression is a bare constant node.
    pub fn as_const(&self) -> Option<f64> {
        match self {
            ParamExpr::Const(c) => Some(*c),
            _ => None,
        }
    }
}

/// Role of an ansatz block: parameterized rotations or entangling gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BlockRole {
    Rotation,
    Entangle,
}

/// Structural tag locating an instruction within the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionTag {
    FeatureMap,
    AnsatzLayer {
        layer: usize,
        block: usize,
        role: BlockRole,
    },
    Measurement,
    Untagged,
}

impl SectionTag {
    pub fn layer_index(&self) -> Option<usize> {
        match self {
            SectionTag::AnsatzLayer { layer, .. } => Some(*layer),
            _ => None,
        }
    }
}

/// One gate application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: Option<ParamExpr>,
    pub tag: SectionTag,
}

impl Instruction {
    pub fn new(kind: GateKind, qubits: Vec<usize>, angle: Option<ParamExpr>) -> Self {
        Instruction {
            kind,
            qubits,
            angle,
            tag: SectionTag::Untagged,
        }
    }

    pub fn with_tag(mut self, tag: SectionTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn gate1(kind: GateKind, qubit: usize) -> Self {
        Instruction::new(kind, vec![qubit], None)
    }

    pub fn gate1p(kind: GateKind, qubit: usize, angle: ParamExpr) -> Self {
        Instruction::new(kind, vec![qubit], Some(angle))
    }

    pub fn gate2(kind: GateKind, a: usize, b: usize) -> Self {
        Instruction::new(kind, vec![a, b], None)
    }

    pub fn gate2p(kind: GateKind, a: usize, b: usize, angle: ParamExpr) -> Self {
        Instruction::new(kind, vec![a, b], Some(angle))
    }

    fn canonical_text(&self) -> String {
        let qubits: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        match &self.angle {
            Some(a) => format!("{}({}) {}", self.kind, a.canonical_text(), qubits.join(",")),
            None => format!("{} {}", self.kind, qubits.join(",")),
        }
    }
}

/// A parameterized quantum circuit: the program under test.
///
/// Circuits are immutable after construction in the sense that every
/// operation returns a new circuit; the mutable `push` path exists for
/// builders that assemble a circuit instruction by instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    instructions: Vec<Instruction>,
    measured: BTreeSet<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            instructions: Vec::new(),
            measured: BTreeSet::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    /// Measured qubits in ascending order.
    pub fn measured_qubits(&self) -> &BTreeSet<usize> {
        &self.measured
    }

    fn validate_instruction(&self, inst: &Instruction) -> Result<(), CircuitError> {
        let arity = inst.kind.arity();
        if inst.qubits.len() != arity {
            return Err(CircuitError::WrongArity(inst.kind, arity, inst.qubits.len()));
        }
        for &q in &inst.qubits {
            if q >= self.n_qubits {
                return Err(CircuitError::QubitOutOfRange {
                    qubit: q,
                    width: self.n_qubits,
                });
            }
        }
        if arity == 2 && inst.qubits[0] == inst.qubits[1] {
            return Err(CircuitError::DuplicateQubit(inst.qubits[0]));
        }
        match (&inst.angle, inst.kind.is_parameterized()) {
            (None, true) => return Err(CircuitError::MissingAngle(inst.kind)),
            (Some(_), false) => return Err(CircuitError::SuperfluousAngle(inst.kind)),
            _ => {}
        }
        Ok(())
    }

    /// Append an instruction in place after validation. Symmetric two-qubit
    /// gates are stored with ascending operand order.
    pub fn push(&mut self, mut inst: Instruction) -> Result<(), CircuitError> {
        self.validate_instruction(&inst)?;
        if inst.kind.is_symmetric() && inst.qubits[0] > inst.qubits[1] {
            inst.qubits.swap(0, 1);
        }
        self.instructions.push(inst);
        Ok(())
    }

    /// Pure append: returns a new circuit with the instruction added.
    pub fn append(&self, inst: Instruction) -> Result<Circuit, CircuitError> {
        let mut next = self.clone();
        next.push(inst)?;
        Ok(next)
    }

    /// Mark a qubit as measured.
    pub fn measure(&mut self, qubit: usize) -> Result<(), CircuitError> {
        if qubit >= self.n_qubits {
            return Err(CircuitError::QubitOutOfRange {
                qubit,
                width: self.n_qubits,
            });
        }
        self.measured.insert(qubit);
        Ok(())
    }

    pub fn set_measured(&mut self, qubits: impl IntoIterator<Item = usize>) -> Result<(), CircuitError> {
        self.measured.clear();
        for q in qubits {
            self.measure(q)?;
        }
        Ok(())
    }

    /// Replace the instruction list wholesale. Used by mutation operators
    /// that reorder or delete instructions; every instruction is re-validated.
    pub fn with_instructions(&self, instructions: Vec<Instruction>) -> Result<Circuit, CircuitError> {
        let mut next = Circuit {
            n_qubits: self.n_qubits,
            instructions: Vec::with_capacity(instructions.len()),
            measured: self.measured.clone(),
        };
        for inst in instructions {
            next.push(inst)?;
        }
        Ok(next)
    }

    /// The exact set of free symbols over all angle expressions.
    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for inst in &self.instructions {
            if let Some(a) = &inst.angle {
                a.free_symbols(&mut out);
            }
        }
        out
    }

    pub fn is_bound(&self) -> bool {
        self.free_symbols().is_empty()
    }

    /// Substitute all symbols; the result has every angle evaluated to a
    /// constant. The bindings must cover every free symbol (extra entries
    /// are allowed) and all values must be finite.
    pub fn bind(&self, bindings: &Bindings) -> Result<Circuit, CircuitError> {
        for sym in self.free_symbols() {
            match bindings.get(&sym) {
                None => return Err(CircuitError::MissingSymbol(sym.0)),
                Some(v) if !v.is_finite() => return Err(CircuitError::NonFiniteBinding(sym.0)),
                Some(_) => {}
            }
        }
        let mut instructions = Vec::with_capacity(self.instructions.len());
        for inst in &self.instructions {
            let angle = match &inst.angle {
                Some(a) => Some(ParamExpr::Const(a.eval(bindings)?)),
                None => None,
            };
            instructions.push(Instruction {
                kind: inst.kind,
                qubits: inst.qubits.clone(),
                angle,
                tag: inst.tag,
            });
        }
        Ok(Circuit {
            n_qubits: self.n_qubits,
            instructions,
            measured: self.measured.clone(),
        })
    }

    /// Greedy left-packed time slices. Two instructions share a slice iff
    /// their qubit sets are disjoint and no earlier instruction on a shared
    /// qubit separates them; concatenating the slices preserves per-qubit
    /// instruction order.
    pub fn moments(&self) -> Vec<Vec<usize>> {
        let mut frontier = vec![0usize; self.n_qubits];
        let mut slices: Vec<Vec<usize>> = Vec::new();
        for (idx, inst) in self.instructions.iter().enumerate() {
            let slot = inst.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            if slot == slices.len() {
                slices.push(Vec::new());
            }
            slices[slot].push(idx);
            for &q in &inst.qubits {
                frontier[q] = slot + 1;
            }
        }
        slices
    }

    /// Deterministic canonical serialization. Within each moment the
    /// instructions are sorted by (lowest qubit, kind id, serialized angle),
    /// so circuits that differ only by reordering of disjoint same-moment
    /// gates yield identical canonical forms. Section tags are metadata and
    /// are not part of the canonical form.
    pub fn canonical_form(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str("qmt-canon-v1;");
        out.push_str(&format!("q={};", self.n_qubits));
        let measured: Vec<String> = self.measured.iter().map(|q| q.to_string()).collect();
        out.push_str(&format!("m={};", measured.join(",")));
        for moment in self.moments() {
            let mut entries: Vec<(usize, u8, String, String)> = moment
                .iter()
                .map(|&idx| {
                    let inst = &self.instructions[idx];
                    let min_q = *inst.qubits.iter().min().unwrap();
                    let angle = inst
                        .angle
                        .as_ref()
                        .map(|a| a.canonical_text())
                        .unwrap_or_default();
                    (min_q, inst.kind.id(), angle, inst.canonical_text())
                })
                .collect();
            entries.sort();
            out.push('[');
            let texts: Vec<&str> = entries.iter().map(|e| e.3.as_str()).collect();
            out.push_str(&texts.join(";"));
            out.push(']');
        }
        out.into_bytes()
    }

    /// SHA-256 hex digest of the canonical form.
    pub fn canonical_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_form());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sym(name: &str) -> Symbol {
        Symbol::new(name)
    }

    #[test]
    fn append_base_case() {
        let c = Circuit::new(2);
        let c = c.append(Instruction::gate1(GateKind::H, 0)).unwrap();
        assert_eq!(c.instructions().len(), 1);
    }

    #[test]
    fn append_duplicate_qubit_rejected() {
        let c = Circuit::new(2);
        let err = c.append(Instruction::gate2(GateKind::Cx, 0, 0)).unwrap_err();
        assert_eq!(err, CircuitError::DuplicateQubit(0));
    }

    #[test]
    fn append_missing_angle_rejected() {
        let c = Circuit::new(1);
        let err = c.append(Instruction::gate1(GateKind::Ry, 0)).unwrap_err();
        assert_eq!(err, CircuitError::MissingAngle(GateKind::Ry));
    }

    #[test]
    fn append_superfluous_angle_rejected() {
        let c = Circuit::new(1);
        let err = c
            .append(Instruction::gate1p(GateKind::H, 0, ParamExpr::constant(0.1)))
            .unwrap_err();
        assert_eq!(err, CircuitError::SuperfluousAngle(GateKind::H));
    }

    #[test]
    fn append_out_of_range_rejected() {
        let c = Circuit::new(2);
        let err = c.append(Instruction::gate1(GateKind::X, 2)).unwrap_err();
        assert!(matches!(err, CircuitError::QubitOutOfRange { qubit: 2, width: 2 }));
    }

    #[test]
    fn bind_substitutes_symbols() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate1p(GateKind::Ry, 0, ParamExpr::symbol("theta")))
            .unwrap();
        let mut b = Bindings::new();
        b.insert(sym("theta"), PI / 2.0);
        let bound = c.bind(&b).unwrap();
        assert!(bound.is_bound());
        assert_eq!(bound.instructions()[0].angle.as_ref().unwrap().as_const(), Some(PI / 2.0));
    }

    #[test]
    fn bind_zz_angle_zero_factor() {
        // 2*(pi - x0)*(pi - x1) with x0 = pi, x1 = 0 evaluates to 0
        let expr = ParamExpr::product(vec![
            ParamExpr::constant(2.0),
            ParamExpr::pi_minus(sym("x[0]")),
            ParamExpr::pi_minus(sym("x[1]")),
        ]);
        let mut b = Bindings::new();
        b.insert(sym("x[0]"), PI);
        b.insert(sym("x[1]"), 0.0);
        assert_eq!(expr.eval(&b).unwrap(), 0.0);
    }

    #[test]
    fn bind_missing_symbol_lists_name() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate1p(GateKind::Ry, 0, ParamExpr::symbol("theta")))
            .unwrap();
        let err = c.bind(&Bindings::new()).unwrap_err();
        assert_eq!(err, CircuitError::MissingSymbol("theta".into()));
    }

    #[test]
    fn bind_rejects_non_finite() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate1p(GateKind::Ry, 0, ParamExpr::symbol("theta")))
            .unwrap();
        let mut b = Bindings::new();
        b.insert(sym("theta"), f64::NAN);
        assert_eq!(c.bind(&b).unwrap_err(), CircuitError::NonFiniteBinding("theta".into()));
    }

    #[test]
    fn moments_disjoint_then_overlapping() {
        let mut c = Circuit::new(2);
        c.push(Instruction::gate1(GateKind::H, 0)).unwrap();
        c.push(Instruction::gate1(GateKind::H, 1)).unwrap();
        c.push(Instruction::gate2(GateKind::Cx, 0, 1)).unwrap();
        assert_eq!(c.moments(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn moments_same_qubit_two_slices() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate1(GateKind::X, 0)).unwrap();
        c.push(Instruction::gate1(GateKind::Y, 0)).unwrap();
        assert_eq!(c.moments(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn moments_hadamard_wall_then_cx() {
        // H on q1..q4 then CX(q1, q2): one 4-gate slice then the CX slice
        let mut c = Circuit::new(5);
        for q in 1..5 {
            c.push(Instruction::gate1(GateKind::H, q)).unwrap();
        }
        c.push(Instruction::gate2(GateKind::Cx, 1, 2)).unwrap();
        let m = c.moments();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].len(), 4);
        assert_eq!(m[1], vec![4]);
    }

    #[test]
    fn canonical_form_merges_same_moment_order() {
        let mut a = Circuit::new(2);
        a.push(Instruction::gate1(GateKind::H, 1)).unwrap();
        a.push(Instruction::gate1(GateKind::H, 0)).unwrap();
        let mut b = Circuit::new(2);
        b.push(Instruction::gate1(GateKind::H, 0)).unwrap();
        b.push(Instruction::gate1(GateKind::H, 1)).unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
    }

    #[test]
    fn canonical_form_keeps_same_qubit_order() {
        let mut a = Circuit::new(1);
        a.push(Instruction::gate1(GateKind::X, 0)).unwrap();
        a.push(Instruction::gate1(GateKind::Z, 0)).unwrap();
        let mut b = Circuit::new(1);
        b.push(Instruction::gate1(GateKind::Z, 0)).unwrap();
        b.push(Instruction::gate1(GateKind::X, 0)).unwrap();
        assert_ne!(a.canonical_form(), b.canonical_form());
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let mut c = Circuit::new(3);
        c.push(Instruction::gate1(GateKind::H, 2)).unwrap();
        c.push(Instruction::gate1p(GateKind::Ry, 0, ParamExpr::symbol("w"))).unwrap();
        c.push(Instruction::gate2(GateKind::Cx, 0, 1)).unwrap();
        c.measure(0).unwrap();
        assert_eq!(c.canonical_form(), c.canonical_form());
    }

    #[test]
    fn canonical_form_covers_measurement() {
        let mut a = Circuit::new(1);
        a.push(Instruction::gate1(GateKind::H, 0)).unwrap();
        let mut b = a.clone();
        b.measure(0).unwrap();
        assert_ne!(a.canonical_form(), b.canonical_form());
    }

    #[test]
    fn symmetric_gates_normalize_operand_order() {
        let mut a = Circuit::new(2);
        a.push(Instruction::gate2(GateKind::Cz, 1, 0)).unwrap();
        let mut b = Circuit::new(2);
        b.push(Instruction::gate2(GateKind::Cz, 0, 1)).unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
        // directed gates keep their operand order
        let mut c = Circuit::new(2);
        c.push(Instruction::gate2(GateKind::Cx, 1, 0)).unwrap();
        let mut d = Circuit::new(2);
        d.push(Instruction::gate2(GateKind::Cx, 0, 1)).unwrap();
        assert_ne!(c.canonical_form(), d.canonical_form());
    }

    #[test]
    fn free_symbols_exact() {
        let expr = ParamExpr::sum(vec![
            ParamExpr::symbol("a"),
            ParamExpr::product(vec![ParamExpr::symbol("b"), ParamExpr::constant(2.0)]),
            ParamExpr::symbol("a").neg(),
        ]);
        let mut syms = BTreeSet::new();
        expr.free_symbols(&mut syms);
        assert_eq!(syms, BTreeSet::from([sym("a"), sym("b")]));
    }
}
