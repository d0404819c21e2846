#![allow(dead_code)]

//! Shared test oracles, independent of the engine's own simulator: gates are
//! expanded to full 2^n x 2^n matrices and applied by dense matrix-vector
//! products, so agreement with the engine's bitmask kernels is meaningful.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use qmt::circuit::{Bindings, Circuit, GateKind, Instruction, ParamExpr, Symbol};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn base_matrix(kind: GateKind, angle: Option<f64>) -> Vec<Vec<Complex64>> {
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let i = c(0.0, 1.0);
    match kind {
        GateKind::H => vec![
            vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
            vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
        ],
        GateKind::X => vec![vec![zero, one], vec![one, zero]],
        GateKind::Y => vec![vec![zero, -i], vec![i, zero]],
        GateKind::Z => vec![vec![one, zero], vec![zero, -one]],
        GateKind::S => vec![vec![one, zero], vec![zero, i]],
        GateKind::T => {
            let t = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
            vec![vec![one, zero], vec![zero, t]]
        }
        GateKind::P => {
            let p = Complex64::from_polar(1.0, angle.unwrap());
            vec![vec![one, zero], vec![zero, p]]
        }
        GateKind::Rx => {
            let half = angle.unwrap() / 2.0;
            let (sin, cos) = half.sin_cos();
            vec![vec![c(cos, 0.0), c(0.0, -sin)], vec![c(0.0, -sin), c(cos, 0.0)]]
        }
        GateKind::Ry => {
            let half = angle.unwrap() / 2.0;
            let (sin, cos) = half.sin_cos();
            vec![vec![c(cos, 0.0), c(-sin, 0.0)], vec![c(sin, 0.0), c(cos, 0.0)]]
        }
        GateKind::Rz => {
            let half = angle.unwrap() / 2.0;
            vec![
                vec![Complex64::from_polar(1.0, -half), zero],
                vec![zero, Complex64::from_polar(1.0, half)],
            ]
        }
        // two-qubit matrices in the local basis (control << 1) | target
        GateKind::Cx => vec![
            vec![one, zero, zero, zero],
            vec![zero, one, zero, zero],
            vec![zero, zero, zero, one],
            vec![zero, zero, one, zero],
        ],
        GateKind::Cz => vec![
            vec![one, zero, zero, zero],
            vec![zero, one, zero, zero],
            vec![zero, zero, one, zero],
            vec![zero, zero, zero, -one],
        ],
        GateKind::Cp => {
            let p = Complex64::from_polar(1.0, angle.unwrap());
            vec![
                vec![one, zero, zero, zero],
                vec![zero, one, zero, zero],
                vec![zero, zero, one, zero],
                vec![zero, zero, zero, p],
            ]
        }
        GateKind::Cry => {
            let half = angle.unwrap() / 2.0;
            let (sin, cos) = half.sin_cos();
            vec![
                vec![one, zero, zero, zero],
                vec![zero, one, zero, zero],
                vec![zero, zero, c(cos, 0.0), c(-sin, 0.0)],
                vec![zero, zero, c(sin, 0.0), c(cos, 0.0)],
            ]
        }
        GateKind::Swap => vec![
            vec![one, zero, zero, zero],
            vec![zero, zero, one, zero],
            vec![zero, one, zero, zero],
            vec![zero, zero, zero, one],
        ],
    }
}

/// Expand a gate to the full 2^n x 2^n matrix, qubit 0 = least significant
/// basis bit.
pub fn ref_gate_matrix(
    kind: GateKind,
    angle: Option<f64>,
    qubits: &[usize],
    n: usize,
) -> Vec<Vec<Complex64>> {
    let base = base_matrix(kind, angle);
    let dim = 1usize << n;
    let zero = c(0.0, 0.0);
    let mut full = vec![vec![zero; dim]; dim];
    let local = |basis: usize| -> usize {
        qubits
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((basis >> q) & 1))
    };
    let rest_mask = {
        let mut m = usize::MAX >> (usize::BITS as usize - n);
        for &q in qubits {
            m &= !(1usize << q);
        }
        m
    };
    for (r, row) in full.iter_mut().enumerate() {
        for (col, cell) in row.iter_mut().enumerate() {
            if r & rest_mask == col & rest_mask {
                *cell = base[local(r)][local(col)];
            }
        }
    }
    full
}

/// Run a bound circuit through the dense reference path.
pub fn ref_run(circuit: &Circuit) -> Vec<Complex64> {
    let n = circuit.n_qubits();
    let dim = 1usize << n;
    let empty = Bindings::new();
    let mut state = vec![c(0.0, 0.0); dim];
    state[0] = c(1.0, 0.0);
    for inst in circuit.instructions() {
        let angle = inst.angle.as_ref().map(|a| a.eval(&empty).expect("bound circuit"));
        let m = ref_gate_matrix(inst.kind, angle, &inst.qubits, n);
        let mut next = vec![c(0.0, 0.0); dim];
        for (r, row) in m.iter().enumerate() {
            let mut acc = c(0.0, 0.0);
            for (col, cell) in row.iter().enumerate() {
                if cell.norm_sqr() > 0.0 {
                    acc += cell * state[col];
                }
            }
            next[r] = acc;
        }
        state = next;
    }
    state
}

/// Marginal exact probabilities over the measured qubits, leftmost character
/// of the bitstring = largest measured qubit.
pub fn ref_probabilities(state: &[Complex64], measured: &BTreeSet<usize>) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for (basis, amp) in state.iter().enumerate() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let bits: String = measured
            .iter()
            .rev()
            .map(|&q| if (basis >> q) & 1 == 1 { '1' } else { '0' })
            .collect();
        *out.entry(bits).or_insert(0.0) += p;
    }
    out
}

/// Whether two states are equal up to a global phase.
pub fn states_equal_up_to_phase(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let pivot = match a.iter().position(|v| v.norm() > 1e-6) {
        Some(p) => p,
        None => return b.iter().all(|v| v.norm() <= tol),
    };
    if b[pivot].norm() < 1e-9 {
        return false;
    }
    let phase = b[pivot] / a[pivot];
    a.iter().zip(b).all(|(x, y)| (y - phase * x).norm() <= tol)
}

/// Direct comparison, no phase allowance.
pub fn states_close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

/// A random well-formed circuit over the full gate set, all qubits measured.
/// Parameterized gates get symbolic angles `g[k]`.
pub fn random_circuit(rng: &mut ChaCha8Rng, n_qubits: usize, n_gates: usize) -> Circuit {
    let mut circuit = Circuit::new(n_qubits);
    let mut next_sym = 0usize;
    for _ in 0..n_gates {
        let kind = loop {
            let k = GateKind::ALL[rng.gen_range(0..GateKind::ALL.len())];
            if k.arity() <= n_qubits {
                break k;
            }
        };
        let qubits: Vec<usize> = if kind.arity() == 1 {
            vec![rng.gen_range(0..n_qubits)]
        } else {
            let a = rng.gen_range(0..n_qubits);
            let mut b = rng.gen_range(0..n_qubits - 1);
            if b >= a {
                b += 1;
            }
            vec![a, b]
        };
        let angle = kind.is_parameterized().then(|| {
            let expr = ParamExpr::symbol(format!("g[{next_sym}]"));
            next_sym += 1;
            expr
        });
        circuit.push(Instruction::new(kind, qubits, angle)).unwrap();
    }
    circuit.set_measured(0..n_qubits).unwrap();
    circuit
}

/// Uniform random bindings in [-pi, pi] for every free symbol.
pub fn random_bindings(rng: &mut ChaCha8Rng, circuit: &Circuit) -> Bindings {
    circuit
        .free_symbols()
        .into_iter()
        .map(|s| (s, rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI)))
        .collect()
}

/// Bindings for an explicit symbol list.
pub fn bindings_for(rng: &mut ChaCha8Rng, symbols: &[Symbol]) -> Bindings {
    symbols
        .iter()
        .map(|s| (s.clone(), rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI)))
        .collect()
}
