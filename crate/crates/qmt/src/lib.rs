//! Mutation testing engine for quantum neural network circuits.
//!
//! The engine builds small trained QNN models (feature map + ansatz +
//! measurement), generates directed and baseline mutants of their circuits,
//! filters redundant mutants by commutativity-aware canonicalization,
//! evaluates every mutant against a test suite of correctly classified
//! samples on an internal shot-based statevector simulator, and reports
//! per-operator kill statistics and the overall mutation score.
//!
//! Modules follow the pipeline:
//!
//! - [`circuit`]: gate-level IR with parameter expressions and section tags
//! - [`qasm`]: OpenQASM 3 emission and subset parsing for mutant portability
//! - [`sim`]: dense statevector simulation, shot sampling, label prediction
//! - [`zoo`]: feature map / ansatz builders, model assembly, SPSA trainer
//! - [`data`]: dataset loading, scaling, PCA, image resize, synthetic blobs
//! - [`mutate`]: the mutation operators and redundant-mutant filtering
//! - [`oracle`]: test suite construction, kill evaluation, scoring, WOO/OPO
//! - [`campaign`]: end-to-end campaign driver with config and artifacts

pub mod campaign;
pub mod circuit;
pub mod data;
pub mod mutate;
pub mod oracle;
pub mod qasm;
pub mod seed;
pub mod sim;
pub mod zoo;
