//! Test-suite construction, mutant kill evaluation, scoring, and the
//! raw-circuit WOO/OPO output oracles.
//!
//! The evaluation seed of every (mutant, sample) pair is derived from the
//! campaign seed, the mutant id and the sample id, so verdicts do not depend
//! on evaluation order and parallel runs reproduce serial ones bit for bit.
//! The original model's own predictions use the reserved mutant id
//! `"original"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::CircuitError;
use crate::data::{Dataset, FeatureKind};
use crate::mutate::{Family, Mutant, MutantPayload, MutateError};
use crate::seed;
use crate::sim::{self, ShotCounts, SimError};
use crate::zoo::{QnnModel, ZooError};

/// Probability below which a bitstring counts as outside the original
/// support for WOO purposes.
pub const WOO_THRESHOLD: f64 = 1e-12;

/// Default OPO tolerance.
pub const OPO_TOLERANCE: f64 = 0.05;

/// Reserved mutant id for the unmutated model's predictions.
pub const ORIGINAL_ID: &str = "original";

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("empty test suite: the model predicts none of the {tested} test sample(s) correctly")]
    EmptyTestSuite { tested: usize },
    #[error("suite was built for model {expected}, got {got}")]
    FingerprintMismatch { expected: String, got: String },
    #[error("bitstring width mismatch: original {original}, mutant {mutant}")]
    WidthMismatch { original: usize, mutant: usize },
    #[error("opo precondition violated: bitstring `{0}` is outside the original support")]
    OpoPrecondition(String),
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Mutate(#[from] MutateError),
}

/// One retained test-suite sample. `sample_id` is the index into the test
/// set the suite was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSample {
    pub sample_id: usize,
    pub features: Vec<f64>,
    pub label: usize,
}

/// The samples the original model classifies correctly, plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub samples: Vec<SuiteSample>,
    pub fingerprint: String,
    pub rejected: Vec<usize>,
}

impl TestSuite {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn eval_seed(campaign_seed: u64, mutant_id: &str, sample_id: usize) -> u64 {
    seed::derive2(campaign_seed, "eval", mutant_id, sample_id as u64)
}

/// Predict every test sample with the original model and keep the correct
/// ones. Errors when nothing survives: such a model cannot kill anything
/// and the campaign must not silently report MS 0.
pub fn build_test_suite(
    model: &QnnModel,
    weights: &[f64],
    test_set: &Dataset,
    shots: u64,
    campaign_seed: u64,
) -> Result<TestSuite, OracleError> {
    let mut samples = Vec::new();
    let mut rejected = Vec::new();
    for (sample_id, (features, &label)) in
        test_set.samples.iter().zip(&test_set.labels).enumerate()
    {
        let seed = eval_seed(campaign_seed, ORIGINAL_ID, sample_id);
        let predicted = model.predict(features, weights, shots, seed)?;
        if predicted == label {
            samples.push(SuiteSample { sample_id, features: features.clone(), label });
        } else {
            rejected.push(sample_id);
        }
    }
    if samples.is_empty() {
        return Err(OracleError::EmptyTestSuite { tested: test_set.len() });
    }
    Ok(TestSuite { samples, fingerprint: model.fingerprint(), rejected })
}

/// Outcome of evaluating one mutant against the whole suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Killed { first_failing: usize },
    Survived,
    Incompetent { reason: String },
}

impl Verdict {
    pub fn is_killed(&self) -> bool {
        matches!(self, Verdict::Killed { .. })
    }

    pub fn is_incompetent(&self) -> bool {
        matches!(self, Verdict::Incompetent { .. })
    }
}

/// Verdict plus the per-sample prediction row backing the kill matrix.
/// `predictions[i]` corresponds to `suite.samples[i]`; `None` means the
/// sample was never simulated (incompetent mutants).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantResult {
    pub mutant_id: String,
    pub family: Family,
    pub input_mutation: bool,
    pub verdict: Verdict,
    pub predictions: Vec<Option<usize>>,
}

/// Evaluate one mutant on every suite sample. Circuit mutants run the
/// mutated circuit on the sample's features; input-transform mutants run
/// the ORIGINAL circuit on transformed features, so their kills measure
/// robustness of the trained decision boundary rather than a circuit
/// defect. The verdict is Killed at the first failing sample, but every
/// sample is still simulated so the kill matrix is complete.
pub fn evaluate_mutant(
    mutant: &Mutant,
    model: &QnnModel,
    weights: &[f64],
    suite: &TestSuite,
    kind: FeatureKind,
    shots: u64,
    campaign_seed: u64,
) -> Result<MutantResult, OracleError> {
    let fingerprint = model.fingerprint();
    if suite.fingerprint != fingerprint {
        return Err(OracleError::FingerprintMismatch {
            expected: suite.fingerprint.clone(),
            got: fingerprint,
        });
    }
    let input_mutation = matches!(mutant.payload, Some(MutantPayload::InputTransform(_)));
    let incompetent = |reason: String| MutantResult {
        mutant_id: mutant.id.clone(),
        family: mutant.family,
        input_mutation,
        verdict: Verdict::Incompetent { reason },
        predictions: vec![None; suite.samples.len()],
    };
    if let Some(reason) = &mutant.incompetent {
        return Ok(incompetent(reason.clone()));
    }
    let payload = match &mutant.payload {
        Some(p) => p,
        None => return Ok(incompetent("mutant has no payload".to_string())),
    };

    let mut predictions = Vec::with_capacity(suite.samples.len());
    let mut first_failing = None;
    for sample in &suite.samples {
        let seed = eval_seed(campaign_seed, &mutant.id, sample.sample_id);
        let predicted = match payload {
            MutantPayload::Circuit(circuit) => {
                let bindings = model.bindings(&sample.features, weights)?;
                let bound = circuit.bind(&bindings)?;
                sim::predict_bound(&bound, model.n_classes, shots, seed)?
            }
            MutantPayload::InputTransform(transform) => {
                let transformed = transform.apply(&sample.features, kind)?;
                match model.predict(&transformed, weights, shots, seed) {
                    Ok(p) => p,
                    // a transform can push a sample outside the model's
                    // domain (e.g. a crop zeroing an amplitude-encoded
                    // vector); that makes the mutant unexecutable, not killed
                    Err(e) => return Ok(incompetent(e.to_string())),
                }
            }
        };
        if predicted != sample.label && first_failing.is_none() {
            first_failing = Some(sample.sample_id);
        }
        predictions.push(Some(predicted));
    }
    let verdict = match first_failing {
        Some(first_failing) => Verdict::Killed { first_failing },
        None => Verdict::Survived,
    };
    Ok(MutantResult {
        mutant_id: mutant.id.clone(),
        family: mutant.family,
        input_mutation,
        verdict,
        predictions,
    })
}

/// Per-operator tally. `killed + survived + incompetent = total`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorRow {
    pub operator: String,
    pub killed: usize,
    pub survived: usize,
    pub incompetent: usize,
    pub total: usize,
}

impl OperatorRow {
    /// Table cell in killed/total form.
    pub fn cell(&self) -> String {
        format!("{}/{}", self.killed, self.total)
    }
}

/// Aggregate scores. The mutation score is the percentage of killed
/// mutants over competent ones; with zero competent mutants it is
/// undefined and left as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mutation_score: Option<f64>,
    pub survival_rate: Option<f64>,
    pub killed: usize,
    pub survived: usize,
    pub incompetent: usize,
    pub total: usize,
    pub per_operator: Vec<OperatorRow>,
}

/// Tally results into per-operator rows and the overall mutation score.
/// `families` fixes the row set (and order), so selected operators that
/// produced no mutants still appear as 0/0 rows.
pub fn score(results: &[MutantResult], families: &[Family]) -> Score {
    let mut rows: Vec<OperatorRow> = families
        .iter()
        .map(|f| OperatorRow {
            operator: f.as_str().to_string(),
            killed: 0,
            survived: 0,
            incompetent: 0,
            total: 0,
        })
        .collect();
    let index: BTreeMap<Family, usize> =
        families.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut killed = 0;
    let mut survived = 0;
    let mut incompetent = 0;
    for result in results {
        let row = index
            .get(&result.family)
            .map(|&i| &mut rows[i])
            .expect("every result belongs to a selected family");
        row.total += 1;
        match &result.verdict {
            Verdict::Killed { .. } => {
                row.killed += 1;
                killed += 1;
            }
            Verdict::Survived => {
                row.survived += 1;
                survived += 1;
            }
            Verdict::Incompetent { .. } => {
                row.incompetent += 1;
                incompetent += 1;
            }
        }
    }
    let competent = killed + survived;
    let mutation_score = (competent > 0).then(|| killed as f64 / competent as f64 * 100.0);
    Score {
        mutation_score,
        survival_rate: mutation_score.map(|ms| 100.0 - ms),
        killed,
        survived,
        incompetent,
        total: results.len(),
        per_operator: rows,
    }
}

fn counts_width(counts: &ShotCounts) -> Option<usize> {
    counts.keys().next().map(|k| k.len())
}

fn dist_width(dist: &BTreeMap<String, f64>) -> Option<usize> {
    dist.keys().next().map(|k| k.len())
}

fn check_widths(
    original: &BTreeMap<String, f64>,
    mutant: &ShotCounts,
) -> Result<(), OracleError> {
    if let (Some(o), Some(m)) = (dist_width(original), counts_width(mutant)) {
        if o != m {
            return Err(OracleError::WidthMismatch { original: o, mutant: m });
        }
    }
    Ok(())
}

/// Wrong Output Oracle: the mutant is killed iff it emitted any bitstring
/// that has (numerically) zero probability under the original circuit's
/// exact output distribution.
pub fn woo(
    original: &BTreeMap<String, f64>,
    mutant: &ShotCounts,
) -> Result<bool, OracleError> {
    check_widths(original, mutant)?;
    Ok(mutant
        .iter()
        .filter(|(_, &n)| n > 0)
        .any(|(bits, _)| original.get(bits).copied().unwrap_or(0.0) < WOO_THRESHOLD))
}

/// Deviation metric for [`opo`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpoMetric {
    /// Any single bitstring's |empirical - exact| exceeds the tolerance.
    PerBitstring,
    /// Total variation distance exceeds the tolerance.
    TotalVariation,
}

/// Output Probability Oracle: with every mutant bitstring inside the
/// original support (WOO must pass first; violating bitstrings are an
/// error here), the mutant is killed iff the empirical shot distribution
/// deviates from the original's exact one by strictly more than
/// `tolerance`.
pub fn opo(
    original: &BTreeMap<String, f64>,
    mutant: &ShotCounts,
    tolerance: f64,
    metric: OpoMetric,
) -> Result<bool, OracleError> {
    check_widths(original, mutant)?;
    if let Some((bits, _)) = mutant
        .iter()
        .filter(|(_, &n)| n > 0)
        .find(|(bits, _)| original.get(*bits).copied().unwrap_or(0.0) < WOO_THRESHOLD)
    {
        return Err(OracleError::OpoPrecondition(bits.clone()));
    }
    let shots: u64 = mutant.values().sum();
    if shots == 0 {
        return Err(OracleError::Sim(SimError::ZeroShots));
    }
    let freq = |bits: &str| *mutant.get(bits).unwrap_or(&0) as f64 / shots as f64;
    let killed = match metric {
        OpoMetric::PerBitstring => {
            // union of supports: an original bitstring the mutant never
            // emitted still deviates by its full probability
            original.iter().any(|(bits, &p)| (freq(bits) - p).abs() > tolerance)
                || mutant
                    .keys()
                    .any(|bits| (freq(bits) - original.get(bits).copied().unwrap_or(0.0)).abs() > tolerance)
        }
        OpoMetric::TotalVariation => {
            let mut keys: Vec<&String> = original.keys().collect();
            for k in mutant.keys() {
                if !original.contains_key(k) {
                    keys.push(k);
                }
            }
            let tv: f64 = keys
                .iter()
                .map(|bits| (freq(bits) - original.get(*bits).copied().unwrap_or(0.0)).abs())
                .sum::<f64>()
                / 2.0;
            tv > tolerance
        }
    };
    Ok(killed)
}
