//! End-to-end campaign driver: JSON config schema, the staged pipeline
//! (data, training, generation, dedup, QASM export, evaluation, scoring),
//! artifact writers and the text report renderer.
//!
//! Everything downstream of the config is deterministic in (config, seeds):
//! rerunning a campaign produces byte-identical `report.json`, manifests and
//! QASM files. Wall-clock timings, which cannot be deterministic, go to a
//! separate `timings.json`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{self, Dataset, FeatureKind};
use crate::mutate::{
    self, Family, Generated, Mutant, MutantPayload, MutateConfig, RedundancyReport,
};
use crate::oracle::{self, MutantResult, Score, TestSuite, Verdict};
use crate::qasm;
use crate::zoo::{self, AnsatzKind, FeatureMapKind, QnnModel, SpsaConfig};

/// Any stage failure, tagged with the stage that produced it.
#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct CampaignError {
    pub stage: &'static str,
    pub message: String,
}

fn staged<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> CampaignError {
    move |e| CampaignError { stage, message: e.to_string() }
}

fn config_err(message: impl Into<String>) -> CampaignError {
    CampaignError { stage: "config", message: message.into() }
}

/// Where the samples come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Synthetic Gaussian blobs, one cluster per class.
    Blobs {
        n_per_class: usize,
        n_features: usize,
        n_classes: usize,
        separation: f64,
        seed: u64,
    },
    /// CSV with a header row; `image = [h, w]` reinterprets the feature
    /// columns as a row-major image.
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default)]
        image: Option<[usize; 2]>,
    },
}

impl DataSource {
    fn name(&self) -> String {
        match self {
            DataSource::Blobs { .. } => "blobs".to_string(),
            DataSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".to_string()),
        }
    }
}

/// Dataset acquisition and preprocessing. Steps run in the declared order:
/// resize (images), PCA, min-max scaling, then the seeded train/test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: DataSource,
    #[serde(default)]
    pub resize: Option<[usize; 2]>,
    #[serde(default)]
    pub pca: Option<usize>,
    #[serde(default)]
    pub scale: Option<[f64; 2]>,
    pub test_size: usize,
    pub split_seed: u64,
}

/// Feature map + ansatz selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n_qubits: usize,
    pub n_classes: usize,
    pub feature_map: FeatureMapKind,
    #[serde(default = "one")]
    pub feature_map_reps: usize,
    #[serde(default)]
    pub full_entanglement: bool,
    pub ansatz: AnsatzKind,
    #[serde(default = "one")]
    pub ansatz_reps: usize,
}

fn one() -> usize {
    1
}

/// Train in-process or reuse a saved weights file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainingSpec {
    Spsa {
        seed: u64,
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_train_shots")]
        shots: u64,
        #[serde(default = "default_a")]
        a: f64,
        #[serde(default = "default_c")]
        c: f64,
    },
    Weights { path: PathBuf },
}

fn default_iterations() -> usize {
    SpsaConfig::default().iterations
}

fn default_train_shots() -> u64 {
    SpsaConfig::default().shots
}

fn default_a() -> f64 {
    SpsaConfig::default().a
}

fn default_c() -> f64 {
    SpsaConfig::default().c
}

fn default_shots() -> u64 {
    1000
}

fn default_out() -> PathBuf {
    PathBuf::from("qmt-out")
}

/// Full campaign configuration. Unknown keys are rejected so typos fail
/// before any work starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub training: TrainingSpec,
    /// Operator names: the twelve family names (`apc`, `dfc`, `apgc`, `ls`,
    /// `ils`, `ala`, `ald`, `add`, `delete`, `change`, `measadd`,
    /// `measremove`) or the groups `directed`, `baseline`, `all`.
    pub operators: Vec<String>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub mutation: MutateConfig,
}

impl CampaignConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CampaignError> {
        let text = fs::read_to_string(path.as_ref()).map_err(staged("config"))?;
        let config: CampaignConfig = serde_json::from_str(&text).map_err(staged("config"))?;
        config.validate()?;
        Ok(config)
    }

    /// Semantic checks beyond the serde schema.
    pub fn validate(&self) -> Result<(), CampaignError> {
        self.families()?;
        if self.shots == 0 {
            return Err(config_err("shots must be positive"));
        }
        if self.dataset.test_size == 0 {
            return Err(config_err("test_size must be positive"));
        }
        if let Some([lo, hi]) = self.dataset.scale {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(config_err(format!("scale range [{lo}, {hi}] is empty")));
            }
        }
        if let Some(0) = self.dataset.pca {
            return Err(config_err("pca must keep at least one component"));
        }
        if let TrainingSpec::Spsa { iterations: 0, .. } = self.training {
            return Err(config_err("training iterations must be positive"));
        }
        Ok(())
    }

    /// Expand the operator selection into families, in fixed report order.
    pub fn families(&self) -> Result<Vec<Family>, CampaignError> {
        if self.operators.is_empty() {
            return Err(config_err("operator selection is empty"));
        }
        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        let mut add = |families: &[Family]| {
            for f in families {
                chosen.insert(Family::ALL.iter().position(|g| g == f).unwrap());
            }
        };
        for name in &self.operators {
            match name.as_str() {
                "apc" => add(&[Family::Apc]),
                "dfc" => add(&[Family::Dfc]),
                "apgc" => add(&[Family::Apgc]),
                "ls" => add(&[Family::Ls]),
                "ils" => add(&[Family::Ils]),
                "ala" => add(&[Family::Ala]),
                "ald" => add(&[Family::Ald]),
                "add" => add(&[Family::GateAdd]),
                "delete" => add(&[Family::GateRemove]),
                "change" => add(&[Family::GateReplace]),
                "measadd" => add(&[Family::MeasAdd]),
                "measremove" => add(&[Family::MeasRemove]),
                "directed" => add(&Family::DIRECTED),
                "baseline" => add(&Family::BASELINE),
                "all" => add(&Family::ALL),
                other => {
                    return Err(config_err(format!(
                        "unknown operator `{other}`; expected apc, dfc, apgc, ls, ils, ala, \
                         ald, add, delete, change, measadd, measremove, directed, baseline, \
                         or all"
                    )));
                }
            }
        }
        Ok(chosen.into_iter().map(|i| Family::ALL[i]).collect())
    }
}

/// Data and model, ready for training and mutation.
pub struct Prepared {
    pub train_set: Dataset,
    pub test_set: Dataset,
    pub model: QnnModel,
    pub families: Vec<Family>,
}

/// Acquire, preprocess and split the data, then build the model.
pub fn prepare(config: &CampaignConfig) -> Result<Prepared, CampaignError> {
    let stage = staged::<String>("data");
    let mut dataset = match &config.dataset.source {
        DataSource::Blobs { n_per_class, n_features, n_classes, separation, seed } => {
            data::synth_blobs(*n_per_class, *n_features, *n_classes, *separation, *seed)
        }
        DataSource::Csv { path, label_column, image } => {
            let loaded = data::load_csv(path, label_column).map_err(staged("data"))?;
            match image {
                Some([h, w]) => Dataset::new(
                    loaded.samples,
                    loaded.labels,
                    loaded.n_classes,
                    FeatureKind::Image { height: *h, width: *w },
                )
                .map_err(staged("data"))?,
                None => loaded,
            }
        }
    };
    if let Some([h, w]) = config.dataset.resize {
        dataset = data::resize_dataset(&dataset, h, w).map_err(staged("data"))?;
    }
    if let Some(k) = config.dataset.pca {
        dataset = data::pca_reduce(&dataset, k).map_err(staged("data"))?.0;
    }
    if let Some([lo, hi]) = config.dataset.scale {
        dataset = data::scale_features(&dataset, lo, hi);
    }
    let (train_set, test_set) =
        data::split(&dataset, config.dataset.test_size, config.dataset.split_seed)
            .map_err(staged("data"))?;

    let spec = &config.model;
    if spec.n_classes != dataset.n_classes {
        return Err(stage(format!(
            "model declares {} class(es) but the dataset has {}",
            spec.n_classes, dataset.n_classes
        )));
    }
    let fm = zoo::build_feature_map(
        spec.feature_map,
        dataset.n_features(),
        spec.n_qubits,
        spec.feature_map_reps,
        spec.full_entanglement,
    )
    .map_err(staged("model"))?;
    let ansatz = zoo::build_ansatz(spec.ansatz, spec.n_qubits, spec.ansatz_reps)
        .map_err(staged("model"))?;
    let model = zoo::assemble(&fm, &ansatz, spec.n_classes).map_err(staged("model"))?;
    let families = config.families()?;
    Ok(Prepared { train_set, test_set, model, families })
}

fn weights_path(out: &Path) -> PathBuf {
    out.join("weights.json")
}

/// Train per config, or load saved weights. When `allow_train` is false
/// (stages that must not retrain, like `mutate`/`evaluate`), SPSA configs
/// fall back to the out directory's `weights.json` from a prior train run.
pub fn obtain_weights(
    config: &CampaignConfig,
    prepared: &Prepared,
    allow_train: bool,
) -> Result<Vec<f64>, CampaignError> {
    match &config.training {
        TrainingSpec::Weights { path } => {
            zoo::load_weights(&prepared.model, path).map_err(staged("weights"))
        }
        TrainingSpec::Spsa { seed, iterations, shots, a, c } => {
            if allow_train {
                let spsa = SpsaConfig {
                    iterations: *iterations,
                    shots: *shots,
                    a: *a,
                    c: *c,
                    ..Default::default()
                };
                let weights = zoo::train_spsa(&prepared.model, &prepared.train_set, &spsa, *seed)
                    .map_err(staged("train"))?;
                fs::create_dir_all(&config.out).map_err(staged("train"))?;
                zoo::save_weights(&prepared.model, &weights, weights_path(&config.out))
                    .map_err(staged("train"))?;
                Ok(weights)
            } else {
                let path = weights_path(&config.out);
                if !path.exists() {
                    return Err(CampaignError {
                        stage: "weights",
                        message: format!(
                            "{} not found; run the train stage first or point training at a weights file",
                            path.display()
                        ),
                    });
                }
                zoo::load_weights(&prepared.model, path).map_err(staged("weights"))
            }
        }
    }
}

/// Run the selected generators in fixed family order.
pub fn generate_selected(
    model: &QnnModel,
    kind: FeatureKind,
    config: &MutateConfig,
    campaign_seed: u64,
    families: &[Family],
) -> Generated {
    let sel: BTreeSet<Family> = families.iter().copied().collect();
    let mut out = Generated::default();
    if sel.contains(&Family::Apc) {
        out.merge(mutate::gen_apc(model, config));
    }
    if sel.contains(&Family::Dfc) {
        out.merge(mutate::gen_dfc(model, kind, config));
    }
    if sel.contains(&Family::Apgc) {
        out.merge(mutate::gen_apgc(model));
    }
    if sel.contains(&Family::Ls) {
        out.merge(mutate::gen_ls(model));
    }
    if sel.contains(&Family::Ils) {
        out.merge(mutate::gen_ils(model, config));
    }
    if sel.contains(&Family::Ala) {
        out.merge(mutate::gen_ala(model, campaign_seed));
    }
    if sel.contains(&Family::Ald) {
        out.merge(mutate::gen_ald(model));
    }
    if Family::BASELINE[..3].iter().any(|f| sel.contains(f)) {
        let g = mutate::gen_baseline_gates(model, config);
        out.notes.extend(g.notes);
        out.mutants.extend(g.mutants.into_iter().filter(|m| sel.contains(&m.family)));
    }
    if sel.contains(&Family::MeasAdd) || sel.contains(&Family::MeasRemove) {
        let g = mutate::gen_baseline_measurement(model);
        out.notes.extend(g.notes);
        out.mutants.extend(g.mutants.into_iter().filter(|m| sel.contains(&m.family)));
    }
    out
}

/// Per-mutant verdict row for the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub id: String,
    pub operator: String,
    pub input_mutation: bool,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failing: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn verdict_row(result: &MutantResult) -> VerdictRow {
    let (status, first_failing, reason) = match &result.verdict {
        Verdict::Killed { first_failing } => ("killed", Some(*first_failing), None),
        Verdict::Survived => ("survived", None, None),
        Verdict::Incompetent { reason } => ("incompetent", None, Some(reason.clone())),
    };
    VerdictRow {
        id: result.mutant_id.clone(),
        operator: result.family.as_str().to_string(),
        input_mutation: result.input_mutation,
        status: status.to_string(),
        first_failing,
        reason,
    }
}

/// The deterministic campaign outcome serialized to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub dataset: String,
    pub feature_map: String,
    pub ansatz: String,
    pub n_qubits: usize,
    pub n_classes: usize,
    pub shots: u64,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub suite_size: usize,
    pub rejected_samples: Vec<usize>,
    pub generated: usize,
    pub kept: usize,
    pub discarded: usize,
    pub score: Score,
    pub notes: Vec<String>,
    pub verdicts: Vec<VerdictRow>,
}

/// Wall-clock stage durations, written to `timings.json` so that
/// `report.json` stays bit-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub train_seconds: f64,
    pub generation_seconds: f64,
    pub evaluation_seconds: f64,
    pub total_seconds: f64,
}

fn write_text(path: &Path, text: &str) -> Result<(), CampaignError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(staged("write"))?;
    }
    fs::write(path, text).map_err(staged("write"))
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String, CampaignError> {
    let mut text = serde_json::to_string_pretty(value).map_err(staged("write"))?;
    text.push('\n');
    Ok(text)
}

/// Export bound QASM for every circuit mutant under `out/qasm/<operator>/`.
/// Binding uses the trained weights and the first suite sample's features
/// (input-transform mutants have no circuit of their own and are skipped).
/// Returns each mutant's relative path.
pub fn export_qasm_tree(
    out: &Path,
    mutants: &[Mutant],
    model: &QnnModel,
    weights: &[f64],
    suite: &TestSuite,
) -> Result<Vec<Option<String>>, CampaignError> {
    let features = &suite.samples[0].features;
    let bindings = model.bindings(features, weights).map_err(staged("qasm"))?;
    let mut paths = Vec::with_capacity(mutants.len());
    for mutant in mutants {
        let path = match &mutant.payload {
            Some(MutantPayload::Circuit(circuit)) => {
                let bound = circuit.bind(&bindings).map_err(staged("qasm"))?;
                let text = qasm::emit(&bound).map_err(staged("qasm"))?;
                let rel = format!("qasm/{}/{}.qasm", mutant.family.as_str(), mutant.id);
                write_text(&out.join(&rel), &text)?;
                Some(rel)
            }
            _ => None,
        };
        paths.push(path);
    }
    Ok(paths)
}

fn write_mutant_manifest(
    out: &Path,
    mutants: &[Mutant],
    qasm_paths: &[Option<String>],
) -> Result<(), CampaignError> {
    #[derive(Serialize)]
    struct Record<'a> {
        id: &'a str,
        operator: &'a str,
        descriptor: &'a mutate::OperatorKind,
        incompetent: &'a Option<String>,
        qasm: &'a Option<String>,
    }
    let mut text = String::new();
    for (mutant, qasm_path) in mutants.iter().zip(qasm_paths) {
        let record = Record {
            id: &mutant.id,
            operator: mutant.family.as_str(),
            descriptor: &mutant.operator,
            incompetent: &mutant.incompetent,
            qasm: qasm_path,
        };
        text.push_str(&serde_json::to_string(&record).map_err(staged("write"))?);
        text.push('\n');
    }
    write_text(&out.join("mutants.jsonl"), &text)
}

fn write_kill_matrix(
    out: &Path,
    results: &[MutantResult],
    suite: &TestSuite,
) -> Result<(), CampaignError> {
    let mut text = String::from("mutant_id");
    for s in &suite.samples {
        write!(text, ",s{}", s.sample_id).unwrap();
    }
    text.push('\n');
    for result in results {
        if result.verdict.is_incompetent() {
            continue;
        }
        text.push_str(&result.mutant_id);
        for (prediction, sample) in result.predictions.iter().zip(&suite.samples) {
            let cell = match prediction {
                Some(p) if *p != sample.label => "K",
                Some(_) => "S",
                None => unreachable!("competent mutants have full prediction rows"),
            };
            write!(text, ",{cell}").unwrap();
        }
        text.push('\n');
    }
    write_text(&out.join("kill_matrix.csv"), &text)
}

fn write_predictions(
    out: &Path,
    results: &[MutantResult],
    suite: &TestSuite,
) -> Result<(), CampaignError> {
    let mut text = String::from("sample_id,true_label,original");
    for result in results {
        write!(text, ",{}", result.mutant_id).unwrap();
    }
    text.push('\n');
    for (i, s) in suite.samples.iter().enumerate() {
        // the suite keeps correctly predicted samples only, so the original
        // prediction column equals the true label by construction
        write!(text, "{},{},{}", s.sample_id, s.label, s.label).unwrap();
        for result in results {
            match result.predictions[i] {
                Some(p) => write!(text, ",{p}").unwrap(),
                None => text.push(','),
            }
        }
        text.push('\n');
    }
    write_text(&out.join("predictions.csv"), &text)
}

fn write_report_csv(out: &Path, report: &CampaignReport) -> Result<(), CampaignError> {
    let mut header = String::from("dataset,feature_map,ansatz,n_qubits,suite_size,mutation_score");
    let mut row = format!(
        "{},{},{},{},{},{}",
        report.dataset,
        report.feature_map,
        report.ansatz,
        report.n_qubits,
        report.suite_size,
        report
            .score
            .mutation_score
            .map(|v| v.to_string())
            .unwrap_or_else(|| "n/a".to_string())
    );
    for op in &report.score.per_operator {
        write!(header, ",{}", op.operator).unwrap();
        write!(row, ",{}", op.cell()).unwrap();
    }
    write_text(&out.join("report.csv"), &format!("{header}\n{row}\n"))
}

/// Render the report as a fixed-width text table: one summary row with the
/// mutation score and killed/total cells per operator, a detail block, and
/// timings when available.
pub fn render_report(report: &CampaignReport, timings: Option<&Timings>) -> String {
    let ms = report
        .score
        .mutation_score
        .map(|v| format!("{v:.2}"))
        .unwrap_or_else(|| "n/a".to_string());
    let mut headers = vec![
        "dataset".to_string(),
        "feature_map".to_string(),
        "ansatz".to_string(),
        "qubits".to_string(),
        "suite".to_string(),
        "MS".to_string(),
    ];
    let mut cells = vec![
        report.dataset.clone(),
        report.feature_map.clone(),
        report.ansatz.clone(),
        report.n_qubits.to_string(),
        report.suite_size.to_string(),
        ms,
    ];
    for op in &report.score.per_operator {
        headers.push(op.operator.clone());
        cells.push(op.cell());
    }
    let widths: Vec<usize> = headers
        .iter()
        .zip(&cells)
        .map(|(h, c)| h.len().max(c.len()))
        .collect();
    let mut text = String::new();
    for (h, &w) in headers.iter().zip(&widths) {
        write!(text, "{h:<w$}  ").unwrap();
    }
    text.push('\n');
    for (c, &w) in cells.iter().zip(&widths) {
        write!(text, "{c:<w$}  ").unwrap();
    }
    text.push('\n');
    writeln!(
        text,
        "\nmutants: {} generated, {} kept ({} redundant), {} killed / {} survived / {} incompetent",
        report.generated,
        report.kept,
        report.discarded,
        report.score.killed,
        report.score.survived,
        report.score.incompetent
    )
    .unwrap();
    if let Some(t) = timings {
        writeln!(
            text,
            "train {:.2} s, generation {:.2} s, evaluation {:.2} s, total {:.2} s",
            t.train_seconds, t.generation_seconds, t.evaluation_seconds, t.total_seconds
        )
        .unwrap();
    }
    text
}

struct EvaluationOutcome {
    results: Vec<MutantResult>,
    suite: TestSuite,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_all(
    mutants: &[Mutant],
    model: &QnnModel,
    weights: &[f64],
    suite: TestSuite,
    kind: FeatureKind,
    shots: u64,
    campaign_seed: u64,
    workers: Option<usize>,
) -> Result<EvaluationOutcome, CampaignError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(staged("evaluate"))?;
    let results: Result<Vec<MutantResult>, _> = pool.install(|| {
        mutants
            .par_iter()
            .map(|m| {
                oracle::evaluate_mutant(m, model, weights, &suite, kind, shots, campaign_seed)
            })
            .collect()
    });
    Ok(EvaluationOutcome { results: results.map_err(staged("evaluate"))?, suite })
}

fn assemble_report(
    config: &CampaignConfig,
    prepared: &Prepared,
    outcome: &EvaluationOutcome,
    generated: usize,
    redundancy: &RedundancyReport,
    notes: &[String],
) -> CampaignReport {
    CampaignReport {
        dataset: config.dataset.source.name(),
        feature_map: prepared.model.feature_map.as_str().to_string(),
        ansatz: prepared.model.ansatz.as_str().to_string(),
        n_qubits: prepared.model.circuit.n_qubits(),
        n_classes: prepared.model.n_classes,
        shots: config.shots,
        seed: config.seed,
        train_size: prepared.train_set.len(),
        test_size: prepared.test_set.len(),
        suite_size: outcome.suite.len(),
        rejected_samples: outcome.suite.rejected.clone(),
        generated,
        kept: redundancy.kept,
        discarded: redundancy.discarded.len(),
        score: oracle::score(&outcome.results, &prepared.families),
        notes: notes.to_vec(),
        verdicts: outcome.results.iter().map(verdict_row).collect(),
    }
}

/// The whole pipeline: prepare, train (or load), suite, generate, dedup,
/// QASM export, evaluate, score, write artifacts. Returns the report and
/// the measured timings.
pub fn run_campaign(
    config: &CampaignConfig,
    workers: Option<usize>,
) -> Result<(CampaignReport, Timings), CampaignError> {
    config.validate()?;
    let total_start = Instant::now();
    let prepared = prepare(config)?;
    let kind = prepared.test_set.kind;

    let train_start = Instant::now();
    let weights = obtain_weights(config, &prepared, true)?;
    let train_seconds = train_start.elapsed().as_secs_f64();

    let gen_start = Instant::now();
    let generated = generate_selected(
        &prepared.model,
        kind,
        &config.mutation,
        config.seed,
        &prepared.families,
    );
    let total_generated = generated.mutants.len();
    let (kept, redundancy) = mutate::dedup(generated.mutants);
    let generation_seconds = gen_start.elapsed().as_secs_f64();

    let eval_start = Instant::now();
    let suite = oracle::build_test_suite(
        &prepared.model,
        &weights,
        &prepared.test_set,
        config.shots,
        config.seed,
    )
    .map_err(staged("suite"))?;
    let qasm_paths = export_qasm_tree(&config.out, &kept, &prepared.model, &weights, &suite)?;
    let outcome = evaluate_all(
        &kept,
        &prepared.model,
        &weights,
        suite,
        kind,
        config.shots,
        config.seed,
        workers,
    )?;
    let evaluation_seconds = eval_start.elapsed().as_secs_f64();

    let report = assemble_report(
        config,
        &prepared,
        &outcome,
        total_generated,
        &redundancy,
        &generated.notes,
    );
    let timings = Timings {
        train_seconds,
        generation_seconds,
        evaluation_seconds,
        total_seconds: total_start.elapsed().as_secs_f64(),
    };

    write_text(&config.out.join("report.json"), &json_pretty(&report)?)?;
    write_text(&config.out.join("timings.json"), &json_pretty(&timings)?)?;
    write_text(&config.out.join("redundancy.json"), &json_pretty(&redundancy)?)?;
    write_report_csv(&config.out, &report)?;
    write_mutant_manifest(&config.out, &kept, &qasm_paths)?;
    write_kill_matrix(&config.out, &outcome.results, &outcome.suite)?;
    write_predictions(&config.out, &outcome.results, &outcome.suite)?;
    Ok((report, timings))
}

/// `train` stage: fit and save `weights.json`, report accuracies.
pub struct TrainSummary {
    pub weights_path: PathBuf,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

pub fn stage_train(config: &CampaignConfig) -> Result<TrainSummary, CampaignError> {
    config.validate()?;
    let prepared = prepare(config)?;
    let weights = obtain_weights(config, &prepared, true)?;
    if let TrainingSpec::Weights { .. } = &config.training {
        // nothing was trained, but saving lets later stages find the file
        fs::create_dir_all(&config.out).map_err(staged("train"))?;
        zoo::save_weights(&prepared.model, &weights, weights_path(&config.out))
            .map_err(staged("train"))?;
    }
    let train_accuracy =
        zoo::accuracy(&prepared.model, &prepared.train_set, &weights, config.shots, config.seed)
            .map_err(staged("train"))?;
    let test_accuracy =
        zoo::accuracy(&prepared.model, &prepared.test_set, &weights, config.shots, config.seed)
            .map_err(staged("train"))?;
    Ok(TrainSummary { weights_path: weights_path(&config.out), train_accuracy, test_accuracy })
}

/// `mutate` stage: generate, dedup, export manifest + QASM, no evaluation.
pub struct MutateSummary {
    pub generated: usize,
    pub kept: usize,
    pub discarded: usize,
    pub notes: Vec<String>,
}

pub fn stage_mutate(config: &CampaignConfig) -> Result<MutateSummary, CampaignError> {
    config.validate()?;
    let prepared = prepare(config)?;
    let kind = prepared.test_set.kind;
    let weights = obtain_weights(config, &prepared, false)?;
    let generated = generate_selected(
        &prepared.model,
        kind,
        &config.mutation,
        config.seed,
        &prepared.families,
    );
    let total = generated.mutants.len();
    let (kept, redundancy) = mutate::dedup(generated.mutants);
    let suite = oracle::build_test_suite(
        &prepared.model,
        &weights,
        &prepared.test_set,
        config.shots,
        config.seed,
    )
    .map_err(staged("suite"))?;
    let qasm_paths = export_qasm_tree(&config.out, &kept, &prepared.model, &weights, &suite)?;
    write_text(&config.out.join("redundancy.json"), &json_pretty(&redundancy)?)?;
    write_mutant_manifest(&config.out, &kept, &qasm_paths)?;
    Ok(MutateSummary {
        generated: total,
        kept: redundancy.kept,
        discarded: redundancy.discarded.len(),
        notes: generated.notes,
    })
}

/// `evaluate` stage: like `run` but reusing previously trained weights.
pub fn stage_evaluate(
    config: &CampaignConfig,
    workers: Option<usize>,
) -> Result<(CampaignReport, Timings), CampaignError> {
    config.validate()?;
    let total_start = Instant::now();
    let prepared = prepare(config)?;
    let kind = prepared.test_set.kind;
    let weights = obtain_weights(config, &prepared, false)?;

    let gen_start = Instant::now();
    let generated = generate_selected(
        &prepared.model,
        kind,
        &config.mutation,
        config.seed,
        &prepared.families,
    );
    let total_generated = generated.mutants.len();
    let (kept, redundancy) = mutate::dedup(generated.mutants);
    let generation_seconds = gen_start.elapsed().as_secs_f64();

    let eval_start = Instant::now();
    let suite = oracle::build_test_suite(
        &prepared.model,
        &weights,
        &prepared.test_set,
        config.shots,
        config.seed,
    )
    .map_err(staged("suite"))?;
    let qasm_paths = export_qasm_tree(&config.out, &kept, &prepared.model, &weights, &suite)?;
    let outcome = evaluate_all(
        &kept,
        &prepared.model,
        &weights,
        suite,
        kind,
        config.shots,
        config.seed,
        workers,
    )?;
    let evaluation_seconds = eval_start.elapsed().as_secs_f64();

    let report = assemble_report(
        config,
        &prepared,
        &outcome,
        total_generated,
        &redundancy,
        &generated.notes,
    );
    let timings = Timings {
        train_seconds: 0.0,
        generation_seconds,
        evaluation_seconds,
        total_seconds: total_start.elapsed().as_secs_f64(),
    };
    write_text(&config.out.join("report.json"), &json_pretty(&report)?)?;
    write_text(&config.out.join("timings.json"), &json_pretty(&timings)?)?;
    write_text(&config.out.join("redundancy.json"), &json_pretty(&redundancy)?)?;
    write_report_csv(&config.out, &report)?;
    write_mutant_manifest(&config.out, &kept, &qasm_paths)?;
    write_kill_matrix(&config.out, &outcome.results, &outcome.suite)?;
    write_predictions(&config.out, &outcome.results, &outcome.suite)?;
    Ok((report, timings))
}

/// `report` stage: load and render a previously written report.
pub fn stage_report(out: &Path) -> Result<String, CampaignError> {
    let report: CampaignReport = serde_json::from_str(
        &fs::read_to_string(out.join("report.json")).map_err(staged("report"))?,
    )
    .map_err(staged("report"))?;
    let timings: Option<Timings> = fs::read_to_string(out.join("timings.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    Ok(render_report(&report, timings.as_ref()))
}
