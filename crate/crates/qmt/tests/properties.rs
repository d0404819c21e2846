//! Cross-module properties checked against the independent dense reference
//! simulator in `common`, plus proptest coverage of the pure helpers.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use common::*;
use qmt::circuit::{Circuit, GateKind, Instruction, ParamExpr};
use qmt::data::FeatureKind;
use qmt::mutate::{self, FeatureOp, FeatureTransform, ImageOp, MutateConfig, OperatorKind};
use qmt::sim;
use qmt::zoo::{assemble, build_ansatz, build_feature_map, AnsatzKind, FeatureMapKind, QnnModel};

fn statevector(circuit: &Circuit) -> Vec<num_complex::Complex64> {
    sim::run(circuit).unwrap().amplitudes().to_vec()
}

#[test]
fn simulator_matches_dense_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..100 {
        let n = rng.gen_range(2..=5);
        let gates = rng.gen_range(1..=12);
        let circuit = random_circuit(&mut rng, n, gates);
        let bound = circuit.bind(&random_bindings(&mut rng, &circuit)).unwrap();
        let fast = statevector(&bound);
        let dense = ref_run(&bound);
        assert!(
            states_close(&fast, &dense, 1e-10),
            "case {case}: engine and reference disagree on\n{bound:?}"
        );
    }
}

#[test]
fn canonical_form_stable_under_moment_shuffle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.gen_range(2..=5);
        let gates = rng.gen_range(1..=14);
        let circuit = random_circuit(&mut rng, n, gates);
        let mut order: Vec<usize> = Vec::new();
        for moment in circuit.moments() {
            let mut moment = moment;
            moment.shuffle(&mut rng);
            order.extend(moment);
        }
        let shuffled: Vec<Instruction> =
            order.iter().map(|&i| circuit.instructions()[i].clone()).collect();
        let reordered = circuit.with_instructions(shuffled).unwrap();
        assert_eq!(circuit.canonical_form(), reordered.canonical_form());
        assert_eq!(circuit.canonical_hash(), reordered.canonical_hash());

        // same-moment gates act on disjoint qubits, so the reordering is an
        // exact commutation: statevectors match with no phase allowance
        let bindings = random_bindings(&mut rng, &circuit);
        let a = statevector(&circuit.bind(&bindings).unwrap());
        let b = statevector(&reordered.bind(&bindings).unwrap());
        assert!(states_close(&a, &b, 1e-12));
    }
}

#[test]
fn canonical_form_distinguishes_ordered_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut distinct = 0;
    for _ in 0..100 {
        let circuit = random_circuit(&mut rng, 3, 6);
        let mut swapped = circuit.instructions().to_vec();
        // swap two adjacent instructions that share a qubit; this changes
        // behavior in general and must change the canonical form whenever
        // the statevectors differ
        let Some(pos) = (0..swapped.len().saturating_sub(1)).find(|&i| {
            let a: BTreeSet<usize> = swapped[i].qubits.iter().copied().collect();
            swapped[i + 1].qubits.iter().any(|q| a.contains(q))
        }) else {
            continue;
        };
        swapped.swap(pos, pos + 1);
        let reordered = circuit.with_instructions(swapped).unwrap();
        let bindings = random_bindings(&mut rng, &circuit);
        let a = statevector(&circuit.bind(&bindings).unwrap());
        let b = statevector(&reordered.bind(&bindings).unwrap());
        if !states_equal_up_to_phase(&a, &b, 1e-9) {
            distinct += 1;
            assert_ne!(
                circuit.canonical_form(),
                reordered.canonical_form(),
                "behaviorally different circuits must canonicalize apart"
            );
        }
    }
    assert!(distinct > 20, "swap experiment produced too few behavioral changes: {distinct}");
}

#[test]
fn qasm_round_trip_arbitrary_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let gates = rng.gen_range(1..=15);
        let circuit = random_circuit(&mut rng, n, gates);
        let bound = circuit.bind(&random_bindings(&mut rng, &circuit)).unwrap();
        let text = qmt::qasm::emit(&bound).unwrap();
        let parsed = qmt::qasm::parse(&text).unwrap();
        assert_eq!(bound.canonical_form(), parsed.canonical_form(), "round trip drifted:\n{text}");
    }
}

fn zoo_model(fm: FeatureMapKind, ansatz: AnsatzKind, n: usize, reps: usize) -> QnnModel {
    let feature_map = build_feature_map(fm, n, n, 1, false).unwrap();
    let ansatz = build_ansatz(ansatz, n, reps).unwrap();
    assemble(&feature_map, &ansatz, 2).unwrap()
}

/// Independent per-layer census taken by walking section tags directly.
struct TagCensus {
    n_layers: usize,
    blocks_per_layer: Vec<usize>,
    layers_with_rotation_params: usize,
    rotation_role_layers: usize,
    entangle_role_layers: usize,
    ry: usize,
    rz: usize,
    rx: usize,
}

fn census(model: &QnnModel) -> TagCensus {
    use qmt::circuit::{BlockRole, SectionTag};
    let mut layers: BTreeSet<usize> = BTreeSet::new();
    let mut blocks: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut param_layers: BTreeSet<usize> = BTreeSet::new();
    let mut role_layers: BTreeSet<(usize, BlockRole)> = BTreeSet::new();
    let (mut ry, mut rz, mut rx) = (0, 0, 0);
    for inst in model.circuit.instructions() {
        match inst.kind {
            GateKind::Ry => ry += 1,
            GateKind::Rz => rz += 1,
            GateKind::Rx => rx += 1,
            _ => {}
        }
        if let SectionTag::AnsatzLayer { layer, block, role } = inst.tag {
            layers.insert(layer);
            blocks.insert((layer, block));
            role_layers.insert((layer, role));
            if role == BlockRole::Rotation && inst.angle.is_some() {
                param_layers.insert(layer);
            }
        }
    }
    let count_role = |role: BlockRole| role_layers.iter().filter(|(_, r)| *r == role).count();
    TagCensus {
        n_layers: layers.len(),
        blocks_per_layer: layers
            .iter()
            .map(|l| blocks.iter().filter(|(bl, _)| bl == l).count())
            .collect(),
        layers_with_rotation_params: param_layers.len(),
        rotation_role_layers: count_role(BlockRole::Rotation),
        entangle_role_layers: count_role(BlockRole::Entangle),
        ry,
        rz,
        rx,
    }
}

#[test]
fn operator_counts_match_independent_census() {
    let config = MutateConfig::default();
    let changes_per_layer = 2 + config.apc_add.len() + config.apc_scale.len();
    for ansatz in [AnsatzKind::Ra, AnsatzKind::Su2] {
        for n in [2usize, 4, 8] {
            for reps in [1usize, 2, 3] {
                let model = zoo_model(FeatureMapKind::Zfm, ansatz, n, reps);
                let cen = census(&model);
                let label = format!("{ansatz:?}({n}, reps={reps})");

                let apc = mutate::gen_apc(&model, &config).mutants.len();
                assert_eq!(apc, changes_per_layer * cen.layers_with_rotation_params, "{label} apc");

                let apgc = mutate::gen_apgc(&model).mutants.len();
                assert_eq!(apgc, cen.ry + cen.rx + 2 * cen.rz, "{label} apgc");

                let ls = mutate::gen_ls(&model).mutants.len();
                assert_eq!(ls, cen.n_layers * (cen.n_layers - 1) / 2, "{label} ls");

                let ils = mutate::gen_ils(&model, &config).mutants.len();
                let expected: usize = cen.blocks_per_layer.iter().map(|&b| b.saturating_sub(1)).sum();
                assert_eq!(ils, expected, "{label} ils");

                let ala = mutate::gen_ala(&model, 7).mutants.len();
                assert_eq!(ala, 2 * cen.n_layers, "{label} ala");

                let ald = mutate::gen_ald(&model).mutants.len();
                // one Full per layer plus one variant per role present in it
                let expected = cen.n_layers + cen.rotation_role_layers + cen.entangle_role_layers;
                assert_eq!(ald, expected, "{label} ald");
            }
        }
    }
}

#[test]
fn closed_form_counts_for_builders() {
    for n in [2usize, 4, 8] {
        for reps in [1usize, 2, 3] {
            let config = MutateConfig::default();
            let ra = zoo_model(FeatureMapKind::Zfm, AnsatzKind::Ra, n, reps);
            assert_eq!(mutate::gen_apc(&ra, &config).mutants.len(), 8 * (reps + 1));
            assert_eq!(mutate::gen_apgc(&ra).mutants.len(), n * (reps + 1));
            assert_eq!(mutate::gen_ls(&ra).mutants.len(), reps * (reps + 1) / 2);
            assert_eq!(mutate::gen_ils(&ra, &config).mutants.len(), reps);
            assert_eq!(mutate::gen_ala(&ra, 7).mutants.len(), 2 * (reps + 1));
            assert_eq!(mutate::gen_ald(&ra).mutants.len(), 3 * reps + 2);

            let su2 = zoo_model(FeatureMapKind::Zfm, AnsatzKind::Su2, n, reps);
            assert_eq!(mutate::gen_apc(&su2, &config).mutants.len(), 8 * (reps + 1));
            assert_eq!(mutate::gen_apgc(&su2).mutants.len(), 3 * n * (reps + 1));
            assert_eq!(mutate::gen_ls(&su2).mutants.len(), reps * (reps + 1) / 2);
            assert_eq!(mutate::gen_ils(&su2, &config).mutants.len(), 2 * reps + 1);
            assert_eq!(mutate::gen_ala(&su2, 7).mutants.len(), 2 * (reps + 1));
            assert_eq!(mutate::gen_ald(&su2).mutants.len(), 3 * reps + 2);
        }
    }
}

#[test]
fn dedup_only_merges_statevector_equal_mutants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total_discards = 0;
    for _ in 0..10 {
        let base = random_circuit(&mut rng, 3, 5);
        let fm = build_feature_map(FeatureMapKind::Zfm, 3, 3, 1, false).unwrap();
        let ansatz = build_ansatz(AnsatzKind::Ra, 3, 1).unwrap();
        let template = assemble(&fm, &ansatz, 2).unwrap();
        let model = QnnModel { circuit: base, ..template };
        let config = MutateConfig {
            gate_set: vec![GateKind::H, GateKind::X, GateKind::Cx],
            ..Default::default()
        };
        let generated = mutate::gen_baseline_gates(&model, &config);
        let by_id: std::collections::BTreeMap<String, Circuit> = generated
            .mutants
            .iter()
            .filter_map(|m| m.circuit().map(|c| (m.id.clone(), c.clone())))
            .collect();
        let (_, report) = mutate::dedup(generated.mutants);
        total_discards += report.discarded.len();
        for discarded in &report.discarded {
            let a = &by_id[&discarded.id];
            let b = &by_id[&discarded.kept];
            for _ in 0..5 {
                let bindings = random_bindings(&mut rng, a);
                let sa = statevector(&a.bind(&bindings).unwrap());
                let sb = statevector(&b.bind(&bindings).unwrap());
                assert!(
                    states_equal_up_to_phase(&sa, &sb, 1e-10),
                    "dedup merged behaviorally different mutants {} and {}",
                    discarded.id,
                    discarded.kept
                );
            }
        }
    }
    assert!(total_discards > 0, "dedup found nothing to merge across 10 circuits");
}

#[test]
fn ls_mutants_preserve_gate_multiset_and_symbols() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let n = rng.gen_range(2..=6);
        let reps = rng.gen_range(1..=3);
        let model = zoo_model(FeatureMapKind::Zzfm, AnsatzKind::Su2, n, reps);
        for mutant in mutate::gen_ls(&model).mutants {
            let circuit = mutant.circuit().unwrap();
            assert_eq!(circuit.instructions().len(), model.circuit.instructions().len());
            assert_eq!(circuit.free_symbols(), model.circuit.free_symbols());
            let count = |c: &Circuit, k: GateKind| {
                c.instructions().iter().filter(|i| i.kind == k).count()
            };
            for kind in GateKind::ALL {
                assert_eq!(count(circuit, kind), count(&model.circuit, kind));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn angle_text_round_trips_f64(v in proptest::num::f64::NORMAL) {
        let text = format!("{v:?}");
        let back: f64 = text.parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn param_expr_neg_is_exact_involution(v in proptest::num::f64::ANY) {
        let expr = ParamExpr::constant(v).neg().neg();
        let bindings = qmt::circuit::Bindings::new();
        if v.is_finite() {
            prop_assert_eq!(expr.eval(&bindings).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn feature_op_involutions(x in -1e6f64..1e6) {
        prop_assert_eq!(FeatureOp::SignFlip.apply(FeatureOp::SignFlip.apply(x)).to_bits(), x.to_bits());
        let twice = FeatureOp::OneMinus.apply(FeatureOp::OneMinus.apply(x));
        // 1 - (1 - x) is exact for |x| <= 2^52 scale because both
        // subtractions are exact or round to the same neighbor
        prop_assert!((twice - x).abs() <= f64::EPSILON * x.abs().max(1.0));
    }

    #[test]
    fn image_flips_are_involutions(h in 1usize..8, w in 1usize..8, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img: Vec<f64> = (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kind = FeatureKind::Image { height: h, width: w };
        for op in [ImageOp::FlipH, ImageOp::FlipV, ImageOp::Rot180] {
            let t = FeatureTransform::Image(op);
            let twice = t.apply(&t.apply(&img, kind).unwrap(), kind).unwrap();
            prop_assert_eq!(&twice, &img);
        }
    }

    #[test]
    fn decode_label_respects_width_rule(bits in proptest::collection::vec(0u8..2, 1..8), n_classes in 1usize..6) {
        let text: String = bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
        let value = bits.iter().fold(0usize, |acc, &b| acc * 2 + b as usize);
        let decoded = sim::decode_label(&text, n_classes);
        if text.len() == 1 {
            prop_assert_eq!(decoded, value);
        } else {
            prop_assert_eq!(decoded, value % n_classes);
        }
    }
}

#[test]
fn ala_descriptor_reconstructs_identical_circuit() {
    // regeneration from the stored descriptor must reproduce the payload,
    // which is what makes mutants.jsonl a sufficient record
    let model = zoo_model(FeatureMapKind::Zfm, AnsatzKind::Ra, 4, 2);
    let a = mutate::gen_ala(&model, 31);
    let b = mutate::gen_ala(&model, 31);
    for (x, y) in a.mutants.iter().zip(&b.mutants) {
        assert_eq!(x, y);
        if let OperatorKind::Ala { init: mutate::LayerInit::Random { seed }, .. } = x.operator {
            assert_ne!(seed, 31, "per-position seeds must be derived, not the campaign seed");
        }
    }
}
