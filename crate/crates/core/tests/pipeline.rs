use proptest::prelude::*;

use relsvm_core::corpus::{
    extract_instances, is_punctuation_only, join_entity_surface, merge_punctuation, parse_abstracts_str,
    parse_pairs_str, parse_relations_str, EntityPair,
};
use relsvm_core::evaluation::cross_validate_with;
use relsvm_core::pipeline::{fit, predict_instances};
use relsvm_core::resources::{load_clusters, load_embeddings};
use relsvm_core::synth::{SynthConfig, SyntheticCorpus};
use relsvm_core::{load_model, save_model, score, CvConfig, Execution, Families, Resources, TrainConfig};

fn corpus(instances: usize) -> SyntheticCorpus {
    SyntheticCorpus::generate(&SynthConfig {
        instances,
        labels: 6,
        cues_per_label: 2,
        embed_dim: 8,
        seed: 42,
        ..SynthConfig::default()
    })
}

#[test]
fn text_files_to_predictions() {
    let synth = corpus(300);
    let vocab = synth.vocabulary();
    let docs = parse_abstracts_str(&synth.abstracts_text()).unwrap();
    let relations = parse_relations_str(&synth.relations_text()).unwrap();
    let pairs: Vec<EntityPair> = relations.iter().map(EntityPair::from).collect();
    let instances = extract_instances(&docs, &pairs).unwrap();
    assert_eq!(instances, synth.instances);

    let resources = Resources {
        embeddings: Some(load_embeddings(synth.embeddings_text(&vocab).as_bytes()).unwrap()),
        clusters: Some(load_clusters(synth.clusters_text(&vocab).as_bytes(), Some(50)).unwrap()),
    };
    let (train, test) = instances.split_at(240);
    let (model, _) = fit(
        train,
        test,
        Families::default(),
        &resources,
        &TrainConfig::default(),
        Execution::default(),
    )
    .unwrap();

    let mut bytes = Vec::new();
    save_model(&model, &mut bytes).unwrap();
    let loaded = load_model(bytes.as_slice()).unwrap();
    let predicted = predict_instances(&loaded, test, &resources, Execution::default()).unwrap();
    assert_eq!(predicted, predict_instances(&model, test, &resources, Execution::Sequential).unwrap());

    let gold: Vec<String> = test.iter().map(|i| i.label.clone().unwrap()).collect();
    let report = score(&gold, &predicted).unwrap();
    assert!(report.macro_f1 > 0.9, "{}", report.macro_f1);
}

#[test]
fn unlabeled_pairs_extract_without_labels() {
    let docs = parse_abstracts_str(
        "<text id=\"X1\"><entity id=\"X1.1\">parsing</entity> of <entity id=\"X1.2\">trees</entity></text>",
    )
    .unwrap();
    let pairs = parse_pairs_str("(X1.1,X1.2)\n").unwrap();
    let inst = extract_instances(&docs, &pairs).unwrap();
    assert_eq!(inst[0].tokens, ["parsing", "of", "trees"]);
    assert_eq!(inst[0].label, None);
}

#[test]
fn execution_strategies_agree() {
    let synth = corpus(250);
    let cfg = CvConfig {
        families: Families::ALL,
        ..CvConfig::default()
    };
    let seq = cross_validate_with(&synth.instances, &cfg, &synth.resources, Execution::Sequential).unwrap();
    let par = cross_validate_with(&synth.instances, &cfg, &synth.resources, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["model", "Parser", "of", "IR", "x_y", "\"data\"", "it's", "tree", "Zeta"])
        .prop_map(String::from)
}

fn filler() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            3 => word(),
            1 => prop::sample::select(vec![",", ".", ";", "(", ")", "--"]).prop_map(String::from),
        ],
        0..6,
    )
    .prop_map(|w| w.join(" "))
}

fn entity() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..4).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn instance_span_invariants(
        lead in filler(),
        s1 in entity(),
        mid in filler(),
        s2 in entity(),
        tail in filler(),
    ) {
        let text = format!(
            "<text id=\"D1\">{lead} <entity id=\"D1.1\">{s1}</entity> {mid} <entity id=\"D1.2\">{s2}</entity> {tail}</text>"
        );
        let docs = parse_abstracts_str(&text).unwrap();
        let pairs = parse_pairs_str("(D1.1,D1.2)").unwrap();
        let inst = &extract_instances(&docs, &pairs).unwrap()[0];

        let expected_inner = merge_punctuation(&mid.split_whitespace().collect::<Vec<_>>());
        let joined2 = join_entity_surface(&s2);
        let e1 = inst.e1_token();
        prop_assert!(e1.starts_with(&join_entity_surface(&s1)));
        prop_assert!(inst.e2_token().starts_with(&joined2));
        prop_assert!(inst.tokens.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
        prop_assert!(inst.tokens.iter().all(|t| !is_punctuation_only(t)));
        let inner = inst.inner().to_vec();
        let leading_punct = expected_inner.first().is_some_and(|t| is_punctuation_only(t));
        if leading_punct {
            prop_assert_eq!(&inner[..], &expected_inner[1..]);
        } else {
            prop_assert_eq!(inner, expected_inner);
        }
        prop_assert!(inst.sentence_len >= 1);
    }

    #[test]
    fn merging_is_idempotent(tokens in prop::collection::vec(prop_oneof![word(), Just(",".to_string()), Just(")".to_string())], 0..10)) {
        let once = merge_punctuation(&tokens);
        prop_assert_eq!(merge_punctuation(&once), once);
    }
}
