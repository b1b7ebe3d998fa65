use std::fs;
use std::path::Path;

use proptest::prelude::*;
use serde_json::json;
use topicflow_core::corpus::{build_dictionary, BowCorpus, DictionaryFilter};
use topicflow_core::lda::{train_lda, write_archive, LdaParams};
use topicflow_core::text::{load_delimited_bytes, tokenize_all, DelimitedOptions, StopwordList, TokenizerOptions};
use topicflow_core::viz::{docs_x_topics, terms_x_topics};
use topicflow_workflow::manifest::WORKFLOW_FILE;
use topicflow_workflow::templates::SAMPLE_ABSTRACTS_SOURCE;
use topicflow_workflow::{
    derive_node_seed, execute, figure1_template, validate, verify_manifest, DiagnosticCode, Edge,
    ExecuteError, ExecuteOptions, NodeSpec, NodeState, RunStatus, SourceDescriptor, SourceResolver,
    Workflow, MANIFEST_FILE,
};

fn codes(w: &Workflow) -> Vec<DiagnosticCode> {
    validate(w).into_iter().map(|d| d.code).collect()
}

/// The bundled template with fewer sweeps, for tests that run it repeatedly.
fn quick_template() -> Workflow {
    let mut w = figure1_template();
    w.node_mut("lda").unwrap().params.insert("iterations".into(), json!(150));
    w
}

fn run(w: &Workflow, seed: u64, dir: &Path) -> Result<topicflow_workflow::RunManifest, ExecuteError> {
    execute(w, &ExecuteOptions::new(seed, dir, SourceResolver::new(dir)))
}

#[test]
fn template_validates_clean() {
    assert_eq!(validate(&figure1_template()), vec![]);
}

#[test]
fn tokenizer_to_lda_is_a_type_mismatch() {
    let mut w = figure1_template();
    w.edges.retain(|e| !(e.to_node == "lda" && e.to_port == "corpus"));
    w.edges.push(Edge::new("tokenizer", "tokens", "lda", "corpus"));
    let d = validate(&w);
    let mismatch = d.iter().find(|d| d.code == DiagnosticCode::TypeMismatch).expect("type diagnostic");
    assert!(mismatch.message.contains("TokenizedCollection"));
    assert!(mismatch.message.contains("BowCorpus"));
    assert_eq!(mismatch.edge.as_deref(), Some("tokenizer.tokens->lda.corpus"));
    assert_eq!(mismatch.nodes, vec!["lda", "tokenizer"]);
}

#[test]
fn self_edge_is_a_cycle() {
    for node in ["lda", "docs", "tokenizer"] {
        let mut w = figure1_template();
        w.edges.push(Edge::new(node, "x", node, "y"));
        let d = validate(&w);
        assert!(
            d.iter().any(|d| d.code == DiagnosticCode::Cycle && d.nodes == vec![node.to_string()]),
            "{d:?}"
        );
    }
}

#[test]
fn longer_cycles_are_reported_with_members() {
    let mut w = Workflow::new("loop");
    w.nodes = vec![
        NodeSpec::tool("f1", "regex-filter").with_param("patterns", json!(["x"])),
        NodeSpec::tool("f2", "regex-filter").with_param("patterns", json!(["y"])),
    ];
    w.edges = vec![Edge::new("f1", "docs", "f2", "docs"), Edge::new("f2", "docs", "f1", "docs")];
    let d = validate(&w);
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].code, DiagnosticCode::Cycle);
    assert_eq!(d[0].nodes, vec!["f1", "f2"]);
}

#[test]
fn all_problems_are_reported_together() {
    let mut w = figure1_template();
    w.nodes.push(NodeSpec::tool("mystery", "word-cloud"));
    w.node_mut("lda").unwrap().params.insert("num_topics".into(), json!(0));
    w.node_mut("terms").unwrap().params.insert("colour".into(), json!("red"));
    w.edges.push(Edge::new("ghost", "out", "tokenizer", "docs"));
    w.edges.retain(|e| !(e.to_node == "ldavis" && e.to_port == "corpus"));
    let got = codes(&w);
    for expected in [
        DiagnosticCode::UnknownTool,
        DiagnosticCode::BadParam,
        DiagnosticCode::DanglingEdge,
        DiagnosticCode::UnfilledPort,
    ] {
        assert!(got.contains(&expected), "{expected:?} missing from {got:?}");
    }
    assert_eq!(got.iter().filter(|c| **c == DiagnosticCode::BadParam).count(), 2);
    assert!(validate(&w).iter().all(|d| !d.nodes.is_empty()));
}

#[test]
fn structural_rules() {
    let mut w = figure1_template();
    w.edges.push(Edge::new("docs", "out", "tokenizer", "docs"));
    w.edges.push(Edge::new("lda", "model", "docs", "in"));
    w.edges.push(Edge::new("corpus", "nothing", "lda", "corpus"));
    w.nodes.push(NodeSpec::data("docs", SourceDescriptor::new("a", "delimited")));
    w.nodes.push(NodeSpec::data("bad.id", SourceDescriptor::new("a", "pdf")));
    let got = codes(&w);
    for expected in [
        DiagnosticCode::DuplicateInput,
        DiagnosticCode::DataNodeInput,
        DiagnosticCode::UnknownPort,
        DiagnosticCode::DuplicateNode,
        DiagnosticCode::InvalidNodeId,
        DiagnosticCode::BadSource,
    ] {
        assert!(got.contains(&expected), "{expected:?} missing from {got:?}");
    }
}

#[test]
fn unknown_tool_parses_but_fails_validation() {
    let mut text = String::from_utf8(figure1_template().to_canonical_bytes()).unwrap();
    text = text.replace("\"tool_name\":\"ldavis\"", "\"tool_name\":\"pyldavis\"");
    let w = Workflow::from_bytes(text.as_bytes()).unwrap();
    let d = validate(&w);
    assert!(d.iter().any(|d| d.code == DiagnosticCode::UnknownTool && d.nodes == vec!["ldavis"]));
}

#[test]
fn canonical_round_trip_is_byte_identity() {
    let w = figure1_template();
    let a = w.to_canonical_bytes();
    let b = Workflow::from_bytes(&a).unwrap().to_canonical_bytes();
    assert_eq!(a, b);
    let pretty = serde_json::to_vec_pretty(&w).unwrap();
    assert_eq!(Workflow::from_bytes(&pretty).unwrap().to_canonical_bytes(), a);
    assert!(!a.contains(&b'\r'));
}

fn shuffled(w: &Workflow, seed: u64) -> Workflow {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = w.clone();
    s.nodes.shuffle(&mut rng);
    s.edges.shuffle(&mut rng);
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hash_ignores_ordering_and_positions(seed in 0u64..1_000_000, x in -1e4f64..1e4, y in -1e4f64..1e4) {
        let w = figure1_template();
        let mut s = shuffled(&w, seed);
        s.nodes[0].position = Some(topicflow_workflow::model::Position { x, y });
        prop_assert_eq!(w.workflow_hash(), s.workflow_hash());
        let mut plain = s.clone();
        plain.nodes[0].position = w.node(&s.nodes[0].node_id).unwrap().position;
        prop_assert_eq!(w.to_canonical_bytes(), plain.to_canonical_bytes());
    }

    #[test]
    fn params_change_the_hash(k in 2i64..50) {
        let w = figure1_template();
        let mut other = w.clone();
        other.node_mut("lda").unwrap().params.insert("num_topics".into(), json!(k));
        prop_assume!(k != 5);
        prop_assert_ne!(w.workflow_hash(), other.workflow_hash());
    }

    #[test]
    fn node_seeds_are_stable(seed in any::<u64>(), id in "[a-z][a-z0-9_-]{0,12}") {
        prop_assert_eq!(derive_node_seed(seed, &id), derive_node_seed(seed, &id));
    }
}

fn read_artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_string_lossy().starts_with('_'))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn repeated_runs_are_identical() {
    let w = quick_template();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run(&w, 42, a.path()).unwrap();
    let mb = run(&w, 42, b.path()).unwrap();
    assert!(ma.same_outcome(&mb));
    assert_eq!(read_artifacts(a.path()), read_artifacts(b.path()));
    let names: Vec<&String> = ma.artifacts.keys().collect();
    assert_eq!(
        names,
        [
            "corpus.corpus.json",
            "corpus.dictionary.csv",
            "doc_topics.csv",
            "lda.model",
            "ldavis.json",
            "mtm.json",
            "terms.csv",
            "tokenizer.json"
        ]
    );
    assert_eq!(verify_manifest(a.path()).unwrap(), ma);
    assert_eq!(fs::read(a.path().join(WORKFLOW_FILE)).unwrap(), w.to_canonical_bytes());
    assert_eq!(ma.input_hashes.len(), 2);
    assert_eq!(ma.node_seeds["lda"], derive_node_seed(42, "lda"));

    let mc = run(&w, 43, tempfile::tempdir().unwrap().path()).unwrap();
    assert_ne!(mc.artifacts["lda.model"].sha256, ma.artifacts["lda.model"].sha256);
    assert_eq!(mc.artifacts["tokenizer.json"].sha256, ma.artifacts["tokenizer.json"].sha256);
}

#[test]
fn tampered_artifact_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let mut w = quick_template();
    w.node_mut("lda").unwrap().params.insert("iterations".into(), json!(5));
    run(&w, 1, dir.path()).unwrap();
    fs::write(dir.path().join("terms.csv"), "topic,rank,term,phi\n").unwrap();
    assert!(verify_manifest(dir.path()).is_err());
}

#[test]
fn execution_equals_module_composition() {
    let w = quick_template();
    let dir = tempfile::tempdir().unwrap();
    let manifest = run(&w, 42, dir.path()).unwrap();

    let opts = DelimitedOptions {
        metadata_columns: vec!["year".into()],
        ..Default::default()
    };
    let docs = load_delimited_bytes(SAMPLE_ABSTRACTS_SOURCE.as_bytes(), &opts, Path::new("sample")).unwrap();
    let tokens = tokenize_all(&docs, &StopwordList::english(), &TokenizerOptions::default());
    let dict = build_dictionary(&tokens, &DictionaryFilter::default()).unwrap();
    let corpus = BowCorpus::build(&tokens, &dict);
    let params = LdaParams {
        iterations: 150,
        seed: derive_node_seed(42, "lda"),
        ..Default::default()
    };
    let model = train_lda(&corpus, &dict, &params.config_for(5)).unwrap();
    let mut archive = Vec::new();
    write_archive(&model, &mut archive).unwrap();
    assert_eq!(fs::read(dir.path().join("lda.model")).unwrap(), archive);
    assert_eq!(
        fs::read_to_string(dir.path().join("terms.csv")).unwrap(),
        terms_x_topics(&model, &dict, 30).to_csv()
    );
    let table = docs_x_topics(&model, &docs).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("doc_topics.csv")).unwrap(), table.to_csv());
    assert_eq!(table.rows.len(), 51);
    assert!(table.rows.iter().all(|r| r.theta.len() == 5));
    assert_eq!(manifest.status, RunStatus::Succeeded);
}

#[test]
fn sub_dag_outputs_match_full_run() {
    let full = quick_template();
    let mut partial = full.clone();
    let keep = ["docs", "stopwords", "tokenizer", "corpus"];
    partial.nodes.retain(|n| keep.contains(&n.node_id.as_str()));
    partial.edges.retain(|e| keep.contains(&e.to_node.as_str()));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mf = run(&full, 7, a.path()).unwrap();
    let mp = run(&partial, 7, b.path()).unwrap();
    for (name, rec) in &mp.artifacts {
        assert_eq!(mf.artifacts[name].sha256, rec.sha256, "{name}");
    }
    assert_eq!(mp.artifacts.len(), 3);
}

#[test]
fn missing_stopword_file_names_the_node() {
    let mut w = quick_template();
    w.node_mut("stopwords").unwrap().source = Some(SourceDescriptor::new("no-such-stopwords.txt", "stopwords"));
    let dir = tempfile::tempdir().unwrap();
    let events = std::sync::Mutex::new(Vec::new());
    let record = |p: &topicflow_workflow::NodeProgress| events.lock().unwrap().push(p.clone());
    let opts = ExecuteOptions {
        progress: Some(&record),
        ..ExecuteOptions::new(42, dir.path(), SourceResolver::new(dir.path()))
    };
    match execute(&w, &opts) {
        Err(ExecuteError::NodeFailed { node_id, message, manifest }) => {
            assert_eq!(node_id, "stopwords");
            assert!(message.contains("no-such-stopwords.txt"), "{message}");
            assert_eq!(manifest.status, RunStatus::Failed);
            assert_eq!(manifest.failed_node.as_deref(), Some("stopwords"));
            assert!(manifest.artifacts.is_empty());
            assert!(manifest.input_hashes.contains_key("docs"));
        }
        other => panic!("expected failure, got {other:?}"),
    }
    assert!(dir.path().join(MANIFEST_FILE).exists());
    let events = events.into_inner().unwrap();
    assert!(events.iter().any(|e| e.node_id == "stopwords" && e.state == NodeState::Failed));
    assert!(events.iter().any(|e| e.node_id == "lda" && e.state == NodeState::Skipped));
}

#[test]
fn failure_after_some_artifacts_keeps_them() {
    let mut w = quick_template();
    w.node_mut("mtm").unwrap().params.insert("grouping_key".into(), json!("venue"));
    let dir = tempfile::tempdir().unwrap();
    let Err(ExecuteError::NodeFailed { node_id, manifest, .. }) = run(&w, 42, dir.path()) else {
        panic!("expected failure");
    };
    assert_eq!(node_id, "mtm");
    assert!(manifest.artifacts.contains_key("lda.model"));
    assert!(!manifest.artifacts.contains_key("mtm.json"));
    verify_manifest(dir.path()).unwrap();
}

#[test]
fn invalid_workflows_are_not_executed() {
    let mut w = figure1_template();
    w.edges.push(Edge::new("lda", "model", "lda", "corpus"));
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(run(&w, 1, dir.path()), Err(ExecuteError::Invalid(_))));
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn txt_dir_source_and_regex_filter() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs");
    fs::create_dir(&docs).unwrap();
    fs::write(docs.join("a.txt"), "Poetry and verse 2019, poetry again").unwrap();
    fs::write(docs.join("b.txt"), "Archives keep records 1999 and records").unwrap();
    let mut w = Workflow::new("small");
    w.nodes = vec![
        NodeSpec::data("texts", SourceDescriptor::new("docs", "txt-dir")),
        NodeSpec::tool("clean", "regex-filter").with_param("patterns", json!(["\\d+"])),
        NodeSpec::tool("tok", "tokenizer").with_param("stemmer", "none"),
    ];
    w.edges = vec![Edge::new("texts", "out", "clean", "docs"), Edge::new("clean", "docs", "tok", "docs")];
    let out = dir.path().join("out");
    execute(&w, &ExecuteOptions::new(0, &out, SourceResolver::new(dir.path()))).unwrap();
    let tokens: serde_json::Value = serde_json::from_slice(&fs::read(out.join("tok.json")).unwrap()).unwrap();
    assert_eq!(tokens[0]["tokens"], json!(["poetry", "and", "verse", "poetry", "again"]));
    assert_eq!(tokens[1]["doc_id"], "b");
}
