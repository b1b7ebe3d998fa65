use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;
use topicflow_core::corpus::{build_dictionary, BowCorpus, DictionaryFilter};
use topicflow_core::eval::{model_top_terms, CooccurrenceIndex, CoherenceMetric};
use topicflow_core::lda::{perplexity, train_lda, LdaParams};
use topicflow_core::text::{tokenize_all, StopwordList, TokenizerOptions};
use topicflow_workflow::sources::SourceContent;
use topicflow_workflow::{figure1_template, verify_manifest, Edge, SourceDescriptor, SourceResolver, Workflow};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topicflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn write_workflow(dir: &Path, w: &Workflow) -> PathBuf {
    let p = dir.join("wf.json");
    std::fs::write(&p, w.to_canonical_bytes()).unwrap();
    p
}

fn quick_template() -> Workflow {
    let mut w = figure1_template();
    w.node_mut("lda").unwrap().params.insert("iterations".into(), json!(100));
    w
}

#[test]
fn shipped_workflow_is_the_template() {
    let bytes = std::fs::read(repo_file("workflows/figure1.workflow.json")).unwrap();
    assert_eq!(bytes, figure1_template().to_canonical_bytes());
    let out = run(&["template"]);
    assert_eq!(out.stdout, bytes);
}

#[test]
fn version_flag() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        format!("topicflow {}", topicflow_workflow::ENGINE_VERSION)
    );
}

#[test]
fn run_writes_verifiable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let wf = write_workflow(dir.path(), &quick_template());
    let out_dir = dir.path().join("results");
    let out = run(&["run", wf.to_str().unwrap(), "--seed", "42", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = verify_manifest(&out_dir).unwrap();
    assert_eq!(m.seed, 42);
    assert_eq!(m.artifacts.len(), 8);
}

#[test]
fn validation_failure_exits_1_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let mut w = quick_template();
    w.edges.push(Edge::new("corpus", "corpus", "corpus", "tokens"));
    let wf = write_workflow(dir.path(), &w);
    let out = run(&["run", wf.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[cycle]"), "{err}");
    assert!(!dir.path().join("o").exists(), "invalid runs write nothing");

    let v = run(&["validate", wf.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&v.stderr).contains("[cycle]"));

    std::fs::write(dir.path().join("broken.json"), "{").unwrap();
    let v = run(&["validate", dir.path().join("broken.json").to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
}

#[test]
fn missing_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let wf = write_workflow(dir.path(), &quick_template());
    let out = run(&[
        "run",
        wf.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "--corpus",
        "docs=/definitely/not/here.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("docs"));
    assert_eq!(run(&["run", wf.to_str().unwrap(), "--out", "x", "--corpus", "nope=1"]).status.code(), Some(1));
}

#[test]
fn corpus_override_and_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let texts = dir.path().join("texts");
    std::fs::create_dir(&texts).unwrap();
    for i in 0..8 {
        let body = if i % 2 == 0 { "river water flood bank" } else { "market price trade bank" };
        std::fs::write(texts.join(format!("t{i}.txt")), format!("{body} {body}")).unwrap();
    }
    let mut w = quick_template();
    w.node_mut("lda").unwrap().params.insert("num_topics".into(), json!(2));
    // text files carry no metadata to group by
    w.nodes.retain(|n| n.node_id != "mtm");
    w.edges.retain(|e| e.to_node != "mtm");
    w.node_mut("stopwords").unwrap().source = Some(SourceDescriptor::new("stop.txt", "stopwords"));
    std::fs::write(dir.path().join("stop.txt"), "the\n").unwrap();
    let wf = write_workflow(dir.path(), &w);
    let out_dir = dir.path().join("o");
    let out = bin()
        .current_dir("/")
        .args(["run", wf.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--corpus"])
        .arg(format!("docs={}", texts.display()))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("doc_topics.csv")).unwrap();
    assert_eq!(table.lines().count(), 9);
}

#[test]
fn sweep_single_k_and_bad_lists() {
    let out = run(&["sweep", "--k-list", "5", "--iterations", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2, "{stdout}");
    assert!(stdout.lines().nth(1).unwrap().trim_start().starts_with("5 "));
    for bad in ["2,2", "0", "x", "5..3"] {
        assert_eq!(run(&["sweep", "--k-list", bad]).status.code(), Some(1), "{bad}");
    }
    assert_eq!(run(&["sweep", "--k-list", "2", "--metric", "cv"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--k-list", "2", "--input", "/no/such.csv"]).status.code(), Some(2));
}

#[test]
fn sweep_rows_equal_manual_composition() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep", "--k-list", "2,3,4,5,6", "--seed", "11", "--iterations", "60", "--metric", "npmi", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5);

    let resolver = SourceResolver::default();
    let SourceContent::Documents(docs) =
        resolver.resolve(&SourceDescriptor::new("builtin:sample-abstracts", "delimited")).unwrap().content
    else {
        panic!()
    };
    let tokens = tokenize_all(&docs, &StopwordList::english(), &TokenizerOptions::default());
    let dict = build_dictionary(&tokens, &DictionaryFilter::default()).unwrap();
    let corpus = BowCorpus::build(&tokens, &dict);
    let index = CooccurrenceIndex::build(&tokens);
    for (row, k) in rows.iter().zip(2..=6) {
        let params = LdaParams {
            iterations: 60,
            seed: 11,
            ..LdaParams::default()
        };
        let model = train_lda(&corpus, &dict, &params.config_for(k)).unwrap();
        let coh = index.coherence(CoherenceMetric::Npmi, &model_top_terms(&model, &dict, 10)).unwrap().mean;
        let ppl = perplexity(&model, &corpus).unwrap();
        assert_eq!(row[0], k.to_string());
        assert_eq!(row[1].parse::<f64>().unwrap(), coh, "K={k}");
        assert_eq!(row[2].parse::<f64>().unwrap(), ppl, "K={k}");
        assert_eq!(row[3], "11");
    }
}
