//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

// `ensure!(x <= tol)` negates the comparison so that NaN fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::net::SocketAddr;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use topicflow_cli::service::{self, Job, JobState, ServiceConfig};
use topicflow_core::corpus::{build_dictionary, BowCorpus, BowDoc, Dictionary, DictionaryFilter};
use topicflow_core::eval::{model_top_terms, umass_coherence, npmi_coherence, CoherenceMetric, CooccurrenceIndex};
use topicflow_core::lda::{perplexity, train_lda, write_archive, LdaConfig, LdaModel, LdaParams};
use topicflow_core::text::{load_delimited_bytes, tokenize_all, DelimitedOptions, StopwordList, TokenizedDoc, TokenizerOptions};
use topicflow_core::viz::{
    docs_x_topics, format_percent, ldavis_data, mtm_data, terms_x_topics, LdavisData, MtmData, MtmMode,
};
use topicflow_oracles::generative::{generate, term_label, GenerativeSpec};
use topicflow_oracles::scoring;
use topicflow_workflow::templates::SAMPLE_ABSTRACTS_SOURCE;
use topicflow_workflow::{
    derive_node_seed, execute, figure1_template, validate, DiagnosticCode, Edge, ExecuteOptions, RunManifest,
    SourceResolver, Workflow,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn corpus_from_ids(docs: &[Vec<usize>]) -> (Vec<TokenizedDoc>, Dictionary, BowCorpus) {
    let tokenized: Vec<TokenizedDoc> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| TokenizedDoc::new(format!("doc{i:04}"), d.iter().map(|&w| term_label(w)).collect()))
        .collect();
    let dict = build_dictionary(&tokenized, &DictionaryFilter::default()).expect("dictionary");
    let corpus = BowCorpus::build(&tokenized, &dict);
    (tokenized, dict, corpus)
}

fn run_template(seed: u64, dir: &Path) -> Result<RunManifest, String> {
    execute(&figure1_template(), &ExecuteOptions::new(seed, dir, SourceResolver::new(dir))).map_err(|e| e.to_string())
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

// 1
fn synthetic_recovery() -> Outcome {
    let spec = GenerativeSpec {
        topics: 3,
        vocab: 50,
        docs: 300,
        mean_len: 80.0,
        alpha: 0.1,
        beta: 0.01,
        seed: 2021,
    };
    let truth = generate(&spec);
    let (_, dict, corpus) = corpus_from_ids(&truth.docs);
    let config = LdaConfig {
        alpha: 0.1,
        beta: 0.01,
        iterations: 1000,
        seed: 1,
        ..LdaConfig::new(3)
    };
    let start = Instant::now();
    let model = train_lda(&corpus, &dict, &config).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let mut recovered = vec![vec![0.0; spec.vocab]; 3];
    for (id, term) in dict.terms().iter().enumerate() {
        let w: usize = term[1..].parse().expect("generated label");
        for (k, row) in recovered.iter_mut().enumerate() {
            row[w] = model.phi[(k, id)];
        }
    }
    let matching = scoring::greedy_match(&truth.phi, &recovered);
    let mean_tv = matching
        .iter()
        .enumerate()
        .map(|(t, &r)| scoring::total_variation(&truth.phi[t], &recovered[r]))
        .sum::<f64>()
        / 3.0;
    ensure!(mean_tv <= 0.10, "mean TV {mean_tv:.4} > 0.10");
    ensure!(secs <= 60.0, "training took {secs:.1} s");
    Ok(format!("mean TV {mean_tv:.4}, training {secs:.2} s"))
}

// 2
fn determinism() -> Outcome {
    let (a, b) = (scratch(), scratch());
    let ma = run_template(42, a.path())?;
    let mb = run_template(42, b.path())?;
    for name in ["terms.csv", "doc_topics.csv", "ldavis.json", "mtm.json"] {
        ensure!(ma.artifacts.contains_key(name), "{name} missing");
        ensure!(read(a.path(), name) == read(b.path(), name), "{name} differs");
    }
    for name in ma.artifacts.keys() {
        ensure!(read(a.path(), name) == read(b.path(), name), "{name} differs");
    }
    ensure!(ma.same_outcome(&mb), "manifests differ beyond timestamps");
    Ok(format!("{} artifacts byte-identical, manifests equal apart from timestamps", ma.artifacts.len()))
}

// 3
fn single_topic_exact() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let truth = generate(&GenerativeSpec {
            topics: 2 + seed as usize % 3,
            vocab: 20 + 10 * seed as usize,
            docs: 10 + 7 * seed as usize,
            mean_len: 15.0 + seed as f64 * 5.0,
            alpha: 0.5,
            beta: 0.1,
            seed,
        });
        let (_, dict, corpus) = corpus_from_ids(&truth.docs);
        let config = LdaConfig {
            iterations: 25,
            seed,
            ..LdaConfig::new(1)
        };
        let model = train_lda(&corpus, &dict, &config).map_err(|e| e.to_string())?;
        ensure!(model.theta.iter().all(|&t| t == 1.0), "theta is not exactly 1.0");
        let n = corpus.total_tokens() as f64;
        let v = dict.len() as f64;
        for w in 0..dict.len() {
            let expected = (dict.collection_freq(w as u32) as f64 + config.beta) / (n + v * config.beta);
            worst = worst.max((model.phi[(0, w)] - expected).abs());
        }
    }
    ensure!(worst <= 1e-12, "phi deviates by {worst:e}");
    Ok(format!("5 corpora, max phi error {worst:.1e}"))
}

fn fixed_model(k: usize, phi: Array2<f64>, theta: Array2<f64>) -> LdaModel {
    let d = theta.nrows();
    LdaModel {
        config: LdaConfig::new(k),
        doc_ids: (0..d).map(|i| i.to_string()).collect(),
        dictionary_hash: String::new(),
        phi,
        theta,
        assignments: vec![vec![]; d],
        log_likelihood_trace: vec![],
    }
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

// 4
fn perplexity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let v = 100;
    let docs: Vec<BowDoc> = (0..6)
        .map(|i| BowDoc {
            doc_id: i.to_string(),
            terms: (0..v as u32)
                .filter_map(|w| if rng.random_bool(0.4) { Some((w, rng.random_range(1..5))) } else { None })
                .collect(),
        })
        .collect();
    let corpus = BowCorpus::from_docs(docs);
    let theta = Array2::from_shape_fn((6, 3), |(d, k)| [0.2, 0.3, 0.5][(d + k) % 3]);
    let uniform = perplexity(&fixed_model(3, Array2::from_elem((3, v), 1.0 / v as f64), theta), &corpus)
        .map_err(|e| e.to_string())?;
    ensure!((uniform - 100.0).abs() <= 1e-9, "uniform perplexity {uniform}");

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (d, k, v) = (rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(2..=6));
        let phi: Vec<Vec<f64>> = (0..k).map(|_| simplex(&mut rng, v)).collect();
        let theta: Vec<Vec<f64>> = (0..d).map(|_| simplex(&mut rng, k)).collect();
        let counts: Vec<Vec<u32>> = (0..d).map(|_| (0..v).map(|_| rng.random_range(0..5)).collect()).collect();
        let docs = counts
            .iter()
            .enumerate()
            .map(|(i, row)| BowDoc {
                doc_id: i.to_string(),
                terms: row.iter().enumerate().filter(|(_, &c)| c > 0).map(|(w, &c)| (w as u32, c)).collect(),
            })
            .collect();
        let corpus = BowCorpus::from_docs(docs);
        if corpus.total_tokens() == 0 {
            continue;
        }
        let model = fixed_model(
            k,
            Array2::from_shape_fn((k, v), |(a, b)| phi[a][b]),
            Array2::from_shape_fn((d, k), |(a, b)| theta[a][b]),
        );
        let got = perplexity(&model, &corpus).map_err(|e| e.to_string())?;
        let expected = scoring::perplexity(&theta, &phi, &counts);
        worst = worst.max((got - expected).abs());
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    Ok(format!("uniform V=100 gives {uniform}, 20 tiny models max error {worst:.1e}"))
}

// 5
fn coherence_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let vocab = rng.random_range(2..=15);
        let docs: Vec<Vec<String>> = (0..rng.random_range(1..=10))
            .map(|_| (0..rng.random_range(1..=8)).map(|_| term_label(rng.random_range(0..vocab))).collect())
            .collect();
        let present: Vec<String> = {
            let mut s: Vec<String> = docs.iter().flatten().cloned().collect();
            s.sort();
            s.dedup();
            s
        };
        let topics: Vec<Vec<String>> = (0..3)
            .map(|_| {
                let mut pool = present.clone();
                let m = rng.random_range(1..=pool.len().min(6));
                (0..m).map(|_| pool.swap_remove(rng.random_range(0..pool.len()))).collect()
            })
            .collect();
        let tokenized: Vec<TokenizedDoc> =
            docs.iter().enumerate().map(|(i, d)| TokenizedDoc::new(i.to_string(), d.clone())).collect();
        let um = umass_coherence(&topics, &tokenized).map_err(|e| e.to_string())?;
        let np = npmi_coherence(&topics, &tokenized).map_err(|e| e.to_string())?;
        for (t, top) in topics.iter().enumerate() {
            worst = worst.max((um.per_topic[t] - scoring::umass(top, &docs)).abs());
            worst = worst.max((np.per_topic[t] - scoring::npmi(top, &docs)).abs());
        }
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    let single = vec![vec!["w0000".to_string()]];
    let docs = vec![TokenizedDoc::new("0", vec!["w0000".into()])];
    let (u1, n1) = (
        umass_coherence(&single, &docs).map_err(|e| e.to_string())?.mean,
        npmi_coherence(&single, &docs).map_err(|e| e.to_string())?.mean,
    );
    ensure!(u1 == 0.0 && n1 == 0.0, "M=1 gives {u1}, {n1}");
    Ok(format!("20 corpora, max error {worst:.1e}; M=1 scores 0"))
}

struct SampleRun {
    docs: Vec<topicflow_core::text::Document>,
    dict: Dictionary,
    corpus: BowCorpus,
    model: LdaModel,
}

fn sample_model(seed: u64, iterations: usize) -> Result<SampleRun, String> {
    let opts = DelimitedOptions {
        metadata_columns: vec!["year".into()],
        ..Default::default()
    };
    let docs = load_delimited_bytes(SAMPLE_ABSTRACTS_SOURCE.as_bytes(), &opts, Path::new("sample")).map_err(|e| e.to_string())?;
    let tokens = tokenize_all(&docs, &StopwordList::english(), &TokenizerOptions::default());
    let dict = build_dictionary(&tokens, &DictionaryFilter::default()).map_err(|e| e.to_string())?;
    let corpus = BowCorpus::build(&tokens, &dict);
    let params = LdaParams {
        iterations,
        seed,
        ..Default::default()
    };
    let model = train_lda(&corpus, &dict, &params.config_for(5)).map_err(|e| e.to_string())?;
    Ok(SampleRun { docs, dict, corpus, model })
}

// 6
fn table_contracts() -> Outcome {
    for (vocab, seed) in [(12usize, 1u64), (45, 2)] {
        let truth = generate(&GenerativeSpec {
            topics: 3,
            vocab,
            docs: 40,
            mean_len: 60.0,
            alpha: 0.3,
            beta: 0.1,
            seed,
        });
        let (_, dict, corpus) = corpus_from_ids(&truth.docs);
        let model = train_lda(&corpus, &dict, &LdaConfig { iterations: 50, ..LdaConfig::new(3) }).map_err(|e| e.to_string())?;
        let t = terms_x_topics(&model, &dict, 30);
        let want = dict.len().min(30);
        ensure!(t.topics.iter().all(|terms| terms.len() == want), "V={} expected {want} terms per topic", dict.len());
    }
    let dir = scratch();
    run_template(42, dir.path())?;
    let csv = String::from_utf8(read(dir.path(), "doc_topics.csv")).map_err(|e| e.to_string())?;
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let topic_cols: Vec<usize> = (0..header.len()).filter(|&i| header[i].starts_with("topic_")).collect();
    ensure!(topic_cols.len() == 5, "header {header:?}");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            topic_cols.iter().map(|&i| cells[i].parse::<f64>().expect("theta cell")).collect()
        })
        .collect();
    ensure!(rows.len() == 51, "{} rows", rows.len());
    let worst = rows.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    ensure!(worst <= 1e-9, "row sum off by {worst:e}");
    let terms = String::from_utf8(read(dir.path(), "terms.csv")).map_err(|e| e.to_string())?;
    ensure!(terms.lines().count() == 1 + 5 * 30, "terms table has {} lines", terms.lines().count());
    Ok(format!("min(30,V) terms per topic; sample theta table 51x5, max row-sum error {worst:.1e}"))
}

// 7
fn ldavis_properties() -> Outcome {
    let run = sample_model(derive_node_seed(42, "lda"), 1000)?;
    let data: LdavisData = ldavis_data(&run.model, &run.corpus, &run.dict, 30).map_err(|e| e.to_string())?;
    let k = data.num_topics;
    let ln2 = std::f64::consts::LN_2;
    for i in 0..k {
        ensure!(data.distances[i][i] == 0.0, "diagonal {i} is {}", data.distances[i][i]);
        for j in 0..k {
            ensure!(data.distances[i][j] == data.distances[j][i], "asymmetric at ({i},{j})");
            ensure!(data.distances[i][j] <= ln2 + 1e-12, "distance above ln 2");
        }
    }
    let coords = data.coords();
    let cx = coords.iter().map(|c| c[0]).sum::<f64>() / k as f64;
    let cy = coords.iter().map(|c| c[1]).sum::<f64>() / k as f64;
    ensure!(cx.abs() <= 1e-9 && cy.abs() <= 1e-9, "centroid ({cx:e}, {cy:e})");
    let lambda_one = data.lambda_grid.iter().position(|&l| l == 1.0).ok_or("grid lacks 1.0")?;
    let table = terms_x_topics(&run.model, &run.dict, 30);
    for tt in &data.term_table {
        let ranked: Vec<&str> = tt.rankings[lambda_one].iter().map(|r| r.term.as_str()).collect();
        let expected: Vec<&str> = table.topics[tt.topic - 1].iter().map(|t| t.term.as_str()).collect();
        ensure!(ranked == expected, "topic {} ranking differs at lambda 1", tt.topic);
    }
    Ok(format!("K={k}: JSD symmetric, zero diagonal, <= ln 2; centroid ({cx:.1e}, {cy:.1e}); lambda=1 lists equal the terms table"))
}

// 8
fn mtm_contract() -> Outcome {
    let run = sample_model(7, 300)?;
    let table = docs_x_topics(&run.model, &run.docs).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut groups = 0;
    for mode in [MtmMode::Dominant, MtmMode::MeanTheta] {
        let data: MtmData = mtm_data(&table, "year", mode).map_err(|e| e.to_string())?;
        groups = data.groups.len();
        for g in &data.groups {
            worst = worst.max((g.shares.iter().sum::<f64>() - 1.0).abs());
        }
    }
    ensure!(worst <= 1e-9, "share sum off by {worst:e}");
    let label = format_percent(0.15625);
    ensure!(label == "15.63%", "0.15625 formats as {label}");
    Ok(format!("{groups} year groups in both modes, max sum error {worst:.1e}; 0.15625 -> {label}"))
}

// 9
fn workflow_engine() -> Outcome {
    let template = figure1_template();
    let diagnostics = validate(&template);
    ensure!(diagnostics.is_empty(), "template has diagnostics: {diagnostics:?}");

    let mut direct = template.clone();
    direct.edges.push(Edge::new("tokenizer", "tokens", "lda", "corpus"));
    ensure!(
        validate(&direct).iter().any(|d| d.code == DiagnosticCode::TypeMismatch),
        "tokenizer -> lda not rejected as a type mismatch"
    );
    let mut looped = template.clone();
    looped.edges.push(Edge::new("lda", "model", "lda", "corpus"));
    ensure!(validate(&looped).iter().any(|d| d.code == DiagnosticCode::Cycle), "self-edge not reported as a cycle");

    let bytes = template.to_canonical_bytes();
    let again = Workflow::from_bytes(&bytes).map_err(|e| e.to_string())?.to_canonical_bytes();
    ensure!(bytes == again, "serialize/deserialize/serialize changed bytes");
    let mut shuffled = template.clone();
    shuffled.nodes.reverse();
    shuffled.edges.reverse();
    ensure!(shuffled.workflow_hash() == template.workflow_hash(), "hash depends on node order");

    let dir = scratch();
    run_template(42, dir.path())?;
    let run = sample_model(derive_node_seed(42, "lda"), 1000)?;
    let mut archive = Vec::new();
    write_archive(&run.model, &mut archive).map_err(|e| e.to_string())?;
    ensure!(read(dir.path(), "lda.model") == archive, "model archive differs");
    ensure!(
        read(dir.path(), "terms.csv") == terms_x_topics(&run.model, &run.dict, 30).to_csv().into_bytes(),
        "terms table differs"
    );
    let table = docs_x_topics(&run.model, &run.docs).map_err(|e| e.to_string())?;
    ensure!(read(dir.path(), "doc_topics.csv") == table.to_csv().into_bytes(), "docs table differs");
    let ldavis = ldavis_data(&run.model, &run.corpus, &run.dict, 30).map_err(|e| e.to_string())?;
    ensure!(read(dir.path(), "ldavis.json") == json_line(&ldavis), "LDAvis payload differs");
    let mtm = mtm_data(&table, "year", MtmMode::Dominant).map_err(|e| e.to_string())?;
    ensure!(read(dir.path(), "mtm.json") == json_line(&mtm), "MTM payload differs");
    Ok("validation rules, canonical form and hash hold; executed artifacts equal manual composition".into())
}

/// Payload artifact encoding: compact JSON and a newline.
fn json_line<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec(value).expect("serializable");
    out.push(b'\n');
    out
}

// 10
fn k_sweep() -> Outcome {
    let dir = scratch();
    let csv = dir.path().join("sweep.csv");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_topicflow"))
        .args(["sweep", "--k-list", "2..8", "--seed", "3", "--out"])
        .arg(&csv)
        .output()
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(out.status.success(), "sweep failed: {}", String::from_utf8_lossy(&out.stderr));
    ensure!(secs <= 300.0, "sweep took {secs:.1} s");
    let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    ensure!(rows.len() == 7, "{} rows", rows.len());
    let opts = DelimitedOptions::default();
    let docs = load_delimited_bytes(SAMPLE_ABSTRACTS_SOURCE.as_bytes(), &opts, Path::new("sample")).map_err(|e| e.to_string())?;
    let tokens = tokenize_all(&docs, &StopwordList::english(), &TokenizerOptions::default());
    let dict = build_dictionary(&tokens, &DictionaryFilter::default()).map_err(|e| e.to_string())?;
    let corpus = BowCorpus::build(&tokens, &dict);
    let index = CooccurrenceIndex::build(&tokens);
    for (row, k) in rows.iter().zip(2..=8usize) {
        let params = LdaParams {
            seed: 3,
            ..Default::default()
        };
        let model = train_lda(&corpus, &dict, &params.config_for(k)).map_err(|e| e.to_string())?;
        let coherence = index
            .coherence(CoherenceMetric::UMass, &model_top_terms(&model, &dict, 10))
            .map_err(|e| e.to_string())?
            .mean;
        let ppl = perplexity(&model, &corpus).map_err(|e| e.to_string())?;
        ensure!(row[0] == k.to_string(), "row K {} != {k}", row[0]);
        ensure!(row[1].parse::<f64>().ok() == Some(coherence), "K={k} coherence {} != {coherence}", row[1]);
        ensure!(row[2].parse::<f64>().ok() == Some(ppl), "K={k} perplexity {} != {ppl}", row[2]);
    }
    Ok(format!("7 rows in {secs:.1} s, each equal to an independent train+score"))
}

// 11
fn service_contract() -> Outcome {
    let root = scratch();
    let data = root.path().join("data");
    let config = ServiceConfig {
        data_dir: data.clone(),
        ui_dir: None,
    };
    let addr = SocketAddr::from(([127, 0, 0, 1], 0));
    let client = Client::new();
    let workflow_file: PathBuf = root.path().join("figure1.workflow.json");
    std::fs::write(&workflow_file, figure1_template().to_canonical_bytes()).map_err(|e| e.to_string())?;

    let h = service::spawn(config.clone(), addr).map_err(|e| e.to_string())?;
    let r = client
        .post(h.url("/api/workflows"))
        .body(figure1_template().to_canonical_bytes())
        .send()
        .map_err(|e| e.to_string())?;
    ensure!(r.status() == StatusCode::CREATED, "POST workflow gave {}", r.status());
    let wf: Value = r.json().map_err(|e| e.to_string())?;
    let wf_id = wf["workflow_id"].as_str().ok_or("no workflow_id")?.to_string();
    let r = client
        .post(h.url(&format!("/api/workflows/{wf_id}/runs")))
        .json(&json!({ "seed": 42 }))
        .send()
        .map_err(|e| e.to_string())?;
    ensure!(r.status() == StatusCode::ACCEPTED, "POST run gave {}", r.status());
    let job_id = r.json::<Value>().map_err(|e| e.to_string())?["job_id"].as_str().ok_or("no job_id")?.to_string();
    let deadline = Instant::now() + Duration::from_secs(300);
    let job = loop {
        let j: Job = client.get(h.url(&format!("/api/jobs/{job_id}"))).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
        if matches!(j.state, JobState::Succeeded | JobState::Failed) {
            break j;
        }
        ensure!(Instant::now() < deadline, "job did not finish");
        std::thread::sleep(Duration::from_millis(100));
    };
    ensure!(job.state == JobState::Succeeded, "job failed: {:?}", job.error);
    let manifest = job.manifest.clone().ok_or("succeeded job without manifest")?;

    let cli_out = root.path().join("cli");
    let status = Command::new(env!("CARGO_BIN_EXE_topicflow"))
        .arg("run")
        .arg(&workflow_file)
        .args(["--seed", "42", "--out"])
        .arg(&cli_out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "CLI run failed");
    for name in manifest.artifacts.keys() {
        let bytes = client
            .get(h.url(&format!("/api/runs/{job_id}/artifacts/{name}")))
            .send()
            .and_then(|r| r.bytes())
            .map_err(|e| e.to_string())?;
        ensure!(bytes.as_ref() == read(&cli_out, name).as_slice(), "{name} differs between HTTP and CLI");
    }
    let jobs_before: Value = client.get(h.url("/api/jobs")).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
    let wfs_before: Value = client.get(h.url("/api/workflows")).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
    h.stop().map_err(|e| e.to_string())?;

    let h = service::spawn(config, addr).map_err(|e| e.to_string())?;
    let jobs_after: Value = client.get(h.url("/api/jobs")).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
    let wfs_after: Value = client.get(h.url("/api/workflows")).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
    ensure!(jobs_before == jobs_after, "job store changed across restart");
    ensure!(wfs_before == wfs_after, "workflow store changed across restart");
    Ok(format!("201, job succeeded, {} artifacts equal to the CLI run, state restored after restart", manifest.artifacts.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("synthetic topic recovery", synthetic_recovery),
        ("determinism", determinism),
        ("degenerate K=1 exactness", single_topic_exact),
        ("perplexity oracle", perplexity_oracle),
        ("coherence oracle", coherence_oracle),
        ("table contracts", table_contracts),
        ("LDAvis payload properties", ldavis_properties),
        ("MTM contract", mtm_contract),
        ("workflow engine", workflow_engine),
        ("K-sweep", k_sweep),
        ("service contract", service_contract),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("AC{:<2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("AC{:<2} FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
