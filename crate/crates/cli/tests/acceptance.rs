//! Acceptance lines observed through the `codeconcept` binary. Criteria whose
//! substance is numeric (oracle comparisons over random instances) are
//! checked here on what the command line exposes; the exhaustive oracle runs
//! live in the library's own acceptance target.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::thread;
use std::time::{Duration, Instant};

use codeconcept::activation_io::{write_activations, ActivationDataset};
use codeconcept::InstanceId;
use serde_json::Value;

type Check = Result<(), String>;
type TokenIndex = BTreeMap<(String, u64), (String, String)>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn demo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

fn run_with(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_codeconcept"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_with(args, &[])
}

fn ok(args: &[&str]) -> Check {
    let out = run(args);
    ensure!(
        out.status.success(),
        "`{}` exited {:?}: {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn jsonl(path: &Path) -> Result<Vec<Value>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}

fn instance(v: &Value) -> (String, u64) {
    (v[0].as_str().unwrap().to_owned(), v[1].as_u64().unwrap())
}

/// Token table keyed by instance: (text, tag).
fn token_index(path: &Path) -> Result<TokenIndex, String> {
    Ok(jsonl(path)?
        .into_iter()
        .map(|r| {
            (
                (r["snippet_id"].as_str().unwrap().to_owned(), r["token_idx"].as_u64().unwrap()),
                (r["text"].as_str().unwrap().to_owned(), r["tag"].as_str().unwrap().to_owned()),
            )
        })
        .collect())
}

fn cluster_members(clusters: &Value) -> Vec<(u64, Vec<(String, u64)>)> {
    clusters["clusters"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["id"].as_u64().unwrap(), c["members"].as_array().unwrap().iter().map(instance).collect()))
        .collect()
}

/// Tokenize, embed and cluster the demo corpus into `dir`.
fn demo_pipeline(dir: &Path, k: &str) -> Check {
    ok(&["tokenize", "--corpus", p(&demo()), "--out", p(&dir.join("tokens.jsonl"))])?;
    ok(&[
        "stub-activations",
        "--tokens",
        p(&dir.join("tokens.jsonl")),
        "--out",
        p(&dir.join("acts/manifest.json")),
    ])?;
    ok(&[
        "discover",
        "--activations",
        p(&dir.join("acts/manifest.json")),
        "--tokens",
        p(&dir.join("tokens.jsonl")),
        "--k",
        k,
        "--out",
        p(&dir.join("clusters.json")),
    ])
}

fn tempdir() -> Result<tempfile::TempDir, String> {
    tempfile::tempdir().map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- criteria

fn kmeans_criterion() -> Check {
    let dir = tempdir()?;
    // four blobs in 8 dimensions, one hot axis per class, deterministic jitter
    let mut rows = Vec::new();
    let mut matrix = Vec::new();
    let mut tokens = String::new();
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    for i in 0..200usize {
        rows.push(InstanceId::new("blobs.java", i));
        for j in 0..8 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let jitter = ((state >> 33) as f64 / (1u64 << 31) as f64 - 0.5) as f32;
            matrix.push(if j == (i % 4) * 2 { 10.0 } else { 0.0 } + jitter);
        }
        tokens.push_str(&format!(
            "{{\"snippet_id\":\"blobs.java\",\"token_idx\":{i},\"text\":\"t{i}\",\"start_byte\":{i},\"end_byte\":{},\"tag\":\"identifier\"}}\n",
            i + 1
        ));
    }
    let dataset = ActivationDataset::new("blobs", 0, 8, rows, matrix).map_err(|e| e.to_string())?;
    write_activations(&dataset, &dir.path().join("manifest.json")).map_err(|e| e.to_string())?;
    fs::write(dir.path().join("records.jsonl"), tokens).unwrap();
    let start = Instant::now();
    ok(&[
        "discover",
        "--activations",
        p(&dir.path().join("manifest.json")),
        "--tokens",
        p(&dir.path().join("records.jsonl")),
        "--k",
        "4",
        "--out",
        p(&dir.path().join("clusters.json")),
    ])?;
    ensure!(start.elapsed() < Duration::from_secs(5), "discover took {:?}", start.elapsed());
    // every blob must land in its own cluster
    let clusters = json(&dir.path().join("clusters.json"))?;
    for (id, members) in cluster_members(&clusters) {
        let classes: BTreeSet<u64> = members.iter().map(|(_, i)| i % 4).collect();
        ensure!(classes.len() == 1 && members.len() == 50, "cluster {id} mixes classes {classes:?}");
    }
    Ok(())
}

fn determinism_criterion() -> Check {
    let dir = tempdir()?;
    demo_pipeline(dir.path(), "20")?;
    let d = dir.path();
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = d.join(format!("clusters_{threads}.json"));
        let o = run_with(
            &[
                "discover",
                "--activations",
                p(&d.join("acts/manifest.json")),
                "--tokens",
                p(&d.join("tokens.jsonl")),
                "--k",
                "20",
                "--out",
                p(&out),
            ],
            &[("RAYON_NUM_THREADS", threads)],
        );
        ensure!(o.status.success(), "discover with {threads} threads failed");
        outputs.push(fs::read(out).unwrap());
    }
    ensure!(outputs[0] == outputs[1], "clusters differ between 1 and 8 threads");
    ensure!(outputs[0] == fs::read(d.join("clusters.json")).unwrap(), "rerun is not byte-identical");
    Ok(())
}

fn alignment_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    demo_pipeline(d, "20")?;
    ok(&["align", "--clusters", p(&d.join("clusters.json")), "--tags", p(&d.join("tokens.jsonl")), "--out", p(&d.join("align"))])?;
    let report = json(&d.join("align/alignment.json"))?;
    let tokens = token_index(&d.join("tokens.jsonl"))?;
    let clusters = cluster_members(&json(&d.join("clusters.json"))?);
    let vocab = report["vocabulary_size"].as_u64().unwrap() as f64;

    let mut best_fraction: BTreeMap<String, f64> = BTreeMap::new();
    let mut majority = Vec::new();
    for (_, members) in &clusters {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for m in members {
            *counts.entry(tokens[m].1.as_str()).or_default() += 1;
        }
        for (tag, &n) in &counts {
            let f = n as f64 / members.len() as f64;
            let slot = best_fraction.entry(tag.to_string()).or_insert(0.0);
            *slot = slot.max(f);
        }
        let top = counts.values().copied().max().unwrap();
        let tag = counts.iter().find(|(_, &n)| n == top).unwrap().0.to_string();
        majority.push((tag, top, members.len()));
    }
    for (label, (tag, top, size)) in report["clusters"].as_array().unwrap().iter().zip(&majority) {
        ensure!(label["tag"] == tag.as_str(), "cluster {} tag {} vs {tag}", label["cluster_id"], label["tag"]);
        ensure!((label["purity"].as_f64().unwrap() - *top as f64 / *size as f64).abs() < 1e-12, "purity");
    }
    for row in report["thresholds"].as_array().unwrap() {
        let theta = row["threshold"].as_f64().unwrap();
        let labeled = majority.iter().filter(|(_, n, s)| *n as f64 / *s as f64 >= theta).count();
        let covered: Vec<&String> = best_fraction.iter().filter(|(_, &f)| f >= theta).map(|(t, _)| t).collect();
        ensure!(row["clusters_labeled"] == labeled, "clusters labeled at {theta}");
        ensure!(row["unique_tags"] == covered.len(), "unique tags at {theta}");
        let pct = 100.0 * covered.len() as f64 / vocab;
        ensure!((row["tag_coverage_pct"].as_f64().unwrap() - pct).abs() < 1e-9, "coverage at {theta}");
    }
    for name in ["alignment.csv", "alignment.md"] {
        ensure!(d.join("align").join(name).exists(), "{name} missing");
    }
    Ok(())
}

fn lexical_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    demo_pipeline(d, "20")?;
    ok(&[
        "align",
        "--clusters",
        p(&d.join("clusters.json")),
        "--tags",
        p(&d.join("tokens.jsonl")),
        "--lexical-threshold",
        "0.6",
        "--out",
        p(&d.join("align")),
    ])?;
    let report = json(&d.join("align/lexical.json"))?;
    let tokens = token_index(&d.join("tokens.jsonl"))?;
    let clusters: BTreeMap<u64, Vec<(String, u64)>> = cluster_members(&json(&d.join("clusters.json"))?).into_iter().collect();
    let mut per_pattern: BTreeMap<String, usize> = BTreeMap::new();
    let mut checked = 0;
    for c in report["clusters"].as_array().unwrap() {
        let members = &clusters[&c["cluster_id"].as_u64().unwrap()];
        let distinct: BTreeSet<&str> = members.iter().map(|m| tokens[m].0.as_str()).collect();
        for m in c["matches"].as_array().unwrap() {
            let pattern = m["pattern"].as_str().unwrap();
            *per_pattern.entry(pattern.to_owned()).or_default() += 1;
            let Some(w) = m["witness"].as_str() else { continue };
            let hits = distinct
                .iter()
                .filter(|t| match pattern {
                    "Prefix" => t.starts_with(w),
                    "Suffix" => t.ends_with(w),
                    _ => t.contains(w),
                })
                .count();
            let f = hits as f64 / distinct.len() as f64;
            ensure!((m["fraction"].as_f64().unwrap() - f).abs() < 1e-12 && f >= 0.6, "{pattern} `{w}` fraction");
            checked += 1;
        }
    }
    ensure!(checked > 0, "no affix patterns reported on the demo corpus");
    let total = report["total_clusters"].as_f64().unwrap();
    for (pattern, pct) in report["percentages"].as_object().unwrap() {
        let want = 100.0 * per_pattern.get(pattern).copied().unwrap_or(0) as f64 / total;
        ensure!((pct.as_f64().unwrap() - want).abs() < 1e-9, "{pattern} percentage");
    }
    Ok(())
}

fn csi_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    demo_pipeline(d, "20")?;
    let clusters = p(&d.join("clusters.json")).to_owned();
    ok(&["csi", "--before", &clusters, "--after", &clusters, "--out", p(&d.join("self.json"))])?;
    let report = json(&d.join("self.json"))?;
    ensure!(report["CSI"] == 0.0, "identity CSI {}", report["CSI"]);
    ensure!(report["perturbation"] == "Unperturbed", "label {}", report["perturbation"]);

    // a clustering of a perturbed corpus without its map is a data error
    ok(&[
        "perturb",
        "--corpus",
        p(&demo()),
        "--kind",
        "NoOpStatementInjection",
        "--out",
        p(&d.join("noop")),
        "--map",
        p(&d.join("noop.jsonl")),
    ])?;
    let other = d.join("other");
    fs::create_dir_all(&other).unwrap();
    ok(&["tokenize", "--corpus", p(&d.join("noop")), "--out", p(&other.join("tokens.jsonl"))])?;
    ok(&["stub-activations", "--tokens", p(&other.join("tokens.jsonl")), "--out", p(&other.join("acts/m.json"))])?;
    ok(&[
        "discover",
        "--activations",
        p(&other.join("acts/m.json")),
        "--tokens",
        p(&other.join("tokens.jsonl")),
        "--k",
        "20",
        "--out",
        p(&other.join("clusters.json")),
    ])?;
    let o = run(&["csi", "--before", &clusters, "--after", p(&other.join("clusters.json")), "--out", p(&d.join("x.json"))]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    ensure!(o.status.code() == Some(1), "unmapped csi exited {:?}", o.status.code());
    ensure!(stderr.contains(".c") || stderr.contains(".java"), "error names no snippet: {stderr}");
    ok(&[
        "csi",
        "--before",
        &clusters,
        "--after",
        p(&other.join("clusters.json")),
        "--map",
        p(&d.join("noop.jsonl")),
        "--out",
        p(&d.join("noop_csi.json")),
    ])?;
    let csi = json(&d.join("noop_csi.json"))?["CSI"].as_f64().unwrap();
    ensure!((0.0..=1.0).contains(&csi), "CSI {csi}");
    Ok(())
}

fn perturbation_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    for kind in [
        "DeterministicIdentifierRenaming",
        "IdentifierCasingVariation",
        "MinimalCasingPerturbation",
        "CanonicalIdentifierSubstitution",
        "VariableScopeReassignment",
        "InstrumentationInsertion",
        "BooleanExpressionNegation",
        "PointerIntroduction",
        "StatementOrderRandomization",
        "SwitchToConditional",
        "NoOpStatementInjection",
    ] {
        // `perturb` reparses and validates every rewritten snippet itself
        ok(&[
            "perturb",
            "--corpus",
            p(&demo()),
            "--kind",
            kind,
            "--out",
            p(&d.join(kind)),
            "--map",
            p(&d.join(format!("{kind}.jsonl"))),
        ])?;
    }
    demo_pipeline(d, "20")?;
    let dir_out = d.join("dir");
    fs::create_dir_all(&dir_out).unwrap();
    ok(&["tokenize", "--corpus", p(&d.join("DeterministicIdentifierRenaming")), "--out", p(&dir_out.join("tokens.jsonl"))])?;
    ok(&[
        "stub-activations",
        "--tokens",
        p(&dir_out.join("tokens.jsonl")),
        "--from",
        p(&d.join("acts/manifest.json")),
        "--map",
        p(&d.join("DeterministicIdentifierRenaming.jsonl")),
        "--out",
        p(&dir_out.join("acts/m.json")),
    ])?;
    ok(&[
        "discover",
        "--activations",
        p(&dir_out.join("acts/m.json")),
        "--tokens",
        p(&dir_out.join("tokens.jsonl")),
        "--k",
        "20",
        "--out",
        p(&dir_out.join("clusters.json")),
    ])?;
    ok(&[
        "csi",
        "--before",
        p(&d.join("clusters.json")),
        "--after",
        p(&dir_out.join("clusters.json")),
        "--map",
        p(&d.join("DeterministicIdentifierRenaming.jsonl")),
        "--out",
        p(&d.join("dir_csi.json")),
    ])?;
    let csi = json(&d.join("dir_csi.json"))?;
    ensure!(csi["CSI"] == 0.0, "renaming with identical activations gave CSI {}", csi["CSI"]);
    Ok(())
}

/// Two Java snippets, tokenized, embedded and clustered with K = 2.
fn small_project(d: &Path) -> Result<usize, String> {
    let corpus = d.join("src");
    fs::create_dir_all(&corpus).unwrap();
    fs::write(
        corpus.join("A.java"),
        "class A {\n  int sum(int[] xs) {\n    int total = 0;\n    for (int x : xs) { total += x; }\n    return total;\n  }\n}\n",
    )
    .unwrap();
    fs::write(
        corpus.join("B.java"),
        "class B {\n  String greet(String name) {\n    StringBuilder sb = new StringBuilder();\n    sb.append(name);\n    return sb.toString();\n  }\n}\n",
    )
    .unwrap();
    ok(&["tokenize", "--corpus", p(&corpus), "--out", p(&d.join("tokens.jsonl"))])?;
    ok(&["stub-activations", "--tokens", p(&d.join("tokens.jsonl")), "--out", p(&d.join("acts/manifest.json"))])?;
    ok(&[
        "discover",
        "--activations",
        p(&d.join("acts/manifest.json")),
        "--tokens",
        p(&d.join("tokens.jsonl")),
        "--k",
        "2",
        "--out",
        p(&d.join("clusters.json")),
    ])?;
    Ok(jsonl(&d.join("tokens.jsonl"))?
        .iter()
        .filter(|r| r["snippet_id"] == "A.java")
        .count())
}

fn attribute(d: &Path, scores: &[f64], extra: &[&str]) -> Result<Vec<Value>, String> {
    let record = serde_json::json!({
        "snippet_id": "A.java",
        "predicted_label": "Java",
        "true_label": "Java",
        "scores": scores,
    });
    fs::write(d.join("attr.jsonl"), format!("{record}\n")).unwrap();
    let path = |name: &str| p(&d.join(name)).to_owned();
    let mut args: Vec<String> = vec!["attribute".into()];
    for (flag, name) in [
        ("--activations", "acts/manifest.json"),
        ("--clusters", "clusters.json"),
        ("--attributions", "attr.jsonl"),
        ("--tokens", "tokens.jsonl"),
        ("--corpus", "src"),
        ("--out", "explanations.jsonl"),
    ] {
        args.push(flag.into());
        args.push(path(name));
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&args)?;
    jsonl(&d.join("explanations.jsonl"))
}

fn classifier_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    let n = small_project(d)?;
    let scores: Vec<f64> = (0..n).map(|i| (i % 5) as f64).collect();
    let classifier = d.join("classifier.json");
    let explanations = attribute(d, &scores, &["--max-epochs", "500", "--classifier-out", p(&classifier)])?;
    ensure!(!explanations.is_empty(), "no explanations written");
    let manifest = json(&classifier)?;
    ensure!(d.join("classifier.params.f32").exists(), "classifier parameters missing");
    let acc = manifest["train_accuracy"].as_f64().unwrap_or(0.0);
    ensure!(acc >= 0.99, "training accuracy {acc} on two clusters");
    for e in &explanations {
        let p = e["probability"].as_f64().unwrap();
        ensure!((0.0..=1.0).contains(&p), "probability {p}");
    }
    Ok(())
}

fn top_p_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    let n = small_project(d)?;
    // 0.4 + 0.3 >= 0.5 of the mass; the rest is spread thin
    let rest = 0.3 / (n - 2) as f64;
    let mut scores = vec![rest; n];
    scores[4] = -0.4;
    scores[9] = 0.3;
    let explanations = attribute(d, &scores, &["--max-epochs", "20"])?;
    let picked: Vec<u64> = explanations.iter().map(|e| e["token_idx"].as_u64().unwrap()).collect();
    ensure!(picked == [4, 9], "selected {picked:?}");
    let prompt = explanations[0]["prompt"].as_str().unwrap_or("");
    ensure!(prompt.contains("Programming Language Classification"), "prompt lacks the task");
    Ok(())
}

fn completion(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn mock_server(script: Vec<(u16, String)>) -> (String, thread::JoinHandle<usize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut served = 0;
        for (status, body) in script {
            let Ok((stream, _)) = listener.accept() else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            served += 1;
        }
        served
    });
    (url, handle)
}

fn annotation_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    small_project(d)?;
    let answer = r#"{"Label":"Buffer Manipulation","Semantic_Tags":["StringBuilder","StringBuffer","Data Aggregation","String Concatenation"],"Description":"Builders that append data."}"#;
    let (url, server) = mock_server(vec![(429, "{}".into()), (200, completion(answer)), (200, completion(answer))]);
    ok(&[
        "annotate",
        "--clusters",
        p(&d.join("clusters.json")),
        "--tokens",
        p(&d.join("tokens.jsonl")),
        "--corpus",
        p(&d.join("src")),
        "--endpoint",
        &url,
        "--max-in-flight",
        "1",
        "--out",
        p(&d.join("annotations.jsonl")),
    ])?;
    ensure!(server.join().unwrap() == 3, "expected one retry and two answers");
    let annotations = jsonl(&d.join("annotations.jsonl"))?;
    ensure!(annotations.len() == 2, "{} annotations", annotations.len());
    ensure!(annotations.iter().all(|a| a["label"] == "Buffer Manipulation"), "labels {annotations:?}");

    // a schema violation is reported per cluster and fails the run
    let bad = r#"{"Label":"X","Semantic_Tags":["a","b"],"Description":"d"}"#;
    let (url, server) = mock_server(vec![(200, completion(bad)), (200, completion(answer))]);
    let o = run(&[
        "annotate",
        "--clusters",
        p(&d.join("clusters.json")),
        "--tokens",
        p(&d.join("tokens.jsonl")),
        "--corpus",
        p(&d.join("src")),
        "--endpoint",
        &url,
        "--max-in-flight",
        "1",
        "--max-retries",
        "0",
        "--out",
        p(&d.join("partial.jsonl")),
    ]);
    server.join().unwrap();
    let stderr = String::from_utf8_lossy(&o.stderr);
    ensure!(o.status.code() == Some(1), "schema violation exited {:?}", o.status.code());
    ensure!(stderr.contains("Semantic_Tags"), "error does not name the field: {stderr}");
    ensure!(jsonl(&d.join("partial.jsonl"))?.len() == 1, "valid annotation not kept");
    Ok(())
}

fn formats_criterion() -> Check {
    let dir = tempdir()?;
    let d = dir.path();
    demo_pipeline(d, "20")?;
    let matrix = d.join("acts/matrix.f32");
    let bytes = fs::read(&matrix).unwrap();
    fs::write(&matrix, &bytes[..bytes.len() - 4]).unwrap();
    let o = run(&[
        "discover",
        "--activations",
        p(&d.join("acts/manifest.json")),
        "--tokens",
        p(&d.join("tokens.jsonl")),
        "--k",
        "20",
        "--out",
        p(&d.join("x.json")),
    ]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    ensure!(o.status.code() == Some(1), "truncated matrix exited {:?}", o.status.code());
    ensure!(stderr.contains("corrupt matrix") && stderr.contains("matrix.f32"), "stderr: {stderr}");

    let o = run(&["stub-activations", "--tokens", p(&d.join("tokens.jsonl")), "--out", p(&d.join("m.json"))]);
    ensure!(o.status.code() == Some(2), "stub output over its own input exited {:?}", o.status.code());
    ensure!(token_index(&d.join("tokens.jsonl")).is_ok(), "token table was overwritten");

    let conf = d.join("bad.conf");
    fs::write(&conf, "no-such-option = 3\n").unwrap();
    let cases: [Vec<&str>; 4] = [
        vec!["discover", "--bogus"],
        vec!["discover", "--activations", "missing.json", "--tokens", "missing.jsonl", "--out", "x.json"],
        vec!["align", "--clusters", "c", "--tags", "t", "--thresholds", "1.5", "--out", "o"],
        vec!["--config", p(&conf), "discover"],
    ];
    for args in cases {
        let o = run(&args);
        ensure!(o.status.code() == Some(2), "`{}` exited {:?}", args.join(" "), o.status.code());
    }
    Ok(())
}

fn end_to_end_criterion() -> Check {
    let start = Instant::now();
    let dir = tempdir()?;
    let d = dir.path();
    demo_pipeline(d, "20")?;
    ok(&["align", "--clusters", p(&d.join("clusters.json")), "--tags", p(&d.join("tokens.jsonl")), "--out", p(&d.join("align"))])?;
    ok(&[
        "perturb",
        "--corpus",
        p(&demo()),
        "--kind",
        "NoOpStatementInjection",
        "--out",
        p(&d.join("noop")),
        "--map",
        p(&d.join("noop.jsonl")),
    ])?;
    let n = d.join("n");
    fs::create_dir_all(&n).unwrap();
    ok(&["tokenize", "--corpus", p(&d.join("noop")), "--out", p(&n.join("tokens.jsonl"))])?;
    ok(&["stub-activations", "--tokens", p(&n.join("tokens.jsonl")), "--out", p(&n.join("acts/manifest.json"))])?;
    ok(&[
        "discover",
        "--activations",
        p(&n.join("acts/manifest.json")),
        "--tokens",
        p(&n.join("tokens.jsonl")),
        "--k",
        "20",
        "--out",
        p(&n.join("clusters.json")),
    ])?;
    ok(&[
        "csi",
        "--before",
        p(&d.join("clusters.json")),
        "--after",
        p(&n.join("clusters.json")),
        "--map",
        p(&d.join("noop.jsonl")),
        "--out",
        p(&d.join("csi.json")),
    ])?;
    ok(&[
        "report",
        "--clusters",
        p(&d.join("clusters.json")),
        "--tokens",
        p(&d.join("tokens.jsonl")),
        "--alignment",
        p(&d.join("align")),
        "--csi",
        p(&d.join("csi.json")),
        "--out",
        p(&d.join("report.md")),
    ])?;
    for name in [
        "tokens.jsonl",
        "acts/manifest.json",
        "acts/matrix.f32",
        "clusters.json",
        "align/alignment.json",
        "align/lexical.json",
        "noop.jsonl",
        "csi.json",
        "report.md",
        "report_csi.csv",
    ] {
        let meta = fs::metadata(d.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(meta.len() > 0, "{name} is empty");
    }
    let report = fs::read_to_string(d.join("report.md")).unwrap();
    ensure!(report.contains("No-Op Statement Injection") || report.contains("| Perturbation |"), "report lacks CSI table");
    ensure!(start.elapsed() < Duration::from_secs(60), "pipeline took {:?}", start.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("discover separates four blobs within 5 s (ARI oracle runs in the library target)", kmeans_criterion),
        ("discover output identical for RAYON_NUM_THREADS=1 and 8 and across reruns", determinism_criterion),
        ("align reports match a recount from clusters.json and tokens.jsonl", alignment_criterion),
        ("align lexical witnesses and percentages match a recount", lexical_criterion),
        ("csi is 0 on identical clusterings and a missing map exits 1 naming a snippet", csi_criterion),
        ("perturb succeeds for every kind; renaming with transferred activations gives CSI 0", perturbation_criterion),
        ("attribute trains and saves a classifier (gradient and epoch oracles run in the library target)", classifier_criterion),
        ("attribute selects the minimal top-P prefix", top_p_criterion),
        ("annotate retries, parses answers and names schema violations", annotation_criterion),
        ("corrupt matrix exits 1 and configuration errors exit 2", formats_criterion),
        ("end-to-end command pipeline produces every artifact in < 60 s", end_to_end_criterion),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match result {
            Ok(()) => println!("PASS: {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL: {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
