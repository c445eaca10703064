mod common;

use std::collections::BTreeMap;
use std::fs;

use clap::CommandFactory;
use proptest::prelude::*;

use common::{pipeline, run, s, spawn, synth};
use eventcause_cli::args::Cli;
use eventcause_cli::manifest::RunManifest;

fn report(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

#[test]
fn missing_corpus_is_a_usage_error() {
    let out = spawn(&["pipeline", "--embeddings", "e.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--corpus"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
}

#[test]
fn unknown_flag_and_help_exit_codes() {
    assert_eq!(spawn(&["cluster", "--bogus"]).status.code(), Some(2));
    assert_eq!(spawn(&["frobnicate"]).status.code(), Some(2));
    let help = spawn(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("pipeline"));
}

#[test]
fn io_failure_exits_one_with_diagnostic() {
    let out = spawn(&["graph", "census", "--graph", "/nonexistent/graph.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/graph.tsv"));
}

fn help_of(path: &[&str]) -> String {
    let mut cmd = Cli::command();
    let mut cur = &mut cmd;
    for name in path {
        cur = cur.find_subcommand_mut(name).expect("subcommand exists");
    }
    cur.render_long_help().to_string()
}

#[test]
fn help_documents_defaults() {
    let cluster = help_of(&["cluster"]);
    for d in ["[default: 0.70]", "[default: 0.50]", "[default: 10]"] {
        assert!(cluster.contains(d), "cluster help lacks {d}");
    }
    assert_eq!(help_of(&["pipeline"]).matches("[default: 0.70]").count(), 1);
    let discover = help_of(&["discover"]);
    assert!(discover.contains("[default: 0.01]"));
    assert!(discover.contains("[default: 3]"));
    assert!(discover.contains("[default: g2]"));
    assert!(help_of(&["annotate", "init"]).contains("[default: 60]"));
    assert!(help_of(&["annotate", "pairs"]).contains("[default: 3]"));
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let f = synth(tmp.path(), 11, 60);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(pipeline(&f, 7, &a), 0);
    assert_eq!(pipeline(&f, 7, &b), 0);
    for name in ["clusters.json", "graph.tsv", "cooccur.csv"] {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, y, "{name} differs");
    }
    let ma = RunManifest::load(&a.join("pipeline.manifest.json")).unwrap();
    let mb = RunManifest::load(&b.join("pipeline.manifest.json")).unwrap();
    assert_eq!(ma.command, "pipeline");
    assert_eq!(ma.seeds.get("pivot"), Some(&7));
    assert_eq!(ma.inputs, mb.inputs);
    let digests = |m: &RunManifest| m.outputs.values().cloned().collect::<Vec<_>>();
    assert_eq!(digests(&ma), digests(&mb));
    assert_eq!(ma.outputs.len(), 3);
    assert_eq!(ma.version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn cluster_matches_pipeline_clusters() {
    let tmp = tempfile::tempdir().unwrap();
    let f = synth(tmp.path(), 5, 50);
    let out = tmp.path().join("p");
    assert_eq!(pipeline(&f, 2, &out), 0);
    let c = tmp.path().join("c.json");
    let code = run(&[
        "cluster",
        "--corpus",
        s(&f.corpus),
        "--embeddings",
        s(&f.embeddings),
        "--paraphrases",
        s(&f.paraphrases),
        "--seed",
        "2",
        "--out",
        s(&c),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read(&c).unwrap(), fs::read(out.join("clusters.json")).unwrap());
    assert!(tmp.path().join("c.json.manifest.json").exists());
}

#[test]
fn replay_reproduces_and_detects_changed_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let f = synth(tmp.path(), 2, 40);
    let out = tmp.path().join("run");
    assert_eq!(pipeline(&f, 1, &out), 0);
    let m = out.join("pipeline.manifest.json");
    assert_eq!(run(&["replay", s(&m)]), 0);
    let mut text = fs::read_to_string(&f.paraphrases).unwrap();
    text = text.replacen("\t0.", "\t0.0", 1);
    fs::write(&f.paraphrases, text).unwrap();
    assert_eq!(run(&["replay", s(&m)]), 1);
}

#[test]
fn validate_flags_a_cluster_without_edges() {
    let tmp = tempfile::tempdir().unwrap();
    let f = synth(tmp.path(), 4, 50);
    let out = tmp.path().join("run");
    assert_eq!(pipeline(&f, 3, &out), 0);
    let clusters = out.join("clusters.json");
    let graph = out.join("graph.tsv");
    let rep = tmp.path().join("ok.tsv");
    assert_eq!(
        run(&[
            "validate",
            "--clusters",
            s(&clusters),
            "--graph",
            s(&graph),
            "--out",
            s(&rep)
        ]),
        0
    );
    assert_eq!(report(&fs::read_to_string(&rep).unwrap())["status"], "clean");

    let empty = tmp.path().join("empty.tsv");
    fs::write(&empty, "").unwrap();
    let bad = tmp.path().join("bad.tsv");
    let code = run(&[
        "validate",
        "--clusters",
        s(&clusters),
        "--graph",
        s(&empty),
        "--out",
        s(&bad),
    ]);
    assert_eq!(code, 3);
    let text = fs::read_to_string(&bad).unwrap();
    assert!(text.lines().any(|l| l.starts_with("violation\t3\t")), "{text}");
    assert!(bad.with_file_name("bad.tsv.manifest.json").exists());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // validate passes on pipeline output for fuzzed synthetic corpora
    #[test]
    fn validate_accepts_pipeline_output(seed in 0u64..10_000, stories in 30usize..90, pivot in 0u64..100) {
        let tmp = tempfile::tempdir().unwrap();
        let f = synth(tmp.path(), seed, stories);
        let out = tmp.path().join("run");
        prop_assert_eq!(pipeline(&f, pivot, &out), 0);
        let rep = tmp.path().join("v.tsv");
        let code = run(&[
            "validate",
            "--clusters", s(&out.join("clusters.json")),
            "--graph", s(&out.join("graph.tsv")),
            "--corpus", s(&f.corpus),
            "--out", s(&rep),
        ]);
        let text = fs::read_to_string(&rep).unwrap();
        prop_assert_eq!(code, 0, "{}", text);
    }
}

#[test]
fn metrics_report_recovers_latent_types() {
    let tmp = tempfile::tempdir().unwrap();
    let f = synth(tmp.path(), 9, 80);
    let out = tmp.path().join("run");
    assert_eq!(pipeline(&f, 0, &out), 0);
    let bleu = tmp.path().join("bleu.tsv");
    fs::write(&bleu, "a person get a job\ta person get a job\n").unwrap();
    let rep = tmp.path().join("metrics.tsv");
    let code = run(&[
        "metrics",
        "--clusters",
        s(&out.join("clusters.json")),
        "--corpus",
        s(&f.corpus),
        "--embeddings",
        s(&f.embeddings),
        "--paraphrases",
        s(&f.paraphrases),
        "--truth",
        s(&f.types),
        "--bleu",
        s(&bleu),
        "--out",
        s(&rep),
    ]);
    assert_eq!(code, 0);
    let r = report(&fs::read_to_string(&rep).unwrap());
    assert_eq!(r["self_loop_ratio"], "0");
    assert_eq!(r["bidirectional_ratio"], "0");
    assert!(r["ari"].parse::<f64>().unwrap() > 0.8, "{r:?}");
    assert!(r["nmi"].parse::<f64>().unwrap() > 0.8, "{r:?}");
    assert_eq!(r["bleu_mean"], "1");
    for k in ["silhouette", "homogeneity"] {
        let v: f64 = r[k].parse().unwrap();
        assert!(v.is_finite() && v <= 1.0, "{k} = {v}");
    }
}

#[test]
fn graph_commands_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let f = synth(tmp.path(), 6, 60);
    let out = tmp.path().join("run");
    assert_eq!(pipeline(&f, 0, &out), 0);
    let clusters = out.join("clusters.json");

    let lifted = tmp.path().join("lifted.tsv");
    assert_eq!(
        run(&[
            "graph",
            "lift",
            "--clusters",
            s(&clusters),
            "--corpus",
            s(&f.corpus),
            "--out",
            s(&lifted)
        ]),
        0
    );
    assert_eq!(fs::read(&lifted).unwrap(), fs::read(out.join("graph.tsv")).unwrap());

    let co = tmp.path().join("co.csv");
    assert_eq!(
        run(&[
            "graph",
            "cooccur",
            "--clusters",
            s(&clusters),
            "--corpus",
            s(&f.corpus),
            "--out",
            s(&co)
        ]),
        0
    );
    assert_eq!(fs::read(&co).unwrap(), fs::read(out.join("cooccur.csv")).unwrap());
    let bin = tmp.path().join("bin.csv");
    let code = run(&[
        "graph",
        "cooccur",
        "--clusters",
        s(&clusters),
        "--corpus",
        s(&f.corpus),
        "--binary",
        "--out",
        s(&bin),
    ]);
    assert_eq!(code, 0);
    let bin_text = fs::read_to_string(&bin).unwrap();
    assert!(bin_text
        .lines()
        .skip(1)
        .all(|l| l.split(',').skip(1).all(|v| v == "0" || v == "1")));

    let census = tmp.path().join("census.tsv");
    assert_eq!(run(&["graph", "census", "--graph", s(&lifted), "--out", s(&census)]), 0);
    let r = report(&fs::read_to_string(&census).unwrap());
    assert!(r.contains_key("standard.colliders") && r.contains_key("unshielded.mediators"));

    let sub = tmp.path().join("sub.tsv");
    let code = run(&[
        "graph",
        "subgraph",
        "--graph",
        s(&lifted),
        "--cooccur",
        s(&co),
        "--min-df",
        "1000",
        "--out",
        s(&sub),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&sub).unwrap(), "");

    let cpdag = tmp.path().join("cpdag.tsv");
    let score = tmp.path().join("score.tsv");
    let code = run(&[
        "discover",
        "--data",
        s(&co),
        "--truth",
        s(&lifted),
        "--report",
        s(&score),
        "--out",
        s(&cpdag),
    ]);
    assert_eq!(code, 0);
    let cp = fs::read_to_string(&cpdag).unwrap();
    assert!(
        cp.lines()
            .all(|l| l.split('\t').nth(1).is_some_and(|m| m == "->" || m == "-")),
        "{cp}"
    );
    let r = report(&fs::read_to_string(&score).unwrap());
    assert_eq!(r["rows"], "60");
    assert!(r.contains_key("pattern.shd"));
}
