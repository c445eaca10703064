#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["eventcause"];
    argv.extend_from_slice(args);
    eventcause_cli::run(argv)
}

pub fn spawn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventcause"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub struct Fixture {
    pub dir: PathBuf,
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    pub paraphrases: PathBuf,
    pub types: PathBuf,
}

/// A synthetic corpus written by the `synth` command.
pub fn synth(root: &Path, seed: u64, stories: usize) -> Fixture {
    let dir = root.join(format!("synth-{seed}"));
    let seed_s = seed.to_string();
    let stories_s = stories.to_string();
    assert_eq!(
        run(&[
            "synth",
            "--seed",
            &seed_s,
            "--stories",
            &stories_s,
            "--out-dir",
            s(&dir)
        ]),
        0
    );
    Fixture {
        corpus: dir.join("corpus.jsonl"),
        embeddings: dir.join("embeddings.tsv"),
        paraphrases: dir.join("paraphrases.tsv"),
        types: dir.join("types.tsv"),
        dir,
    }
}

pub fn pipeline(f: &Fixture, seed: u64, out: &Path) -> i32 {
    let seed_s = seed.to_string();
    run(&[
        "pipeline",
        "--corpus",
        s(&f.corpus),
        "--embeddings",
        s(&f.embeddings),
        "--paraphrases",
        s(&f.paraphrases),
        "--seed",
        &seed_s,
        "--out-dir",
        s(out),
    ])
}
