//! The `eventcause` command line: every command writes plain-text
//! artifacts plus a run manifest recording parameters, seeds and content
//! digests of what it read and wrote.

pub mod annotate;
pub mod args;
pub mod graph_cmd;
pub mod llm;
pub mod load;
pub mod manifest;
pub mod phase1;
pub mod qa_cmd;
pub mod server;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Parser;
use serde::Serialize;

use crate::args::{AnnotateCmd, Cli, Command, GraphCmd, QaCmd, ReplayArgs};
use crate::manifest::{beside, in_dir, write_manifest, Ctx, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// `validate` found violations.
pub const EXIT_VIOLATIONS: i32 = 3;

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli, &recorded) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

struct Done {
    name: &'static str,
    params: serde_json::Value,
    manifest: Option<PathBuf>,
    code: i32,
}

fn done(name: &'static str, params: &impl Serialize, manifest: Option<PathBuf>, code: i32) -> Result<Done> {
    Ok(Done {
        name,
        params: serde_json::to_value(params)?,
        manifest,
        code,
    })
}

fn dispatch(cli: Cli, argv: &[String]) -> Result<i32> {
    if let Command::Replay(a) = &cli.command {
        return replay(a);
    }
    let mut ctx = Ctx::default();
    let c = &mut ctx;
    let d = match &cli.command {
        Command::Synth(a) => done("synth", a, Some(in_dir(&a.out_dir, "synth")), phase1::synth(a, c)?)?,
        Command::Cluster(a) => done("cluster", a, beside(&a.out), phase1::cluster(a, c)?)?,
        Command::Pipeline(a) => done(
            "pipeline",
            a,
            Some(in_dir(&a.out_dir, "pipeline")),
            phase1::pipeline(a, c)?,
        )?,
        Command::Metrics(a) => done("metrics", a, beside(&a.out), phase1::metrics(a, c)?)?,
        Command::Validate(a) => done("validate", a, beside(&a.out), phase1::validate_cmd(a, c)?)?,
        Command::Graph(GraphCmd::Lift(a)) => done("graph lift", a, beside(&a.out), graph_cmd::lift(a, c)?)?,
        Command::Graph(GraphCmd::Census(a)) => done("graph census", a, beside(&a.out), graph_cmd::census(a, c)?)?,
        Command::Graph(GraphCmd::Cooccur(a)) => done("graph cooccur", a, beside(&a.out), graph_cmd::cooccur(a, c)?)?,
        Command::Graph(GraphCmd::Subgraph(a)) => done("graph subgraph", a, beside(&a.out), graph_cmd::subgraph(a, c)?)?,
        Command::Discover(a) => done("discover", a, beside(&a.out), graph_cmd::discover(a, c)?)?,
        Command::Annotate(AnnotateCmd::Init(a)) => done(
            "annotate init",
            a,
            Some(in_dir(&a.state_dir, "annotate init")),
            annotate::init(a, c)?,
        )?,
        Command::Annotate(AnnotateCmd::Pairs(a)) => done(
            "annotate pairs",
            a,
            Some(in_dir(&a.state_dir, "annotate pairs")),
            annotate::pairs(a, c)?,
        )?,
        Command::Annotate(AnnotateCmd::Outliers(a)) => done(
            "annotate outliers",
            a,
            Some(in_dir(&a.state_dir, "annotate outliers")),
            annotate::outliers(a, c)?,
        )?,
        Command::Annotate(AnnotateCmd::Serve(a)) => done(
            "annotate serve",
            a,
            Some(in_dir(&a.state_dir, "annotate serve")),
            annotate::serve(a, c)?,
        )?,
        Command::Annotate(AnnotateCmd::Aggregate(a)) => done(
            "annotate aggregate",
            a,
            Some(in_dir(&a.out_dir, "annotate aggregate")),
            annotate::aggregate(a, c)?,
        )?,
        Command::Qa(QaCmd::Build(a)) => done("qa build", a, beside(&a.out), qa_cmd::build(a, c)?)?,
        Command::Qa(QaCmd::Pairs(a)) => done("qa pairs", a, beside(&a.out), qa_cmd::pairs(a, c)?)?,
        Command::Qa(QaCmd::Run(a)) => done("qa run", a, beside(&a.out), qa_cmd::run(a, c)?)?,
        Command::Qa(QaCmd::Score(a)) => done("qa score", a, beside(&a.out), qa_cmd::score(a, c)?)?,
        Command::Replay(_) => unreachable!("handled above"),
    };
    if let Some(path) = cli.manifest.or(d.manifest) {
        let m = ctx.finish(d.name, argv, &d.params)?;
        write_manifest(&path, &m)?;
    }
    Ok(d.code)
}

/// Re-runs the recorded argv and compares every output digest.
fn replay(a: &ReplayArgs) -> Result<i32> {
    let before = RunManifest::load(&a.manifest_file)?;
    let mut argv = vec!["eventcause".to_owned()];
    argv.extend(before.argv.iter().cloned());
    let code = run(&argv);
    if code != EXIT_OK && code != EXIT_VIOLATIONS {
        bail!("replayed command exited with {code}");
    }
    let after = RunManifest::load(&a.manifest_file)?;
    let mut diffs = Vec::new();
    for (path, digest) in &before.outputs {
        match after.outputs.get(path) {
            Some(d) if d == digest => {}
            Some(_) => diffs.push(format!("{path}: content differs")),
            None => diffs.push(format!("{path}: not written")),
        }
    }
    for (path, digest) in &before.inputs {
        if after.inputs.get(path) != Some(digest) {
            diffs.push(format!("{path}: input changed since the recorded run"));
        }
    }
    if diffs.is_empty() {
        eprintln!("replay matches: {} output(s)", before.outputs.len());
        Ok(EXIT_OK)
    } else {
        for d in &diffs {
            eprintln!("{d}");
        }
        Ok(EXIT_ERROR)
    }
}
