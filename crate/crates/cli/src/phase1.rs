//! Clustering, pipeline, metrics and validation commands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

use eventcause::graph::LiftWarning;
use eventcause::metrics::{
    adjusted_rand_index, bidirectional_ratio, bleu, homogeneity, normalized_mutual_information, self_loop_ratio,
    silhouette, InterClusterCountMatrix,
};
use eventcause::pipeline::{run_phase1, PipelineParams};
use eventcause::synth::{synthetic_corpus, SynthParams};
use eventcause::validate::validate;
use eventcause::{CooccurrenceMode, MentionId, SimilarityMatrix};

use crate::args::{ClusterArgs, ClusterParams, MetricsArgs, PipelineArgs, SynthArgs, ValidateArgs};
use crate::manifest::Ctx;
use crate::{load, EXIT_OK, EXIT_VIOLATIONS};

fn pipeline_params(p: &ClusterParams) -> PipelineParams {
    PipelineParams {
        seed: p.seed,
        threshold: p.threshold,
        min_size: p.min_size,
        sim_floor: p.sim_floor,
        cooccurrence: CooccurrenceMode::Count,
    }
}

pub fn synth(a: &SynthArgs, ctx: &mut Ctx) -> Result<i32> {
    let p = SynthParams {
        types: a.types,
        stories: a.stories,
        pairs_per_story: a.pairs_per_story,
        dim: a.dim,
        noise: a.noise,
        ..SynthParams::default()
    };
    ctx.seed("synth", a.seed);
    let s = synthetic_corpus(&p, a.seed)?;
    let mut corpus = Vec::new();
    s.collection.write_jsonl(&mut corpus)?;
    ctx.write(&a.out_dir.join("corpus.jsonl"), &corpus)?;

    let ids: Vec<&MentionId> = s.types.keys().collect();
    let mut emb = format!("d={}\n", s.embeddings.dim());
    for id in &ids {
        let v = s.embeddings.get(id).context("synthetic mention without embedding")?;
        let cells: Vec<String> = v.iter().map(f64::to_string).collect();
        writeln!(emb, "{id}\t{}", cells.join(" "))?;
    }
    ctx.write(&a.out_dir.join("embeddings.tsv"), emb.as_bytes())?;

    let mut phr = String::new();
    for (i, x) in ids.iter().enumerate() {
        for y in &ids[i + 1..] {
            let p = s
                .paraphrases
                .get(x, y)
                .context("synthetic pair without paraphrase score")?;
            writeln!(phr, "{x}\t{y}\t{p}")?;
        }
    }
    ctx.write(&a.out_dir.join("paraphrases.tsv"), phr.as_bytes())?;

    let mut types = String::new();
    for (id, t) in &s.types {
        writeln!(types, "{id}\ttype{t}")?;
    }
    ctx.write(&a.out_dir.join("types.tsv"), types.as_bytes())?;
    Ok(EXIT_OK)
}

pub fn cluster(a: &ClusterArgs, ctx: &mut Ctx) -> Result<i32> {
    let col = load::corpus(ctx, &a.inputs.corpus)?;
    let emb = load::embeddings(ctx, &a.inputs.embeddings)?;
    let phr = load::paraphrases(ctx, a.inputs.paraphrases.as_deref(), a.inputs.phr_default)?;
    ctx.seed("pivot", a.params.seed);
    let cs = run_phase1(&col, &emb, &phr, &pipeline_params(&a.params))?.clusters;
    ctx.write(&a.out, cs.to_json().as_bytes())?;
    Ok(EXIT_OK)
}

pub fn pipeline(a: &PipelineArgs, ctx: &mut Ctx) -> Result<i32> {
    let col = load::corpus(ctx, &a.inputs.corpus)?;
    let emb = load::embeddings(ctx, &a.inputs.embeddings)?;
    let phr = load::paraphrases(ctx, a.inputs.paraphrases.as_deref(), a.inputs.phr_default)?;
    ctx.seed("pivot", a.params.seed);
    let out = run_phase1(&col, &emb, &phr, &pipeline_params(&a.params))?;
    for w in &out.warnings {
        match w {
            // outlier mentions are expected here
            LiftWarning::Unassigned(_) => log::debug!("{w}"),
            _ => log::warn!("{w}"),
        }
    }
    ctx.write(&a.out_dir.join("clusters.json"), out.clusters.to_json().as_bytes())?;
    ctx.write(&a.out_dir.join("graph.tsv"), out.graph.edge_list_string().as_bytes())?;
    ctx.write(&a.out_dir.join("cooccur.csv"), out.cooccurrence.csv_string().as_bytes())?;
    Ok(EXIT_OK)
}

fn row(rows: &mut Vec<(String, String)>, k: &str, v: impl ToString) {
    rows.push((k.to_owned(), v.to_string()));
}

pub(crate) fn render_rows(rows: &[(String, String)]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    eventcause::qa::write_report(rows, &mut buf)?;
    Ok(buf)
}

pub fn metrics(a: &MetricsArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let col = load::corpus(ctx, &a.corpus)?;
    let mut rows = Vec::new();
    row(&mut rows, "clusters", cs.len());
    row(&mut rows, "outliers", cs.outliers.len());
    row(
        &mut rows,
        "clustered_mentions",
        cs.clusters.iter().map(|c| c.members.len()).sum::<usize>(),
    );

    let counts = InterClusterCountMatrix::from_clusters(&cs, &col.causal);
    match self_loop_ratio(&cs, &counts) {
        Ok(r) => row(&mut rows, "self_loop_ratio", r),
        Err(e) => log::warn!("self_loop_ratio skipped: {e}"),
    }
    match bidirectional_ratio(&counts) {
        Ok(r) => row(&mut rows, "bidirectional_ratio", r),
        Err(e) => log::warn!("bidirectional_ratio skipped: {e}"),
    }

    if let Some(path) = &a.embeddings {
        let emb = load::embeddings(ctx, path)?;
        let phr = load::paraphrases(ctx, a.paraphrases.as_deref(), a.phr_default)?;
        let ids: Vec<MentionId> = cs.clusters.iter().flat_map(|c| c.members.iter().cloned()).collect();
        let s = SimilarityMatrix::build(ids, &emb, &phr, &col.causal)?;
        row(&mut rows, "silhouette", silhouette(&cs, &s)?);
        row(&mut rows, "homogeneity", homogeneity(&cs, &s)?);
    }

    if let Some(path) = &a.truth {
        let truth = load::tsv_map(ctx, path)?;
        let assign = cs.assignment();
        let mut pred = Vec::with_capacity(truth.len());
        let mut gold = Vec::with_capacity(truth.len());
        for (m, label) in &truth {
            let id = MentionId::from(m.as_str());
            if !col.mentions.contains_key(&id) {
                bail!("truth label for unknown mention `{m}`");
            }
            // outliers are singletons
            pred.push(
                assign
                    .get(&id)
                    .map_or_else(|| format!("outlier:{m}"), |c| format!("cluster:{c}")),
            );
            gold.push(label.clone());
        }
        row(&mut rows, "truth_mentions", gold.len());
        row(&mut rows, "ari", adjusted_rand_index(&pred, &gold)?);
        row(&mut rows, "nmi", normalized_mutual_information(&pred, &gold)?);
    }

    if let Some(path) = &a.bleu {
        let text = ctx.read_string(path)?;
        let mut scores = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut parts = line.split('\t');
            let cand = parts.next().unwrap_or_default();
            let refs: Vec<&str> = parts.collect();
            if refs.is_empty() {
                bail!("{}:{}: expected `candidate<TAB>reference`", path.display(), i + 1);
            }
            scores.push(bleu(cand, &refs).with_context(|| format!("{}:{}", path.display(), i + 1))?);
        }
        if scores.is_empty() {
            bail!("{}: no BLEU pairs", path.display());
        }
        row(&mut rows, "bleu_pairs", scores.len());
        row(&mut rows, "bleu_mean", scores.iter().sum::<f64>() / scores.len() as f64);
    }
    ctx.write(&a.out, &render_rows(&rows)?)?;
    Ok(EXIT_OK)
}

/// Exit 3 when any criterion is violated.
pub fn validate_cmd(a: &ValidateArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let g = load::graph(ctx, &a.graph, Some(&load::cluster_ids(&cs)))?;
    let col = a.corpus.as_ref().map(|p| load::corpus(ctx, p)).transpose()?;
    let universe: Option<BTreeSet<MentionId>> = col.as_ref().map(|c| c.mention_ids().into_iter().collect());
    let report = validate(&cs, &g, col.as_ref().map(|c| &c.causal), universe.as_ref());

    let mut text = String::new();
    let violated: BTreeMap<u8, usize> = report.violations.iter().fold(BTreeMap::new(), |mut m, v| {
        *m.entry(v.criterion).or_insert(0) += 1;
        m
    });
    writeln!(
        text,
        "status\t{}",
        if report.is_clean() { "clean" } else { "violations" }
    )?;
    for c in [1u8, 3, 5] {
        writeln!(text, "criterion_{c}_violations\t{}", violated.get(&c).unwrap_or(&0))?;
    }
    let human: Vec<String> = report.human_judgment.iter().map(u8::to_string).collect();
    writeln!(text, "human_judgment\t{}", human.join(","))?;
    for v in &report.violations {
        writeln!(text, "violation\t{}\t{}\t{}", v.criterion, v.subject, v.message)?;
    }
    for n in &report.notes {
        writeln!(text, "note\t{n}")?;
    }
    ctx.write(&a.out, text.as_bytes())?;
    if !report.is_clean() {
        eprintln!("{} violation(s) found", report.violations.len());
        return Ok(EXIT_VIOLATIONS);
    }
    Ok(EXIT_OK)
}
