//! QA construction, model runs and scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};

use eventcause::annotation::CausalLabel;
use eventcause::qa::{
    baseline_predict, build_qa, classification_report, classification_report_with_failures, discovery_items,
    generate_negatives, read_jsonl, retrieve_cg_hint, run_discovery, run_qa, score_qa, write_jsonl, Baseline,
    ClassReport, DiscoveryItem, LanguageModel, MockModel, Outcome, Parsed, QaItem, QuestionKind, Template, TokenDice,
};
use eventcause::{ClusterId, StoryId};

use crate::args::{BaselineArg, KindArg, QaBuildArgs, QaPairsArgs, QaRunArgs, QaScoreArgs};
use crate::llm::{EndpointConfig, HttpModel};
use crate::manifest::{beside, Ctx, RunManifest};
use crate::phase1::render_rows;
use crate::{load, EXIT_OK};

pub enum Items {
    Qa(Vec<QaItem>),
    Discovery(Vec<DiscoveryItem>),
}

impl Items {
    fn len(&self) -> usize {
        match self {
            Items::Qa(v) => v.len(),
            Items::Discovery(v) => v.len(),
        }
    }
}

/// The first record decides the item type.
pub fn load_items(ctx: &mut Ctx, path: &Path) -> Result<Items> {
    let text = ctx.read_string(path)?;
    let Some(first) = text.lines().find(|l| !l.trim().is_empty()) else {
        bail!("{}: no items", path.display());
    };
    let v: serde_json::Value = serde_json::from_str(first).with_context(|| format!("{}: line 1", path.display()))?;
    let items = if v.get("question_id").is_some() {
        Items::Qa(read_jsonl(path)?)
    } else {
        Items::Discovery(read_jsonl(path)?)
    };
    Ok(items)
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_jsonl(items, &mut buf)?;
    Ok(buf)
}

fn topics(cs: &eventcause::ClusterSet) -> BTreeMap<ClusterId, String> {
    cs.clusters
        .iter()
        .filter_map(|c| c.topic.clone().map(|t| (c.cluster_id.clone(), t)))
        .collect()
}

pub fn build(a: &QaBuildArgs, ctx: &mut Ctx) -> Result<i32> {
    let col = load::corpus(ctx, &a.corpus)?;
    let paraphrases: Option<BTreeMap<StoryId, String>> = a
        .story_paraphrases
        .as_ref()
        .map(|p| load::tsv_map(ctx, p))
        .transpose()?
        .map(|m| m.into_iter().map(|(k, v)| (StoryId::from(k.as_str()), v)).collect());
    let extras = match &a.extras {
        None => None,
        Some(p) => {
            let mut out = BTreeMap::new();
            for (qid, list) in load::tsv_map(ctx, p)? {
                let set = list
                    .split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<std::result::Result<BTreeSet<_>, _>>()
                    .with_context(|| format!("extras for `{qid}`"))?;
                out.insert(qid, set);
            }
            Some(out)
        }
    };
    let kind = match a.kind {
        KindArg::Specific => QuestionKind::Specific,
        KindArg::Abstract => QuestionKind::Abstract,
    };
    let mut items = build_qa(&col, kind, paraphrases.as_ref(), extras.as_ref())?;
    if let (Some(cp), Some(gp)) = (&a.clusters, &a.graph) {
        let cs = load::clusters(ctx, cp)?;
        let g = load::graph(ctx, gp, Some(&load::cluster_ids(&cs)))?;
        let mut hinted = 0;
        for q in &mut items {
            q.cg_hint = retrieve_cg_hint(&q.target, q.direction, &cs, &g, &TokenDice);
            hinted += usize::from(q.cg_hint.is_some());
        }
        log::info!("{hinted} of {} questions carry a graph hint", items.len());
    }
    ctx.write(&a.out, &jsonl(&items)?)?;
    Ok(EXIT_OK)
}

pub fn pairs(a: &QaPairsArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let g = load::graph(ctx, &a.graph, Some(&load::cluster_ids(&cs)))?;
    let m = a.cooccur.as_ref().map(|p| load::cooccurrence(ctx, p)).transpose()?;
    let topics = topics(&cs);
    let neg_seed = a.seed.wrapping_add(1);
    ctx.seed("positives", a.seed);
    ctx.seed("negatives", neg_seed);
    let mut items = discovery_items(&g, &topics, a.seed)?;
    items.extend(generate_negatives(&g, &topics, a.negatives, neg_seed, m.as_ref())?);
    ctx.write(&a.out, &jsonl(&items)?)?;
    Ok(EXIT_OK)
}

fn model(a: &QaRunArgs, ctx: &mut Ctx) -> Result<Box<dyn LanguageModel>> {
    if let Some(path) = &a.mock {
        let bytes = ctx.read(path)?;
        let m = MockModel::from_reader(&bytes[..], a.mock_default.clone())
            .with_context(|| format!("loading {}", path.display()))?;
        return Ok(Box::new(m));
    }
    let Some(endpoint) = &a.endpoint else {
        bail!("either --endpoint or --mock is required");
    };
    let api_key = std::env::var(&a.api_key_env).ok();
    if api_key.is_none() {
        log::warn!("${} is unset; sending requests without a key", a.api_key_env);
    }
    Ok(Box::new(HttpModel::new(EndpointConfig {
        base_url: endpoint.clone(),
        model: a.model.clone(),
        temperature: a.temperature,
        max_tokens: a.max_tokens,
        api_key,
        retries: a.retries,
        backoff: Duration::from_millis(500),
        timeout: Duration::from_secs(120),
    })?))
}

pub fn run(a: &QaRunArgs, ctx: &mut Ctx) -> Result<i32> {
    let items = load_items(ctx, &a.items)?;
    let template: Template = a.template.parse()?;
    let model = model(a, ctx)?;
    let outcomes = match &items {
        Items::Qa(v) => {
            if template == Template::Pairwise {
                bail!("template `pairwise` needs relation items, not questions");
            }
            let missing = v.iter().filter(|q| q.cg_hint.is_none()).count();
            if a.with_cg && missing > 0 {
                bail!(
                    "--with-cg: {missing} of {} questions have no graph hint (build them with --clusters and --graph, or filter them out)",
                    v.len()
                );
            }
            run_qa(v, model.as_ref(), template, a.with_cg, a.concurrency)?
        }
        Items::Discovery(v) => {
            if template != Template::Pairwise || a.with_cg {
                bail!("relation items take `--template pairwise` without --with-cg");
            }
            run_discovery(v, model.as_ref(), a.concurrency)?
        }
    };
    let failures = outcomes.iter().filter(|o| o.parsed == Parsed::Failure).count();
    if failures > 0 {
        log::warn!("{failures} of {} answers did not parse", outcomes.len());
    }
    ctx.write(&a.out, &jsonl(&outcomes)?)?;
    Ok(EXIT_OK)
}

fn class_rows(r: &ClassReport, rows: &mut Vec<(String, String)>) {
    rows.push(("macro_precision".into(), r.macro_precision.to_string()));
    rows.push(("macro_recall".into(), r.macro_recall.to_string()));
    rows.push(("macro_f1".into(), r.macro_f1.to_string()));
    for (l, p, rc, f, support) in &r.per_class {
        rows.push((format!("{l}.precision"), p.to_string()));
        rows.push((format!("{l}.recall"), rc.to_string()));
        rows.push((format!("{l}.f1"), f.to_string()));
        rows.push((format!("{l}.support"), support.to_string()));
    }
}

fn outcome_map(outcomes: Vec<Outcome>) -> Result<BTreeMap<String, Outcome>> {
    let mut map = BTreeMap::new();
    for o in outcomes {
        let id = o.item_id.clone();
        if map.insert(id.clone(), o).is_some() {
            bail!("outcome `{id}` appears twice");
        }
    }
    Ok(map)
}

/// Generation parameters from the run manifest beside the outcomes, when
/// there is one.
fn generation_rows(ctx: &mut Ctx, outcomes: &Path, rows: &mut Vec<(String, String)>) -> Result<()> {
    let Some(path) = beside(outcomes).filter(|p| p.exists()) else {
        return Ok(());
    };
    ctx.input(&path)?;
    let m = RunManifest::load(&path)?;
    if let Some(params) = m.params.as_object() {
        for key in [
            "template",
            "with_cg",
            "model",
            "temperature",
            "max_tokens",
            "endpoint",
            "mock",
        ] {
            if let Some(v) = params.get(key).filter(|v| !v.is_null()) {
                let v = v.as_str().map_or_else(|| v.to_string(), str::to_owned);
                rows.push((format!("run.{key}"), v));
            }
        }
    }
    Ok(())
}

pub fn score(a: &QaScoreArgs, ctx: &mut Ctx) -> Result<i32> {
    let items = load_items(ctx, &a.items)?;
    let mut rows = vec![("items".to_owned(), items.len().to_string())];
    match (&items, &a.outcomes, a.baseline) {
        (Items::Qa(v), Some(path), _) => {
            let outcomes = outcome_map(read_outcomes(ctx, path)?)?;
            generation_rows(ctx, path, &mut rows)?;
            let gold: BTreeMap<String, BTreeSet<usize>> =
                v.iter().map(|q| (q.question_id.clone(), q.gold.clone())).collect();
            let preds: BTreeMap<String, BTreeSet<usize>> =
                outcomes.iter().map(|(k, o)| (k.clone(), o.parsed.indices())).collect();
            let failures = outcomes.values().filter(|o| o.parsed == Parsed::Failure).count();
            let s = score_qa(&preds, &gold)?;
            rows.push(("parse_failures".into(), failures.to_string()));
            rows.push(("accuracy".into(), s.accuracy.to_string()));
            rows.push(("weighted_f1".into(), s.weighted_f1.to_string()));
        }
        (Items::Discovery(v), Some(path), _) => {
            let outcomes = outcome_map(read_outcomes(ctx, path)?)?;
            generation_rows(ctx, path, &mut rows)?;
            if outcomes.len() != v.len() {
                bail!("{} outcomes for {} items", outcomes.len(), v.len());
            }
            let mut preds = Vec::with_capacity(v.len());
            for d in v {
                let o = outcomes
                    .get(&d.pair_id)
                    .with_context(|| format!("no outcome for `{}`", d.pair_id))?;
                preds.push(match o.parsed {
                    Parsed::Relation(l) => Some(l),
                    _ => None,
                });
            }
            let gold: Vec<CausalLabel> = v.iter().map(|d| d.gold).collect();
            rows.push((
                "parse_failures".into(),
                preds.iter().filter(|p| p.is_none()).count().to_string(),
            ));
            class_rows(&classification_report_with_failures(&preds, &gold)?, &mut rows);
        }
        (Items::Discovery(v), None, Some(b)) => {
            let gold: Vec<CausalLabel> = v.iter().map(|d| d.gold).collect();
            let kind = match b {
                BaselineArg::Random => Baseline::Random,
                BaselineArg::Majority => Baseline::Majority,
            };
            ctx.seed("baseline", a.seed);
            let preds = baseline_predict(kind, v, a.seed, &gold)?;
            rows.push(("baseline".into(), format!("{b:?}").to_lowercase()));
            class_rows(&classification_report(&preds, &gold)?, &mut rows);
        }
        (Items::Qa(_), None, Some(_)) => bail!("baselines apply to relation items only"),
        (_, None, None) => bail!("give --outcomes or --baseline"),
    }
    ctx.write(&a.out, &render_rows(&rows)?)?;
    Ok(EXIT_OK)
}

fn read_outcomes(ctx: &mut Ctx, path: &Path) -> Result<Vec<Outcome>> {
    ctx.input(path)?;
    Ok(read_jsonl(path)?)
}
