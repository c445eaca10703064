//! Annotation task queues, the HTTP service and log aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use serde::Serialize;

use eventcause::annotation::{
    batch_seed, causal_pair_tasks, generate_tasks, topic_match_tasks, unify_subclusterings, AnnotationStore, Answer,
    CausalLabel, ContextIndex, Subclustering, TaskKind, Unified,
};
use eventcause::discovery::Cpdag;
use eventcause::ClusterId;

use crate::args::{AggregateArgs, InitArgs, OutliersArgs, PairsArgs, ServeArgs};
use crate::manifest::Ctx;
use crate::{load, server, EXIT_OK};

const LOG_FILE: &str = "events.jsonl";
const CONTEXT_FILE: &str = "contexts.json";

fn record_state(ctx: &mut Ctx, dir: &Path) -> Result<()> {
    for name in [LOG_FILE, CONTEXT_FILE] {
        let p = dir.join(name);
        if p.exists() {
            ctx.output(&p)?;
        }
    }
    Ok(())
}

pub fn init(a: &InitArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let col = load::corpus(ctx, &a.corpus)?;
    let tasks = generate_tasks(&cs, &col, &a.annotators, a.batch_size, a.per_task)?;
    let mut store = AnnotationStore::open(&a.state_dir)?;
    store.set_contexts(ContextIndex::new(&col, &cs))?;
    let n = tasks.len();
    store.add_tasks(tasks)?;
    log::info!("queued {n} sub-clustering tasks");
    record_state(ctx, &a.state_dir)?;
    Ok(EXIT_OK)
}

/// Every adjacency of the edge list, directed or not, becomes one pair.
pub fn pairs(a: &PairsArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let col = load::corpus(ctx, &a.corpus)?;
    let text = ctx.read(&a.graph)?;
    let g = Cpdag::read_edge_list(&text[..], Some(&load::cluster_ids(&cs)))
        .with_context(|| format!("loading {}", a.graph.display()))?;
    let nodes = g.nodes();
    let pairs: Vec<(ClusterId, ClusterId)> = g
        .directed()
        .iter()
        .chain(g.undirected())
        .map(|&(x, y)| (nodes[x].clone(), nodes[y].clone()))
        .collect();
    let tasks = causal_pair_tasks(&cs, &pairs, &a.annotators, a.batch_size, a.per_pair)?;
    let mut store = AnnotationStore::open(&a.state_dir)?;
    store.set_contexts(ContextIndex::new(&col, &cs))?;
    store.add_tasks(tasks)?;
    record_state(ctx, &a.state_dir)?;
    Ok(EXIT_OK)
}

pub fn outliers(a: &OutliersArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let col = load::corpus(ctx, &a.corpus)?;
    let tasks = topic_match_tasks(&cs, &col, &col.causal, &a.reviewer)?;
    let mut store = AnnotationStore::open(&a.state_dir)?;
    store.add_tasks(tasks)?;
    record_state(ctx, &a.state_dir)?;
    Ok(EXIT_OK)
}

pub fn serve(a: &ServeArgs, ctx: &mut Ctx) -> Result<i32> {
    let store = AnnotationStore::open(&a.state_dir)?;
    let app = server::router(Arc::new(Mutex::new(store)));
    let addr = format!("{}:{}", a.host, a.port);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("serving")
    })?;
    record_state(ctx, &a.state_dir)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct UnifiedCluster {
    cluster_id: ClusterId,
    annotators: [String; 2],
    unified: Unified,
}

/// agreement.json, decisions.tsv (decided edges as `cause<TAB>effect`)
/// and unified.json (sub-clusterings with two complete answers).
pub fn aggregate(a: &AggregateArgs, ctx: &mut Ctx) -> Result<i32> {
    let store = AnnotationStore::open(&a.state_dir)?;
    record_state(ctx, &a.state_dir)?;
    // inputs, not outputs, for this command
    ctx.inputs.append(&mut ctx.outputs);
    ctx.seed("unify", a.seed);

    let report = store.agreement();
    let mut agreement = serde_json::to_string_pretty(&report)?;
    agreement.push('\n');
    ctx.write(&a.out_dir.join("agreement.json"), agreement.as_bytes())?;

    let mut decisions = String::new();
    for d in &report.decisions {
        match d.label {
            Some(CausalLabel::ACausesB) => writeln!(decisions, "{}\t{}", d.a, d.b)?,
            Some(CausalLabel::BCausesA) => writeln!(decisions, "{}\t{}", d.b, d.a)?,
            Some(CausalLabel::None) | None => {}
        }
    }
    ctx.write(&a.out_dir.join("decisions.tsv"), decisions.as_bytes())?;

    let mut unified = Vec::new();
    let mut pending = 0usize;
    for t in store.tasks_for(None, None) {
        if t.kind() != TaskKind::Subcluster {
            continue;
        }
        let eventcause::annotation::TaskPayload::Subcluster { cluster_id, .. } = &t.payload else {
            continue;
        };
        let answers: BTreeMap<&str, Subclustering> = store
            .records(&t.task_id)
            .into_iter()
            .filter_map(|r| match &r.answer {
                Answer::Subcluster { groups, outliers } => Some((
                    r.annotator_id.as_str(),
                    Subclustering {
                        groups: groups.clone(),
                        outliers: outliers.clone(),
                    },
                )),
                _ => None,
            })
            .collect();
        let mut who = t.assigned_to.iter().filter(|x| answers.contains_key(x.as_str()));
        let (Some(r1), Some(r2)) = (who.next(), who.next()) else {
            pending += 1;
            continue;
        };
        let u = unify_subclusterings(
            &answers[r1.as_str()],
            &answers[r2.as_str()],
            batch_seed(a.seed, t.batch),
        )?;
        unified.push(UnifiedCluster {
            cluster_id: cluster_id.clone(),
            annotators: [r1.clone(), r2.clone()],
            unified: u,
        });
    }
    if pending > 0 {
        log::warn!("{pending} sub-clustering task(s) lack two answers");
    }
    let mut text = serde_json::to_string_pretty(&unified)?;
    text.push('\n');
    ctx.write(&a.out_dir.join("unified.json"), text.as_bytes())?;
    Ok(EXIT_OK)
}
