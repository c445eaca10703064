//! Graph construction, census and PC discovery commands.

use anyhow::Result;

use eventcause::discovery::{
    dag_pattern, evaluate_cpdag, evaluate_graph, pc, BinaryDataset, CiTestKind, EdgeCredit, GraphScore, PcOptions,
};
use eventcause::graph::{build_cooccurrence, count_structures, frequency_subgraph, lift_relations, CensusConvention};
use eventcause::CooccurrenceMode;

use crate::args::{CensusArgs, ConventionArg, CooccurArgs, DiscoverArgs, LiftArgs, SubgraphArgs, TestArg};
use crate::manifest::Ctx;
use crate::phase1::render_rows;
use crate::{load, EXIT_OK};

pub fn lift(a: &LiftArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let col = load::corpus(ctx, &a.corpus)?;
    let (g, warnings) = lift_relations(&cs, &col.causal);
    for w in &warnings {
        log::warn!("{w}");
    }
    ctx.write(&a.out, g.edge_list_string().as_bytes())?;
    Ok(EXIT_OK)
}

pub fn census(a: &CensusArgs, ctx: &mut Ctx) -> Result<i32> {
    let g = load::graph(ctx, &a.graph, None)?;
    let conventions: Vec<CensusConvention> = match a.convention {
        ConventionArg::All => CensusConvention::ALL.to_vec(),
        ConventionArg::Standard => vec![CensusConvention::Standard],
        ConventionArg::Unrestricted => vec![CensusConvention::Unrestricted],
        ConventionArg::Ordered => vec![CensusConvention::Ordered],
        ConventionArg::Unshielded => vec![CensusConvention::Unshielded],
    };
    let mut rows = vec![
        ("nodes".to_owned(), g.node_count().to_string()),
        ("edges".to_owned(), g.edge_count().to_string()),
    ];
    for c in conventions {
        let s = count_structures(&g, c)?;
        let name = c.name();
        rows.push((format!("{name}.confounders"), s.confounders.to_string()));
        rows.push((format!("{name}.mediators"), s.mediators.to_string()));
        rows.push((format!("{name}.colliders"), s.colliders.to_string()));
    }
    ctx.write(&a.out, &render_rows(&rows)?)?;
    Ok(EXIT_OK)
}

pub fn cooccur(a: &CooccurArgs, ctx: &mut Ctx) -> Result<i32> {
    let cs = load::clusters(ctx, &a.clusters)?;
    let col = load::corpus(ctx, &a.corpus)?;
    let mode = if a.binary {
        CooccurrenceMode::Binary
    } else {
        CooccurrenceMode::Count
    };
    let m = build_cooccurrence(&col, &cs, mode)?;
    ctx.write(&a.out, m.csv_string().as_bytes())?;
    Ok(EXIT_OK)
}

pub fn subgraph(a: &SubgraphArgs, ctx: &mut Ctx) -> Result<i32> {
    let m = load::cooccurrence(ctx, &a.cooccur)?;
    let g = load::graph(ctx, &a.graph, Some(&m.clusters))?;
    let sub = frequency_subgraph(&g, &m, a.min_df);
    log::info!("kept {} of {} nodes", sub.node_count(), g.node_count());
    ctx.write(&a.out, sub.edge_list_string().as_bytes())?;
    Ok(EXIT_OK)
}

fn score_rows(prefix: &str, s: &GraphScore, rows: &mut Vec<(String, String)>) {
    rows.push((format!("{prefix}.shd"), s.shd.to_string()));
    rows.push((format!("{prefix}.precision"), s.precision.to_string()));
    rows.push((format!("{prefix}.recall"), s.recall.to_string()));
    rows.push((format!("{prefix}.f1"), s.f1.to_string()));
}

pub fn discover(a: &DiscoverArgs, ctx: &mut Ctx) -> Result<i32> {
    let m = load::cooccurrence(ctx, &a.data)?;
    let d = BinaryDataset::from_cooccurrence(&m);
    let kind = match a.test {
        TestArg::G2 => CiTestKind::G2,
        TestArg::Chi2 => CiTestKind::Chi2,
    };
    let out = pc(
        &d,
        kind,
        a.alpha,
        PcOptions {
            max_cond: Some(a.max_cond),
        },
    )?;
    ctx.write(&a.out, out.cpdag.edge_list_string().as_bytes())?;
    if let Some(path) = &a.truth {
        let truth = load::graph(ctx, path, Some(out.cpdag.nodes()))?;
        let mut rows = vec![
            ("rows".to_owned(), d.n_rows().to_string()),
            ("tests_run".to_owned(), out.tests_run.to_string()),
            ("constant_columns".to_owned(), out.skipped.len().to_string()),
        ];
        score_rows(
            "dag",
            &evaluate_graph(&out.cpdag, &truth, EdgeCredit::ExactDirected)?,
            &mut rows,
        );
        score_rows(
            "pattern",
            &evaluate_cpdag(&out.cpdag, &dag_pattern(&truth)?)?,
            &mut rows,
        );
        ctx.write(&a.report, &render_rows(&rows)?)?;
    }
    Ok(EXIT_OK)
}
