//! PC-stable: adjacency sets are frozen within each conditioning level so
//! the result does not depend on the order edges are visited.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;

use super::citest::{ci_test, CiTestKind};
use super::cpdag::Cpdag;
use super::data::{contingency_table, BinaryDataset};
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::ids::ClusterId;

pub const DEFAULT_MAX_COND: usize = 3;

/// Answers `x ⫫ y | s` queries.
pub trait CiOracle: Sync {
    fn n_vars(&self) -> usize;
    fn independent(&self, x: usize, y: usize, s: &[usize]) -> Result<bool>;
}

pub struct DataCiTest<'a> {
    pub data: &'a BinaryDataset,
    pub kind: CiTestKind,
    pub alpha: f64,
}

impl CiOracle for DataCiTest<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn independent(&self, x: usize, y: usize, s: &[usize]) -> Result<bool> {
        let tables = contingency_table(self.data, x, y, s)?;
        Ok(ci_test(&tables, self.kind, self.alpha)?.independent)
    }
}

/// d-separation in a known DAG.
pub struct DSeparation<'a> {
    dag: &'a CausalGraph,
    parents: Vec<Vec<usize>>,
}

impl<'a> DSeparation<'a> {
    pub fn new(dag: &'a CausalGraph) -> Result<Self> {
        if !dag.is_acyclic() {
            return Err(Error::Cyclic);
        }
        let parents = (0..dag.node_count()).map(|v| dag.parents(v)).collect();
        Ok(Self { dag, parents })
    }

    /// Moralized ancestral graph test.
    pub fn d_separated(&self, x: usize, y: usize, s: &[usize]) -> bool {
        let n = self.dag.node_count();
        let mut anc = vec![false; n];
        let mut stack: Vec<usize> = [x, y].iter().chain(s).copied().collect();
        while let Some(v) = stack.pop() {
            if !anc[v] {
                anc[v] = true;
                stack.extend(&self.parents[v]);
            }
        }
        let mut moral: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in (0..n).filter(|&v| anc[v]) {
            let pa = &self.parents[v];
            for (i, &p) in pa.iter().enumerate() {
                moral[v].push(p);
                moral[p].push(v);
                for &q in &pa[i + 1..] {
                    moral[p].push(q);
                    moral[q].push(p);
                }
            }
        }
        let mut blocked = vec![false; n];
        for &v in s {
            blocked[v] = true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([x]);
        seen[x] = true;
        while let Some(v) = queue.pop_front() {
            if v == y {
                return false;
            }
            for &w in &moral[v] {
                if !seen[w] && !blocked[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        true
    }
}

impl CiOracle for DSeparation<'_> {
    fn n_vars(&self) -> usize {
        self.dag.node_count()
    }

    fn independent(&self, x: usize, y: usize, s: &[usize]) -> Result<bool> {
        Ok(self.d_separated(x, y, s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PcOptions {
    /// Largest conditioning set tried; `None` runs until no set fits.
    pub max_cond: Option<usize>,
}

impl Default for PcOptions {
    fn default() -> Self {
        Self {
            max_cond: Some(DEFAULT_MAX_COND),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcOutput {
    pub cpdag: Cpdag,
    /// Separating set for each removed pair `(lo, hi)`.
    pub sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    pub tests_run: usize,
    /// Constant columns left out of the search.
    pub skipped: Vec<ClusterId>,
}

/// PC on binary data with a stratified χ²/G² test.
pub fn pc(d: &BinaryDataset, kind: CiTestKind, alpha: f64, opts: PcOptions) -> Result<PcOutput> {
    if d.n_vars() < 2 {
        return Err(Error::Invalid("PC needs at least two variables".into()));
    }
    if d.n_rows() == 0 {
        return Err(Error::Empty("dataset"));
    }
    let active: Vec<bool> = (0..d.n_vars()).map(|j| !d.is_constant(j)).collect();
    let skipped: Vec<ClusterId> = (0..d.n_vars())
        .filter(|&j| !active[j])
        .map(|j| d.columns()[j].clone())
        .collect();
    for c in &skipped {
        log::warn!("column `{c}` is constant; left isolated");
    }
    let oracle = DataCiTest { data: d, kind, alpha };
    let mut out = run(&oracle, d.columns().to_vec(), opts, &active)?;
    out.skipped = skipped;
    Ok(out)
}

/// PC against any independence oracle.
pub fn pc_with<O: CiOracle>(oracle: &O, nodes: Vec<ClusterId>, opts: PcOptions) -> Result<PcOutput> {
    if nodes.len() != oracle.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: oracle.n_vars(),
            actual: nodes.len(),
        });
    }
    if nodes.len() < 2 {
        return Err(Error::Invalid("PC needs at least two variables".into()));
    }
    let active = vec![true; nodes.len()];
    run(oracle, nodes, opts, &active)
}

/// Equivalence-class pattern of a DAG: PC with the exact d-separation
/// oracle and unbounded conditioning sets.
pub fn dag_pattern(g: &CausalGraph) -> Result<Cpdag> {
    if g.node_count() < 2 {
        return Ok(Cpdag::empty(g.nodes().to_vec()));
    }
    let oracle = DSeparation::new(g)?;
    Ok(pc_with(&oracle, g.nodes().to_vec(), PcOptions { max_cond: None })?.cpdag)
}

fn run<O: CiOracle>(oracle: &O, nodes: Vec<ClusterId>, opts: PcOptions, active: &[bool]) -> Result<PcOutput> {
    let p = nodes.len();
    let mut adj: Vec<BTreeSet<usize>> = (0..p)
        .map(|x| {
            if active[x] {
                (0..p).filter(|&y| y != x && active[y]).collect()
            } else {
                BTreeSet::new()
            }
        })
        .collect();
    let mut sepsets = BTreeMap::new();
    let mut tests_run = 0;

    for level in 0.. {
        if opts.max_cond.is_some_and(|m| level > m) {
            break;
        }
        let pairs: Vec<(usize, usize)> = (0..p)
            .flat_map(|x| adj[x].range(x + 1..).map(move |&y| (x, y)))
            .collect();
        if !pairs.iter().any(|&(x, y)| adj[x].len() > level || adj[y].len() > level) {
            break;
        }
        let frozen = &adj;
        let results: Vec<Result<(Option<Vec<usize>>, usize)>> = pairs
            .par_iter()
            .map(|&(x, y)| separate(oracle, frozen, x, y, level))
            .collect();
        for (&(x, y), r) in pairs.iter().zip(results) {
            let (sep, n) = r?;
            tests_run += n;
            if let Some(s) = sep {
                adj[x].remove(&y);
                adj[y].remove(&x);
                sepsets.insert((x, y), s);
            }
        }
    }

    let mut g = Cpdag::empty(nodes);
    for (x, ys) in adj.iter().enumerate() {
        for &y in ys.range(x + 1..) {
            g.add_undirected(x, y)?;
        }
    }
    orient_v_structures(&mut g, &adj, &sepsets);
    apply_meek_rules(&mut g);
    Ok(PcOutput {
        cpdag: g,
        sepsets,
        tests_run,
        skipped: Vec::new(),
    })
}

/// Searches conditioning sets of size `level` drawn from `adj(x) \ {y}`,
/// then from `adj(y) \ {x}`, each in lexicographic order.
fn separate<O: CiOracle>(
    oracle: &O,
    adj: &[BTreeSet<usize>],
    x: usize,
    y: usize,
    level: usize,
) -> Result<(Option<Vec<usize>>, usize)> {
    let from_x: Vec<usize> = adj[x].iter().copied().filter(|&v| v != y).collect();
    let from_y: Vec<usize> = adj[y].iter().copied().filter(|&v| v != x).collect();
    let mut tests = 0;
    for (pool, other) in [(&from_x, None), (&from_y, Some(&from_x))] {
        if pool.len() < level {
            continue;
        }
        let mut idx: Vec<usize> = (0..level).collect();
        loop {
            let set: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
            // sets already drawn from adj(x) were tested in the first pass
            let repeat = other.is_some_and(|o| set.iter().all(|v| o.contains(v)));
            if !repeat {
                tests += 1;
                if oracle.independent(x, y, &set)? {
                    return Ok((Some(set), tests));
                }
            }
            if !next_combination(&mut idx, pool.len()) {
                break;
            }
        }
    }
    Ok((None, tests))
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `x -> z <- y` for every non-adjacent `x, y` with common neighbour `z`
/// outside their separating set. An orientation that would reverse an
/// earlier one is dropped.
fn orient_v_structures(g: &mut Cpdag, adj: &[BTreeSet<usize>], sepsets: &BTreeMap<(usize, usize), Vec<usize>>) {
    for z in 0..adj.len() {
        let nb: Vec<usize> = adj[z].iter().copied().collect();
        for (i, &x) in nb.iter().enumerate() {
            for &y in &nb[i + 1..] {
                if adj[x].contains(&y) {
                    continue;
                }
                let Some(sep) = sepsets.get(&(x.min(y), x.max(y))) else {
                    continue;
                };
                if sep.contains(&z) {
                    continue;
                }
                for u in [x, y] {
                    if !g.orient(u, z) && !g.has_directed(u, z) {
                        log::debug!("conflicting v-structure at `{}` ignored", g.nodes()[z]);
                    }
                }
            }
        }
    }
}

fn apply_meek_rules(g: &mut Cpdag) {
    loop {
        let mut changed = false;
        let undirected: Vec<(usize, usize)> = g.undirected().iter().copied().collect();
        for (a, b) in undirected {
            for (u, v) in [(a, b), (b, a)] {
                if g.has_undirected(u, v) && meek_orients(g, u, v) {
                    g.orient(u, v);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Whether one of Meek's four rules forces the undirected `u - v` to `u -> v`.
fn meek_orients(g: &Cpdag, u: usize, v: usize) -> bool {
    let n = g.nodes().len();
    let others = || (0..n).filter(move |&w| w != u && w != v);
    // R1: w -> u - v, w and v non-adjacent
    if others().any(|w| g.has_directed(w, u) && !g.adjacent(w, v)) {
        return true;
    }
    // R2: u -> w -> v
    if others().any(|w| g.has_directed(u, w) && g.has_directed(w, v)) {
        return true;
    }
    // R3: u - w1 -> v and u - w2 -> v, w1 and w2 non-adjacent
    let r3: Vec<usize> = others()
        .filter(|&w| g.has_undirected(u, w) && g.has_directed(w, v))
        .collect();
    for (i, &w1) in r3.iter().enumerate() {
        if r3[i + 1..].iter().any(|&w2| !g.adjacent(w1, w2)) {
            return true;
        }
    }
    // R4: u - k -> l -> v, u adjacent l, k and v non-adjacent
    others().any(|k| {
        g.has_undirected(u, k)
            && !g.adjacent(k, v)
            && others().any(|l| l != k && g.has_directed(k, l) && g.has_directed(l, v) && g.adjacent(u, l))
    })
}
