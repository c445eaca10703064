//! Cluster-level causal graphs and story × cluster co-occurrence data.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterSet;
use crate::corpus::{MentionCausalSet, StoryCollection};
use crate::error::{Error, Result};
use crate::ids::{ClusterId, MentionId, StoryId};
use crate::metrics::InterClusterCountMatrix;

/// Directed graph over cluster ids. Self edges are rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: Vec<ClusterId>,
    index: HashMap<ClusterId, usize>,
    edges: BTreeSet<(usize, usize)>,
    counts: Option<InterClusterCountMatrix>,
}

impl CausalGraph {
    pub fn new(nodes: impl IntoIterator<Item = ClusterId>) -> Result<Self> {
        let nodes: Vec<ClusterId> = nodes.into_iter().collect();
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "node",
                    id: n.to_string(),
                });
            }
        }
        Ok(Self {
            nodes,
            index,
            edges: BTreeSet::new(),
            counts: None,
        })
    }

    /// Graph on nodes `0..n` named by their index.
    pub fn with_indexed_nodes(n: usize) -> Self {
        Self::new((0..n).map(|i| ClusterId::new(format!("X{i}")))).expect("distinct names")
    }

    pub fn from_edges<'a>(
        nodes: impl IntoIterator<Item = ClusterId>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut g = Self::new(nodes)?;
        for (a, b) in edges {
            g.add_edge_by_id(&a.into(), &b.into())?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, cause: usize, effect: usize) -> Result<()> {
        if cause == effect {
            return Err(Error::Invalid(format!("self edge on `{}`", self.nodes[cause])));
        }
        if cause >= self.nodes.len() || effect >= self.nodes.len() {
            return Err(Error::Invalid("edge endpoint out of range".into()));
        }
        self.edges.insert((cause, effect));
        Ok(())
    }

    pub fn add_edge_by_id(&mut self, cause: &ClusterId, effect: &ClusterId) -> Result<()> {
        let c = self.node_index(cause)?;
        let e = self.node_index(effect)?;
        self.add_edge(c, e)
    }

    pub fn node_index(&self, id: &ClusterId) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::unknown("node", id))
    }

    pub fn nodes(&self) -> &[ClusterId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(cause, effect)` indices in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = (&ClusterId, &ClusterId)> {
        self.edges.iter().map(|&(a, b)| (&self.nodes[a], &self.nodes[b]))
    }

    pub fn has_edge(&self, cause: usize, effect: usize) -> bool {
        self.edges.contains(&(cause, effect))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn parents(&self, n: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == n).map(|e| e.0).collect()
    }

    pub fn children(&self, n: usize) -> Vec<usize> {
        self.edges.range((n, 0)..(n + 1, 0)).map(|e| e.1).collect()
    }

    pub fn counts(&self) -> Option<&InterClusterCountMatrix> {
        self.counts.as_ref()
    }

    /// Mean total degree, `2|E| / |V|`.
    pub fn mean_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.nodes.len() as f64
        }
    }

    /// Kahn's algorithm; fails on a directed cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            indeg[b] += 1;
            out[a].push(b);
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(Error::Cyclic)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Induced subgraph on `keep` (node order preserved).
    pub fn induced(&self, keep: &BTreeSet<usize>) -> Self {
        let nodes: Vec<ClusterId> = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let mut g = Self::new(nodes).expect("subset of distinct ids");
        let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        for &(a, b) in &self.edges {
            if let (Some(&x), Some(&y)) = (remap.get(&a), remap.get(&b)) {
                g.edges.insert((x, y));
            }
        }
        g
    }

    /// `cause<TAB>effect` per line.
    pub fn write_edge_list(&self, mut w: impl Write) -> std::io::Result<()> {
        for (a, b) in self.edge_ids() {
            writeln!(w, "{a}\t{b}")?;
        }
        Ok(())
    }

    pub fn edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ids are utf-8")
    }

    /// Reads an edge list. Nodes are `nodes` (when given) followed by any
    /// endpoint not already listed, in order of first appearance.
    pub fn read_edge_list(reader: impl BufRead, nodes: Option<&[ClusterId]>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut order: Vec<ClusterId> = nodes.map(<[_]>::to_vec).unwrap_or_default();
        let mut seen: BTreeSet<ClusterId> = order.iter().cloned().collect();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, "expected `cause<TAB>effect`"))?;
            let (a, b) = (ClusterId::from(a.trim()), ClusterId::from(b.trim()));
            for id in [&a, &b] {
                if seen.insert(id.clone()) {
                    order.push(id.clone());
                }
            }
            pairs.push((line_no, a, b));
        }
        let mut g = Self::new(order)?;
        for (line_no, a, b) in pairs {
            g.add_edge_by_id(&a, &b)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        Ok(g)
    }

    pub fn load_edge_list(path: impl AsRef<Path>, nodes: Option<&[ClusterId]>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_edge_list(BufReader::new(f), nodes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiftWarning {
    /// An annotated mention outside every cluster; its pairs are skipped.
    Unassigned(MentionId),
    /// An annotated pair inside one cluster; no self edge is emitted.
    IntraCluster(ClusterId),
    /// Both `a → b` and `b → a` were lifted.
    Bidirectional(ClusterId, ClusterId),
}

impl fmt::Display for LiftWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftWarning::Unassigned(m) => write!(f, "mention `{m}` is not in any cluster"),
            LiftWarning::IntraCluster(c) => write!(f, "cluster `{c}` contains an annotated pair"),
            LiftWarning::Bidirectional(a, b) => write!(f, "clusters `{a}` and `{b}` cause each other"),
        }
    }
}

/// Cluster `A` causes cluster `B` when at least one mention of `A` is
/// annotated as causing a mention of `B`.
pub fn lift_relations(cs: &ClusterSet, causal: &MentionCausalSet) -> (CausalGraph, Vec<LiftWarning>) {
    let mut g = CausalGraph::new(cs.clusters.iter().map(|c| c.cluster_id.clone())).expect("cluster ids are unique");
    let assign = cs.assignment();
    let mut warnings = Vec::new();
    let mut unassigned = BTreeSet::new();
    let mut intra = BTreeSet::new();
    for (c, e) in causal.pairs() {
        match (assign.get(c), assign.get(e)) {
            (Some(&i), Some(&j)) if i == j => {
                intra.insert(i);
            }
            (Some(&i), Some(&j)) => {
                g.edges.insert((i, j));
            }
            (a, b) => {
                if a.is_none() {
                    unassigned.insert(c.clone());
                }
                if b.is_none() {
                    unassigned.insert(e.clone());
                }
            }
        }
    }
    warnings.extend(unassigned.into_iter().map(LiftWarning::Unassigned));
    warnings.extend(
        intra
            .into_iter()
            .map(|i| LiftWarning::IntraCluster(cs.clusters[i].cluster_id.clone())),
    );
    for &(a, b) in &g.edges {
        if a < b && g.edges.contains(&(b, a)) {
            warnings.push(LiftWarning::Bidirectional(g.nodes[a].clone(), g.nodes[b].clone()));
        }
    }
    g.counts = Some(InterClusterCountMatrix::from_clusters(cs, causal));
    (g, warnings)
}

/// Counting rules for three-node motifs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusConvention {
    /// Unordered outer pairs per centre; colliders need non-adjacent parents.
    Standard,
    /// Unordered outer pairs, no adjacency condition anywhere.
    Unrestricted,
    /// Ordered outer pairs for confounders and colliders (each counted
    /// twice); colliders need non-adjacent parents.
    Ordered,
    /// Unordered outer pairs that must be non-adjacent for every motif.
    Unshielded,
}

impl CensusConvention {
    pub const ALL: [CensusConvention; 4] = [
        CensusConvention::Standard,
        CensusConvention::Unrestricted,
        CensusConvention::Ordered,
        CensusConvention::Unshielded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CensusConvention::Standard => "standard",
            CensusConvention::Unrestricted => "unrestricted",
            CensusConvention::Ordered => "ordered",
            CensusConvention::Unshielded => "unshielded",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureCensus {
    pub confounders: u64,
    pub mediators: u64,
    pub colliders: u64,
    pub convention: CensusConvention,
}

/// Confounders (`X ← Z → Y`), mediators (`X → Z → Y`) and colliders
/// (`X → Z ← Y`) counted per centre `Z` under `convention`.
pub fn count_structures(g: &CausalGraph, convention: CensusConvention) -> Result<StructureCensus> {
    if !g.is_acyclic() {
        return Err(Error::Cyclic);
    }
    let n = g.node_count();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in g.edges() {
        children[a].push(b);
        parents[b].push(a);
    }
    let count_pairs = |set: &[usize], need_nonadjacent: bool| -> u64 {
        if !need_nonadjacent {
            let k = set.len() as u64;
            return k * k.saturating_sub(1) / 2;
        }
        let mut c = 0;
        for (i, &x) in set.iter().enumerate() {
            for &y in &set[i + 1..] {
                if !g.adjacent(x, y) {
                    c += 1;
                }
            }
        }
        c
    };
    let (mut conf, mut med, mut coll) = (0u64, 0u64, 0u64);
    for z in 0..n {
        let (pa, ch) = (&parents[z], &children[z]);
        match convention {
            CensusConvention::Standard | CensusConvention::Ordered => {
                conf += count_pairs(ch, false);
                coll += count_pairs(pa, true);
                med += (pa.len() * ch.len()) as u64;
            }
            CensusConvention::Unrestricted => {
                conf += count_pairs(ch, false);
                coll += count_pairs(pa, false);
                med += (pa.len() * ch.len()) as u64;
            }
            CensusConvention::Unshielded => {
                conf += count_pairs(ch, true);
                coll += count_pairs(pa, true);
                med += pa
                    .iter()
                    .map(|&x| ch.iter().filter(|&&y| !g.adjacent(x, y)).count() as u64)
                    .sum::<u64>();
            }
        }
    }
    if convention == CensusConvention::Ordered {
        conf *= 2;
        coll *= 2;
    }
    Ok(StructureCensus {
        confounders: conf,
        mediators: med,
        colliders: coll,
        convention,
    })
}

/// The census under every convention.
pub fn census_audit(g: &CausalGraph) -> Result<Vec<StructureCensus>> {
    CensusConvention::ALL.iter().map(|&c| count_structures(g, c)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CooccurrenceMode {
    Count,
    Binary,
}

/// Stories × clusters mention counts (or indicators).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    pub stories: Vec<StoryId>,
    pub clusters: Vec<ClusterId>,
    pub values: Vec<Vec<u32>>,
    pub mode: CooccurrenceMode,
}

impl CooccurrenceMatrix {
    pub fn column(&self, id: &ClusterId) -> Option<usize> {
        self.clusters.iter().position(|c| c == id)
    }

    /// Number of stories in which column `j` is non-zero.
    pub fn document_frequency(&self, j: usize) -> usize {
        self.values.iter().filter(|row| row[j] > 0).count()
    }

    pub fn to_binary(&self) -> Self {
        Self {
            stories: self.stories.clone(),
            clusters: self.clusters.clone(),
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(|&v| u32::from(v > 0)).collect())
                .collect(),
            mode: CooccurrenceMode::Binary,
        }
    }

    /// Header `story_id,<cluster ids...>`, then `story_id,<v1>,<v2>,...`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "story_id")?;
        for c in &self.clusters {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for (s, row) in self.stories.iter().zip(&self.values) {
            write!(w, "{s}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ids are utf-8")
    }

    /// Mode is `Binary` when every value is 0 or 1.
    pub fn read_csv(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Err(Error::Empty("co-occurrence file")),
                Some((i, l)) => {
                    let l = l.map_err(|e| Error::parse(i + 1, e.to_string()))?;
                    if !l.trim().is_empty() {
                        break l;
                    }
                }
            }
        };
        let clusters: Vec<ClusterId> = header
            .trim_end()
            .split(',')
            .skip(1)
            .map(|c| ClusterId::from(c.trim()))
            .collect();
        let mut stories = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let story = parts.next().unwrap_or_default();
            let row: Vec<u32> = parts
                .map(|v| v.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            if row.len() != clusters.len() {
                return Err(Error::parse(
                    line_no,
                    format!("expected {} values, got {}", clusters.len(), row.len()),
                ));
            }
            stories.push(StoryId::from(story));
            values.push(row);
        }
        let binary = values.iter().flatten().all(|&v| v <= 1);
        Ok(Self {
            stories,
            clusters,
            values,
            mode: if binary {
                CooccurrenceMode::Binary
            } else {
                CooccurrenceMode::Count
            },
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(f))
    }
}

/// Per story, the number of mentions of each cluster (or whether there is
/// any). Outlier mentions contribute nothing.
pub fn build_cooccurrence(
    col: &StoryCollection,
    cs: &ClusterSet,
    mode: CooccurrenceMode,
) -> Result<CooccurrenceMatrix> {
    if col.stories.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let assign = cs.assignment();
    let row_of: BTreeMap<&StoryId, usize> = col.stories.keys().enumerate().map(|(i, s)| (s, i)).collect();
    let mut values = vec![vec![0u32; cs.clusters.len()]; col.stories.len()];
    for m in col.mentions.values() {
        if let Some(&j) = assign.get(&m.mention_id) {
            let i = row_of[&m.story_id];
            values[i][j] += 1;
        }
    }
    let matrix = CooccurrenceMatrix {
        stories: col.stories.keys().cloned().collect(),
        clusters: cs.clusters.iter().map(|c| c.cluster_id.clone()).collect(),
        values,
        mode: CooccurrenceMode::Count,
    };
    Ok(match mode {
        CooccurrenceMode::Count => matrix,
        CooccurrenceMode::Binary => matrix.to_binary(),
    })
}

/// Keeps nodes whose document frequency exceeds `min_df` and that remain
/// endpoints of at least one edge among the kept nodes.
pub fn frequency_subgraph(g: &CausalGraph, m: &CooccurrenceMatrix, min_df: usize) -> CausalGraph {
    let frequent: BTreeSet<usize> = (0..g.node_count())
        .filter(|&i| {
            m.column(&g.nodes()[i])
                .is_some_and(|j| m.document_frequency(j) > min_df)
        })
        .collect();
    let connected: BTreeSet<usize> = g
        .edges()
        .filter(|(a, b)| frequent.contains(a) && frequent.contains(b))
        .flat_map(|(a, b)| [a, b])
        .collect();
    g.induced(&connected)
}
