use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::ids::ClusterId;

/// Partially directed graph. Undirected edges are stored as `(lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cpdag {
    nodes: Vec<ClusterId>,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn empty(nodes: Vec<ClusterId>) -> Self {
        Self {
            nodes,
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        }
    }

    /// Every edge of `g` as a directed edge.
    pub fn from_graph(g: &CausalGraph) -> Self {
        Self {
            nodes: g.nodes().to_vec(),
            directed: g.edges().collect(),
            undirected: BTreeSet::new(),
        }
    }

    pub fn nodes(&self) -> &[ClusterId] {
        &self.nodes
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
            || self.directed.contains(&(b, a))
            || self.undirected.contains(&(a.min(b), a.max(b)))
    }

    pub fn has_directed(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
    }

    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&(a.min(b), a.max(b)))
    }

    pub(crate) fn add_undirected(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_new(a, b)?;
        self.undirected.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub(crate) fn add_directed(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_new(a, b)?;
        self.directed.insert((a, b));
        Ok(())
    }

    fn check_new(&self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::Invalid(format!("self edge on `{}`", self.nodes[a])));
        }
        if a >= self.nodes.len() || b >= self.nodes.len() {
            return Err(Error::Invalid("edge endpoint out of range".into()));
        }
        if self.adjacent(a, b) {
            return Err(Error::Invalid(format!(
                "`{}` and `{}` are already adjacent",
                self.nodes[a], self.nodes[b]
            )));
        }
        Ok(())
    }

    /// Turns the undirected edge `a - b` into `a -> b`. Returns false when
    /// there is no such undirected edge.
    pub(crate) fn orient(&mut self, a: usize, b: usize) -> bool {
        if self.undirected.remove(&(a.min(b), a.max(b))) {
            self.directed.insert((a, b));
            true
        } else {
            false
        }
    }

    /// `a -> b` and `a - b` lines, directed edges first.
    pub fn write_edge_list(&self, mut w: impl Write) -> std::io::Result<()> {
        for &(a, b) in &self.directed {
            writeln!(w, "{}\t->\t{}", self.nodes[a], self.nodes[b])?;
        }
        for &(a, b) in &self.undirected {
            writeln!(w, "{}\t-\t{}", self.nodes[a], self.nodes[b])?;
        }
        Ok(())
    }

    pub fn edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ids are utf-8")
    }

    /// Accepts marked lines (`a -> b`, `a - b`) and plain `a<TAB>b` lines,
    /// which are read as directed.
    pub fn read_edge_list(reader: impl BufRead, nodes: Option<&[ClusterId]>) -> Result<Self> {
        let mut order: Vec<ClusterId> = nodes.map(<[_]>::to_vec).unwrap_or_default();
        let mut index: BTreeMap<ClusterId, usize> = order.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut edges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let (a, mark, b) = match parts.as_slice() {
                [] => continue,
                [first, ..] if first.starts_with('#') => continue,
                [a, b] => (*a, "->", *b),
                [a, m @ ("->" | "-"), b] => (*a, *m, *b),
                _ => return Err(Error::parse(line_no, "expected `a -> b`, `a - b` or `a<TAB>b`")),
            };
            let mut id = |s: &str| {
                let key = ClusterId::from(s);
                *index.entry(key.clone()).or_insert_with(|| {
                    order.push(key);
                    order.len() - 1
                })
            };
            let (x, y) = (id(a), id(b));
            edges.push((line_no, x, mark == "->", y));
        }
        let mut g = Self::empty(order);
        for (line_no, x, directed, y) in edges {
            let r = if directed {
                g.add_directed(x, y)
            } else {
                g.add_undirected(x, y)
            };
            r.map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let mut g = Cpdag::empty(vec!["A".into(), "B".into(), "C".into()]);
        g.add_directed(0, 2).unwrap();
        g.add_undirected(2, 1).unwrap();
        assert!(g.add_directed(1, 2).is_err());
        let text = g.edge_list_string();
        assert_eq!(text, "A\t->\tC\nB\t-\tC\n");
        let back = Cpdag::read_edge_list(text.as_bytes(), Some(g.nodes())).unwrap();
        assert_eq!(back, g);
        let plain = Cpdag::read_edge_list("A\tC\n".as_bytes(), None).unwrap();
        assert!(plain.has_directed(0, 1));
    }

    #[test]
    fn orient_moves_edge() {
        let mut g = Cpdag::empty(vec!["A".into(), "B".into()]);
        g.add_undirected(0, 1).unwrap();
        assert!(g.orient(1, 0));
        assert!(g.has_directed(1, 0));
        assert!(!g.orient(0, 1));
    }
}
