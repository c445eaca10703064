use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::graph::CausalGraph;

/// Binary structural model. `cpts[v][k]` is `P(v = 1)` given the parent
/// configuration `k`, where bit `b` of `k` is the value of the `b`-th
/// parent in ascending index order.
#[derive(Clone, Debug)]
pub struct BernoulliScm {
    dag: CausalGraph,
    parents: Vec<Vec<usize>>,
    cpts: Vec<Vec<f64>>,
    order: Vec<usize>,
}

impl BernoulliScm {
    pub fn new(dag: CausalGraph, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let order = dag.topological_order()?;
        if cpts.len() != dag.node_count() {
            return Err(Error::DimensionMismatch {
                expected: dag.node_count(),
                actual: cpts.len(),
            });
        }
        let parents: Vec<Vec<usize>> = (0..dag.node_count()).map(|v| dag.parents(v)).collect();
        for (v, cpt) in cpts.iter().enumerate() {
            let want = 1usize << parents[v].len();
            if cpt.len() != want {
                return Err(Error::Invalid(format!(
                    "node `{}` needs {want} CPT entries, got {}",
                    dag.nodes()[v],
                    cpt.len()
                )));
            }
            if cpt.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Invalid(format!("CPT of `{}` leaves [0, 1]", dag.nodes()[v])));
            }
        }
        Ok(Self {
            dag,
            parents,
            cpts,
            order,
        })
    }

    /// CPTs drawn at random, each entry in `[0.05, 0.25]` or `[0.75, 0.95]`
    /// so every edge carries a detectable dependence.
    pub fn random(dag: CausalGraph, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cpts = (0..dag.node_count())
            .map(|v| {
                let k = dag.parents(v).len();
                (0..1usize << k)
                    .map(|_| {
                        let p = rng.gen_range(0.05..0.25);
                        if rng.gen_bool(0.5) {
                            1.0 - p
                        } else {
                            p
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(dag, cpts)
    }

    pub fn dag(&self) -> &CausalGraph {
        &self.dag
    }

    fn config(&self, v: usize, row: &[u8]) -> usize {
        self.parents[v]
            .iter()
            .enumerate()
            .fold(0, |k, (b, &p)| k | (usize::from(row[p]) << b))
    }

    /// Ancestral sampling in topological order.
    pub fn sample(&self, n: usize, seed: u64) -> Result<BinaryDataset> {
        if n == 0 {
            return Err(Error::Invalid("sample size must be positive".into()));
        }
        let p = self.dag.node_count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![Vec::with_capacity(n); p];
        let mut row = vec![0u8; p];
        for _ in 0..n {
            for &v in &self.order {
                let prob = self.cpts[v][self.config(v, &row)];
                row[v] = u8::from(rng.gen::<f64>() < prob);
            }
            for (c, &x) in cols.iter_mut().zip(&row) {
                c.push(x);
            }
        }
        BinaryDataset::from_columns(self.dag.nodes().to_vec(), cols)
    }

    /// Exact `P(v = 1)` for every node by summing the joint distribution.
    pub fn marginals(&self) -> Result<Vec<f64>> {
        let p = self.dag.node_count();
        if p > 20 {
            return Err(Error::Invalid("exact marginals limited to 20 nodes".into()));
        }
        let mut out = vec![0.0; p];
        let mut row = vec![0u8; p];
        for assignment in 0..1usize << p {
            for (v, x) in row.iter_mut().enumerate() {
                *x = ((assignment >> v) & 1) as u8;
            }
            let mut prob = 1.0;
            for v in 0..p {
                let q = self.cpts[v][self.config(v, &row)];
                prob *= if row[v] == 1 { q } else { 1.0 - q };
            }
            for v in 0..p {
                if row[v] == 1 {
                    out[v] += prob;
                }
            }
        }
        Ok(out)
    }
}

/// Random DAG on `n` nodes: each forward pair of a random permutation gets
/// an edge with probability `edge_prob`.
pub fn random_dag(n: usize, edge_prob: f64, seed: u64) -> CausalGraph {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut g = CausalGraph::with_indexed_nodes(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(edge_prob) {
                g.add_edge(perm[i], perm[j]).expect("distinct endpoints");
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> CausalGraph {
        CausalGraph::from_edges(["X".into(), "Y".into(), "Z".into()], [("X", "Y"), ("Y", "Z")]).unwrap()
    }

    #[test]
    fn degenerate_and_copy() {
        let g = CausalGraph::new(["A".into()]).unwrap();
        let d = BernoulliScm::new(g, vec![vec![1.0]]).unwrap().sample(50, 1).unwrap();
        assert!(d.column(0).iter().all(|&v| v == 1));

        let g = CausalGraph::from_edges(["X".into(), "Y".into()], [("X", "Y")]).unwrap();
        let d = BernoulliScm::new(g, vec![vec![0.5], vec![0.0, 1.0]])
            .unwrap()
            .sample(200, 2)
            .unwrap();
        assert_eq!(d.column(0), d.column(1));
    }

    #[test]
    fn composed_chain_conditional() {
        let scm = BernoulliScm::new(chain(), vec![vec![0.5], vec![0.2, 0.9], vec![0.1, 0.7]]).unwrap();
        let d = scm.sample(100_000, 11).unwrap();
        // P(Z=1 | X=1) = 0.9 * 0.7 + 0.1 * 0.1
        let want = 0.9 * 0.7 + 0.1 * 0.1;
        let (x, z) = (d.column(0), d.column(2));
        let n1 = x.iter().filter(|&&v| v == 1).count() as f64;
        let both = x.iter().zip(z).filter(|(&a, &b)| a == 1 && b == 1).count() as f64;
        assert!((both / n1 - want).abs() < 0.01);
    }

    #[test]
    fn validation_and_determinism() {
        let cyclic = CausalGraph::from_edges(["A".into(), "B".into()], [("A", "B"), ("B", "A")]).unwrap();
        assert!(BernoulliScm::new(cyclic, vec![vec![0.5; 2], vec![0.5; 2]]).is_err());
        assert!(BernoulliScm::new(chain(), vec![vec![0.5], vec![0.5], vec![0.5, 0.5]]).is_err());
        assert!(BernoulliScm::new(chain(), vec![vec![1.5], vec![0.5; 2], vec![0.5; 2]]).is_err());
        let scm = BernoulliScm::random(chain(), 3).unwrap();
        assert_eq!(scm.sample(100, 5).unwrap(), scm.sample(100, 5).unwrap());
        assert!(scm.sample(0, 5).is_err());
    }

    #[test]
    fn random_dag_is_acyclic() {
        for seed in 0..50 {
            assert!(random_dag(8, 0.4, seed).is_acyclic());
        }
    }
}
