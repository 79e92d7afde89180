//! Observed comparison outcomes.
//!
//! Bucket `(i, j)` records `k_ij` comparisons "i vs j" of which `z_ij` were
//! won by `j`. Outcomes within a bucket are exchangeable, so only the counts
//! are stored.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::ObservationGraph;
use crate::model::PairwiseModel;
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonDataset {
    graph: ObservationGraph,
    names: Vec<String>,
    /// Row-major `(k, z)`.
    counts: Vec<(usize, usize)>,
}

/// Trial counts used when sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialCounts {
    Uniform(usize),
    /// Row-major `n × n` counts; only off-diagonal edges are read.
    PerEdge(Vec<usize>),
}

impl TrialCounts {
    fn get(&self, n: usize, i: usize, j: usize) -> usize {
        match self {
            TrialCounts::Uniform(k) => *k,
            TrialCounts::PerEdge(k) => k[i * n + j],
        }
    }
}

impl ComparisonDataset {
    /// Empty dataset with agents named `0..n`.
    pub fn new(graph: ObservationGraph) -> Self {
        let n = graph.n();
        let names = (0..n).map(|i| i.to_string()).collect();
        Self { graph, names, counts: vec![(0, 0); n * n] }
    }

    pub fn with_names(graph: ObservationGraph, names: Vec<String>) -> Result<Self> {
        if names.len() != graph.n() {
            return Err(Error::InvalidSize(format!("{} names for {} agents", names.len(), graph.n())));
        }
        let mut out = Self::new(graph);
        out.names = names;
        Ok(out)
    }

    pub fn graph(&self) -> &ObservationGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn slot(&self, i: usize, j: usize) -> Result<usize> {
        if i == j || !self.graph.has_edge(i, j) {
            return Err(Error::Validation(format!("({i}, {j}) is not an off-diagonal edge")));
        }
        Ok(i * self.n() + j)
    }

    /// Unchecked; `(i, j)` must be an off-diagonal edge and `z <= k`.
    pub(crate) fn counts_mut(&mut self, i: usize, j: usize) -> &mut (usize, usize) {
        let n = self.n();
        &mut self.counts[i * n + j]
    }

    pub fn push(&mut self, i: usize, j: usize, j_wins: bool) -> Result<()> {
        self.push_counts(i, j, 1, usize::from(j_wins))
    }

    /// Adds `k` comparisons of which `j` won `z`.
    pub fn push_counts(&mut self, i: usize, j: usize, k: usize, z: usize) -> Result<()> {
        if z > k {
            return Err(Error::Validation(format!("z = {z} exceeds k = {k} on ({i}, {j})")));
        }
        let s = self.slot(i, j)?;
        self.counts[s].0 += k;
        self.counts[s].1 += z;
        Ok(())
    }

    pub fn k(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.n() + j].0
    }

    pub fn z(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.n() + j].1
    }

    pub fn total_observations(&self) -> usize {
        self.counts.iter().map(|c| c.0).sum()
    }

    /// The common trial count if every off-diagonal edge has the same one.
    pub fn uniform_k(&self) -> Option<usize> {
        let mut edges = self.graph.edges();
        let (i, j) = edges.next()?;
        let k = self.k(i, j);
        edges.all(|(a, b)| self.k(a, b) == k).then_some(k)
    }

    pub fn mean_k(&self) -> f64 {
        let m = self.graph.edges().count();
        if m == 0 { 0.0 } else { self.total_observations() as f64 / m as f64 }
    }

    /// `(i, j, k, z)` for every directed off-diagonal edge, row-major.
    pub fn edge_counts(&self) -> Vec<(usize, usize, usize, usize)> {
        self.graph.edges().map(|(i, j)| (i, j, self.k(i, j), self.z(i, j))).collect()
    }

    /// Same outcomes with agents relabelled so old agent `a` becomes `perm[a]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let edges = self.graph.undirected_edges().map(|(i, j)| (perm[i], perm[j]));
        let graph = ObservationGraph::from_edges(n, edges.collect::<Vec<_>>())?;
        let mut names = vec![String::new(); n];
        for (a, name) in self.names.iter().enumerate() {
            names[perm[a]] = name.clone();
        }
        let mut out = Self::with_names(graph, names)?;
        for (i, j) in self.graph.edges() {
            *out.counts_mut(perm[i], perm[j]) = (self.k(i, j), self.z(i, j));
        }
        Ok(out)
    }
}

/// Draws `k_ij` independent outcomes with success probability `p_ij` on every
/// directed edge. Each row of the comparison matrix uses its own stream.
pub fn sample_dataset<T: Scalar>(model: &PairwiseModel<T>, counts: &TrialCounts, seed: u64) -> Result<ComparisonDataset> {
    let n = model.n();
    if let TrialCounts::PerEdge(k) = counts {
        if k.len() != n * n {
            return Err(Error::InvalidSize(format!("per-edge counts have {} entries, need {}", k.len(), n * n)));
        }
    }
    let graph = model.graph();
    let rows: Vec<Vec<(usize, usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed, &[seed::STREAM_SAMPLE, i as u64]);
            graph
                .neighbors(i)
                .map(|j| {
                    let p = model.prob(i, j).to_f64_lossy();
                    let k = counts.get(n, i, j);
                    (j, k, (0..k).filter(|_| rng.random_bool(p)).count())
                })
                .collect()
        })
        .collect();
    let mut data = ComparisonDataset::new(graph.clone());
    for (i, row) in rows.into_iter().enumerate() {
        for (j, k, z) in row {
            *data.counts_mut(i, j) = (k, z);
        }
    }
    Ok(data)
}
