//! Observation graphs: which ordered pairs of agents are ever compared.
//!
//! Adjacency is stored densely and always carries self-loops. Every
//! iteration over comparisons goes through [`ObservationGraph::edges`],
//! which skips the diagonal.

use std::fmt::Write as _;

use num_rational::Ratio;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::{symmetric_eigenvalues, Matrix};
use crate::seed;

/// Retry budget for Erdős–Rényi sampling before giving up on connectivity.
pub const ER_MAX_ATTEMPTS: usize = 100;

/// Largest `n` accepted by the brute-force expansion routines.
pub const EXPANSION_BRUTE_FORCE_LIMIT: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationGraph {
    n: usize,
    adjacency: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeStats {
    /// Minimum degree, self-loop excluded.
    pub d_min: usize,
    /// Maximum degree, self-loop included.
    pub d_max: usize,
    /// `d_max / d_min`.
    pub kappa: Ratio<usize>,
}

impl ObservationGraph {
    /// Builds a graph from undirected off-diagonal edges. Self-loops are
    /// added; duplicate and diagonal entries are ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let g = Self::from_edges_unchecked(n, edges)?;
        g.ensure_connected(1)?;
        Ok(g)
    }

    fn from_edges_unchecked(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("graph needs at least 2 agents, got {n}")));
        }
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            adjacency[i * n + i] = true;
        }
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidSize(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            adjacency[i * n + j] = true;
            adjacency[j * n + i] = true;
        }
        Ok(Self { n, adjacency })
    }

    fn ensure_connected(&self, attempts: usize) -> Result<()> {
        let comps = self.components();
        if comps.len() == 1 {
            Ok(())
        } else {
            Err(Error::Disconnected { attempts, components: comps })
        }
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("complete graph needs n >= 2, got {n}")));
        }
        Ok(Self { n, adjacency: vec![true; n * n] })
    }

    /// Circulant graph where vertex `i` is joined to its `n/4` cyclic
    /// neighbours on each side, giving an `n/2`-regular graph.
    pub fn circulant_expander(n: usize) -> Result<Self> {
        if n == 0 || n % 4 != 0 {
            return Err(Error::InvalidSize(format!("circulant expander needs n divisible by 4, got {n}")));
        }
        let m = n / 4;
        let edges = (0..n).flat_map(|i| (1..=m).map(move |s| (i, (i + s) % n)));
        Self::from_edges(n, edges)
    }

    /// G(n, p) with one coin per unordered pair, retried with fresh
    /// sub-seeds up to [`ER_MAX_ATTEMPTS`] times until connected.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        Self::erdos_renyi_with_budget(n, p, seed, ER_MAX_ATTEMPTS)
    }

    pub fn erdos_renyi_with_budget(n: usize, p: f64, seed: u64, max_attempts: usize) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("edge probability must lie in (0, 1], got {p}")));
        }
        if n < 2 {
            return Err(Error::InvalidSize(format!("graph needs at least 2 agents, got {n}")));
        }
        let mut last = Vec::new();
        for attempt in 0..max_attempts.max(1) {
            let mut rng = seed::rng(seed, &[seed::STREAM_GRAPH, attempt as u64]);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..i {
                    if rng.random_bool(p) {
                        edges.push((i, j));
                    }
                }
            }
            let g = Self::from_edges_unchecked(n, edges)?;
            let comps = g.components();
            if comps.len() == 1 {
                return Ok(g);
            }
            last = comps;
        }
        Err(Error::Disconnected { attempts: max_attempts.max(1), components: last })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Off-diagonal neighbours of `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| j != i && self.has_edge(i, j))
    }

    /// Directed off-diagonal edges `(i, j)`, `i != j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).map(move |j| (i, j)))
    }

    /// Unordered off-diagonal edges with `i < j`.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges().filter(|&(i, j)| i < j)
    }

    pub fn is_complete(&self) -> bool {
        self.adjacency.iter().all(|&a| a)
    }

    /// Adjacency as a 0/1 matrix including the unit diagonal.
    pub fn adjacency_matrix(&self) -> Matrix<f64> {
        Matrix::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let degrees: Vec<usize> = (0..self.n).map(|i| self.degree(i)).collect();
        let d_min = *degrees.iter().min().expect("n >= 2");
        let d_max = degrees.iter().max().expect("n >= 2") + 1;
        DegreeStats { d_min, d_max, kappa: Ratio::new(d_max, d_min.max(1)) }
    }

    /// Connected components of the off-diagonal graph, each sorted, ordered
    /// by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut comps = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            label[start] = id;
            while let Some(v) = stack.pop() {
                members.push(v);
                for w in self.neighbors(v) {
                    if label[w] == usize::MAX {
                        label[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    /// Exact combinatorial edge expansion, min over bipartitions of
    /// `|E(S, Sᶜ)| / min(|S|, |Sᶜ|)`.
    pub fn edge_expansion_exact(&self) -> Result<Ratio<usize>> {
        let n = self.n;
        if n > EXPANSION_BRUTE_FORCE_LIMIT {
            return Err(Error::SizeLimit {
                n,
                limit: EXPANSION_BRUTE_FORCE_LIMIT,
                hint: "use the spectral lower bound instead",
            });
        }
        let masks: Vec<u32> = (0..n)
            .map(|i| self.neighbors(i).fold(0u32, |m, j| m | (1 << j)))
            .collect();
        let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut best: Option<Ratio<usize>> = None;
        // Fix vertex n-1 outside S: each bipartition is visited once.
        for s in 1u32..(1u32 << (n - 1)) {
            let comp = full & !s;
            let mut cut = 0usize;
            let mut bits = s;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                cut += (masks[i] & comp).count_ones() as usize;
                bits &= bits - 1;
            }
            let size = s.count_ones() as usize;
            let value = Ratio::new(cut, size.min(n - size));
            if best.is_none_or(|b| value < b) {
                best = Some(value);
            }
        }
        Ok(best.expect("n >= 2 gives at least one bipartition"))
    }

    /// Largest absolute eigenvalue of the off-diagonal adjacency after
    /// removing the top one.
    pub fn second_adjacency_eigenvalue(&self) -> Result<f64> {
        let a = Matrix::from_fn(self.n, self.n, |i, j| if i != j && self.has_edge(i, j) { 1.0 } else { 0.0 });
        let ev: Vec<f64> = symmetric_eigenvalues(&a).ok_or_else(|| Error::Numeric("eigenvalue sweep did not converge".into()))?;
        let mut abs: Vec<f64> = ev.iter().map(|v: &f64| v.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        Ok(abs[1])
    }

    /// Edge-list text: `n=<count>` then one `i j` line per unordered edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (i, j) in self.undirected_edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing `n=` header".into() })?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or(Error::Parse { line: 1, message: format!("bad header `{header}`") })?;
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => edges.push((i, j)),
                _ => return Err(Error::Parse { line: idx + 1, message: format!("expected `i j`, got `{line}`") }),
            }
        }
        Self::from_edges(n, edges)
    }
}
