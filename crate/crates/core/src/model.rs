//! Pairwise comparison models and the model families used as fixtures.
//!
//! `P[i][j]` is the probability that `j` beats `i` in an "i vs j"
//! comparison. Diagonal entries are 1/2 and pairs outside the observation
//! graph are 0.

use num_traits::Float;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::ObservationGraph;
use crate::matrix::Matrix;
use crate::scalar::{exact_sum, Real, Scalar};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseModel<T> {
    graph: ObservationGraph,
    p: Matrix<T>,
}

impl<T: Scalar> PairwiseModel<T> {
    /// Builds a model from `prob(i, j)` evaluated on every off-diagonal edge.
    pub fn from_fn(graph: ObservationGraph, mut prob: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let n = graph.n();
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            p[(i, i)] = T::half();
        }
        for (i, j) in graph.edges().collect::<Vec<_>>() {
            let v = prob(i, j);
            if !(v > T::zero() && v < T::one()) {
                return Err(Error::Domain(format!("p[{i}][{j}] = {v} is outside (0, 1)")));
            }
            p[(i, j)] = v;
        }
        Ok(Self { graph, p })
    }

    /// Wraps a full matrix, checking the model invariants.
    pub fn from_matrix(graph: ObservationGraph, p: Matrix<T>) -> Result<Self> {
        let n = graph.n();
        if p.rows() != n || p.cols() != n {
            return Err(Error::InvalidSize(format!("matrix is {}x{}, graph has n = {n}", p.rows(), p.cols())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = p[(i, j)];
                let ok = if i == j {
                    v == T::half()
                } else if graph.has_edge(i, j) {
                    v > T::zero() && v < T::one()
                } else {
                    v == T::zero()
                };
                if !ok {
                    return Err(Error::Domain(format!("entry ({i}, {j}) = {v} violates the model layout")));
                }
            }
        }
        Ok(Self { graph, p })
    }

    pub fn graph(&self) -> &ObservationGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.p
    }

    pub fn prob(&self, i: usize, j: usize) -> T {
        self.p[(i, j)]
    }

    /// Largest `δ` with `δ/(1+δ) <= p_ij <= 1/(1+δ)` on every edge.
    pub fn dynamic_range(&self) -> T {
        self.graph
            .edges()
            .map(|(i, j)| {
                let p = self.p[(i, j)];
                let q = T::one() - p;
                let (a, b) = (p / q, q / p);
                if a < b { a } else { b }
            })
            .fold(T::one(), |acc, v| if v < acc { v } else { acc })
    }

    /// True when `p_ij + p_ji = 1` on every edge.
    pub fn is_skew_symmetric(&self) -> bool {
        self.graph.edges().all(|(i, j)| self.p[(i, j)] + self.p[(j, i)] == T::one())
    }

    /// Borda counts `τ_i = Σ_j (1 - P[i][j])`, diagonal term included.
    pub fn borda_counts(&self) -> Result<Vec<T>> {
        if !self.graph.is_complete() {
            return Err(Error::UnsupportedTopology("Borda counts need a complete graph".into()));
        }
        Ok((0..self.n()).map(|i| exact_sum(self.p.row(i).iter().map(|&p| T::one() - p))).collect())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> PairwiseModel<U> {
        PairwiseModel { graph: self.graph.clone(), p: self.p.map(f) }
    }

    /// Dense CSV: header `n=<count>` then `n` comma-separated rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("n={}\n", self.n());
        for i in 0..self.n() {
            let row: Vec<String> = self.p.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl<T: Real> PairwiseModel<T> {
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or(Error::Parse { line: 1, message: format!("bad header `{header}`") })?;
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines {
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
            if row.len() != n {
                return Err(Error::Parse { line: idx + 1, message: format!("expected {n} columns") });
            }
            rows.push(row.into_iter().map(T::of).collect::<Vec<T>>());
        }
        if rows.len() != n {
            return Err(Error::Parse { line: n + 1, message: format!("expected {n} rows, got {}", rows.len()) });
        }
        let edges = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        let edges: Vec<_> = edges.filter(|&(i, j)| i != j && rows[i][j] != T::zero()).collect();
        let graph = ObservationGraph::from_edges(n, edges)?;
        Self::from_matrix(graph, Matrix::from_rows(&rows))
    }
}

/// BTL model `p_ij = α_j / (α_i + α_j)`.
pub fn btl_model<T: Scalar>(alpha: &[T], graph: &ObservationGraph) -> Result<PairwiseModel<T>> {
    if alpha.len() != graph.n() {
        return Err(Error::InvalidSize(format!("{} scores for {} agents", alpha.len(), graph.n())));
    }
    if let Some((i, a)) = alpha.iter().enumerate().find(|(_, &a)| !(a > T::zero())) {
        return Err(Error::Domain(format!("score alpha[{i}] = {a} must be positive")));
    }
    PairwiseModel::from_fn(graph.clone(), |i, j| alpha[j] / (alpha[i] + alpha[j]))
}

/// All-1/2 model.
pub fn uniform_model<T: Scalar>(graph: &ObservationGraph) -> PairwiseModel<T> {
    PairwiseModel::from_fn(graph.clone(), |_, _| T::half()).expect("1/2 is a valid probability")
}

/// Block model used for the minimax lower bound: the top-right block is
/// `1/2 + η Q_θ`, the bottom-left `1/2 - η Q_θᵀ`, everything else 1/2.
/// `theta[i]` is the partner (within the bottom half) of top agent `i`.
pub fn lower_bound_model<T: Scalar>(n: usize, eta: T, theta: &[usize]) -> Result<PairwiseModel<T>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidSize(format!("lower-bound model needs even n >= 2, got {n}")));
    }
    if !(eta > T::zero() && eta < T::half()) {
        return Err(Error::Domain(format!("eta = {eta} must lie in (0, 1/2)")));
    }
    let h = n / 2;
    let mut seen = vec![false; h];
    if theta.len() != h || theta.iter().any(|&t| t >= h || std::mem::replace(&mut seen[t], true)) {
        return Err(Error::Domain(format!("theta must be a permutation of 0..{h}")));
    }
    PairwiseModel::from_fn(ObservationGraph::complete(n)?, |i, j| {
        if i < h && j >= h && theta[i] == j - h {
            T::half() + eta
        } else if i >= h && j < h && theta[j] == i - h {
            T::half() - eta
        } else {
            T::half()
        }
    })
}

/// Closed-form stationary weights `(x, y)` of the lower-bound family.
pub fn lower_bound_stationary<T: Scalar>(n: usize, eta: T) -> (T, T) {
    let nn = T::from_usize_exact(n);
    let four = T::from_usize_exact(4);
    ((T::one() - four * eta / nn) / nn, (T::one() + four * eta / nn) / nn)
}

/// Squared separation of the lower-bound family, summed block by block.
pub fn lower_bound_separation_sq<T: Scalar>(n: usize, eta: T) -> T {
    let (x, y) = lower_bound_stationary(n, eta);
    let half_n = T::from_usize_exact(n / 2);
    let off = T::from_usize_exact(n / 2 - 1);
    let sq = |v: T| v * v;
    let s = x + y;
    half_n * sq(s * (T::half() + eta) - y)
        + half_n * sq(s * (T::half() - eta) - x)
        + half_n * off * sq(s * T::half() - y)
        + half_n * off * sq(s * T::half() - x)
}

/// Parameters of the Borda/BTL inversion family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityParams<T> {
    pub alpha: T,
    pub eta: T,
    pub l: usize,
}

/// `α = 0.01`, `η = 4αn`, `l = ⌈2η⌉`; requires `n` even with `2η` integral
/// and `l < n/2`.
pub fn stability_params<T: Scalar>(n: usize) -> Result<StabilityParams<T>> {
    // 2η = 0.08 n must be an integer: n a multiple of 25, and even.
    if n == 0 || n % 2 != 0 || (8 * n) % 100 != 0 {
        return Err(Error::Domain(format!("stability model needs even n with 0.08 n integral, got {n}")));
    }
    let l = 8 * n / 100;
    if l >= n / 2 {
        return Err(Error::Domain(format!("l = {l} must be below n/2")));
    }
    let alpha = T::ratio(1, 100);
    let eta = T::ratio(4 * n as i64, 100);
    Ok(StabilityParams { alpha, eta, l })
}

/// Complete-graph model whose agents 0 and 1 have Borda counts
/// `n/2 - η` and `n/2 - η + α` while agent 0 has the larger stationary
/// weight.
pub fn stability_model<T: Scalar>(n: usize) -> Result<PairwiseModel<T>> {
    let StabilityParams { alpha, eta, l } = stability_params::<T>(n)?;
    let nn = T::from_usize_exact(n);
    let two = T::from_usize_exact(2);
    let ll = T::from_usize_exact(l);
    let half = n / 2;
    // Upper triangle (j > i), 0-indexed; lower triangle by 1 - p.
    let upper = |i: usize, j: usize| -> T {
        if i == 0 && j >= half {
            T::half() + two * eta / nn
        } else if i == 1 && j >= n - l {
            T::half() + (eta - alpha) / ll
        } else {
            T::half()
        }
    };
    PairwiseModel::from_fn(ObservationGraph::complete(n)?, |i, j| if i < j { upper(i, j) } else { T::one() - upper(j, i) })
}

/// Constant-margin model `p_ij = 1/2 + Δ` for `i > j`, `1/2 - Δ` for `i < j`.
pub fn margin_model<T: Scalar>(graph: &ObservationGraph, delta: T) -> Result<PairwiseModel<T>> {
    PairwiseModel::from_fn(graph.clone(), |i, j| if i > j { T::half() + delta } else { T::half() - delta })
}

/// Cyclic model: `p_{i,i+1} = 1/2 + bias` around the ring `0..n`, reverse
/// `1/2 - bias`, all other pairs 1/2.
pub fn cyclic_model<T: Scalar>(graph: &ObservationGraph, bias: T) -> Result<PairwiseModel<T>> {
    let n = graph.n();
    if n < 3 {
        return Err(Error::InvalidSize(format!("cyclic model needs n >= 3, got {n}")));
    }
    PairwiseModel::from_fn(graph.clone(), |i, j| {
        if j == (i + 1) % n {
            T::half() + bias
        } else if i == (j + 1) % n {
            T::half() - bias
        } else {
            T::half()
        }
    })
}

/// Random BTL scores `α_i = 0.05 + U[0, 1]`.
pub fn random_btl_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed, &[seed::STREAM_POOL]);
    (0..n).map(|_| 0.05 + rng.random::<f64>()).collect()
}

/// General model with every `p_ij` drawn independently and uniformly from
/// the dynamic-range interval for `delta`.
pub fn random_model<T: Real>(graph: &ObservationGraph, delta: f64, seed: u64) -> Result<PairwiseModel<T>> {
    let lo = delta / (1.0 + delta);
    let hi = 1.0 / (1.0 + delta);
    let mut rng = seed::rng(seed, &[seed::STREAM_POOL, 1]);
    PairwiseModel::from_fn(graph.clone(), |_, _| T::of(Float::max(lo + (hi - lo) * rng.random::<f64>(), lo)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn complete(n: usize) -> ObservationGraph {
        ObservationGraph::complete(n).unwrap()
    }

    #[test]
    fn btl_examples() {
        let m = btl_model(&[1.0, 1.0, 1.0], &complete(3)).unwrap();
        assert!(m.graph().edges().all(|(i, j)| m.prob(i, j) == 0.5));

        let m = btl_model(&[Q::from(1), Q::from(2)], &complete(2)).unwrap();
        assert_eq!(m.prob(0, 1), Q::new(2, 3));
        assert_eq!(m.prob(1, 0), Q::new(1, 3));

        let a = btl_model(&[Q::from(2), Q::from(4), Q::from(6)], &complete(3)).unwrap();
        let b = btl_model(&[Q::from(1), Q::from(2), Q::from(3)], &complete(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_skew_symmetric());

        assert!(matches!(btl_model(&[1.0, 0.0], &complete(2)), Err(Error::Domain(_))));
    }

    #[test]
    fn dynamic_range_examples() {
        assert_eq!(uniform_model::<f64>(&complete(4)).dynamic_range(), 1.0);
        let m = btl_model(&[Q::from(1), Q::from(3)], &complete(2)).unwrap();
        assert_eq!(m.dynamic_range(), Q::new(1, 3));
        // condition number 1/δ0 = 4 gives δ >= 1/4
        let m = btl_model(&[1.0, 2.0, 4.0, 3.0], &complete(4)).unwrap();
        assert!(m.dynamic_range() >= 0.25 - 1e-15);
    }

    #[test]
    fn lower_bound_layout() {
        let m = lower_bound_model(4, Q::new(1, 4), &[0, 1]).unwrap();
        assert_eq!(m.prob(0, 2), Q::new(3, 4));
        assert_eq!(m.prob(2, 0), Q::new(1, 4));
        assert_eq!(m.prob(0, 3), Q::new(1, 2));
        assert_eq!(m.prob(0, 1), Q::new(1, 2));
        assert!(m.is_skew_symmetric());
        let swapped = lower_bound_model(4, Q::new(1, 4), &[1, 0]).unwrap();
        assert_eq!(swapped.prob(0, 3), Q::new(3, 4));
        assert!(lower_bound_model(4, 0.5, &[0, 1]).is_err());
        assert!(lower_bound_model(4, 0.2, &[0, 0]).is_err());
        assert!(lower_bound_model(5, 0.2, &[0, 1]).is_err());
    }

    #[test]
    fn lower_bound_tiny_eta_is_near_uniform() {
        let m = lower_bound_model(6, 1e-12, &[2, 0, 1]).unwrap();
        assert!(m.graph().edges().all(|(i, j)| (m.prob(i, j) - 0.5).abs() <= 1e-12));
    }

    #[test]
    fn lower_bound_closed_forms() {
        let (x, y) = lower_bound_stationary(4, Q::new(1, 4));
        assert_eq!((x, y), (Q::new(3, 16), Q::new(5, 16)));
        // block sum reduces to 4η²(n-2)/n²
        for n in [4usize, 8, 32, 64] {
            for eta in [Q::new(1, 10), Q::new(1, 4)] {
                let nn = Q::from(n as i64);
                let expect = Q::from(4) * eta * eta * (nn - Q::from(2)) / (nn * nn);
                assert_eq!(lower_bound_separation_sq(n, eta), expect);
            }
        }
    }

    #[test]
    fn stability_borda_exact() {
        for n in [200usize, 400, 800] {
            let m = stability_model::<Q>(n).unwrap();
            let StabilityParams { alpha, eta, .. } = stability_params::<Q>(n).unwrap();
            let tau = m.borda_counts().unwrap();
            let half = Q::new(n as i64, 2);
            assert_eq!(tau[0], half - eta);
            assert_eq!(tau[1], half - eta + alpha);
            assert_eq!(tau[1] - tau[0], Q::new(1, 100));
            assert!(m.is_skew_symmetric());
        }
        assert!(stability_model::<f64>(30).is_err());
        assert!(stability_model::<f64>(25).is_err());
    }

    #[test]
    fn borda_examples() {
        let tau = uniform_model::<Q>(&complete(6)).borda_counts().unwrap();
        assert!(tau.iter().all(|&t| t == Q::from(3)));
        let tau = btl_model(&[5.0, 3.0, 1.0], &complete(3)).unwrap().borda_counts().unwrap();
        assert!(tau[0] > tau[1] && tau[1] > tau[2]);
        let path = ObservationGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert!(matches!(uniform_model::<f64>(&path).borda_counts(), Err(Error::UnsupportedTopology(_))));
    }

    #[test]
    fn csv_round_trip() {
        let g = ObservationGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let m = btl_model(&[1.0, 2.0, 0.5, 3.0], &g).unwrap();
        let back = PairwiseModel::<f64>::parse_csv(&m.to_csv()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn invalid_layout_rejected() {
        let g = complete(2);
        let bad = Matrix::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]);
        assert!(PairwiseModel::from_matrix(g, bad).is_err());
    }
}
