//! Canonical Markov chains, stationary distributions and the quantities
//! derived from them.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::graph::{ObservationGraph, EXPANSION_BRUTE_FORCE_LIMIT};
use crate::matrix::{self, Matrix};
use crate::model::PairwiseModel;
use crate::scalar::{compensated_sum, exact_sum, Real, Scalar};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Row-stochastic, at least half-lazy transition matrix on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain<T> {
    s: Matrix<T>,
    d: T,
    graph: ObservationGraph,
}

impl<T: Scalar> MarkovChain<T> {
    /// Builds `S_ij = w_ij / d` off the diagonal and fills the diagonal so rows
    /// sum to one. `w(i, j)` is only evaluated on off-diagonal edges.
    pub fn from_weights(graph: &ObservationGraph, d: T, mut w: impl FnMut(usize, usize) -> T) -> Result<Self> {
        if !(d > T::zero()) {
            return Err(Error::Domain(format!("normalizer d = {d} must be positive")));
        }
        let n = graph.n();
        let mut s = Matrix::zeros(n, n);
        for i in 0..n {
            let mut out = T::zero();
            for j in graph.neighbors(i) {
                let v = w(i, j) / d;
                s[(i, j)] = v;
                out += v;
            }
            let diag = T::one() - out;
            if diag < T::half() {
                return Err(Error::LazinessViolation { d: d.to_f64_lossy(), row: i, diagonal: diag.to_f64_lossy() });
            }
            s[(i, i)] = diag;
        }
        Ok(Self { s, d, graph: graph.clone() })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.s
    }

    pub fn d(&self) -> T {
        self.d
    }

    pub fn graph(&self) -> &ObservationGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// Default normalizer `2 d_max`.
pub fn default_d<T: Scalar>(graph: &ObservationGraph) -> T {
    T::from_usize_exact(2 * graph.degree_stats().d_max)
}

/// Canonical Markov matrix of a model; `d` defaults to `2 d_max`.
pub fn canonical_markov<T: Scalar>(model: &PairwiseModel<T>, d: Option<T>) -> Result<MarkovChain<T>> {
    let d = d.unwrap_or_else(|| default_d(model.graph()));
    MarkovChain::from_weights(model.graph(), d, |i, j| model.prob(i, j))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution<T> {
    pub pi: Vec<T>,
    /// `‖πᵀS − πᵀ‖_∞` at termination.
    pub residual: T,
}

impl<T: Real> StationaryDistribution<T> {
    pub fn max(&self) -> T {
        self.pi.iter().copied().fold(T::zero(), Float::max)
    }
}

fn fixed_point_residual<T: Real>(chain: &MarkovChain<T>, pi: &[T]) -> T {
    chain.s.left_mul(pi).iter().zip(pi).map(|(&a, &b)| Float::abs(a - b)).fold(T::zero(), Float::max)
}

/// Left fixed point of `S` by power iteration from the uniform vector.
pub fn stationary<T: Real>(chain: &MarkovChain<T>, tol: T, max_iter: usize) -> Result<StationaryDistribution<T>> {
    let n = chain.n();
    let mut pi = vec![T::one() / T::from_usize_exact(n); n];
    let mut residual = T::infinity();
    for _ in 0..max_iter {
        let mut next = chain.s.left_mul(&pi);
        let total = compensated_sum(next.iter().copied());
        next.iter_mut().for_each(|v| *v /= total);
        residual = next.iter().zip(&pi).map(|(&a, &b)| Float::abs(a - b)).fold(T::zero(), Float::max);
        pi = next;
        if residual <= tol {
            let residual = fixed_point_residual(chain, &pi);
            return Ok(StationaryDistribution { pi, residual });
        }
    }
    Err(Error::NonConvergence { iterations: max_iter, residual: residual.to_f64_lossy() })
}

/// Power iteration with the default tolerance and budget.
pub fn stationary_default<T: Real>(chain: &MarkovChain<T>) -> Result<StationaryDistribution<T>> {
    stationary(chain, T::of(DEFAULT_TOL), DEFAULT_MAX_ITER)
}

/// Stationary distribution by a direct linear solve of `(Sᵀ − I) π = 0`
/// with the last equation replaced by `Σπ = 1`.
pub fn stationary_dense<T: Real>(chain: &MarkovChain<T>) -> Result<StationaryDistribution<T>> {
    let n = chain.n();
    let mut a = Matrix::from_fn(n, n, |i, j| chain.s[(j, i)] - if i == j { T::one() } else { T::zero() });
    for j in 0..n {
        a[(n - 1, j)] = T::one();
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    let pi = matrix::solve(&a, &b).ok_or_else(|| Error::Numeric("singular stationary system".into()))?;
    let residual = fixed_point_residual(chain, &pi);
    Ok(StationaryDistribution { pi, residual })
}

/// `h_π = max π / min π`.
pub fn principal_ratio<T: Real>(pi: &[T]) -> Result<T> {
    if let Some(index) = pi.iter().position(|&p| !(p > T::zero())) {
        return Err(Error::DegenerateDistribution { index });
    }
    let max = pi.iter().copied().fold(T::zero(), Float::max);
    let min = pi.iter().copied().fold(T::infinity(), Float::min);
    Ok(max / min)
}

fn check_positive<T: Scalar>(pi: &[T]) -> Result<()> {
    match pi.iter().position(|&p| !(p > T::zero())) {
        Some(index) => Err(Error::DegenerateDistribution { index }),
        None => Ok(()),
    }
}

/// `R = Π^{1/2} S Π^{-1/2}`.
pub fn dtm<T: Real>(chain: &MarkovChain<T>, pi: &[T]) -> Result<Matrix<T>> {
    check_positive(pi)?;
    let root: Vec<T> = pi.iter().map(|&p| Float::sqrt(p)).collect();
    Ok(Matrix::from_fn(chain.n(), chain.n(), |i, j| root[i] * chain.s[(i, j)] / root[j]))
}

/// Second largest singular value of the DTM.
pub fn dtm_sigma2<T: Real>(chain: &MarkovChain<T>, pi: &[T]) -> Result<T> {
    let r = dtm(chain, pi)?;
    let sv = matrix::singular_values(&r).ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    sv.get(1).copied().ok_or_else(|| Error::InvalidSize("need n >= 2".into()))
}

/// `‖R − √π √πᵀ‖₂`.
pub fn dtm_deflated_norm<T: Real>(chain: &MarkovChain<T>, pi: &[T]) -> Result<T> {
    let r = dtm(chain, pi)?;
    let root: Vec<T> = pi.iter().map(|&p| Float::sqrt(p)).collect();
    let deflated = Matrix::from_fn(r.rows(), r.cols(), |i, j| r[(i, j)] - root[i] * root[j]);
    let sv = matrix::singular_values(&deflated).ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    Ok(sv[0])
}

/// Exact edge expansion of the DTM by enumerating bipartitions in Gray-code
/// order.
pub fn dtm_edge_expansion<T: Real>(chain: &MarkovChain<T>, pi: &[T]) -> Result<T> {
    let n = chain.n();
    if n > EXPANSION_BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: EXPANSION_BRUTE_FORCE_LIMIT,
            hint: "use dtm_expansion_lower_bound with a graph expansion estimate",
        });
    }
    check_positive(pi)?;
    // flow(i, j) = π_i S_ij; vertex n-1 stays outside S.
    let flow = Matrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { pi[i] * chain.s[(i, j)] });
    let mut inside = vec![false; n];
    let mut cut = T::zero();
    let mut mass = T::zero();
    let mut best = T::infinity();
    for step in 1u64..(1u64 << (n - 1)) {
        let v = step.trailing_zeros() as usize;
        let entering = !inside[v];
        // Edges v -> outside join the cut and edges inside -> v leave it; reversed when v leaves.
        let mut delta = T::zero();
        for u in (0..n).filter(|&u| u != v) {
            if inside[u] {
                delta -= flow[(u, v)];
            } else {
                delta += flow[(v, u)];
            }
        }
        if entering {
            cut += delta;
            mass += pi[v];
        } else {
            cut -= delta;
            mass -= pi[v];
        }
        inside[v] = entering;
        let denom = Float::min(mass, T::one() - mass);
        let value = cut / denom;
        if value < best {
            best = value;
        }
    }
    Ok(best)
}

/// Lower bound `δ / (d h (1 + δ)) · φ̃(G)` on the DTM edge expansion, from the
/// dynamic range `δ`, principal ratio `h` and graph edge expansion `φ̃`.
pub fn dtm_expansion_lower_bound(delta: f64, d: f64, h: f64, graph_expansion: f64) -> f64 {
    delta / (d * h * (1.0 + delta)) * graph_expansion
}

/// `D = ‖ΠP + PΠ − P_E(1πᵀ)‖_F` and `ε = D / (n ‖π‖_∞)`.
pub fn separation<T: Real>(model: &PairwiseModel<T>, pi: &[T]) -> (T, T) {
    let d2 = compensated_sum(model.graph().edges().map(|(i, j)| {
        let r = (pi[i] + pi[j]) * model.prob(i, j) - pi[j];
        r * r
    }));
    let d = Float::sqrt(d2);
    let max = pi.iter().copied().fold(T::zero(), Float::max);
    (d, d / (T::from_usize_exact(model.n()) * max))
}

/// Squared separation summed without rounding beyond the scalar's own.
pub fn separation_sq<T: Scalar>(model: &PairwiseModel<T>, pi: &[T]) -> T {
    exact_sum(model.graph().edges().map(|(i, j)| {
        let r = (pi[i] + pi[j]) * model.prob(i, j) - pi[j];
        r * r
    }))
}

/// Weighted residual norms; `total = rev + skew` for any positive `π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition<T> {
    /// `‖ΠP − PᵀΠ‖²` weighted by `π⁻¹`.
    pub rev: T,
    /// `‖P + Pᵀ − P_E(11ᵀ)‖²` weighted by `π`.
    pub skew: T,
    /// `‖ΠP + PΠ − P_E(1πᵀ)‖²` weighted by `π⁻¹`.
    pub total: T,
}

/// Residual decomposition; column `j` of each norm carries weight `π_j` or
/// `1/π_j`. Exact over rationals.
pub fn residual_decomposition<T: Scalar>(model: &PairwiseModel<T>, pi: &[T]) -> Result<Decomposition<T>> {
    check_positive(pi)?;
    let mut rev = Vec::new();
    let mut skew = Vec::new();
    let mut total = Vec::new();
    for (i, j) in model.graph().edges() {
        let (pij, pji) = (model.prob(i, j), model.prob(j, i));
        let r = pi[i] * pij - pji * pi[j];
        let s = pij + pji - T::one();
        let t = pi[i] * pij + pij * pi[j] - pi[j];
        rev.push(r * r / pi[j]);
        skew.push(pi[j] * s * s);
        total.push(t * t / pi[j]);
    }
    Ok(Decomposition { rev: exact_sum(rev), skew: exact_sum(skew), total: exact_sum(total) })
}

/// `(τ_i − τ_j) − Σ_k [E_jk/(π_j+π_k) − E_ik/(π_i+π_k)]` with
/// `E = ΠP + PΠ − 1πᵀ` on a complete graph. The result has the sign of
/// `π_i − π_j`, so the BTL and Borda orders of `i, j` agree exactly when
/// `τ_i − τ_j` clears the correction sum.
pub fn borda_stationary_gap<T: Scalar>(model: &PairwiseModel<T>, pi: &[T], i: usize, j: usize) -> Result<T> {
    let tau = model.borda_counts()?;
    check_positive(pi)?;
    let e = |a: usize, b: usize| (pi[a] + pi[b]) * model.prob(a, b) - pi[b];
    let correction = exact_sum((0..model.n()).map(|k| e(j, k) / (pi[j] + pi[k]) - e(i, k) / (pi[i] + pi[k])));
    Ok(tau[i] - tau[j] - correction)
}
