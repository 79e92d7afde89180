//! The test: empirical chain, statistic, thresholds and decision.

use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;

use crate::dataset::{sample_dataset, ComparisonDataset, TrialCounts};
use crate::error::{Error, Result};
use crate::graph::ObservationGraph;
use crate::model::{btl_model, random_btl_scores};
use crate::scalar::compensated_sum;
use crate::seed;
use crate::spectral::{self, MarkovChain, StationaryDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

/// `H1` iff `statistic >= threshold`.
pub fn decide(statistic: f64, threshold: f64) -> Hypothesis {
    if statistic >= threshold { Hypothesis::H1 } else { Hypothesis::H0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    /// Constant multiplying the `n ‖π‖²_∞ / k` term of the analytic threshold.
    pub c_alpha_gamma: f64,
    /// Quantile level of the data-driven thresholds.
    pub q: f64,
    /// BTL models drawn for the quantile threshold.
    pub model_pool: usize,
    /// Shuffle repetitions for the permutation thresholds.
    pub reps: usize,
    /// Cycle shuffles per repetition; `None` means `n`.
    pub cycles: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    /// Normalizer of the empirical chain; `None` means `2 d_max`.
    pub d: Option<f64>,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            c_alpha_gamma: 0.0,
            q: 0.95,
            model_pool: 200,
            reps: 200,
            cycles: None,
            tol: spectral::DEFAULT_TOL,
            max_iter: spectral::DEFAULT_MAX_ITER,
            d: None,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0 && self.q <= 1.0) {
            return Err(Error::Validation(format!("q = {} must lie in [0, 1]", self.q)));
        }
        if self.model_pool == 0 || self.reps == 0 || self.cycles == Some(0) {
            return Err(Error::Validation("pool size, repetitions and cycles must be at least 1".into()));
        }
        Ok(())
    }
}

/// Empirical canonical chain `Ŝ_ij = Z_ij / (k_ij d)` and its stationary
/// distribution. Edges without trials contribute nothing.
pub fn empirical_chain(
    data: &ComparisonDataset,
    d: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(MarkovChain<f64>, StationaryDistribution<f64>)> {
    let d = d.unwrap_or_else(|| spectral::default_d(data.graph()));
    let chain = MarkovChain::from_weights(data.graph(), d, |i, j| {
        let k = data.k(i, j);
        if k == 0 { 0.0 } else { data.z(i, j) as f64 / k as f64 }
    })?;
    let pi = spectral::stationary(&chain, tol, max_iter)?;
    Ok((chain, pi))
}

/// The separation statistic `T`; edges with `k_ij <= 1` are skipped.
/// Passing the true `π` gives the unbiased oracle version.
pub fn test_statistic(data: &ComparisonDataset, pi: &[f64]) -> f64 {
    compensated_sum(data.graph().edges().filter_map(|(i, j)| {
        let k = data.k(i, j);
        (k > 1).then(|| {
            let (k, z) = (k as f64, data.z(i, j) as f64);
            let s = pi[i] + pi[j];
            s * s * z * (z - 1.0) / (k * (k - 1.0)) + pi[j] * pi[j] - 2.0 * pi[j] * s * z / k
        })
    }))
}

/// `4 √(n d_max) ‖π‖²_∞ / k + c n ‖π‖²_∞ / k`.
pub fn analytic_threshold(n: usize, k: usize, d_max: usize, pi_max: f64, c_alpha_gamma: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    let p2 = pi_max * pi_max;
    4.0 * (n * d_max as f64).sqrt() * p2 / k + c_alpha_gamma * n * p2 / k
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// How a raw statistic is scaled before comparison with data-driven
/// thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    /// `n k T` for a common trial count `k`.
    NK(usize),
    /// `n T` when trial counts differ.
    N,
}

impl Scaling {
    pub fn of(data: &ComparisonDataset) -> Self {
        match data.uniform_k() {
            Some(k) => Scaling::NK(k),
            None => Scaling::N,
        }
    }

    pub fn apply(self, n: usize, t: f64) -> f64 {
        match self {
            Scaling::NK(k) => n as f64 * k as f64 * t,
            Scaling::N => n as f64 * t,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scaling::NK(_) => "nkT",
            Scaling::N => "nT",
        }
    }
}

/// Statistic of a dataset at its own `π̂`.
pub fn plug_in_statistic(data: &ComparisonDataset, config: &TestConfig) -> Result<f64> {
    let (_, pi) = empirical_chain(data, config.d, config.tol, config.max_iter)?;
    Ok(test_statistic(data, &pi.pi))
}

fn trial_counts(data: &ComparisonDataset) -> TrialCounts {
    match data.uniform_k() {
        Some(k) => TrialCounts::Uniform(k),
        None => {
            let n = data.n();
            TrialCounts::PerEdge((0..n * n).map(|s| if s / n == s % n { 0 } else { data.k(s / n, s % n) }).collect())
        }
    }
}

/// Scaled statistics of `config.model_pool` random BTL datasets on `graph`.
pub fn quantile_pool(graph: &ObservationGraph, counts: &TrialCounts, config: &TestConfig, seed: u64) -> Result<Vec<f64>> {
    let scaling = match counts {
        TrialCounts::Uniform(k) => Scaling::NK(*k),
        TrialCounts::PerEdge(_) => Scaling::N,
    };
    (0..config.model_pool)
        .into_par_iter()
        .map(|m| {
            let alpha = random_btl_scores(graph.n(), seed::derive(seed, &[seed::STREAM_POOL, m as u64]));
            let model = btl_model(&alpha, graph)?;
            let data = sample_dataset(&model, counts, seed::derive(seed, &[seed::STREAM_POOL, m as u64, 1]))?;
            Ok(scaling.apply(graph.n(), plug_in_statistic(&data, config)?))
        })
        .collect()
}

/// `γ₀`: the `q`-quantile of the BTL pool.
pub fn quantile_threshold(graph: &ObservationGraph, counts: &TrialCounts, config: &TestConfig, seed: u64) -> Result<f64> {
    config.validate()?;
    Ok(quantile(&quantile_pool(graph, counts, config, seed)?, config.q))
}

/// Pools the winners of both orientations of every pair and redeals them,
/// keeping `k_ij` and `k_ji`.
pub fn skew_shuffle(data: &ComparisonDataset, seed: u64) -> ComparisonDataset {
    let mut out = data.clone();
    let mut rng = seed::rng(seed, &[seed::STREAM_SKEW]);
    for (i, j) in data.graph().undirected_edges() {
        let (kf, kb) = (data.k(i, j), data.k(j, i));
        // Wins of i: losses of j in (i, j) plus wins of the listed second agent in (j, i).
        let mut i_wins = kf - data.z(i, j) + data.z(j, i);
        let mut remaining = kf + kb;
        let mut forward_i_wins = 0;
        for _ in 0..kf {
            if rng.random_range(0..remaining) < i_wins {
                forward_i_wins += 1;
                i_wins -= 1;
            }
            remaining -= 1;
        }
        *out.counts_mut(i, j) = (kf, kf - forward_i_wins);
        *out.counts_mut(j, i) = (kb, i_wins);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleShuffle {
    pub data: ComparisonDataset,
    pub completed: usize,
    pub abandoned: usize,
}

/// Steps allowed per cycle attempt, as a multiple of `n`.
pub const CYCLE_BUDGET_FACTOR: usize = 50;

struct Walker {
    n: usize,
    neighbors: Vec<Vec<usize>>,
    /// Per agent, a Fenwick tree over the sizes of its buckets.
    tree: Vec<Vec<usize>>,
    /// First flat observation index of each agent's buckets.
    offset: Vec<usize>,
    /// Consumption marks of the current attempt, by flat index.
    consumed: Vec<bool>,
    marked: Vec<usize>,
}

impl Walker {
    fn new(data: &ComparisonDataset) -> Self {
        let n = data.n();
        let neighbors: Vec<Vec<usize>> = (0..n).map(|a| data.graph().neighbors(a).collect()).collect();
        let tree = neighbors
            .iter()
            .enumerate()
            .map(|(a, nb)| {
                let mut t = vec![0; nb.len() + 1];
                for (idx, &j) in nb.iter().enumerate() {
                    t[idx + 1] += data.k(a, j);
                    let parent = (idx + 1) + ((idx + 1) & (idx + 1).wrapping_neg());
                    if parent < t.len() {
                        t[parent] += t[idx + 1];
                    }
                }
                t
            })
            .collect();
        let mut w = Self { n, neighbors, tree, offset: vec![0; n], consumed: vec![false; data.total_observations()], marked: Vec::new() };
        w.reindex();
        w
    }

    /// Adds `delta` to the size of bucket `(a, b)`.
    fn adjust(&mut self, a: usize, b: usize, delta: isize) {
        let t = &mut self.tree[a];
        let mut i = self.neighbors[a].binary_search(&b).expect("edge") + 1;
        while i < t.len() {
            t[i] = t[i].checked_add_signed(delta).expect("bucket size stays non-negative");
            i += i & i.wrapping_neg();
        }
    }

    fn reindex(&mut self) {
        let mut acc = 0;
        for a in 0..self.n {
            self.offset[a] = acc;
            acc += self.total(a);
        }
    }

    fn total(&self, a: usize) -> usize {
        let t = &self.tree[a];
        let mut i = t.len() - 1;
        let mut sum = 0;
        while i > 0 {
            sum += t[i];
            i &= i - 1;
        }
        sum
    }

    /// Bucket `(a, j)` and position within it of `a`'s observation `u`.
    fn locate(&self, a: usize, mut u: usize) -> (usize, usize) {
        let t = &self.tree[a];
        let mut pos = 0;
        let mut step = (t.len() - 1).checked_ilog2().map_or(0, |b| 1 << b);
        while step > 0 {
            if pos + step < t.len() && t[pos + step] <= u {
                pos += step;
                u -= t[pos];
            }
            step >>= 1;
        }
        (self.neighbors[a][pos], u)
    }

    /// One attempt; returns the forward steps `(a, b)` of a closed walk, or
    /// `None` if the budget runs out or the walk gets stuck.
    fn attempt(&mut self, data: &ComparisonDataset, rng: &mut seed::Rng) -> Option<Vec<(usize, usize)>> {
        let walk = self.walk(data, rng);
        for &f in &self.marked {
            self.consumed[f] = false;
        }
        self.marked.clear();
        walk
    }

    fn walk(&mut self, data: &ComparisonDataset, rng: &mut seed::Rng) -> Option<Vec<(usize, usize)>> {
        let start = rng.random_range(0..self.n);
        let mut cur = start;
        let mut steps = Vec::new();
        let mut used = vec![0usize; self.n];
        for _ in 0..CYCLE_BUDGET_FACTOR * self.n {
            let total = self.total(cur);
            if used[cur] >= total {
                return None;
            }
            let base = self.offset[cur];
            let u = if 2 * used[cur] <= total {
                loop {
                    let u = rng.random_range(0..total);
                    if !self.consumed[base + u] {
                        break u;
                    }
                }
            } else {
                let free: Vec<usize> = (0..total).filter(|&u| !self.consumed[base + u]).collect();
                free[rng.random_range(0..free.len())]
            };
            self.consumed[base + u] = true;
            self.marked.push(base + u);
            used[cur] += 1;
            let (j, pos) = self.locate(cur, u);
            // Positions below z_ij are the wins of j.
            if pos < data.z(cur, j) {
                steps.push((cur, j));
                cur = j;
                if cur == start {
                    return Some(steps);
                }
            }
        }
        None
    }
}

/// Runs `n_cycles` cycle-reversal attempts. Each closed walk of wins
/// `a → b` is replaced by its reversal: the observation leaves bucket
/// `(a, b)` and bucket `(b, a)` gains a win for `a`.
pub fn cycle_shuffle(data: &ComparisonDataset, n_cycles: usize, seed: u64) -> CycleShuffle {
    let mut out = data.clone();
    let mut walker = Walker::new(&out);
    let (mut completed, mut abandoned) = (0, 0);
    for c in 0..n_cycles {
        let mut rng = seed::rng(seed, &[seed::STREAM_CYCLE, c as u64]);
        let Some(steps) = walker.attempt(&out, &mut rng) else {
            abandoned += 1;
            continue;
        };
        completed += 1;
        for &(a, b) in &steps {
            let fwd = out.counts_mut(a, b);
            fwd.0 -= 1;
            fwd.1 -= 1;
            let back = out.counts_mut(b, a);
            back.0 += 1;
            back.1 += 1;
            walker.adjust(a, b, -1);
            walker.adjust(b, a, 1);
        }
        walker.reindex();
    }
    CycleShuffle { data: out, completed, abandoned }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationThresholds {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Scaled statistics of the skew-only shuffles.
    pub skew_stats: Vec<f64>,
    /// Scaled statistics after skew and cycle shuffles.
    pub cycle_stats: Vec<f64>,
    pub cycles_completed: usize,
    pub cycles_abandoned: usize,
}

/// `γ₁` and `γ₂` from `config.reps` shuffles of `data`; each repetition
/// starts from the original data. The scaling follows the original `k`.
pub fn permutation_threshold(data: &ComparisonDataset, config: &TestConfig, seed: u64) -> Result<PermutationThresholds> {
    config.validate()?;
    let n = data.n();
    let scaling = Scaling::of(data);
    let cycles = config.cycles.unwrap_or(n);
    let runs: Vec<(f64, f64, usize, usize)> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let skewed = skew_shuffle(data, seed::derive(seed, &[seed::STREAM_PERM, r as u64, 0]));
            let s1 = scaling.apply(n, plug_in_statistic(&skewed, config)?);
            let cyc = cycle_shuffle(&skewed, cycles, seed::derive(seed, &[seed::STREAM_PERM, r as u64, 1]));
            let s2 = scaling.apply(n, plug_in_statistic(&cyc.data, config)?);
            Ok((s1, s2, cyc.completed, cyc.abandoned))
        })
        .collect::<Result<_>>()?;
    let skew_stats: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let cycle_stats: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(PermutationThresholds {
        gamma1: quantile(&skew_stats, config.q),
        gamma2: quantile(&cycle_stats, config.q),
        cycles_completed: runs.iter().map(|r| r.2).sum(),
        cycles_abandoned: runs.iter().map(|r| r.3).sum(),
        skew_stats,
        cycle_stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdKind {
    Analytic,
    Quantile,
    Permutation,
}

impl std::str::FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "quantile" => Ok(Self::Quantile),
            "permutation" => Ok(Self::Permutation),
            other => Err(Error::Validation(format!("unknown threshold `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thresholds {
    pub analytic: Option<f64>,
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub pi_hat: Vec<f64>,
    pub h_pi: f64,
    pub sigma2: f64,
    /// Plug-in separation of `Z/k` at `π̂`, normalized by `n ‖π̂‖_∞`.
    pub eps_hat: f64,
    pub n: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub k_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub names: Vec<String>,
    pub statistic: f64,
    pub scaling: Scaling,
    pub scaled_statistic: f64,
    pub thresholds: Thresholds,
    pub cycles_abandoned: Option<usize>,
    pub diagnostics: Diagnostics,
    /// Threshold whose decision is reported as the overall outcome.
    pub primary: ThresholdKind,
}

impl TestReport {
    pub fn decision_analytic(&self) -> Option<Hypothesis> {
        self.thresholds.analytic.map(|t| decide(self.statistic, t))
    }

    pub fn decision_gamma0(&self) -> Option<Hypothesis> {
        self.thresholds.gamma0.map(|t| decide(self.scaled_statistic, t))
    }

    pub fn decision_gamma1(&self) -> Option<Hypothesis> {
        self.thresholds.gamma1.map(|t| decide(self.scaled_statistic, t))
    }

    pub fn decision_gamma2(&self) -> Option<Hypothesis> {
        self.thresholds.gamma2.map(|t| decide(self.scaled_statistic, t))
    }

    /// Outcome under the primary threshold (`γ₂` for the permutation scheme).
    pub fn decision(&self) -> Hypothesis {
        match self.primary {
            ThresholdKind::Analytic => self.decision_analytic(),
            ThresholdKind::Quantile => self.decision_gamma0(),
            ThresholdKind::Permutation => self.decision_gamma2(),
        }
        .expect("primary threshold is always computed")
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.12e}"));
        let dec = |v: Option<Hypothesis>| v.map_or("NA".to_string(), |v| v.to_string());
        let d = &self.diagnostics;
        let _ = writeln!(out, "n={}", d.n);
        let _ = writeln!(out, "agents={}", self.names.join(";"));
        let _ = writeln!(out, "statistic={:.12e}", self.statistic);
        let _ = writeln!(out, "scaling={}", self.scaling.label());
        let _ = writeln!(out, "scaled_statistic={:.12e}", self.scaled_statistic);
        let _ = writeln!(out, "threshold_analytic={}", opt(self.thresholds.analytic));
        let _ = writeln!(out, "gamma0={}", opt(self.thresholds.gamma0));
        let _ = writeln!(out, "gamma1={}", opt(self.thresholds.gamma1));
        let _ = writeln!(out, "gamma2={}", opt(self.thresholds.gamma2));
        let _ = writeln!(out, "decision_analytic={}", dec(self.decision_analytic()));
        let _ = writeln!(out, "decision_gamma0={}", dec(self.decision_gamma0()));
        let _ = writeln!(out, "decision_gamma1={}", dec(self.decision_gamma1()));
        let _ = writeln!(out, "decision_gamma2={}", dec(self.decision_gamma2()));
        let _ = writeln!(out, "decision={}", self.decision());
        let _ = writeln!(out, "cycles_abandoned={}", self.cycles_abandoned.map_or("NA".into(), |c| c.to_string()));
        let pi: Vec<String> = d.pi_hat.iter().map(|p| format!("{p:.12e}")).collect();
        let _ = writeln!(out, "pi_hat={}", pi.join(";"));
        let _ = writeln!(out, "h_pi={:.12e}", d.h_pi);
        let _ = writeln!(out, "sigma2={:.12e}", d.sigma2);
        let _ = writeln!(out, "eps_hat={:.12e}", d.eps_hat);
        let _ = writeln!(out, "k_min={}", d.k_min);
        let _ = writeln!(out, "k_max={}", d.k_max);
        let _ = writeln!(out, "k_mean={:.6}", d.k_mean);
        out
    }

    pub const CSV_HEADER: &'static str =
        "n,statistic,scaling,scaled_statistic,threshold_analytic,gamma0,gamma1,gamma2,decision,h_pi,sigma2,eps_hat,k_min,k_max,k_mean";

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.12e}"));
        let d = &self.diagnostics;
        format!(
            "{},{:.12e},{},{:.12e},{},{},{},{},{},{:.12e},{:.12e},{:.12e},{},{},{:.6}",
            d.n,
            self.statistic,
            self.scaling.label(),
            self.scaled_statistic,
            opt(self.thresholds.analytic),
            opt(self.thresholds.gamma0),
            opt(self.thresholds.gamma1),
            opt(self.thresholds.gamma2),
            self.decision(),
            d.h_pi,
            d.sigma2,
            d.eps_hat,
            d.k_min,
            d.k_max,
            d.k_mean
        )
    }
}

/// Spectral diagnostics of a dataset at its empirical chain.
pub fn diagnostics(data: &ComparisonDataset, config: &TestConfig) -> Result<Diagnostics> {
    let (chain, pi) = empirical_chain(data, config.d, config.tol, config.max_iter)?;
    diagnostics_at(data, &chain, &pi)
}

fn diagnostics_at(data: &ComparisonDataset, chain: &MarkovChain<f64>, pi: &StationaryDistribution<f64>) -> Result<Diagnostics> {
    let n = data.n();
    // A reducible empirical chain can leave zero entries; ratios then diverge.
    let h_pi = spectral::principal_ratio(&pi.pi).unwrap_or(f64::INFINITY);
    let sigma2 = if pi.pi.iter().all(|&p| p > 0.0) { spectral::dtm_sigma2(chain, &pi.pi)? } else { f64::NAN };
    let d2 = compensated_sum(data.graph().edges().filter(|&(i, j)| data.k(i, j) > 0).map(|(i, j)| {
        let p = data.z(i, j) as f64 / data.k(i, j) as f64;
        let r = (pi.pi[i] + pi.pi[j]) * p - pi.pi[j];
        r * r
    }));
    let eps_hat = d2.sqrt() / (n as f64 * pi.max());
    let ks: Vec<usize> = data.graph().edges().map(|(i, j)| data.k(i, j)).collect();
    Ok(Diagnostics {
        pi_hat: pi.pi.clone(),
        h_pi,
        sigma2,
        eps_hat,
        n,
        k_min: ks.iter().copied().min().unwrap_or(0),
        k_max: ks.iter().copied().max().unwrap_or(0),
        k_mean: data.mean_k(),
    })
}

/// Runs the test with every threshold in `kinds`; the first one is the
/// primary decision.
pub fn run_test(data: &ComparisonDataset, kinds: &[ThresholdKind], config: &TestConfig, seed: u64) -> Result<TestReport> {
    config.validate()?;
    let primary = *kinds.first().ok_or_else(|| Error::Validation("no threshold requested".into()))?;
    let (chain, pi) = empirical_chain(data, config.d, config.tol, config.max_iter)?;
    let statistic = test_statistic(data, &pi.pi);
    let scaling = Scaling::of(data);
    let n = data.n();
    let mut thresholds = Thresholds::default();
    let mut cycles_abandoned = None;
    for kind in kinds {
        match kind {
            ThresholdKind::Analytic => {
                let Scaling::NK(k) = scaling else {
                    return Err(Error::Unsupported("the analytic threshold needs a common trial count; use a data-driven threshold".into()));
                };
                let d_max = data.graph().degree_stats().d_max;
                thresholds.analytic = Some(analytic_threshold(n, k, d_max, pi.max(), config.c_alpha_gamma));
            }
            ThresholdKind::Quantile => {
                let counts = trial_counts(data);
                thresholds.gamma0 = Some(quantile_threshold(data.graph(), &counts, config, seed::derive(seed, &[0]))?);
            }
            ThresholdKind::Permutation => {
                let perm = permutation_threshold(data, config, seed::derive(seed, &[1]))?;
                thresholds.gamma1 = Some(perm.gamma1);
                thresholds.gamma2 = Some(perm.gamma2);
                cycles_abandoned = Some(perm.cycles_abandoned);
            }
        }
    }
    Ok(TestReport {
        names: data.names().to_vec(),
        statistic,
        scaling,
        scaled_statistic: scaling.apply(n, statistic),
        thresholds,
        cycles_abandoned,
        diagnostics: diagnostics_at(data, &chain, &pi)?,
        primary,
    })
}
