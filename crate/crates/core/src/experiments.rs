//! Monte-Carlo experiment harness.
//!
//! Every experiment is a deterministic function of its [`ExperimentSpec`];
//! replicates use seeds derived from the master seed and their position in
//! the grid, so parallel scheduling never changes an emitted number.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::{sample_dataset, ComparisonDataset, TrialCounts};
use crate::error::{Error, Result};
use crate::graph::ObservationGraph;
use crate::inference::{
    self, decide, empirical_chain, permutation_threshold, plug_in_statistic, quantile, Hypothesis, Scaling, TestConfig,
};
use crate::io::MatchRecord;
use crate::model::{btl_model, cyclic_model, lower_bound_model, margin_model, random_btl_scores, stability_model, uniform_model};
use crate::seed;
use crate::spectral::{borda_stationary_gap, canonical_markov, separation, stationary_default};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    MinimaxGrid,
    ThresholdScaling,
    L2Error,
    StabilityDecay,
    RealData,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "minimax_grid" => Self::MinimaxGrid,
            "threshold_scaling" => Self::ThresholdScaling,
            "l2_error" => Self::L2Error,
            "stability_decay" => Self::StabilityDecay,
            "real_data" => Self::RealData,
            other => return Err(Error::Validation(format!("unknown experiment kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFamily {
    Complete,
    /// Edge probability with `n p = ln² n`.
    ErdosRenyi,
}

impl GraphFamily {
    pub fn label(self) -> &'static str {
        match self {
            GraphFamily::Complete => "complete",
            GraphFamily::ErdosRenyi => "erdos_renyi",
        }
    }

    pub fn build(self, n: usize, seed: u64) -> Result<ObservationGraph> {
        match self {
            GraphFamily::Complete => ObservationGraph::complete(n),
            GraphFamily::ErdosRenyi => ObservationGraph::erdos_renyi(n, er_probability(n), seed),
        }
    }
}

/// `p = min(1, ln² n / n)`.
pub fn er_probability(n: usize) -> f64 {
    let ln = (n as f64).ln();
    (ln * ln / n as f64).min(1.0)
}

impl std::str::FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Self::Complete),
            "erdos_renyi" | "er" => Ok(Self::ErdosRenyi),
            other => Err(Error::Validation(format!("unknown graph family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub eta: Vec<f64>,
    pub graphs: Vec<GraphFamily>,
    pub replicates: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub test: TestConfig,
    /// H0 datasets whose permutation thresholds are averaged per cell.
    pub perm_models: usize,
    /// H1 datasets per cell of the threshold experiment.
    pub h1_datasets: usize,
    /// Margin of the H1 model in the threshold experiment.
    pub delta_h1: f64,
    pub data: Option<PathBuf>,
    pub windows: Vec<usize>,
    pub top_m: usize,
}

impl ExperimentSpec {
    /// Desk-scale defaults for `kind`.
    pub fn desk(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            n: vec![32, 64, 128],
            k: vec![12],
            eta: vec![0.16, 0.24, 0.32],
            graphs: vec![GraphFamily::Complete],
            replicates: 100,
            seed: 0,
            output: None,
            test: TestConfig::default(),
            perm_models: 1,
            h1_datasets: 20,
            delta_h1: 0.22,
            data: None,
            windows: vec![1, 2, 3, 4, 5],
            top_m: 8,
        };
        match kind {
            ExperimentKind::MinimaxGrid | ExperimentKind::RealData => base,
            ExperimentKind::ThresholdScaling => Self {
                n: vec![10, 40, 70, 100],
                k: vec![12, 24],
                graphs: vec![GraphFamily::Complete, GraphFamily::ErdosRenyi],
                ..base
            },
            ExperimentKind::L2Error => Self { n: vec![20], k: vec![10, 40, 160, 640], ..base },
            ExperimentKind::StabilityDecay => Self { n: vec![200, 400, 800], ..base },
        }
    }

    /// The large grids: finer n and η, more replicates.
    pub fn full_scale(kind: ExperimentKind) -> Self {
        let desk = Self::desk(kind);
        match kind {
            ExperimentKind::MinimaxGrid => Self {
                // 12 equally spaced points from 32 to 128, rounded to even n.
                n: (0..12).map(|i| 2 * ((32.0 + 96.0 * i as f64 / 11.0) / 2.0).round() as usize).collect(),
                eta: (0..12).map(|i| 0.16 + 0.16 * i as f64 / 11.0).collect(),
                replicates: 250,
                ..desk
            },
            ExperimentKind::ThresholdScaling => Self { n: (0..7).map(|i| 10 + 15 * i).collect(), k: vec![12, 24, 36], ..desk },
            ExperimentKind::StabilityDecay => Self { n: (1..=10).map(|i| 100 * i).collect(), ..desk },
            ExperimentKind::L2Error | ExperimentKind::RealData => Self { replicates: 250, ..desk },
        }
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: idx + 1, message: format!("expected key = value, got `{line}`") })?;
            entries.insert(key.trim().to_string(), (idx + 1, value.trim().to_string()));
        }
        let (_, kind) = entries.remove("kind").ok_or(Error::Parse { line: 0, message: "missing `kind`".into() })?;
        let kind: ExperimentKind = kind.parse()?;
        let full = match entries.remove("full_scale") {
            Some((line, v)) => parse_value::<bool>(line, &v)?,
            None => false,
        };
        let mut spec = if full { Self::full_scale(kind) } else { Self::desk(kind) };
        for (key, (line, value)) in entries {
            match key.as_str() {
                "n" => spec.n = parse_list(line, &value)?,
                "k" => spec.k = parse_list(line, &value)?,
                "eta" => spec.eta = parse_list(line, &value)?,
                "graph" => spec.graphs = parse_list(line, &value)?,
                "replicates" => spec.replicates = parse_value(line, &value)?,
                "seed" => spec.seed = parse_value(line, &value)?,
                "output" => spec.output = Some(PathBuf::from(value)),
                "q" => spec.test.q = parse_value(line, &value)?,
                "model_pool" => spec.test.model_pool = parse_value(line, &value)?,
                "reps" => spec.test.reps = parse_value(line, &value)?,
                "cycles" => spec.test.cycles = Some(parse_value(line, &value)?),
                "c_alpha_gamma" => spec.test.c_alpha_gamma = parse_value(line, &value)?,
                "perm_models" => spec.perm_models = parse_value(line, &value)?,
                "h1_datasets" => spec.h1_datasets = parse_value(line, &value)?,
                "delta_h1" => spec.delta_h1 = parse_value(line, &value)?,
                "data" => spec.data = Some(PathBuf::from(value)),
                "windows" => spec.windows = parse_list(line, &value)?,
                "top_m" => spec.top_m = parse_value(line, &value)?,
                other => return Err(Error::Parse { line, message: format!("unknown key `{other}`") }),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let needs = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Validation(format!("{what} must not be empty"))) };
        needs(!self.n.is_empty(), "n")?;
        needs(!self.k.is_empty(), "k")?;
        needs(!self.eta.is_empty(), "eta")?;
        needs(!self.graphs.is_empty(), "graph")?;
        needs(!self.windows.is_empty(), "windows")?;
        if self.replicates == 0 || self.perm_models == 0 {
            return Err(Error::Validation("replicates and perm_models must be at least 1".into()));
        }
        self.test.validate()
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse().map_err(|e: T::Err| Error::Parse { line, message: format!("`{v}`: {e}") })
}

fn parse_list<T: std::str::FromStr>(line: usize, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_value(line, s)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------- minimax

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCell {
    pub n: usize,
    pub eta: f64,
    pub replicates: usize,
    pub type1: f64,
    pub type2: f64,
    pub risk: f64,
    pub mean_nt_h0: f64,
    pub mean_nt_h1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskGrid {
    pub cells: Vec<RiskCell>,
}

impl RiskGrid {
    pub const CSV_HEADER: &'static str = "n,eta,replicates,type1,type2,risk,mean_nT_h0,mean_nT_h1";

    pub fn cell(&self, n: usize, eta: f64) -> Option<&RiskCell> {
        self.cells.iter().find(|c| c.n == n && c.eta == eta)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.10e},{:.10e}",
                c.n, c.eta, c.replicates, c.type1, c.type2, c.risk, c.mean_nt_h0, c.mean_nt_h1
            );
        }
        out
    }
}

/// Empirical risk of the test at threshold `η²/n`: H0 is the all-1/2 model,
/// H1 the block model with a fresh random permutation per replicate.
pub fn minimax_grid(ns: &[usize], etas: &[f64], k: usize, replicates: usize, config: &TestConfig, seed: u64) -> Result<RiskGrid> {
    let mut cells = Vec::new();
    for &n in ns {
        let graph = ObservationGraph::complete(n)?;
        let h0 = uniform_model::<f64>(&graph);
        for (e, &eta) in etas.iter().enumerate() {
            let tag = [n as u64, e as u64];
            let runs: Vec<(f64, f64)> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let path = |h: u64| seed::derive(seed, &[tag[0], tag[1], r as u64, h]);
                    let d0 = sample_dataset(&h0, &TrialCounts::Uniform(k), path(0))?;
                    let mut theta: Vec<usize> = (0..n / 2).collect();
                    theta.shuffle(&mut seed::rng(path(2), &[]));
                    let h1 = lower_bound_model(n, eta, &theta)?;
                    let d1 = sample_dataset(&h1, &TrialCounts::Uniform(k), path(1))?;
                    Ok((plug_in_statistic(&d0, config)?, plug_in_statistic(&d1, config)?))
                })
                .collect::<Result<_>>()?;
            let threshold = eta * eta / n as f64;
            let false_alarms = runs.iter().filter(|r| decide(r.0, threshold) == Hypothesis::H1).count();
            let misses = runs.iter().filter(|r| decide(r.1, threshold) == Hypothesis::H0).count();
            let type1 = false_alarms as f64 / replicates as f64;
            let type2 = misses as f64 / replicates as f64;
            let nf = n as f64;
            cells.push(RiskCell {
                n,
                eta,
                replicates,
                type1,
                type2,
                risk: type1 + type2,
                mean_nt_h0: mean(&runs.iter().map(|r| nf * r.0).collect::<Vec<_>>()),
                mean_nt_h1: mean(&runs.iter().map(|r| nf * r.1).collect::<Vec<_>>()),
            });
        }
    }
    Ok(RiskGrid { cells })
}

// ------------------------------------------------------------- thresholds

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub graph: GraphFamily,
    pub n: usize,
    pub k: usize,
    pub gamma0: f64,
    /// Means over the H0 datasets of the permutation thresholds.
    pub gamma1: f64,
    pub gamma2: f64,
    pub h1_median: f64,
    pub h1_lo: f64,
    pub h1_hi: f64,
    /// Permutation thresholds computed from H1 data.
    pub gamma1_h1: f64,
    pub gamma2_h1: f64,
}

pub const THRESHOLD_CSV_HEADER: &str = "graph,n,k,gamma0,gamma1,gamma2,h1_median,h1_q025,h1_q975,gamma1_h1,gamma2_h1";

pub fn threshold_rows_csv(rows: &[ThresholdRow]) -> String {
    let mut out = format!("{THRESHOLD_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            r.graph.label(),
            r.n,
            r.k,
            r.gamma0,
            r.gamma1,
            r.gamma2,
            r.h1_median,
            r.h1_lo,
            r.h1_hi,
            r.gamma1_h1,
            r.gamma2_h1
        );
    }
    out
}

/// Scaled statistics of datasets drawn from `model` and their permutation
/// thresholds, the latter from the first `perm_models` datasets.
fn statistic_profile(
    model: &crate::Model,
    k: usize,
    datasets: usize,
    perm_models: usize,
    config: &TestConfig,
    seed: u64,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = model.n();
    let stats: Vec<f64> = (0..datasets)
        .into_par_iter()
        .map(|r| {
            let d = sample_dataset(model, &TrialCounts::Uniform(k), seed::derive(seed, &[r as u64]))?;
            Ok(Scaling::NK(k).apply(n, plug_in_statistic(&d, config)?))
        })
        .collect::<Result<_>>()?;
    let mut g1 = Vec::new();
    let mut g2 = Vec::new();
    for m in 0..perm_models {
        let d = sample_dataset(model, &TrialCounts::Uniform(k), seed::derive(seed, &[m as u64]))?;
        let p = permutation_threshold(&d, config, seed::derive(seed, &[m as u64, 1]))?;
        g1.push(p.gamma1);
        g2.push(p.gamma2);
    }
    Ok((stats, mean(&g1), mean(&g2)))
}

/// `γ₀, γ₁, γ₂` per `(graph, n, k)` under H0, plus the H1 statistic band and
/// permutation thresholds under the constant-margin model.
pub fn threshold_scaling(spec: &ExperimentSpec) -> Result<Vec<ThresholdRow>> {
    let mut rows = Vec::new();
    for (g, &family) in spec.graphs.iter().enumerate() {
        for &n in &spec.n {
            for &k in &spec.k {
                let cell = [g as u64, n as u64, k as u64];
                let cell_seed = |tag: u64| seed::derive(spec.seed, &[cell[0], cell[1], cell[2], tag]);
                let graph = family.build(n, cell_seed(0))?;
                let gamma0 = inference::quantile_threshold(&graph, &TrialCounts::Uniform(k), &spec.test, cell_seed(1))?;
                let mut g1 = Vec::new();
                let mut g2 = Vec::new();
                for m in 0..spec.perm_models {
                    let alpha = random_btl_scores(n, seed::derive(cell_seed(2), &[m as u64]));
                    let h0 = btl_model(&alpha, &graph)?;
                    let d = sample_dataset(&h0, &TrialCounts::Uniform(k), seed::derive(cell_seed(3), &[m as u64]))?;
                    let p = permutation_threshold(&d, &spec.test, seed::derive(cell_seed(4), &[m as u64]))?;
                    g1.push(p.gamma1);
                    g2.push(p.gamma2);
                }
                let (h1_median, h1_lo, h1_hi, gamma1_h1, gamma2_h1) = if spec.h1_datasets > 0 {
                    let h1 = margin_model(&graph, spec.delta_h1)?;
                    let perm = spec.perm_models.min(spec.h1_datasets);
                    let (stats, a, b) = statistic_profile(&h1, k, spec.h1_datasets, perm, &spec.test, cell_seed(5))?;
                    (quantile(&stats, 0.5), quantile(&stats, 0.025), quantile(&stats, 0.975), a, b)
                } else {
                    (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                };
                rows.push(ThresholdRow {
                    graph: family,
                    n,
                    k,
                    gamma0,
                    gamma1: mean(&g1),
                    gamma2: mean(&g2),
                    h1_median,
                    h1_lo,
                    h1_hi,
                    gamma1_h1,
                    gamma2_h1,
                });
            }
        }
    }
    Ok(rows)
}

/// Outcome of one seed of the permutation power check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exceedance {
    /// Median scaled statistic over the datasets of this seed.
    pub median: f64,
    /// `γ₂` computed from the first dataset.
    pub gamma2: f64,
}

impl Exceedance {
    pub fn exceeds(&self) -> bool {
        decide(self.median, self.gamma2) == Hypothesis::H1
    }
}

/// For each seed: draws `datasets` datasets from `model(seed)` and compares
/// their median scaled statistic with `γ₂` of the first.
pub fn permutation_exceedance(
    model: impl Fn(u64) -> Result<crate::Model> + Sync,
    k: usize,
    seeds: usize,
    datasets: usize,
    config: &TestConfig,
    seed: u64,
) -> Result<Vec<Exceedance>> {
    (0..seeds)
        .map(|s| {
            let m = model(seed::derive(seed, &[s as u64, 0]))?;
            let (stats, _, gamma2) = statistic_profile(&m, k, datasets.max(1), 1, config, seed::derive(seed, &[s as u64, 1]))?;
            Ok(Exceedance { median: quantile(&stats, 0.5), gamma2 })
        })
        .collect()
}

// -------------------------------------------------------------- l2 error

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2Model {
    Btl,
    Cyclic,
}

impl L2Model {
    pub fn label(self) -> &'static str {
        match self {
            L2Model::Btl => "btl",
            L2Model::Cyclic => "cyclic",
        }
    }

    fn build(self, n: usize, seed: u64) -> Result<crate::Model> {
        let g = ObservationGraph::complete(n)?;
        match self {
            L2Model::Btl => btl_model(&random_btl_scores(n, seed), &g),
            L2Model::Cyclic => cyclic_model(&g, 0.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Row {
    pub model: L2Model,
    pub n: usize,
    pub k: usize,
    pub mean_error: f64,
}

pub const L2_CSV_HEADER: &str = "model,n,k,mean_l2_error";

pub fn l2_rows_csv(rows: &[L2Row]) -> String {
    let mut out = format!("{L2_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.10e}", r.model.label(), r.n, r.k, r.mean_error);
    }
    out
}

/// Mean `‖π̂ − π‖₂` per `k` on a complete graph.
pub fn l2_error_scaling(model: L2Model, n: usize, ks: &[usize], replicates: usize, config: &TestConfig, seed: u64) -> Result<Vec<L2Row>> {
    let m = model.build(n, seed::derive(seed, &[0]))?;
    let pi = stationary_default(&canonical_markov(&m, config.d)?)?.pi;
    ks.iter()
        .map(|&k| {
            let errs: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let d = sample_dataset(&m, &TrialCounts::Uniform(k), seed::derive(seed, &[1, k as u64, r as u64]))?;
                    let (_, hat) = empirical_chain(&d, config.d, config.tol, config.max_iter)?;
                    Ok(hat.pi.iter().zip(&pi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                })
                .collect::<Result<_>>()?;
            Ok(L2Row { model, n, k, mean_error: mean(&errs) })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

// -------------------------------------------------------------- stability

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub n: usize,
    pub separation: f64,
    pub sqrt_n_separation: f64,
    pub sqrt_n_eps: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Stationary and Borda orders of agents 1 and 2 disagree.
    pub inverted: bool,
    /// Gap whose sign must match `π₁ − π₂`.
    pub order_gap: f64,
}

pub const STABILITY_CSV_HEADER: &str = "n,D,sqrt_n_D,sqrt_n_eps,pi1,pi2,tau1,tau2,inverted,order_gap";

pub fn stability_rows_csv(rows: &[StabilityRow], skipped: &[(usize, String)]) -> String {
    let mut out = format!("{STABILITY_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.10e},{:.10e},{:.10e},{:.12e},{:.12e},{},{},{},{:.10e}",
            r.n, r.separation, r.sqrt_n_separation, r.sqrt_n_eps, r.pi1, r.pi2, r.tau1, r.tau2, r.inverted, r.order_gap
        );
    }
    for (n, why) in skipped {
        let _ = writeln!(out, "# skipped n={n}: {why}");
    }
    out
}

/// Separation and Borda/stationary orders of the inversion family; sizes
/// violating its constraints are returned as skipped.
pub fn stability_decay(ns: &[usize]) -> (Vec<StabilityRow>, Vec<(usize, String)>) {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &n in ns {
        let row = (|| -> Result<StabilityRow> {
            let m = stability_model::<f64>(n)?;
            let pi = stationary_default(&canonical_markov(&m, None)?)?.pi;
            let (d, eps) = separation(&m, &pi);
            let tau = m.borda_counts()?;
            let root = (n as f64).sqrt();
            Ok(StabilityRow {
                n,
                separation: d,
                sqrt_n_separation: root * d,
                sqrt_n_eps: root * eps,
                pi1: pi[0],
                pi2: pi[1],
                tau1: tau[0],
                tau2: tau[1],
                inverted: (pi[0] > pi[1]) != (tau[0] > tau[1]),
                order_gap: borda_stationary_gap(&m, &pi, 0, 1)?,
            })
        })();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => skipped.push((n, e.to_string())),
        }
    }
    (rows, skipped)
}

// -------------------------------------------------------------- real data

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub window: usize,
    pub teams: Vec<String>,
    pub n: usize,
    pub matches: usize,
    pub scaled_statistic: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealDataRun {
    pub rows: Vec<WindowRow>,
    pub skipped: Vec<(usize, String)>,
}

impl RealDataRun {
    pub const CSV_HEADER: &'static str = "window,n,matches,nT,gamma0,gamma1,gamma2,decision_gamma0,decision_gamma1,decision_gamma2,teams";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{},{},{},{}",
                r.window,
                r.n,
                r.matches,
                r.scaled_statistic,
                r.gamma0,
                r.gamma1,
                r.gamma2,
                decide(r.scaled_statistic, r.gamma0),
                decide(r.scaled_statistic, r.gamma1),
                decide(r.scaled_statistic, r.gamma2),
                r.teams.join(";")
            );
        }
        for (w, why) in &self.skipped {
            let _ = writeln!(out, "# skipped window={w}: {why}");
        }
        out
    }
}

fn year_of(record: &MatchRecord) -> Option<i32> {
    record.date.as_deref().and_then(|d| d.get(..4)).and_then(|y| y.parse().ok())
}

/// Dataset of the `top_m` most active teams among matches of the last
/// `window` years. Only pairs met in both home/away orientations are kept.
pub fn window_dataset(records: &[MatchRecord], window: usize, top_m: usize) -> Result<ComparisonDataset> {
    let latest = records.iter().filter_map(year_of).max().ok_or_else(|| Error::Validation("no dated matches".into()))?;
    let recent: Vec<&MatchRecord> =
        records.iter().filter(|r| year_of(r).is_some_and(|y| y > latest - window as i32)).collect();
    if recent.is_empty() {
        return Err(Error::Validation("window contains no matches".into()));
    }
    let mut activity: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &recent {
        *activity.entry(&r.home).or_default() += 1;
        *activity.entry(&r.away).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = activity.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut teams: Vec<&str> = ranked.into_iter().take(top_m).map(|(t, _)| t).collect();
    teams.sort_unstable();
    let index = |name: &str| teams.iter().position(|&t| t == name);
    let m = teams.len();
    let mut counts = vec![(0usize, 0usize); m * m];
    for r in &recent {
        if let (Some(i), Some(j)) = (index(&r.home), index(&r.away)) {
            let c = &mut counts[i * m + j];
            c.0 += 1;
            c.1 += usize::from(r.winner == r.away);
        }
    }
    let edges: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).filter(|&(i, j)| counts[i * m + j].0 > 0 && counts[j * m + i].0 > 0).collect();
    if m < 2 || edges.is_empty() {
        return Err(Error::Validation("window has no pair observed in both orientations".into()));
    }
    let graph = ObservationGraph::from_edges(m, edges)?;
    let mut data = ComparisonDataset::with_names(graph.clone(), teams.iter().map(|t| t.to_string()).collect())?;
    for (i, j) in graph.edges() {
        let (k, z) = counts[i * m + j];
        data.push_counts(i, j, k, z)?;
    }
    Ok(data)
}

/// Runs the test on trailing windows of a dated match log.
pub fn real_data_run(records: &[MatchRecord], windows: &[usize], top_m: usize, config: &TestConfig, seed: u64) -> Result<RealDataRun> {
    let mut run = RealDataRun::default();
    for &w in windows {
        let data = match window_dataset(records, w, top_m) {
            Ok(d) => d,
            Err(e) => {
                run.skipped.push((w, e.to_string()));
                continue;
            }
        };
        let kinds = [inference::ThresholdKind::Permutation, inference::ThresholdKind::Quantile];
        let report = inference::run_test(&data, &kinds, config, seed::derive(seed, &[w as u64]))?;
        // Heterogeneous counts are compared on the n T scale throughout.
        let n_t = Scaling::N.apply(data.n(), report.statistic);
        let rescale = |g: f64| match report.scaling {
            Scaling::NK(k) => g / k as f64,
            Scaling::N => g,
        };
        run.rows.push(WindowRow {
            window: w,
            teams: data.names().to_vec(),
            n: data.n(),
            matches: data.total_observations(),
            scaled_statistic: n_t,
            gamma0: rescale(report.thresholds.gamma0.expect("requested")),
            gamma1: rescale(report.thresholds.gamma1.expect("requested")),
            gamma2: rescale(report.thresholds.gamma2.expect("requested")),
        });
    }
    Ok(run)
}

/// Runs `spec` and returns the CSV it produces.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<String> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::MinimaxGrid => Ok(minimax_grid(&spec.n, &spec.eta, spec.k[0], spec.replicates, &spec.test, spec.seed)?.to_csv()),
        ExperimentKind::ThresholdScaling => Ok(threshold_rows_csv(&threshold_scaling(spec)?)),
        ExperimentKind::L2Error => {
            let mut rows = Vec::new();
            for model in [L2Model::Btl, L2Model::Cyclic] {
                for &n in &spec.n {
                    rows.extend(l2_error_scaling(model, n, &spec.k, spec.replicates, &spec.test, spec.seed)?);
                }
            }
            Ok(l2_rows_csv(&rows))
        }
        ExperimentKind::StabilityDecay => {
            let (rows, skipped) = stability_decay(&spec.n);
            Ok(stability_rows_csv(&rows, &skipped))
        }
        ExperimentKind::RealData => {
            let path = spec.data.as_ref().ok_or_else(|| Error::Validation("real_data needs `data = <path>`".into()))?;
            let records = crate::io::read_match_records(std::fs::File::open(path)?, false)?;
            Ok(real_data_run(&records, &spec.windows, spec.top_m, &spec.test, spec.seed)?.to_csv())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_spec() {
        let spec = ExperimentSpec::parse(
            "# grid\nkind = minimax_grid\nn = 32, 64\neta=0.16,0.32\nreplicates = 5\nseed = 9\nreps = 3\n",
        )
        .unwrap();
        assert_eq!(spec.kind, ExperimentKind::MinimaxGrid);
        assert_eq!(spec.n, vec![32, 64]);
        assert_eq!(spec.eta, vec![0.16, 0.32]);
        assert_eq!((spec.replicates, spec.seed, spec.test.reps), (5, 9, 3));
        assert!(ExperimentSpec::parse("kind = minimax_grid\nbogus = 1\n").is_err());
        assert!(ExperimentSpec::parse("n = 3\n").is_err());
        assert!(ExperimentSpec::parse("kind = minimax_grid\nn =\n").is_err());
        assert!(ExperimentSpec::parse("kind = minimax_grid\nreplicates = 0\n").is_err());
    }

    #[test]
    fn full_scale_grid_values() {
        let spec = ExperimentSpec::parse("kind = minimax_grid\nfull_scale = true\n").unwrap();
        assert_eq!(spec.n.first(), Some(&32));
        assert_eq!(spec.n.last(), Some(&128));
        assert_eq!(spec.n.len(), 12);
        assert!(spec.n.iter().all(|n| n % 2 == 0));
        assert!((spec.eta[11] - 0.32).abs() < 1e-12);
        assert_eq!(spec.replicates, 250);
        let t = ExperimentSpec::full_scale(ExperimentKind::ThresholdScaling);
        assert_eq!(t.n, vec![10, 25, 40, 55, 70, 85, 100]);
        assert_eq!(t.k, vec![12, 24, 36]);
    }

    #[test]
    fn risk_rates_are_frequencies() {
        let grid = minimax_grid(&[8], &[0.3], 6, 7, &TestConfig::default(), 1).unwrap();
        let c = &grid.cells[0];
        assert_eq!((c.type1 * 7.0).round(), c.type1 * 7.0);
        assert!((0.0..=2.0).contains(&c.risk));
        assert_eq!(minimax_grid(&[8], &[0.3], 6, 7, &TestConfig::default(), 1).unwrap(), grid);
    }

    #[test]
    fn stability_skips_bad_sizes() {
        let (rows, skipped) = stability_decay(&[30, 200]);
        assert_eq!(rows.len(), 1);
        assert_eq!(skipped[0].0, 30);
        assert!(rows[0].inverted);
        assert_eq!(rows[0].order_gap > 0.0, rows[0].pi1 > rows[0].pi2);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    fn rec(date: &str, home: &str, away: &str, winner: &str) -> MatchRecord {
        MatchRecord { date: Some(date.into()), home: home.into(), away: away.into(), winner: winner.into() }
    }

    #[test]
    fn window_keeps_two_way_pairs() {
        let log = vec![
            rec("2019-01-01", "A", "B", "A"),
            rec("2020-01-01", "B", "A", "A"),
            rec("2020-02-01", "A", "C", "C"),
            rec("2020-03-01", "B", "C", "B"),
            rec("2020-04-01", "C", "B", "B"),
        ];
        // In 2020 only B-C is met both ways, which strands A.
        assert!(matches!(window_dataset(&log, 1, 3), Err(Error::Disconnected { .. })));
        let d = window_dataset(&log, 1, 2).unwrap();
        assert_eq!(d.names(), &["B", "C"]);
        assert_eq!((d.k(0, 1), d.z(0, 1), d.k(1, 0), d.z(1, 0)), (1, 0, 1, 1));
        let d = window_dataset(&log[..2], 2, 3).unwrap();
        assert_eq!((d.k(0, 1), d.z(0, 1), d.k(1, 0), d.z(1, 0)), (1, 0, 1, 1));
    }
}
