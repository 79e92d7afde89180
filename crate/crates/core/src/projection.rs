//! Frobenius distance from a pairwise model to the nearest BTL model whose
//! scores have bounded condition number.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use crate::model::PairwiseModel;
use crate::seed;

pub const DEFAULT_RESTARTS: usize = 20;
const GRAD_TOL: f64 = 1e-9;
const MAX_ITER: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct BtlProjection {
    /// `min ‖P − P_E(B)‖_F`.
    pub distance: f64,
    /// Minimizing scores, normalized to sum to one.
    pub scores: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Objective<'a> {
    model: &'a PairwiseModel<f64>,
    edges: Vec<(usize, usize)>,
    /// Allowed spread `max w − min w` of the log-scores.
    spread: f64,
}

impl Objective<'_> {
    fn residuals(&self, w: &[f64]) -> Vec<f64> {
        self.edges.iter().map(|&(i, j)| self.model.prob(i, j) - sigmoid(w[j] - w[i])).collect()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.residuals(w).iter().map(|r| r * r).sum()
    }

    /// Jacobian of the residuals and the gradient of the objective.
    fn linearize(&self, w: &[f64]) -> (Matrix<f64>, Vec<f64>, Vec<f64>) {
        let n = w.len();
        let r = self.residuals(w);
        let mut jac = Matrix::zeros(self.edges.len(), n);
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let s = sigmoid(w[j] - w[i]);
            let ds = s * (1.0 - s);
            jac[(e, i)] = ds;
            jac[(e, j)] = -ds;
        }
        let mut grad = vec![0.0; n];
        for (e, re) in r.iter().enumerate() {
            for (g, &jv) in grad.iter_mut().zip(jac.row(e)) {
                *g += 2.0 * re * jv;
            }
        }
        (jac, r, grad)
    }

    /// Clamps log-scores into a window of width `spread` around their midrange.
    fn project(&self, w: &mut [f64]) {
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        let mid = 0.5 * (max + min);
        let half = 0.5 * self.spread;
        for v in w.iter_mut() {
            *v = (*v - mid).clamp(-half, half);
        }
    }

    /// Gradient with components that push against an active bound removed.
    fn projected_gradient_norm(&self, w: &[f64], grad: &[f64]) -> f64 {
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        let active = max - min >= self.spread - 1e-12;
        w.iter()
            .zip(grad)
            .map(|(&v, &g)| {
                // descent direction is -g
                let blocked = active && ((v >= max - 1e-12 && g < 0.0) || (v <= min + 1e-12 && g > 0.0));
                if blocked { 0.0 } else { g.abs() }
            })
            .fold(0.0, f64::max)
    }

    /// Projected Levenberg-Marquardt from `w`.
    fn minimize(&self, mut w: Vec<f64>) -> (f64, Vec<f64>) {
        self.project(&mut w);
        let n = w.len();
        let mut f = self.value(&w);
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITER {
            let (jac, r, grad) = self.linearize(&w);
            if self.projected_gradient_norm(&w, &grad) < GRAD_TOL {
                break;
            }
            let jtj = jac.transpose().matmul(&jac);
            let mut improved = false;
            while lambda < 1e12 {
                let a = Matrix::from_fn(n, n, |i, j| jtj[(i, j)] + if i == j { lambda * (jtj[(i, i)] + 1e-12) + 1e-12 } else { 0.0 });
                // J step solves (JᵀJ + λ diag) Δ = −Jᵀ r
                let rhs: Vec<f64> = (0..n).map(|c| -(0..r.len()).map(|e| jac[(e, c)] * r[e]).sum::<f64>()).collect();
                let Some(step) = matrix::solve(&a, &rhs) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut cand: Vec<f64> = w.iter().zip(&step).map(|(a, b)| a + b).collect();
                self.project(&mut cand);
                let fc = self.value(&cand);
                if fc < f {
                    let moved = cand.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    w = cand;
                    f = fc;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = moved > 1e-15;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        (f, w)
    }
}

/// Multi-start projected least squares over log-scores with
/// `max α / min α <= 1/δ`.
pub fn btl_distance(model: &PairwiseModel<f64>, delta: f64, restarts: usize, seed: u64) -> Result<BtlProjection> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1]")));
    }
    let n = model.n();
    let objective = Objective { model, edges: model.graph().edges().collect(), spread: (1.0 / delta).ln() };
    let runs: Vec<(f64, Vec<f64>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start: Vec<f64> = if r == 0 {
                vec![0.0; n]
            } else {
                let mut rng = seed::rng(seed, &[seed::STREAM_OPT, r as u64]);
                (0..n).map(|_| objective.spread * (rng.random::<f64>() - 0.5)).collect()
            };
            objective.minimize(start)
        })
        .collect();
    let (f, w) = runs
        .into_iter()
        .filter(|(f, _)| f.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Optimization(format!("no finite objective after {restarts} restarts")))?;
    let exp: Vec<f64> = w.iter().map(|v| v.exp()).collect();
    let total: f64 = exp.iter().sum();
    Ok(BtlProjection { distance: f.sqrt(), scores: exp.iter().map(|v| v / total).collect() })
}
