//! Frank-Wolfe solver for the dual of the quadratic-regularized direction subproblem
//!
//! ```text
//! min_d max_i ⟨g̃_i, d⟩ + ½‖d‖²_B      (primal)
//! min_{λ∈Δ_m} φ(λ) = ½‖Σ_i λ_i g̃_i‖²_{B⁻¹}   (dual)
//! ```
//!
//! The primal solution is recovered as `d = −B⁻¹ Σ_i λ_i g̃_i` with optimal value
//! `θ = −½‖d‖²_B`.
//!
//! Iterates never form the `m × m` Gram matrix. `φ` and its gradient are evaluated
//! from the aggregated vector `v = Σ λ_i g̃_i` and `u = B⁻¹ v`, which stays accurate
//! near criticality where the individual gradients are large but `v` is tiny.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::types::{Jacobian, Metric, Point, SimplexWeights, SolverConfig};

/// Gap required relative to `‖d‖²_B = 2φ`, so that every objective gets a descent slope
/// close to `−‖d‖²_B` even when `φ` itself is far below the absolute tolerance.
pub const RELATIVE_GAP: f64 = 1e-6;

/// Multiple of `ε·max_i ‖g̃_i‖²_{B⁻¹}` allowed on top of the relative gap.
const ROUNDOFF_FACTOR: f64 = 16.0;

/// Solution of the dual subproblem and the recovered primal direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DualResult {
    pub weights: SimplexWeights,
    pub direction: Point,
    /// Optimal value of the primal subproblem, `−½‖d‖²` in the subproblem metric.
    pub theta: f64,
    /// Final Frank-Wolfe gap `⟨∇φ(λ), λ − e_j⟩`.
    pub fw_gap: f64,
    pub iterations: usize,
}

/// Solves the dual from the uniform starting weights.
pub fn solve_dual(scaled_gradients: &Jacobian, metric: &Metric, config: &SolverConfig) -> Result<DualResult> {
    solve_dual_from(scaled_gradients, metric, config, None)
}

/// Solves the dual, optionally warm-started from earlier weights.
///
/// Uses Frank-Wolfe with away steps and exact line search. The linear minimization
/// oracle picks the vertex with the smallest gradient component (lowest index on
/// ties). Stops once both the Frank-Wolfe gap and the away gap are below
/// `dual_tol · max(1, φ(λ₀))` and below `RELATIVE_GAP · 2φ(λ)` plus a roundoff floor.
///
/// With three or more objectives each step is followed by a corrective move towards
/// the minimizer of `φ` on the affine hull of the current support, kept only when it
/// does not increase `φ`.
pub fn solve_dual_from(
    scaled_gradients: &Jacobian,
    metric: &Metric,
    config: &SolverConfig,
    warm_start: Option<&SimplexWeights>,
) -> Result<DualResult> {
    let (m, n) = scaled_gradients.shape();
    if m == 0 || metric.dim() != n {
        return Err(Error::Dimension(format!(
            "{m}×{n} gradients against a metric of dimension {}",
            metric.dim()
        )));
    }
    if scaled_gradients.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("scaled gradients must be finite".into()));
    }

    let grads = scaled_gradients;
    // Row i of `preconditioned` is B⁻¹ g̃_i.
    let preconditioned: DMatrix<f64> = grads * metric.b_inv();

    let mut lambda = match warm_start {
        Some(w) if w.len() == m => w.values().clone(),
        _ => DVector::from_element(m, 1.0 / m as f64),
    };

    let state = |lambda: &DVector<f64>| {
        let v = grads.tr_mul(lambda);
        let u = preconditioned.tr_mul(lambda);
        let grad = grads * &u;
        let phi = 0.5 * v.dot(&u);
        (v, u, grad, phi)
    };

    let (_, _, _, phi0) = state(&lambda);
    let tol = config.dual_tol * phi0.max(1.0);
    // Smallest gap resolvable when λ is only known to machine precision.
    let curvature = grads
        .row_iter()
        .zip(preconditioned.row_iter())
        .map(|(g, p)| g.dot(&p))
        .fold(0.0, f64::max);
    let resolution = ROUNDOFF_FACTOR * f64::EPSILON * curvature;

    let mut iterations = 0;
    let mut fw_gap;
    loop {
        let (v, u, grad, phi) = state(&lambda);
        let two_phi = 2.0 * phi;

        // Frank-Wolfe vertex: smallest gradient component, lowest index on ties.
        let mut fw = 0;
        for i in 1..m {
            if grad[i] < grad[fw] {
                fw = i;
            }
        }
        fw_gap = two_phi - grad[fw];

        // Away vertex: largest gradient component over the support.
        let away = (0..m)
            .filter(|&i| lambda[i] > 0.0)
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(b.cmp(&a)))
            .expect("weights always have support");
        let away_gap = grad[away] - two_phi;

        let gap = fw_gap.max(away_gap);
        if gap <= tol.max(resolution) && gap <= RELATIVE_GAP * two_phi + resolution {
            break;
        }
        if iterations >= config.dual_max_iter {
            return Err(Error::SubproblemFailure {
                best: Box::new(finish(grads, metric, lambda, config, fw_gap, iterations)),
            });
        }
        iterations += 1;

        if fw_gap >= away_gap {
            // λ ← λ + γ (e_fw − λ)
            let dv = grads.row(fw).transpose() - &v;
            let du = preconditioned.row(fw).transpose() - &u;
            let curvature = dv.dot(&du);
            let step = if curvature > 0.0 { (fw_gap / curvature).min(1.0) } else { 1.0 };
            for (i, l) in lambda.iter_mut().enumerate() {
                *l += step * (if i == fw { 1.0 } else { 0.0 } - *l);
            }
        } else {
            // λ ← λ + γ (λ − e_away), γ ≤ λ_a / (1 − λ_a)
            let la = lambda[away];
            let max_step = if la < 1.0 { la / (1.0 - la) } else { f64::INFINITY };
            let dv = &v - grads.row(away).transpose();
            let du = &u - preconditioned.row(away).transpose();
            let curvature = dv.dot(&du);
            let step = if curvature > 0.0 {
                (away_gap / curvature).min(max_step)
            } else {
                max_step
            };
            if !step.is_finite() {
                // Single-vertex support with a positive away gap cannot happen in
                // exact arithmetic; treat it as converged.
                break;
            }
            for (i, l) in lambda.iter_mut().enumerate() {
                *l += step * (*l - if i == away { 1.0 } else { 0.0 });
            }
            if step >= max_step {
                lambda[away] = 0.0;
            }
        }
        lambda.iter_mut().for_each(|l| *l = l.max(0.0));
        let sum = lambda.sum();
        lambda /= sum;

        if m > 2 {
            if let Some(trial) = affine_minimizer(grads, &preconditioned, &lambda) {
                if state(&trial).3 <= state(&lambda).3 {
                    lambda = trial;
                }
            }
        }
    }

    Ok(finish(grads, metric, lambda, config, fw_gap, iterations))
}

/// Minimizes `φ` over the affine hull of the support of `λ`, moving from `λ` towards
/// that minimizer as far as the simplex allows. Returns `None` when the support is a
/// single vertex or its hull is degenerate.
fn affine_minimizer(grads: &Jacobian, preconditioned: &DMatrix<f64>, lambda: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
    let s = support.len();
    if s < 2 {
        return None;
    }
    let u = preconditioned.tr_mul(lambda);
    let mut kkt = DMatrix::zeros(s + 1, s + 1);
    let mut rhs = DVector::zeros(s + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate().skip(a) {
            let k = 0.5 * (grads.row(i).dot(&preconditioned.row(j)) + grads.row(j).dot(&preconditioned.row(i)));
            kkt[(a, b)] = k;
            kkt[(b, a)] = k;
        }
        kkt[(a, s)] = 1.0;
        kkt[(s, a)] = 1.0;
        rhs[a] = -grads.row(i).dot(&u.transpose());
    }
    let delta = kkt.lu().solve(&rhs)?;
    if delta.iter().any(|x| !x.is_finite()) {
        return None;
    }

    let mut step = 1.0;
    let mut blocking = None;
    for (a, &i) in support.iter().enumerate() {
        if delta[a] < 0.0 && lambda[i] < -step * delta[a] {
            step = lambda[i] / -delta[a];
            blocking = Some(i);
        }
    }
    let mut trial = lambda.clone();
    for (a, &i) in support.iter().enumerate() {
        trial[i] = (trial[i] + step * delta[a]).max(0.0);
    }
    if let Some(i) = blocking {
        trial[i] = 0.0;
    }
    let sum = trial.sum();
    if !(sum > 0.0) {
        return None;
    }
    trial /= sum;
    Some(trial)
}

fn finish(
    grads: &Jacobian,
    metric: &Metric,
    lambda: DVector<f64>,
    config: &SolverConfig,
    fw_gap: f64,
    iterations: usize,
) -> DualResult {
    let weights = SimplexWeights::from_raw(lambda, config.active_tol);
    let aggregated = grads.tr_mul(weights.values());
    let direction = -(metric.b_inv() * &aggregated);
    // θ = −½ ⟨v, B⁻¹v⟩ = ½ ⟨v, d⟩
    let theta = 0.5 * aggregated.dot(&direction);
    DualResult {
        weights,
        direction,
        theta,
        fw_gap: fw_gap.max(0.0),
        iterations,
    }
}

/// Checks the KKT system of the primal subproblem at `result`:
/// simplex feasibility, stationarity `B d + Σ λ_i g̃_i = 0`, primal feasibility
/// `⟨g̃_i, d⟩ ≤ t` and complementary slackness, with `t = θ − ½‖d‖²_B`.
pub fn check_kkt(result: &DualResult, scaled_gradients: &Jacobian, metric: &Metric, tol: f64) -> bool {
    let lambda = result.weights.values();
    let d = &result.direction;
    if lambda.len() != scaled_gradients.nrows() || d.len() != scaled_gradients.ncols() {
        return false;
    }
    if (lambda.sum() - 1.0).abs() > tol || lambda.iter().any(|l| *l < -tol) {
        return false;
    }
    let aggregated = scaled_gradients.tr_mul(lambda);
    let residual = metric.b() * d + &aggregated;
    if residual.amax() > tol * aggregated.amax().max(1.0) {
        return false;
    }
    let t = result.theta - 0.5 * metric.norm_sq(d);
    let scale = t.abs().max(1.0);
    let inner = scaled_gradients * d;
    inner.iter().zip(lambda.iter()).all(|(gd, l)| {
        *gd <= t + tol * scale && (l * (gd - t)).abs() <= tol * scale
    })
}
