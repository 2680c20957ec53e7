//! Direction subproblems of the individual methods.
//!
//! The quadratic-metric methods (steepest descent, variable metric, Barzilai-Borwein
//! and its variable-metric version) all reduce to [`solve_dual_from`] with suitable
//! scales and metric. The Newton-type subproblem has a metric that depends on the
//! dual weights and is solved separately.

use nalgebra::{DMatrix, DVector};

use crate::dual_solver::{solve_dual_from, DualResult};
use crate::error::{Error, Result};
use crate::types::{BBScales, Jacobian, Metric, SimplexWeights, SolverConfig};

/// Condition estimate of `M(λ)` above which the Newton subproblem is declared singular.
pub const MAX_CONDITION: f64 = 1e14;

/// Rows `∇F_i / α_i`.
pub fn scale_gradients(jacobian: &Jacobian, scales: &BBScales) -> Result<Jacobian> {
    if scales.len() != jacobian.nrows() {
        return Err(Error::Dimension(format!(
            "{} scales for {} objectives",
            scales.len(),
            jacobian.nrows()
        )));
    }
    let mut g = jacobian.clone();
    for (mut row, a) in g.row_iter_mut().zip(scales.values().iter()) {
        row /= *a;
    }
    Ok(g)
}

/// `d = argmin_d max_i ⟨∇F_i, d⟩/α_i + ½‖d‖²_B`, solved through the dual.
pub fn direction(jacobian: &Jacobian, scales: &BBScales, metric: &Metric, config: &SolverConfig) -> Result<DualResult> {
    direction_from(jacobian, scales, metric, config, None)
}

/// [`direction`] with the dual solve warm-started from `warm_start`.
pub fn direction_from(
    jacobian: &Jacobian,
    scales: &BBScales,
    metric: &Metric,
    config: &SolverConfig,
    warm_start: Option<&SimplexWeights>,
) -> Result<DualResult> {
    let g = scale_gradients(jacobian, scales)?;
    solve_dual_from(&g, metric, config, warm_start)
}

/// True iff `‖d‖ ≤ tol`.
pub fn is_critical(result: &DualResult, tol: f64) -> bool {
    result.direction.norm() <= tol
}

/// Newton-type direction `argmin_d max_i ⟨∇F_i, d⟩ + ½ dᵀB_i d`.
///
/// Solves the dual `min_{λ∈Δ} ψ(λ) = ½ g_λᵀ M(λ)⁻¹ g_λ` with `g_λ = Σλ_i∇F_i` and
/// `M(λ) = Σλ_i B_i`. For two objectives `ψ` is minimized on the segment by bisection
/// on its derivative; otherwise by projected gradient with backtracking.
pub fn direction_newton(jacobian: &Jacobian, hessians: &[DMatrix<f64>], config: &SolverConfig) -> Result<DualResult> {
    direction_newton_from(jacobian, hessians, config, None)
}

/// [`direction_newton`] warm-started from earlier weights (used for three or more objectives).
pub fn direction_newton_from(
    jacobian: &Jacobian,
    hessians: &[DMatrix<f64>],
    config: &SolverConfig,
    warm_start: Option<&SimplexWeights>,
) -> Result<DualResult> {
    let (m, n) = jacobian.shape();
    if m == 0 || hessians.len() != m || hessians.iter().any(|h| h.shape() != (n, n)) {
        return Err(Error::Dimension(format!(
            "{m}×{n} Jacobian with {} Hessian approximations",
            hessians.len()
        )));
    }
    let dual = NewtonDual { jacobian, hessians };
    match m {
        1 => {
            let point = dual.eval(&DVector::from_element(1, 1.0))?;
            Ok(dual.finish(point, 0.0, 0, config))
        }
        2 => dual.bisect(config),
        _ => dual.projected_gradient(config, warm_start),
    }
}

struct NewtonDual<'a> {
    jacobian: &'a Jacobian,
    hessians: &'a [DMatrix<f64>],
}

/// `ψ` and its gradient at `λ`.
struct DualPoint {
    lambda: DVector<f64>,
    direction: DVector<f64>,
    psi: f64,
    grad: DVector<f64>,
    metric_norm_sq: f64,
}

impl NewtonDual<'_> {
    fn eval(&self, lambda: &DVector<f64>) -> Result<DualPoint> {
        let n = self.jacobian.ncols();
        let mut metric = DMatrix::zeros(n, n);
        for (h, l) in self.hessians.iter().zip(lambda.iter()) {
            if *l != 0.0 {
                metric += h * *l;
            }
        }
        let g = self.jacobian.tr_mul(lambda);
        let chol = metric.clone().cholesky().ok_or_else(|| self.singular(lambda, f64::INFINITY))?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        let condition = (hi / lo).powi(2);
        if !(condition <= MAX_CONDITION) {
            return Err(self.singular(lambda, condition));
        }
        let direction = -chol.solve(&g);
        let metric_norm_sq = -g.dot(&direction);
        let grad = DVector::from_iterator(
            lambda.len(),
            self.jacobian
                .row_iter()
                .zip(self.hessians.iter())
                .map(|(row, h)| -(row.transpose().dot(&direction) + 0.5 * direction.dot(&(h * &direction)))),
        );
        Ok(DualPoint {
            lambda: lambda.clone(),
            direction,
            psi: 0.5 * metric_norm_sq,
            grad,
            metric_norm_sq,
        })
    }

    fn singular(&self, lambda: &DVector<f64>, condition: f64) -> Error {
        let n = self.jacobian.ncols();
        let weights = SimplexWeights::from_raw(lambda.clone(), 0.0);
        Error::SubproblemFailure {
            best: Box::new(DualResult {
                weights,
                direction: DVector::zeros(n),
                theta: 0.0,
                fw_gap: condition,
                iterations: 0,
            }),
        }
    }

    fn finish(&self, point: DualPoint, gap: f64, iterations: usize, config: &SolverConfig) -> DualResult {
        DualResult {
            weights: SimplexWeights::from_raw(point.lambda, config.active_tol),
            direction: point.direction,
            theta: -0.5 * point.metric_norm_sq,
            fw_gap: gap,
            iterations,
        }
    }

    fn at(&self, t: f64) -> Result<DualPoint> {
        self.eval(&DVector::from_vec(vec![t, 1.0 - t]))
    }

    /// `ψ(t, 1 − t)` is convex in `t`; bisect on the sign of its derivative.
    fn bisect(&self, config: &SolverConfig) -> Result<DualResult> {
        let slope = |p: &DualPoint| p.grad[0] - p.grad[1];
        let left = self.at(0.0)?;
        if slope(&left) >= 0.0 {
            return Ok(self.finish(left, 0.0, 0, config));
        }
        let right = self.at(1.0)?;
        if slope(&right) <= 0.0 {
            return Ok(self.finish(right, 0.0, 0, config));
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut iterations = 0;
        let mut mid = self.at(0.5)?;
        while hi - lo > f64::EPSILON && iterations < config.dual_max_iter {
            let t = 0.5 * (lo + hi);
            mid = self.at(t)?;
            iterations += 1;
            let s = slope(&mid);
            if s == 0.0 {
                break;
            } else if s < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        let gap = slope(&mid).abs() * (hi - lo);
        Ok(self.finish(mid, gap, iterations, config))
    }

    fn projected_gradient(&self, config: &SolverConfig, warm_start: Option<&SimplexWeights>) -> Result<DualResult> {
        let m = self.jacobian.nrows();
        let start = match warm_start {
            Some(w) if w.len() == m => w.values().clone(),
            _ => DVector::from_element(m, 1.0 / m as f64),
        };
        let mut point = self.eval(&start)?;
        let tol = config.dual_tol * point.psi.max(1.0);
        // Lipschitz estimate of ∇ψ, grown on rejection and relaxed after each accepted step.
        let mut lipschitz = point.grad.amax().max(1.0);
        let mut iterations = 0;
        loop {
            let full = project_simplex(&(&point.lambda - &point.grad));
            let residual = (&full - &point.lambda).amax();
            if residual <= tol {
                return Ok(self.finish(point, residual, iterations, config));
            }
            if iterations >= config.dual_max_iter {
                return Err(Error::SubproblemFailure {
                    best: Box::new(self.finish(point, residual, iterations, config)),
                });
            }
            iterations += 1;
            // Backtracking on the gradient: accept once the observed gradient change
            // is consistent with the current estimate. Function values are avoided
            // because their differences drown in roundoff near the solution.
            let next = loop {
                let lambda = project_simplex(&(&point.lambda - &point.grad / lipschitz));
                let delta = &lambda - &point.lambda;
                let candidate = self.eval(&lambda)?;
                let moved = delta.norm();
                let ratio = if moved > 0.0 { (&candidate.grad - &point.grad).norm() / moved } else { 0.0 };
                if ratio <= lipschitz || lipschitz > 1e300 {
                    break candidate;
                }
                lipschitz = (2.0 * ratio).max(2.0 * lipschitz);
            };
            point = next;
            lipschitz *= 0.9;
        }
    }
}

/// Euclidean projection onto the unit simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    v.map(|x| (x - shift).max(0.0))
}
