//! Shared numeric types, solver configuration and run traces.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A point in decision space, `x ∈ Rⁿ`.
pub type Point = DVector<f64>;

/// Objective values `F(x) ∈ Rᵐ`.
pub type ObjectiveValues = DVector<f64>;

/// Jacobian `JF(x)`, an `m × n` matrix whose row `i` is `∇F_i(x)`.
pub type Jacobian = DMatrix<f64>;

/// Tolerance on `‖B·B⁻¹ − I‖_∞` per unit of dimension.
pub const PAIR_TOLERANCE: f64 = 1e-8;

/// A symmetric positive definite matrix `B` kept together with its inverse.
///
/// Both matrices are stored densely and updated jointly, so applying `B⁻¹`
/// never requires a factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    b: DMatrix<f64>,
    b_inv: DMatrix<f64>,
}

impl Metric {
    pub fn identity(n: usize) -> Self {
        Self {
            b: DMatrix::identity(n, n),
            b_inv: DMatrix::identity(n, n),
        }
    }

    /// Builds a metric from an explicit pair, checking SPD and pair consistency.
    pub fn from_pair(b: DMatrix<f64>, b_inv: DMatrix<f64>) -> Result<Self> {
        let n = b.nrows();
        if b.shape() != (n, n) || b_inv.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "metric pair has shapes {:?} and {:?}",
                b.shape(),
                b_inv.shape()
            )));
        }
        if !check_spd(&b, 1e-12)? || !check_spd(&b_inv, 1e-12)? {
            return Err(Error::Config("metric pair is not symmetric positive definite".into()));
        }
        let metric = Self { b, b_inv };
        let err = metric.pair_error();
        if err > PAIR_TOLERANCE * n.max(1) as f64 {
            return Err(Error::NumericalBreakdown(format!(
                "metric pair inconsistent: ‖B·B⁻¹ − I‖∞ = {err:e}"
            )));
        }
        Ok(metric)
    }

    /// Builds a metric from an SPD matrix, inverting it through a Cholesky factorization.
    pub fn from_spd(b: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::Dimension(format!("metric must be square, got {:?}", b.shape())));
        }
        let chol = b
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Config("metric is not positive definite".into()))?;
        let mut b_inv = chol.inverse();
        symmetrize(&mut b_inv);
        Self::from_pair(b, b_inv)
    }

    pub(crate) fn from_pair_unchecked(b: DMatrix<f64>, b_inv: DMatrix<f64>) -> Self {
        Self { b, b_inv }
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn b_inv(&self) -> &DMatrix<f64> {
        &self.b_inv
    }

    /// The metric `c·B` (with inverse `B⁻¹/c`).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            b: &self.b * c,
            b_inv: &self.b_inv / c,
        }
    }

    /// `‖v‖²_B = ⟨v, B v⟩`.
    pub fn norm_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.b * v))
    }

    /// `‖v‖²_{B⁻¹}`.
    pub fn inv_norm_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.b_inv * v))
    }

    /// Exact pair residual `‖B·B⁻¹ − I‖_∞` (max absolute row sum). Costs a full matrix product.
    pub fn pair_error(&self) -> f64 {
        let mut prod = &self.b * &self.b_inv;
        for i in 0..prod.nrows() {
            prod[(i, i)] -= 1.0;
        }
        inf_norm(&prod)
    }

    /// Cheap estimate of the pair residual from a handful of probe vectors:
    /// `max_p ‖B(B⁻¹p) − p‖_∞ / ‖p‖_∞`.
    pub fn pair_error_probe(&self, probes: &[&DVector<f64>]) -> f64 {
        probes
            .iter()
            .filter_map(|p| {
                let scale = p.amax();
                if scale == 0.0 || !scale.is_finite() {
                    return None;
                }
                let back = &self.b * (&self.b_inv * *p);
                Some((back - *p).amax() / scale)
            })
            .fold(0.0, f64::max)
    }

    /// Smallest and largest eigenvalues of `B`. Diagnostic only (O(n³)).
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let eig = self.b.clone().symmetric_eigen();
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Dual weights `λ ∈ Δ_m` of a direction subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    lambda: DVector<f64>,
    active_tol: f64,
}

impl SimplexWeights {
    pub const SUM_TOLERANCE: f64 = 1e-10;

    pub fn new(lambda: DVector<f64>, active_tol: f64) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Dimension("simplex weights need at least one entry".into()));
        }
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config(format!("simplex weights must be nonnegative: {lambda:?}")));
        }
        let sum = lambda.sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Config(format!("simplex weights sum to {sum}, expected 1")));
        }
        let weights = Self { lambda, active_tol };
        if weights.active_set().is_empty() {
            return Err(Error::Config("simplex weights have an empty active set".into()));
        }
        Ok(weights)
    }

    pub fn uniform(m: usize, active_tol: f64) -> Self {
        Self {
            lambda: DVector::from_element(m, 1.0 / m as f64),
            active_tol,
        }
    }

    /// Clips tiny negatives and renormalizes. Used by the inner solvers.
    pub(crate) fn from_raw(mut lambda: DVector<f64>, active_tol: f64) -> Self {
        lambda.iter_mut().for_each(|l| *l = l.max(0.0));
        let sum = lambda.sum();
        if sum > 0.0 {
            lambda /= sum;
        } else {
            lambda.fill(1.0 / lambda.len() as f64);
        }
        Self { lambda, active_tol }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn active_tol(&self) -> f64 {
        self.active_tol
    }

    /// Indices `i` with `λ_i > active_tol`.
    pub fn active_set(&self) -> Vec<usize> {
        self.lambda
            .iter()
            .enumerate()
            .filter(|(_, l)| **l > self.active_tol)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Per-objective Barzilai-Borwein scales `α ∈ [α_min, α_max]ᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BBScales {
    alpha: DVector<f64>,
}

impl BBScales {
    pub fn new(alpha: DVector<f64>, alpha_min: f64, alpha_max: f64) -> Result<Self> {
        if let Some(a) = alpha.iter().find(|a| !(alpha_min..=alpha_max).contains(*a)) {
            return Err(Error::Config(format!(
                "scale {a} outside [{alpha_min}, {alpha_max}]"
            )));
        }
        Ok(Self { alpha })
    }

    /// All scales equal to one: the unscaled subproblem.
    pub fn ones(m: usize) -> Self {
        Self {
            alpha: DVector::from_element(m, 1.0),
        }
    }

    pub(crate) fn from_clamped(alpha: DVector<f64>) -> Self {
        Self { alpha }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// Solver parameters. `Default` gives sigma=1e-4, gamma=0.5, alpha in [1e-3, 1e3],
/// tol=1e-6 and max_iter=500.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Armijo slope fraction.
    pub sigma: f64,
    /// Backtracking factor.
    pub gamma: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Stop once `‖d‖ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Frank-Wolfe gap tolerance, relative to `max(1, φ(λ₀))`.
    pub dual_tol: f64,
    pub dual_max_iter: usize,
    pub active_tol: f64,
    /// Offset of the bootstrap point `x⁻¹` from `x⁰`.
    pub warmstart_eps: f64,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 1e-4,
            gamma: 0.5,
            alpha_min: 1e-3,
            alpha_max: 1e3,
            tol: 1e-6,
            max_iter: 500,
            dual_tol: 1e-10,
            dual_max_iter: 10_000,
            active_tol: 1e-8,
            warmstart_eps: 1e-4,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.sigma) {
            return Err(Error::Config(format!("sigma must lie in (0, 1), got {}", self.sigma)));
        }
        if !open_unit(self.gamma) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.alpha_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < alpha_min < alpha_max, got [{}, {}]",
                self.alpha_min, self.alpha_max
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.dual_tol > 0.0) || self.dual_max_iter == 0 {
            return Err(Error::Config("dual solver needs a positive tolerance and iteration budget".into()));
        }
        if !(self.active_tol >= 0.0) || !(self.warmstart_eps > 0.0) {
            return Err(Error::Config("active_tol must be >= 0 and warmstart_eps > 0".into()));
        }
        Ok(())
    }
}

/// Terminal status of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchFailure,
    SubproblemFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::LineSearchFailure => "line_search_failure",
            Status::SubproblemFailure => "subproblem_failure",
        }
    }
}

impl Status {
    pub const ALL: [Status; 4] = [
        Status::Converged,
        Status::MaxIterations,
        Status::LineSearchFailure,
        Status::SubproblemFailure,
    ];
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Status::ALL
            .into_iter()
            .find(|st| st.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown status `{s}`")))
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One outer iteration at the point `x^k`.
///
/// The final record of a run carries the terminal point; its `step` and `slopes`
/// are `None` unless a line search was attempted there.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub point: Point,
    pub values: ObjectiveValues,
    /// `‖d^k‖` (Euclidean).
    pub direction_norm: f64,
    /// `‖d^k‖²` in the metric of the subproblem.
    pub direction_metric_norm_sq: f64,
    /// Optimal value of the direction subproblem.
    pub theta: f64,
    /// `⟨∇F_i(x^k), d^k⟩` per objective.
    pub slopes: Option<DVector<f64>>,
    /// Accepted Armijo step `t_k`.
    pub step: Option<f64>,
    /// Cumulative line-search function evaluations after this iteration.
    pub fevals: usize,
    pub weights: SimplexWeights,
    pub scales: BBScales,
}

/// Full record of a solver run.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub records: Vec<IterRecord>,
    pub status: Status,
    pub wall_time: Duration,
    /// Jacobian evaluations, including the bootstrap evaluation at `x⁻¹`.
    pub jacobian_evals: usize,
    /// Number of times a metric was reset to the identity after a breakdown.
    pub metric_resets: usize,
}

impl SolveTrace {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.step.is_some()).count()
    }

    pub fn fevals(&self) -> usize {
        self.records.last().map_or(0, |r| r.fevals)
    }

    pub fn final_record(&self) -> &IterRecord {
        self.records.last().expect("a trace always holds the terminal record")
    }

    pub fn final_point(&self) -> &Point {
        &self.final_record().point
    }

    pub fn final_values(&self) -> &ObjectiveValues {
        &self.final_record().values
    }
}

/// True iff `matrix` is symmetric within `tol` and every pivot of its
/// `LDLᵀ` factorization exceeds `tol`.
pub fn check_spd(matrix: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Dimension(format!("expected a square matrix, got {:?}", matrix.shape())));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Ok(false);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > tol {
                return Ok(false);
            }
        }
    }
    // Unpivoted LDLᵀ on the lower triangle.
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = matrix[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > tol) {
            return Ok(false);
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = matrix[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    Ok(true)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Max absolute row sum.
pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
