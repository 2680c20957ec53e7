//! Variable metric maintenance: weighted gradient aggregation and the joint BFGS
//! update of a metric and its inverse.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::types::{symmetrize, BBScales, Jacobian, Metric, Point, SimplexWeights};

/// Relative curvature guard: updates need `⟨s, y⟩ > CURVATURE_TOL·‖s‖·‖y‖`.
pub const CURVATURE_TOL: f64 = 1e-12;

/// Pair residual (per unit dimension) beyond which an update is rejected as a breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-6;

/// `Σ_i (λ_i / α_i) ∇F_i(x)`.
pub fn aggregate_gradient(jacobian: &Jacobian, weights: &SimplexWeights, scales: &BBScales) -> Result<DVector<f64>> {
    let m = jacobian.nrows();
    if weights.len() != m || scales.len() != m {
        return Err(Error::Dimension(format!(
            "{m} gradients, {} weights, {} scales",
            weights.len(),
            scales.len()
        )));
    }
    let coeffs = weights.values().component_div(scales.values());
    Ok(jacobian.tr_mul(&coeffs))
}

/// Outcome of [`bfgs_update`].
#[derive(Debug, Clone)]
pub struct BfgsUpdate {
    pub metric: Metric,
    /// False when the curvature guard fired and the metric was returned unchanged.
    pub accepted: bool,
}

/// Joint BFGS update of `(B, B⁻¹)`:
///
/// ```text
/// B'   = B − (B s sᵀ B)/⟨s, B s⟩ + (y yᵀ)/⟨s, y⟩
/// B'⁻¹ = (I − ρ s yᵀ) B⁻¹ (I − ρ y sᵀ) + ρ s sᵀ,   ρ = 1/⟨s, y⟩
/// ```
///
/// Skipped when `⟨s, y⟩ ≤ CURVATURE_TOL·‖s‖·‖y‖`. Both results are symmetrized.
/// A pair residual above `1e-6·n` (estimated with probe vectors) is reported as
/// [`Error::NumericalBreakdown`].
pub fn bfgs_update(metric: &Metric, s: &Point, y: &DVector<f64>) -> Result<BfgsUpdate> {
    let n = metric.dim();
    if s.len() != n || y.len() != n {
        return Err(Error::Dimension(format!(
            "BFGS pair of lengths {} and {} for a metric of dimension {n}",
            s.len(),
            y.len()
        )));
    }
    if s.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NumericalBreakdown("non-finite BFGS pair".into()));
    }
    let sy = s.dot(y);
    if !(sy > CURVATURE_TOL * s.norm() * y.norm()) {
        return Ok(BfgsUpdate {
            metric: metric.clone(),
            accepted: false,
        });
    }
    let rho = 1.0 / sy;

    let bs = metric.b() * s;
    let sbs = s.dot(&bs);
    let mut b = metric.b().clone();
    b.ger(-1.0 / sbs, &bs, &bs, 1.0);
    b.ger(rho, y, y, 1.0);
    symmetrize(&mut b);

    // Expanded product form of the inverse update.
    let hy = metric.b_inv() * y;
    let yhy = y.dot(&hy);
    let mut h = metric.b_inv().clone();
    h.ger(-rho, s, &hy, 1.0);
    h.ger(-rho, &hy, s, 1.0);
    h.ger(rho * rho * yhy + rho, s, s, 1.0);
    symmetrize(&mut h);

    let updated = Metric::from_pair_unchecked(b, h);
    let ones = DVector::from_element(n, 1.0);
    let residual = updated.pair_error_probe(&[s, y, &ones]);
    if !(residual <= BREAKDOWN_TOL * n as f64) {
        return Err(Error::NumericalBreakdown(format!(
            "metric pair residual {residual:e} after BFGS update"
        )));
    }
    Ok(BfgsUpdate {
        metric: updated,
        accepted: true,
    })
}

/// State of the trade-off metric between iterations.
///
/// `prev_weights`/`prev_scales` are the lagged trade-off weights `λ^{k−1}/α^{k−1}`;
/// `prev_agg_gradient` caches `∇F_{λ^{k−1}/α^{k−1}}(x^k)` at `prev_point = x^k`.
#[derive(Debug, Clone)]
pub struct TradeoffState {
    pub metric: Metric,
    pub prev_weights: SimplexWeights,
    pub prev_scales: BBScales,
    pub prev_point: Point,
    pub prev_agg_gradient: DVector<f64>,
}

impl TradeoffState {
    pub fn new(metric: Metric, weights: SimplexWeights, scales: BBScales, point: Point, jacobian: &Jacobian) -> Result<Self> {
        let prev_agg_gradient = aggregate_gradient(jacobian, &weights, &scales)?;
        Ok(Self {
            metric,
            prev_weights: weights,
            prev_scales: scales,
            prev_point: point,
            prev_agg_gradient,
        })
    }

    /// Replaces the cached trade-off weights, re-aggregating the gradient at the current point.
    pub fn rotate(&mut self, weights: SimplexWeights, scales: BBScales, jacobian: &Jacobian) -> Result<()> {
        self.prev_agg_gradient = aggregate_gradient(jacobian, &weights, &scales)?;
        self.prev_weights = weights;
        self.prev_scales = scales;
        Ok(())
    }
}

/// Advances the trade-off metric to `x_new`.
///
/// `s = x_new − x^k` and `y = ∇F_w(x_new) − ∇F_w(x^k)` with the same lagged weights
/// `w` at both points. Returns the new state and whether the BFGS update was applied.
pub fn update_tradeoff(state: &TradeoffState, x_new: &Point, jacobian_new: &Jacobian) -> Result<(TradeoffState, bool)> {
    let agg_new = aggregate_gradient(jacobian_new, &state.prev_weights, &state.prev_scales)?;
    let s = x_new - &state.prev_point;
    let y = &agg_new - &state.prev_agg_gradient;
    let update = bfgs_update(&state.metric, &s, &y)?;
    Ok((
        TradeoffState {
            metric: update.metric,
            prev_weights: state.prev_weights.clone(),
            prev_scales: state.prev_scales.clone(),
            prev_point: x_new.clone(),
            prev_agg_gradient: agg_new,
        },
        update.accepted,
    ))
}

/// One BFGS approximation per objective Hessian.
#[derive(Debug, Clone)]
pub struct PerObjectiveBfgs {
    pub metrics: Vec<Metric>,
}

impl PerObjectiveBfgs {
    pub fn identity(m: usize, n: usize) -> Self {
        Self {
            metrics: vec![Metric::identity(n); m],
        }
    }

    /// Updates every `B_i` with `y_i = ∇F_i(x^{k+1}) − ∇F_i(x^k)` (row `i` of `y`).
    /// Matrices that break down are reset to the identity; returns the number of resets.
    pub fn update(&mut self, s: &Point, y: &Jacobian) -> Result<usize> {
        if y.nrows() != self.metrics.len() {
            return Err(Error::Dimension(format!(
                "{} gradient differences for {} metrics",
                y.nrows(),
                self.metrics.len()
            )));
        }
        let mut resets = 0;
        for (metric, row) in self.metrics.iter_mut().zip(y.row_iter()) {
            match bfgs_update(metric, s, &row.transpose()) {
                Ok(u) => *metric = u.metric,
                Err(Error::NumericalBreakdown(_)) => {
                    *metric = Metric::identity(s.len());
                    resets += 1;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(resets)
    }
}
