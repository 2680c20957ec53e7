//! Per-objective Barzilai-Borwein scales, measured relative to a metric.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::types::{BBScales, Jacobian, Metric, Point};

/// Relative threshold below which `⟨s, y_i⟩` is treated as zero.
pub const ZERO_CURVATURE_TOL: f64 = 1e-14;

/// Scales `α_i` from the secant pair `(s, y_i)` relative to `‖·‖_B`:
///
/// * `⟨s, y_i⟩ > 0`: `⟨s, y_i⟩ / ‖s‖²_B`
/// * `⟨s, y_i⟩ < 0`: `‖y_i‖ / ‖B s‖`
/// * `⟨s, y_i⟩ = 0`: `α_min`
///
/// each clamped to `[α_min, α_max]`. Row `i` of `y_prev` is `∇F_i(x^k) − ∇F_i(x^{k−1})`.
pub fn compute_alpha(
    s_prev: &Point,
    y_prev: &Jacobian,
    metric: &Metric,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<BBScales> {
    if metric.dim() != s_prev.len() {
        return Err(Error::Dimension(format!(
            "step of length {} against a metric of dimension {}",
            s_prev.len(),
            metric.dim()
        )));
    }
    let bs = metric.b() * s_prev;
    let s_norm_b_sq = s_prev.dot(&bs);
    let bs_norm = bs.norm();
    scales(s_prev, y_prev, s_norm_b_sq, bs_norm, alpha_min, alpha_max)
}

/// `compute_alpha` with `B = I`.
pub fn compute_alpha_euclidean(
    s_prev: &Point,
    y_prev: &Jacobian,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<BBScales> {
    let s_sq = s_prev.norm_squared();
    scales(s_prev, y_prev, s_sq, s_sq.sqrt(), alpha_min, alpha_max)
}

fn scales(
    s: &Point,
    y: &Jacobian,
    s_norm_b_sq: f64,
    bs_norm: f64,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<BBScales> {
    if y.ncols() != s.len() {
        return Err(Error::Dimension(format!(
            "gradient differences have {} columns, step has length {}",
            y.ncols(),
            s.len()
        )));
    }
    let s_norm = s.norm();
    if s_norm == 0.0 {
        return Err(Error::Config("Barzilai-Borwein scales need a nonzero step".into()));
    }
    let alpha = DVector::from_iterator(
        y.nrows(),
        y.row_iter().map(|row| {
            let sy = row.transpose().dot(s);
            let y_norm = row.norm();
            let raw = if y_norm == 0.0 || sy.abs() <= ZERO_CURVATURE_TOL * s_norm * y_norm {
                alpha_min
            } else if sy > 0.0 {
                sy / s_norm_b_sq
            } else {
                y_norm / bs_norm
            };
            raw.clamp(alpha_min, alpha_max)
        }),
    );
    Ok(BBScales::from_clamped(alpha))
}
