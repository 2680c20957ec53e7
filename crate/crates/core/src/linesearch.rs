//! Vector-valued Armijo backtracking.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::types::{ObjectiveValues, Point, SolverConfig};

/// An accepted Armijo step.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoStep {
    /// Accepted step `t = γʲ`.
    pub step: f64,
    /// Objective evaluations performed, the accepted trial included.
    pub fevals: usize,
    /// `F(x + t d)`.
    pub values: ObjectiveValues,
}

/// Finds the largest `t ∈ {1, γ, γ², …}` with `F(x + t d) − F(x) ⪯ t σ slopes`.
///
/// `slopes[i] = ⟨∇F_i(x), d⟩` must be negative for every `i`.
pub fn armijo(
    problem: &Problem,
    x: &Point,
    f_x: &ObjectiveValues,
    d: &Point,
    slopes: &DVector<f64>,
    config: &SolverConfig,
) -> Result<ArmijoStep> {
    if slopes.len() != f_x.len() || d.len() != x.len() {
        return Err(Error::Dimension(format!(
            "{} slopes for {} objectives, direction of length {} at a point of length {}",
            slopes.len(),
            f_x.len(),
            d.len(),
            x.len()
        )));
    }
    if let Some((index, &slope)) = slopes.iter().enumerate().find(|(_, s)| !(**s < 0.0)) {
        return Err(Error::NotDescentDirection { index, slope });
    }

    let mut t = 1.0;
    let mut fevals = 0;
    for _ in 0..=config.max_backtracks {
        let trial = x + d * t;
        let values = problem.eval_objectives(&trial)?;
        fevals += 1;
        if satisfies_armijo(f_x, &values, slopes, t, config.sigma) {
            return Ok(ArmijoStep { step: t, fevals, values });
        }
        t *= config.gamma;
    }
    Err(Error::LineSearchFailure {
        step: t / config.gamma,
        fevals,
    })
}

/// `F_new − F_x ⪯ t σ slopes`, componentwise.
pub fn satisfies_armijo(f_x: &ObjectiveValues, f_new: &ObjectiveValues, slopes: &DVector<f64>, t: f64, sigma: f64) -> bool {
    f_x.iter()
        .zip(f_new.iter())
        .zip(slopes.iter())
        .all(|((f0, f1), s)| f1 - f0 <= t * sigma * s)
}
