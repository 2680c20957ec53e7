//! Outer iteration drivers for the five methods.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;

use crate::bb_scales::{compute_alpha, compute_alpha_euclidean};
use crate::directions::{direction_from, direction_newton_from, is_critical, scale_gradients};
use crate::dual_solver::{solve_dual, DualResult};
use crate::error::{Error, Result};
use crate::linesearch::armijo;
use crate::metric::{bfgs_update, update_tradeoff, PerObjectiveBfgs, TradeoffState};
use crate::problems::Problem;
use crate::types::{BBScales, IterRecord, Jacobian, Metric, Point, SimplexWeights, SolveTrace, SolverConfig, Status};

/// Multiobjective descent method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Steepest descent.
    Sdmo,
    /// Variable metric with a single BFGS matrix.
    Vmmo,
    /// Barzilai-Borwein scaled steepest descent.
    Bbdmo,
    /// Quasi-Newton with one BFGS matrix per objective.
    Qnmo,
    /// Barzilai-Borwein scales measured in a BFGS trade-off metric.
    BbdmoVm,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Sdmo, Method::Vmmo, Method::Bbdmo, Method::Qnmo, Method::BbdmoVm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sdmo => "sdmo",
            Method::Vmmo => "vmmo",
            Method::Bbdmo => "bbdmo",
            Method::Qnmo => "qnmo",
            Method::BbdmoVm => "bbdmo_vm",
        }
    }

    fn uses_bb_scales(&self) -> bool {
        matches!(self, Method::Bbdmo | Method::BbdmoVm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Per-run metric state.
enum MethodState {
    Plain,
    Single(Metric),
    Tradeoff { metric: Metric, state: Option<TradeoffState> },
    PerObjective(PerObjectiveBfgs),
}

impl MethodState {
    fn new(method: Method, m: usize, n: usize) -> Self {
        match method {
            Method::Sdmo | Method::Bbdmo => MethodState::Plain,
            Method::Vmmo => MethodState::Single(Metric::identity(n)),
            Method::BbdmoVm => MethodState::Tradeoff {
                metric: Metric::identity(n),
                state: None,
            },
            Method::Qnmo => MethodState::PerObjective(PerObjectiveBfgs::identity(m, n)),
        }
    }
}

/// Runs `method` from `x0` until `‖d‖ ≤ tol`, the iteration budget is spent, or a
/// line search or subproblem fails. Failures inside the loop end up in the trace
/// status; only invalid inputs are returned as errors.
pub fn run(method: Method, problem: &Problem, x0: &Point, config: &SolverConfig) -> Result<SolveTrace> {
    config.validate()?;
    let (m, n) = (problem.m(), problem.n());
    if x0.len() != n {
        return Err(Error::Dimension(format!("x0 has length {}, problem has n = {n}", x0.len())));
    }
    let start = Instant::now();

    let mut x = x0.clone();
    let mut f = problem.eval_objectives(&x)?;
    let mut jac = problem.eval_jacobian(&x)?;
    let mut jacobian_evals = 1;
    let mut metric_resets = 0;
    let mut fevals = 0;
    let mut records = Vec::new();

    // Bootstrap pair (x⁻¹, JF(x⁻¹)) for the first Barzilai-Borwein scales.
    let (mut x_prev, mut jac_prev) = if method.uses_bb_scales() {
        let offset = config.warmstart_eps / (n as f64).sqrt();
        let xm = x.add_scalar(-offset);
        let jm = problem.eval_jacobian(&xm)?;
        jacobian_evals += 1;
        (xm, jm)
    } else {
        (x.clone(), jac.clone())
    };

    let mut state = MethodState::new(method, m, n);
    let mut warm: Option<SimplexWeights> = None;
    let identity = Metric::identity(n);
    let mut k = 0;

    let status = loop {
        let scales = match (&state, method) {
            (_, Method::Bbdmo) => compute_alpha_euclidean(&(&x - &x_prev), &(&jac - &jac_prev), config.alpha_min, config.alpha_max)?,
            (MethodState::Tradeoff { metric, .. }, _) => {
                compute_alpha(&(&x - &x_prev), &(&jac - &jac_prev), metric, config.alpha_min, config.alpha_max)?
            }
            _ => BBScales::ones(m),
        };

        let solved = match &state {
            MethodState::Plain => direction_from(&jac, &scales, &identity, config, warm.as_ref()),
            MethodState::Single(metric) | MethodState::Tradeoff { metric, .. } => {
                direction_from(&jac, &scales, metric, config, warm.as_ref())
            }
            MethodState::PerObjective(bfgs) => {
                let hessians: Vec<_> = bfgs.metrics.iter().map(|b| b.b().clone()).collect();
                direction_newton_from(&jac, &hessians, config, warm.as_ref())
            }
        };
        let dual = match solved {
            Ok(dual) => dual,
            Err(Error::SubproblemFailure { best }) => {
                records.push(record(&x, &f, &best, &state, None, None, fevals, scales));
                break Status::SubproblemFailure;
            }
            Err(e) => return Err(e),
        };

        if is_critical(&dual, config.tol) {
            records.push(record(&x, &f, &dual, &state, None, None, fevals, scales));
            break Status::Converged;
        }
        if k >= config.max_iter {
            records.push(record(&x, &f, &dual, &state, None, None, fevals, scales));
            break Status::MaxIterations;
        }

        let d = &dual.direction;
        let slopes = &jac * d;
        let accepted = match armijo(problem, &x, &f, d, &slopes, config) {
            Ok(step) => step,
            Err(Error::LineSearchFailure { fevals: spent, .. }) => {
                fevals += spent;
                records.push(record(&x, &f, &dual, &state, Some(slopes), None, fevals, scales));
                break Status::LineSearchFailure;
            }
            Err(Error::NotDescentDirection { .. }) => {
                records.push(record(&x, &f, &dual, &state, Some(slopes), None, fevals, scales));
                break Status::LineSearchFailure;
            }
            Err(e) => return Err(e),
        };
        fevals += accepted.fevals;
        let x_new = &x + d * accepted.step;
        let jac_new = problem.eval_jacobian(&x_new)?;
        jacobian_evals += 1;
        records.push(record(&x, &f, &dual, &state, Some(slopes), Some(accepted.step), fevals, scales.clone()));

        match &mut state {
            MethodState::Plain => {}
            MethodState::Single(metric) => {
                let y = (&jac_new - &jac).tr_mul(dual.weights.values());
                metric_resets += apply_bfgs(metric, &(&x_new - &x), &y)?;
            }
            MethodState::PerObjective(bfgs) => {
                metric_resets += bfgs.update(&(&x_new - &x), &(&jac_new - &jac))?;
            }
            MethodState::Tradeoff { metric, state } => {
                // Without earlier weights the first update uses the current ones.
                let current = match state.take() {
                    Some(s) => s,
                    None => TradeoffState::new(metric.clone(), dual.weights.clone(), scales.clone(), x.clone(), &jac)?,
                };
                let mut next = match update_tradeoff(&current, &x_new, &jac_new) {
                    Ok((next, _)) => next,
                    Err(Error::NumericalBreakdown(_)) => {
                        metric_resets += 1;
                        TradeoffState::new(identity.clone(), current.prev_weights, current.prev_scales, x_new.clone(), &jac_new)?
                    }
                    Err(e) => return Err(e),
                };
                next.rotate(dual.weights.clone(), scales, &jac_new)?;
                *metric = next.metric.clone();
                *state = Some(next);
            }
        }

        x_prev = std::mem::replace(&mut x, x_new);
        jac_prev = std::mem::replace(&mut jac, jac_new);
        f = accepted.values;
        warm = Some(dual.weights);
        k += 1;
    };

    Ok(SolveTrace {
        records,
        status,
        wall_time: start.elapsed(),
        jacobian_evals,
        metric_resets,
    })
}

fn apply_bfgs(metric: &mut Metric, s: &Point, y: &DVector<f64>) -> Result<usize> {
    match bfgs_update(metric, s, y) {
        Ok(update) => {
            *metric = update.metric;
            Ok(0)
        }
        Err(Error::NumericalBreakdown(_)) => {
            *metric = Metric::identity(s.len());
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    x: &Point,
    f: &DVector<f64>,
    dual: &DualResult,
    state: &MethodState,
    slopes: Option<DVector<f64>>,
    step: Option<f64>,
    fevals: usize,
    scales: BBScales,
) -> IterRecord {
    let d = &dual.direction;
    let direction_metric_norm_sq = match state {
        MethodState::Plain => d.norm_squared(),
        MethodState::Single(metric) | MethodState::Tradeoff { metric, .. } => metric.norm_sq(d),
        MethodState::PerObjective(bfgs) => bfgs
            .metrics
            .iter()
            .zip(dual.weights.values().iter())
            .map(|(b, l)| l * b.norm_sq(d))
            .sum(),
    };
    IterRecord {
        point: x.clone(),
        values: f.clone(),
        direction_norm: d.norm(),
        direction_metric_norm_sq,
        theta: dual.theta,
        slopes,
        step,
        fevals,
        weights: dual.weights.clone(),
        scales,
    }
}

/// Tests whether `0` is within `tol` of the convex hull of the gradients at `x`.
/// Returns the outcome and the weights of the minimum-norm combination.
pub fn verify_pareto_critical(problem: &Problem, x: &Point, tol: f64) -> Result<(bool, SimplexWeights)> {
    let jac = problem.eval_jacobian(x)?;
    // Gradients are large near a critical point while their best combination is
    // tiny, so the default relative gap tolerance is far too coarse here.
    let config = SolverConfig {
        dual_tol: 1e-16,
        dual_max_iter: 100_000,
        ..SolverConfig::default()
    };
    let result = match solve_dual(&jac, &Metric::identity(problem.n()), &config) {
        Ok(r) => r,
        Err(Error::SubproblemFailure { best }) => *best,
        Err(e) => return Err(e),
    };
    let combination = jac.tr_mul(result.weights.values());
    Ok((combination.norm() <= tol, result.weights))
}

/// The merit value `w_ℓ(x) = −min_d max_i ⟨∇F_i, d⟩/α_i + (ℓ/2)‖d‖²_B`.
/// Nonnegative, and zero exactly at critical points.
pub fn merit_w(jacobian: &Jacobian, scales: &BBScales, metric: &Metric, ell: f64, config: &SolverConfig) -> Result<f64> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::Config(format!("merit parameter must be positive, got {ell}")));
    }
    let g = scale_gradients(jacobian, scales)?;
    let result = solve_dual(&g, &metric.scaled(ell), config)?;
    Ok(-result.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::bk1;
    use nalgebra::dvector;

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("BBDMO-VM".parse::<Method>().unwrap(), Method::BbdmoVm);
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn bk1_far_point_is_not_critical() {
        let (ok, _) = verify_pareto_critical(&bk1(), &dvector![10.0, 10.0], 1e-4).unwrap();
        assert!(!ok);
        let (ok, w) = verify_pareto_critical(&bk1(), &dvector![0.0, 0.0], 1e-4).unwrap();
        assert!(ok);
        assert!(w.values()[0] > 0.999);
    }

    #[test]
    fn rejects_bad_start() {
        assert!(matches!(
            run(Method::Sdmo, &bk1(), &dvector![1.0], &SolverConfig::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn merit_needs_positive_ell() {
        let jac = nalgebra::dmatrix![1.0, 0.0];
        assert!(merit_w(&jac, &BBScales::ones(1), &Metric::identity(2), 0.0, &SolverConfig::default()).is_err());
        let w = merit_w(&jac, &BBScales::ones(1), &Metric::identity(2), 1.0, &SolverConfig::default()).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
    }
}
