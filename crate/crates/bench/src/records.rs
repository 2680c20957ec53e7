use std::collections::BTreeMap;

use mogd_core::{ObjectiveValues, Point, Status};

use crate::error::{BenchError, Result};

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub method: String,
    pub run_index: usize,
    /// Accepted steps.
    pub iterations: usize,
    /// Line-search objective evaluations.
    pub fevals: usize,
    /// Wall time of the solver call alone.
    pub time_ms: f64,
    pub status: Status,
    pub final_values: ObjectiveValues,
    /// Not part of the CSV schema; empty for parsed records.
    pub final_point: Point,
    /// Not part of the CSV schema; empty for parsed records.
    pub initial_point: Point,
}

/// Per (problem, method) means over all runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub problem: String,
    pub method: String,
    pub mean_iter: f64,
    pub mean_feval: f64,
    pub mean_time_ms: f64,
    pub converged_fraction: f64,
}

/// Groups records by (problem, method), sorted by key.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<Summary>> {
    if records.is_empty() {
        return Err(BenchError::Config("cannot summarize an empty record set".into()));
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.problem, &r.method)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((problem, method), runs)| {
            let count = runs.len() as f64;
            // Sum in run order so the means do not depend on input order.
            let mut runs = runs;
            runs.sort_by_key(|r| r.run_index);
            let mean = |f: &dyn Fn(&RunRecord) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / count;
            Summary {
                problem: problem.to_string(),
                method: method.to_string(),
                mean_iter: mean(&|r| r.iterations as f64),
                mean_feval: mean(&|r| r.fevals as f64),
                mean_time_ms: mean(&|r| r.time_ms),
                converged_fraction: mean(&|r| (r.status == Status::Converged) as u8 as f64),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn record(problem: &str, method: &str, run_index: usize, iterations: usize, fevals: usize, status: Status) -> RunRecord {
        RunRecord {
            problem: problem.into(),
            method: method.into(),
            run_index,
            iterations,
            fevals,
            time_ms: 1.0,
            status,
            final_values: DVector::from_vec(vec![0.0, 1.0]),
            final_point: DVector::zeros(2),
            initial_point: DVector::zeros(2),
        }
    }

    #[test]
    fn single_record() {
        let s = summarize(&[record("BK1", "bbdmo", 0, 5, 7, Status::Converged)]).unwrap();
        assert_eq!((s[0].mean_iter, s[0].mean_feval, s[0].converged_fraction), (5.0, 7.0, 1.0));
    }

    #[test]
    fn means_and_fractions() {
        let recs = [
            record("BK1", "bbdmo", 0, 1, 1, Status::Converged),
            record("BK1", "bbdmo", 1, 3, 4, Status::MaxIterations),
            record("BK1", "sdmo", 0, 2, 2, Status::LineSearchFailure),
        ];
        let s = summarize(&recs).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].method.as_str(), s[0].mean_iter, s[0].converged_fraction), ("bbdmo", 2.0, 0.5));
        assert_eq!((s[1].method.as_str(), s[1].converged_fraction), ("sdmo", 0.0));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[]).is_err());
    }
}
