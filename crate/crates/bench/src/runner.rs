use mogd_core::problems::sample_initial;
use mogd_core::{run, Method, Problem, ProblemRegistry, SolveTrace, SolverConfig};
use rayon::prelude::*;

use crate::error::{BenchError, Result};
use crate::records::RunRecord;
use crate::seeds::{fresh_instance_seed, instance_seed, run_seed};

/// What to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub problems: Vec<String>,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub master_seed: u64,
    pub config: SolverConfig,
    /// Draw a new random instance for every run instead of one per problem.
    pub fresh_instance_per_run: bool,
}

impl Plan {
    pub fn new(problems: Vec<String>, methods: Vec<Method>, runs: usize, master_seed: u64) -> Self {
        Self {
            problems,
            methods,
            runs,
            master_seed,
            config: SolverConfig::default(),
            fresh_instance_per_run: false,
        }
    }

    fn validate(&self, registry: &ProblemRegistry) -> Result<()> {
        if self.problems.is_empty() || self.methods.is_empty() || self.runs == 0 {
            return Err(BenchError::Config("need at least one problem, one method and one run".into()));
        }
        for name in &self.problems {
            registry.get(name)?;
        }
        self.config.validate()?;
        Ok(())
    }
}

/// Runs every method on every (problem, run index) pair.
///
/// The initial point of a run depends only on the master seed, the problem name and
/// the run index. Random instances are shared per problem unless
/// `fresh_instance_per_run` is set. Work is spread over the current rayon pool;
/// records come back sorted by (problem, method, run index).
pub fn run_benchmark(registry: &ProblemRegistry, plan: &Plan) -> Result<Vec<RunRecord>> {
    Ok(run_benchmark_with(registry, plan, |_, _| ())?.into_iter().map(|(r, _)| r).collect())
}

/// [`run_benchmark`] that also hands every trace, with its problem instance, to
/// `inspect` and keeps what it returns next to the record.
pub fn run_benchmark_with<T, F>(registry: &ProblemRegistry, plan: &Plan, inspect: F) -> Result<Vec<(RunRecord, T)>>
where
    T: Send,
    F: Fn(&Problem, &SolveTrace) -> T + Sync,
{
    plan.validate(registry)?;

    let mut shared = Vec::with_capacity(plan.problems.len());
    for name in &plan.problems {
        let entry = registry.get(name)?;
        let instance = if entry.is_random() && plan.fresh_instance_per_run {
            None
        } else {
            Some(entry.instantiate(instance_seed(plan.master_seed, name))?)
        };
        shared.push(instance);
    }

    let tasks: Vec<(usize, usize)> = (0..plan.problems.len())
        .flat_map(|p| (0..plan.runs).map(move |r| (p, r)))
        .collect();
    let nested: Vec<Vec<(RunRecord, T)>> = tasks
        .into_par_iter()
        .map(|(p, run_index)| {
            let name = &plan.problems[p];
            let fresh;
            let problem: &Problem = match &shared[p] {
                Some(problem) => problem,
                None => {
                    fresh = registry.instantiate(name, fresh_instance_seed(plan.master_seed, name, run_index))?;
                    &fresh
                }
            };
            let x0 = sample_initial(problem, run_seed(plan.master_seed, name, run_index))?;
            plan.methods
                .iter()
                .map(|&method| {
                    let trace = run(method, problem, &x0, &plan.config)?;
                    let record = RunRecord {
                        problem: name.clone(),
                        method: method.to_string(),
                        run_index,
                        iterations: trace.iterations(),
                        fevals: trace.fevals(),
                        time_ms: trace.wall_time.as_secs_f64() * 1e3,
                        status: trace.status,
                        final_values: trace.final_values().clone(),
                        final_point: trace.final_point().clone(),
                        initial_point: x0.clone(),
                    };
                    Ok((record, inspect(problem, &trace)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<(RunRecord, T)> = nested.into_iter().flatten().collect();
    records.sort_by(|(a, _), (b, _)| (&a.problem, &a.method, a.run_index).cmp(&(&b.problem, &b.method, b.run_index)));
    Ok(records)
}

/// Expands a comma-separated list where `QPa..QPd` stands for `QPa,QPb,QPc,QPd`.
/// Range endpoints must share everything but their last character.
pub fn expand_names(list: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((lo, hi)) = item.split_once("..") else {
            out.push(item.to_string());
            continue;
        };
        let bad = || BenchError::Config(format!("cannot expand range `{item}`"));
        let (lo_stem, lo_last) = split_last(lo).ok_or_else(bad)?;
        let (hi_stem, hi_last) = split_last(hi).ok_or_else(bad)?;
        if lo_stem != hi_stem || lo_last > hi_last {
            return Err(bad());
        }
        out.extend((lo_last..=hi_last).map(|c| format!("{lo_stem}{c}")));
    }
    if out.is_empty() {
        return Err(BenchError::Config("empty problem list".into()));
    }
    Ok(out)
}

fn split_last(s: &str) -> Option<(&str, char)> {
    let c = s.chars().last()?;
    Some((&s[..s.len() - c.len_utf8()], c))
}

/// Parses a comma-separated method list such as `sdmo,bbdmo_vm`.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let methods = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Method>().map_err(BenchError::from))
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(BenchError::Config("empty method list".into()));
    }
    Ok(methods)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_expand() {
        assert_eq!(expand_names("BK1,QPa..QPc").unwrap(), ["BK1", "QPa", "QPb", "QPc"]);
        assert_eq!(expand_names("JOS1a..JOS1a").unwrap(), ["JOS1a"]);
        assert!(expand_names("QPc..QPa").is_err());
        assert!(expand_names("QPa..JOS1d").is_err());
        assert!(expand_names(" , ").is_err());
    }

    #[test]
    fn methods_parse() {
        assert_eq!(parse_methods("sdmo, BBDMO_VM").unwrap(), [Method::Sdmo, Method::BbdmoVm]);
        assert!(parse_methods("sdmo,newton").is_err());
    }
}
