//! Problem abstraction, built-in benchmark problems, the random ill-conditioned
//! quadratic generator, initial-point sampling and the problem registry.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Jacobian, ObjectiveValues, Point};

/// Evaluators for a vector objective `F: Rⁿ → Rᵐ`.
///
/// Implementations must be deterministic and re-entrant: the benchmark harness
/// calls them concurrently from several runs.
pub trait Objectives: Send + Sync + fmt::Debug {
    fn num_vars(&self) -> usize;
    fn num_objectives(&self) -> usize;
    fn values(&self, x: &Point) -> ObjectiveValues;
    /// Row `i` is `∇F_i(x)`.
    fn jacobian(&self, x: &Point) -> Jacobian;
    fn hessians(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        None
    }
    /// Serializable description, if this objective family has one.
    fn describe(&self) -> Option<ProblemKind> {
        None
    }
}

/// A named multiobjective problem with a sampling box.
#[derive(Clone)]
pub struct Problem {
    name: String,
    lower: Point,
    upper: Point,
    objectives: Arc<dyn Objectives>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("m", &self.m())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        lower: Point,
        upper: Point,
        objectives: impl Objectives + 'static,
    ) -> Result<Self> {
        let n = objectives.num_vars();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Dimension(format!(
                "bounds have lengths {} and {}, problem has n = {n}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::Config("lower bound exceeds upper bound".into()));
        }
        Ok(Self {
            name: name.into(),
            lower,
            upper,
            objectives: Arc::new(objectives),
        })
    }

    /// Same objectives under a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.objectives.num_vars()
    }

    pub fn m(&self) -> usize {
        self.objectives.num_objectives()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    /// True when both handles share the same evaluator instance.
    pub fn same_as(&self, other: &Problem) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.objectives, &other.objectives)
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::Dimension(format!(
                "point has length {}, problem `{}` has n = {}",
                x.len(),
                self.name,
                self.n()
            )));
        }
        Ok(())
    }

    pub fn eval_objectives(&self, x: &Point) -> Result<ObjectiveValues> {
        self.check_point(x)?;
        Ok(self.objectives.values(x))
    }

    pub fn eval_jacobian(&self, x: &Point) -> Result<Jacobian> {
        self.check_point(x)?;
        Ok(self.objectives.jacobian(x))
    }

    pub fn eval_hessians(&self, x: &Point) -> Result<Option<Vec<DMatrix<f64>>>> {
        self.check_point(x)?;
        Ok(self.objectives.hessians(x))
    }

    pub fn to_document(&self) -> Result<ProblemDocument> {
        let kind = self.objectives.describe().ok_or_else(|| {
            Error::Format(format!("problem `{}` has no serializable form", self.name))
        })?;
        Ok(ProblemDocument {
            name: self.name.clone(),
            n: self.n(),
            m: self.m(),
            lower: self.lower.iter().copied().collect(),
            upper: self.upper.iter().copied().collect(),
            kind,
        })
    }
}

/// `F₁ = x₁² + x₂²`, `F₂ = (x₁ − 5)² + (x₂ − 5)²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bk1;

impl Objectives for Bk1 {
    fn num_vars(&self) -> usize {
        2
    }
    fn num_objectives(&self) -> usize {
        2
    }
    fn values(&self, x: &Point) -> ObjectiveValues {
        let (a, b) = (x[0], x[1]);
        DVector::from_vec(vec![a * a + b * b, (a - 5.0).powi(2) + (b - 5.0).powi(2)])
    }
    fn jacobian(&self, x: &Point) -> Jacobian {
        let (a, b) = (x[0], x[1]);
        DMatrix::from_row_slice(2, 2, &[2.0 * a, 2.0 * b, 2.0 * (a - 5.0), 2.0 * (b - 5.0)])
    }
    fn hessians(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::identity(2, 2) * 2.0; 2])
    }
    fn describe(&self) -> Option<ProblemKind> {
        Some(ProblemKind::Bk1)
    }
}

/// `F₁ = (1/n) Σ x_j²`, `F₂ = (1/n) Σ (x_j − 2)²`.
#[derive(Debug, Clone, Copy)]
pub struct Jos1 {
    pub n: usize,
}

impl Objectives for Jos1 {
    fn num_vars(&self) -> usize {
        self.n
    }
    fn num_objectives(&self) -> usize {
        2
    }
    fn values(&self, x: &Point) -> ObjectiveValues {
        let inv_n = 1.0 / self.n as f64;
        let f1 = x.iter().map(|v| v * v).sum::<f64>() * inv_n;
        let f2 = x.iter().map(|v| (v - 2.0).powi(2)).sum::<f64>() * inv_n;
        DVector::from_vec(vec![f1, f2])
    }
    fn jacobian(&self, x: &Point) -> Jacobian {
        let c = 2.0 / self.n as f64;
        DMatrix::from_fn(2, self.n, |i, j| {
            if i == 0 {
                c * x[j]
            } else {
                c * (x[j] - 2.0)
            }
        })
    }
    fn hessians(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        let h = DMatrix::identity(self.n, self.n) * (2.0 / self.n as f64);
        Some(vec![h.clone(), h])
    }
    fn describe(&self) -> Option<ProblemKind> {
        Some(ProblemKind::Jos1)
    }
}

/// `F_i(x) = ½⟨x, A_i x⟩ + ⟨b_i, x⟩`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessians: Vec<DMatrix<f64>>,
    linear: Vec<DVector<f64>>,
}

impl Quadratic {
    pub fn new(hessians: Vec<DMatrix<f64>>, linear: Vec<DVector<f64>>) -> Result<Self> {
        if hessians.is_empty() || hessians.len() != linear.len() {
            return Err(Error::Dimension(format!(
                "{} Hessians for {} linear terms",
                hessians.len(),
                linear.len()
            )));
        }
        let n = hessians[0].nrows();
        let consistent = hessians.iter().all(|a| a.shape() == (n, n)) && linear.iter().all(|b| b.len() == n);
        if !consistent {
            return Err(Error::Dimension("quadratic terms have inconsistent sizes".into()));
        }
        Ok(Self { hessians, linear })
    }

    pub fn hessian(&self, i: usize) -> &DMatrix<f64> {
        &self.hessians[i]
    }

    pub fn linear(&self, i: usize) -> &DVector<f64> {
        &self.linear[i]
    }
}

impl Objectives for Quadratic {
    fn num_vars(&self) -> usize {
        self.hessians[0].nrows()
    }
    fn num_objectives(&self) -> usize {
        self.hessians.len()
    }
    fn values(&self, x: &Point) -> ObjectiveValues {
        DVector::from_iterator(
            self.hessians.len(),
            self.hessians
                .iter()
                .zip(&self.linear)
                .map(|(a, b)| 0.5 * x.dot(&(a * x)) + b.dot(x)),
        )
    }
    fn jacobian(&self, x: &Point) -> Jacobian {
        let n = self.num_vars();
        let mut jac = DMatrix::zeros(self.hessians.len(), n);
        for (i, (a, b)) in self.hessians.iter().zip(&self.linear).enumerate() {
            let g = a * x + b;
            jac.row_mut(i).copy_from(&g.transpose());
        }
        jac
    }
    fn hessians(&self, _x: &Point) -> Option<Vec<DMatrix<f64>>> {
        Some(self.hessians.clone())
    }
    fn describe(&self) -> Option<ProblemKind> {
        Some(ProblemKind::Quadratic {
            hessians: self.hessians.iter().map(row_major).collect(),
            linear: self.linear.iter().map(|b| b.iter().copied().collect()).collect(),
        })
    }
}

type ValuesFn = dyn Fn(&Point) -> ObjectiveValues + Send + Sync;
type JacobianFn = dyn Fn(&Point) -> Jacobian + Send + Sync;

/// Objectives given by closures, for user-registered problems.
pub struct FnObjectives {
    n: usize,
    m: usize,
    values: Box<ValuesFn>,
    jacobian: Box<JacobianFn>,
}

impl FnObjectives {
    pub fn new(
        n: usize,
        m: usize,
        values: impl Fn(&Point) -> ObjectiveValues + Send + Sync + 'static,
        jacobian: impl Fn(&Point) -> Jacobian + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            m,
            values: Box::new(values),
            jacobian: Box::new(jacobian),
        }
    }
}

impl fmt::Debug for FnObjectives {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnObjectives(n={}, m={})", self.n, self.m)
    }
}

impl Objectives for FnObjectives {
    fn num_vars(&self) -> usize {
        self.n
    }
    fn num_objectives(&self) -> usize {
        self.m
    }
    fn values(&self, x: &Point) -> ObjectiveValues {
        (self.values)(x)
    }
    fn jacobian(&self, x: &Point) -> Jacobian {
        (self.jacobian)(x)
    }
}

pub fn bk1() -> Problem {
    Problem::new(
        "BK1",
        DVector::from_element(2, -5.0),
        DVector::from_element(2, 10.0),
        Bk1,
    )
    .expect("static definition")
}

pub fn jos1(name: &str, n: usize, half_width: f64) -> Problem {
    Problem::new(
        name,
        DVector::from_element(n, -half_width),
        DVector::from_element(n, half_width),
        Jos1 { n },
    )
    .expect("static definition")
}

/// Parameters of a random quadratic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec {
    pub n: usize,
    /// Condition number `κ_i` of each Hessian; its length is `m`.
    pub kappa: Vec<f64>,
    pub seed: u64,
    /// Linear coefficients are drawn uniformly from `[−linear_scale, linear_scale]`.
    pub linear_scale: f64,
    /// Sampling box is `[−half_width, half_width]ⁿ`.
    pub half_width: f64,
}

impl QuadraticSpec {
    /// Defaults: `linear_scale = 1`, box `[−n, n]ⁿ`.
    pub fn new(n: usize, kappa: Vec<f64>, seed: u64) -> Self {
        Self {
            n,
            kappa,
            seed,
            linear_scale: 1.0,
            half_width: n as f64,
        }
    }
}

/// Generates `F_i(x) = ½⟨x, A_i x⟩ + ⟨b_i, x⟩` with `A_i = H_i D_i H_iᵀ`.
///
/// `H_i` is the orthogonal QR factor of a standard Gaussian matrix, signs fixed so
/// that `R` has a positive diagonal. `D_i` is log-uniform on `[1, κ_i]` with its
/// extremes pinned to exactly `1` and `κ_i`.
pub fn make_quadratic(spec: &QuadraticSpec) -> Result<Problem> {
    if spec.n < 2 {
        return Err(Error::Config(format!("quadratic needs n >= 2, got {}", spec.n)));
    }
    if spec.kappa.is_empty() {
        return Err(Error::Config("quadratic needs at least one objective".into()));
    }
    if let Some(k) = spec.kappa.iter().find(|k| !(**k >= 1.0) || !k.is_finite()) {
        return Err(Error::Config(format!("condition number must be >= 1, got {k}")));
    }
    if !(spec.linear_scale >= 0.0) || !(spec.half_width >= 0.0) {
        return Err(Error::Config("linear_scale and half_width must be nonnegative".into()));
    }
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut hessians = Vec::with_capacity(spec.kappa.len());
    let mut linear = Vec::with_capacity(spec.kappa.len());
    for &kappa in &spec.kappa {
        let h = random_orthogonal(n, &mut rng);
        let spectrum = pinned_log_uniform(n, kappa, &mut rng);
        let mut a = &h * DMatrix::from_diagonal(&spectrum) * h.transpose();
        crate::types::symmetrize(&mut a);
        hessians.push(a);

        let b = loop {
            let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0) * spec.linear_scale);
            if spec.linear_scale == 0.0 || b.amax() >= 1e-12 {
                break b;
            }
        };
        linear.push(b);
    }
    Problem::new(
        "quadratic",
        DVector::from_element(n, -spec.half_width),
        DVector::from_element(n, spec.half_width),
        Quadratic::new(hessians, linear)?,
    )
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut sample = DMatrix::<f64>::zeros(n, n);
    for v in sample.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let qr = sample.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn pinned_log_uniform(n: usize, kappa: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let log_k = kappa.ln();
    let mut d = DVector::from_fn(n, |_, _| (rng.random::<f64>() * log_k).exp());
    let imin = d.imin();
    let imax = (0..n)
        .filter(|&j| j != imin)
        .max_by(|&a, &b| d[a].total_cmp(&d[b]))
        .expect("n >= 2");
    d[imin] = 1.0;
    d[imax] = kappa;
    d
}

/// Uniform sample from the problem's box, deterministic in `seed`.
pub fn sample_initial(problem: &Problem, seed: u64) -> Result<Point> {
    let (lo, hi) = (problem.lower(), problem.upper());
    if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Config(format!(
            "problem `{}` has an unbounded sampling box",
            problem.name()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DVector::from_fn(problem.n(), |j, _| {
        let u: f64 = rng.random();
        if lo[j] == hi[j] {
            lo[j]
        } else {
            lo[j] + u * (hi[j] - lo[j])
        }
    }))
}

/// Largest discrepancy between the analytic Jacobian and central differences at `x`,
/// `max_ij |J_ij − Ĵ_ij| / max(1, max_k |J_ik|)`, with steps `h·max(1, |x_j|)`.
///
/// Each row is measured against its own largest entry, so small entries of a badly
/// scaled gradient are not judged on cancellation noise alone.
pub fn jacobian_fd_error(problem: &Problem, x: &Point, h: f64) -> Result<f64> {
    let jac = problem.eval_jacobian(x)?;
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    let scale: Vec<f64> = (0..problem.m()).map(|i| jac.row(i).amax().max(1.0)).collect();
    for j in 0..problem.n() {
        let step = h * x[j].abs().max(1.0);
        probe[j] = x[j] + step;
        let plus = problem.eval_objectives(&probe)?;
        probe[j] = x[j] - step;
        let minus = problem.eval_objectives(&probe)?;
        probe[j] = x[j];
        for i in 0..problem.m() {
            let fd = (plus[i] - minus[i]) / (2.0 * step);
            worst = worst.max((fd - jac[(i, j)]).abs() / scale[i]);
        }
    }
    Ok(worst)
}

/// A family of random quadratics; each seed gives one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFamily {
    pub name: String,
    pub n: usize,
    pub kappa: Vec<f64>,
    pub half_width: f64,
    pub linear_scale: f64,
}

impl QuadraticFamily {
    /// Box `[−n, n]ⁿ` and unit linear scale.
    pub fn new(name: &str, n: usize, kappa: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            n,
            kappa,
            half_width: n as f64,
            linear_scale: 1.0,
        }
    }

    pub fn spec(&self, seed: u64) -> QuadraticSpec {
        QuadraticSpec {
            n: self.n,
            kappa: self.kappa.clone(),
            seed,
            linear_scale: self.linear_scale,
            half_width: self.half_width,
        }
    }

    pub fn instantiate(&self, seed: u64) -> Result<Problem> {
        Ok(make_quadratic(&self.spec(seed))?.renamed(self.name.clone()))
    }
}

#[derive(Debug, Clone)]
pub enum RegistryEntry {
    Fixed(Problem),
    Quadratic(QuadraticFamily),
}

impl RegistryEntry {
    pub fn is_random(&self) -> bool {
        matches!(self, RegistryEntry::Quadratic(_))
    }

    /// Fixed problems ignore the seed.
    pub fn instantiate(&self, seed: u64) -> Result<Problem> {
        match self {
            RegistryEntry::Fixed(p) => Ok(p.clone()),
            RegistryEntry::Quadratic(f) => f.instantiate(seed),
        }
    }

    fn summary(&self) -> String {
        match self {
            RegistryEntry::Fixed(p) => format!("n={} m={}", p.n(), p.m()),
            RegistryEntry::Quadratic(f) => format!(
                "n={} m={} random quadratic, kappa={:?}",
                f.n,
                f.kappa.len(),
                f.kappa
            ),
        }
    }
}

/// Problems addressable by name.
#[derive(Debug, Clone, Default)]
pub struct ProblemRegistry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl ProblemRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// BK1, JOS1a-d and the QPa-QPg quadratic families.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        let fixed = [
            bk1(),
            jos1("JOS1a", 50, 2.0),
            jos1("JOS1b", 100, 2.0),
            jos1("JOS1c", 100, 50.0),
            jos1("JOS1d", 100, 100.0),
        ];
        for p in fixed {
            reg.register(p).expect("builtin names are unique");
        }
        let families = [
            ("QPa", 10, [1e1, 1e1]),
            ("QPb", 10, [1e2, 1e2]),
            ("QPc", 100, [1e2, 1e2]),
            ("QPd", 100, [1e3, 1e3]),
            ("QPe", 500, [1e3, 1e3]),
            ("QPf", 500, [1e4, 1e4]),
            ("QPg", 100, [1e5, 1e2]),
        ];
        for (name, n, kappa) in families {
            reg.register_quadratic_family(QuadraticFamily::new(name, n, kappa.to_vec()))
                .expect("builtin names are unique");
        }
        reg
    }

    pub fn register(&mut self, problem: Problem) -> Result<()> {
        self.insert(problem.name().to_string(), RegistryEntry::Fixed(problem))
    }

    pub fn register_quadratic_family(&mut self, family: QuadraticFamily) -> Result<()> {
        self.insert(family.name.clone(), RegistryEntry::Quadratic(family))
    }

    fn insert(&mut self, name: String, entry: RegistryEntry) -> Result<()> {
        if self.entries.contains_key(&name) {
            return Err(Error::DuplicateProblem(name));
        }
        self.entries.insert(name, entry);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&RegistryEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownProblem(name.to_string()))
    }

    pub fn instantiate(&self, name: &str, seed: u64) -> Result<Problem> {
        self.get(name)?.instantiate(seed)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// One line per entry: `name  description`.
    pub fn listing(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(name, e)| format!("{name:<8} {}", e.summary()))
            .collect()
    }
}

/// Serializable problem definition, one document per problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(flatten)]
    pub kind: ProblemKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    Bk1,
    Jos1,
    /// `hessians[i]` is `A_i` in row-major order; `linear[i]` is `b_i`.
    Quadratic {
        hessians: Vec<Vec<f64>>,
        linear: Vec<Vec<f64>>,
    },
}

impl ProblemDocument {
    pub fn into_problem(self) -> Result<Problem> {
        let (n, m) = (self.n, self.m);
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Format(format!("bounds must have length n = {n}")));
        }
        let lower = DVector::from_vec(self.lower);
        let upper = DVector::from_vec(self.upper);
        let problem = match self.kind {
            ProblemKind::Bk1 => Problem::new(self.name, lower, upper, Bk1)?,
            ProblemKind::Jos1 => Problem::new(self.name, lower, upper, Jos1 { n })?,
            ProblemKind::Quadratic { hessians, linear } => {
                if hessians.iter().any(|a| a.len() != n * n) || linear.iter().any(|b| b.len() != n) {
                    return Err(Error::Format("quadratic terms do not match n".into()));
                }
                let a = hessians.iter().map(|a| DMatrix::from_row_slice(n, n, a)).collect();
                let b = linear.into_iter().map(DVector::from_vec).collect();
                Problem::new(self.name, lower, upper, Quadratic::new(a, b)?)?
            }
        };
        if problem.n() != n || problem.m() != m {
            return Err(Error::Format(format!(
                "document declares n={n} m={m}, definition gives n={} m={}",
                problem.n(),
                problem.m()
            )));
        }
        Ok(problem)
    }
}

/// Writes the problem as a JSON document.
pub fn save_problem(problem: &Problem, path: &Path) -> Result<()> {
    let doc = problem.to_document()?;
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: ProblemDocument = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    doc.into_problem()
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    a.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect()
}
