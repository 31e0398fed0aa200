//! Registry of worked problems shared by the command-line tool, the test
//! suites and the benchmarks.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;

use crate::blocksys::{ivp_constraints, point_condition, Discretization, HistorySpec};
use crate::error::{Error, Result};
use crate::exprgraph::{constant, func, y, DelayMap, OpExpr, PointFn};
use crate::interp::{cheb_grid, trig_grid, GridKind, SampledFunction};
use crate::matrix::Matrix;
use crate::mesh::{build_piecewise_grid, propagate_breakpoints, PiecewiseFunction, PiecewiseGrid, PropagationOptions};
use crate::periodic::{
    estimate_period, initial_guess, rk4_method_of_steps, solve_limit_cycle, solve_periodic_linear, CycleGrid,
    LimitCycle, PeriodicProblem, Trajectory,
};
use crate::solve::{eig_smoothest, functional_equation, newton, solve_linear, NewtonOptions, NewtonReport, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Ode,
    Dde,
    Fde,
    Evp,
    Periodic,
    Functional,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Ode => "ode",
            Category::Dde => "dde",
            Category::Fde => "fde",
            Category::Evp => "evp",
            Category::Periodic => "periodic",
            Category::Functional => "functional",
        }
    }
}

/// Solver settings; `None` fields fall back to each example's defaults.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub shift: Option<f64>,
    pub period_guess: Option<f64>,
}

impl RunConfig {
    pub fn with_n(n: usize) -> Self {
        RunConfig { n: Some(n), ..Default::default() }
    }

    pub fn with_sizes(sizes: Vec<usize>) -> Self {
        RunConfig { sizes: Some(sizes), ..Default::default() }
    }

    fn newton_options(&self) -> NewtonOptions {
        let mut o = NewtonOptions { tol: self.tol, ..Default::default() };
        if let Some(m) = self.max_iter {
            o.max_iter = m;
        }
        o
    }
}

/// A computed solution that can be evaluated anywhere in its domain.
#[derive(Debug, Clone)]
pub enum Solution {
    Piecewise(PiecewiseFunction),
    Single(SampledFunction),
}

impl Solution {
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            Solution::Piecewise(f) => f.grid().nodes(),
            Solution::Single(f) => f.grid().nodes().to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Solution::Piecewise(f) => f.values(),
            Solution::Single(f) => f.values(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        match self {
            Solution::Piecewise(f) => f.grid().sizes(),
            Solution::Single(f) => vec![f.grid().len()],
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Solution::Piecewise(f) => x.iter().map(|&v| f.eval(v)).collect(),
            Solution::Single(f) => Ok(f.eval(x)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollocationRun {
    pub solution: Solution,
    pub params: Vec<f64>,
    pub report: Option<NewtonReport>,
    /// Condition number of the (final) system matrix.
    pub cond: f64,
}

#[derive(Debug, Clone)]
pub struct EigenRun {
    pub nodes: Vec<f64>,
    pub values: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CycleRun {
    pub cycle: LimitCycle,
    pub trajectory: Trajectory,
    pub period_guess: f64,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Collocation(CollocationRun),
    Eigen(EigenRun),
    Cycle(CycleRun),
}

impl Outcome {
    /// Newton report, when the run used Newton's method.
    pub fn report(&self) -> Option<&NewtonReport> {
        match self {
            Outcome::Collocation(c) => c.report.as_ref(),
            Outcome::Cycle(c) => Some(&c.cycle.report),
            Outcome::Eigen(_) => None,
        }
    }

    pub fn cond(&self) -> Option<f64> {
        match self {
            Outcome::Collocation(c) => Some(c.cond),
            Outcome::Cycle(c) => Some(c.cycle.report.final_jacobian_cond),
            Outcome::Eigen(_) => None,
        }
    }

    /// Collocation points and first-component values at them. Cycles are
    /// reported on `[0, T]`.
    pub fn nodes_values(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Outcome::Collocation(c) => Some((c.solution.nodes(), c.solution.values().to_vec())),
            Outcome::Cycle(c) => {
                let nodes = c.cycle.grid.nodes().iter().map(|th| th * c.cycle.period).collect();
                Some((nodes, c.cycle.states[0].clone()))
            }
            Outcome::Eigen(_) => None,
        }
    }

    /// Maximum nodal error against `exact`.
    pub fn max_error(&self, exact: fn(f64) -> f64) -> Option<f64> {
        let (nodes, values) = self.nodes_values()?;
        Some(nodes.iter().zip(&values).map(|(&t, v)| (v - exact(t)).abs()).fold(0.0, f64::max))
    }

    /// Maximum difference at this run's nodes against a reference run of the
    /// same example.
    fn diff_against(&self, reference: &Outcome) -> Result<f64> {
        let (values, reference_values) = match (self, reference) {
            (Outcome::Collocation(a), Outcome::Collocation(b)) => {
                (a.solution.values().to_vec(), b.solution.eval(&a.solution.nodes())?)
            }
            (Outcome::Cycle(a), Outcome::Cycle(b)) => (a.cycle.states[0].clone(), b.cycle.eval(0, a.cycle.grid.nodes())?),
            _ => return Err(Error::Unsupported("convergence study for this kind of example".into())),
        };
        Ok(values.iter().zip(&reference_values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

type Runner = fn(&[usize], &RunConfig) -> Result<Outcome>;

/// One registered example.
pub struct ExampleSpec {
    pub name: &'static str,
    pub category: Category,
    pub summary: &'static str,
    pub default_n: usize,
    /// Per-panel size offsets relative to `n`; the length is the panel count.
    pub panel_offsets: &'static [usize],
    pub exact: Option<fn(f64) -> f64>,
    runner: Runner,
}

impl std::fmt::Debug for ExampleSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExampleSpec({})", self.name)
    }
}

impl ExampleSpec {
    pub fn sizes(&self, cfg: &RunConfig) -> Result<Vec<usize>> {
        if let Some(s) = &cfg.sizes {
            if s.len() != self.panel_offsets.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} needs {} panel sizes, got {}",
                    self.name,
                    self.panel_offsets.len(),
                    s.len()
                )));
            }
            return Ok(s.clone());
        }
        let n = cfg.n.unwrap_or(self.default_n);
        Ok(self.panel_offsets.iter().map(|o| n + o).collect())
    }

    pub fn run(&self, cfg: &RunConfig) -> Result<Outcome> {
        let sizes = self.sizes(cfg)?;
        (self.runner)(&sizes, cfg)
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    /// Total degrees of freedom.
    pub n: usize,
    pub error: f64,
    pub cond: f64,
}

/// Runs `spec` at each base size in `ns` and measures the nodal error
/// against the exact solution, or against the largest run when there is
/// none (that run is then dropped from the output).
pub fn converge(spec: &ExampleSpec, ns: &[usize], cfg: &RunConfig) -> Result<Vec<ConvergenceRecord>> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(Error::InvalidArgument("no sizes given".into()));
    }
    let runs: Vec<(usize, Outcome)> = ns
        .iter()
        .map(|&n| {
            let c = RunConfig { n: Some(n), sizes: None, ..cfg.clone() };
            let dof = spec.sizes(&c)?.iter().sum();
            Ok((dof, spec.run(&c)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    match spec.exact {
        Some(exact) => {
            for (dof, o) in &runs {
                let error = o.max_error(exact).ok_or_else(|| Error::Unsupported("convergence of an eigenproblem".into()))?;
                out.push(ConvergenceRecord { n: *dof, error, cond: o.cond().unwrap_or(f64::NAN) });
            }
        }
        None => {
            let (_, proxy) = runs.last().unwrap();
            for (dof, o) in &runs[..runs.len() - 1] {
                out.push(ConvergenceRecord { n: *dof, error: o.diff_against(proxy)?, cond: o.cond().unwrap_or(f64::NAN) });
            }
        }
    }
    Ok(out)
}

pub fn find(name: &str) -> Option<&'static ExampleSpec> {
    EXAMPLES.iter().find(|e| e.name == name)
}

pub fn all() -> &'static [ExampleSpec] {
    EXAMPLES
}

static EXAMPLES: &[ExampleSpec] = &[
    ExampleSpec {
        name: "example1",
        category: Category::Ode,
        summary: "y' = -y, y(0) = 1 on [0, 1]",
        default_n: 12,
        panel_offsets: &[0],
        exact: Some(exp_neg),
        runner: run_example1,
    },
    ExampleSpec {
        name: "example2",
        category: Category::Dde,
        summary: "y' = -y - y(t/2) + exp(-t/2), y(0) = 1 on [0, 1]",
        default_n: 12,
        panel_offsets: &[0],
        exact: Some(exp_neg),
        runner: run_example2,
    },
    ExampleSpec {
        name: "example3",
        category: Category::Dde,
        summary: "y' = -y - y(t - 1/2), zero history, y(0) = 1, panels [0, 1/2] and [1/2, 1]",
        default_n: 10,
        panel_offsets: &[0, 1],
        exact: Some(example3_exact),
        runner: run_example3,
    },
    ExampleSpec {
        name: "example3_single_domain",
        category: Category::Dde,
        summary: "the example3 problem on one panel, ignoring the kink at t = 1/2",
        default_n: 40,
        panel_offsets: &[0],
        exact: Some(example3_exact),
        runner: run_example3_single,
    },
    ExampleSpec {
        name: "example4",
        category: Category::Dde,
        summary: "the example3 problem on [0, 2] with breakpoints 1/2, 1, 3/2",
        default_n: 10,
        panel_offsets: &[0, 1, 2, 3],
        exact: None,
        runner: run_example4,
    },
    ExampleSpec {
        name: "example5",
        category: Category::Dde,
        summary: "y' = -y - y(t^2 - 1/4), zero history, y(0) = 1, traced breakpoints",
        default_n: 12,
        panel_offsets: &[0, 0, 0],
        exact: None,
        runner: run_example5,
    },
    ExampleSpec {
        name: "example6",
        category: Category::Dde,
        summary: "y' = -y(y) + cos t + sin(sin t), y(0) = 0, Newton from y = t",
        default_n: 12,
        panel_offsets: &[0],
        exact: Some(f64::sin),
        runner: run_example6,
    },
    ExampleSpec {
        name: "example7",
        category: Category::Dde,
        summary: "y' + y(t/2)/2 = int_0^t exp(-(t-s)^2) y(s) ds, y(0) = 1",
        default_n: 14,
        panel_offsets: &[0],
        exact: None,
        runner: run_example7,
    },
    ExampleSpec {
        name: "example8",
        category: Category::Fde,
        summary: "y' = -y - y(1 - t^2) + exp(t^2 - 1), y(0) = 1",
        default_n: 12,
        panel_offsets: &[0],
        exact: Some(exp_neg),
        runner: run_example8,
    },
    ExampleSpec {
        name: "example9",
        category: Category::Fde,
        summary: "y' = -y(y), y(0) = 1, Newton from y = 1",
        default_n: 12,
        panel_offsets: &[0],
        exact: None,
        runner: run_example9,
    },
    ExampleSpec {
        name: "example10",
        category: Category::Periodic,
        summary: "u'' + sin(t) u'(t - pi/sqrt 2) + cos(t) u(t - pi/2) = 1, 2 pi periodic",
        default_n: 32,
        panel_offsets: &[0],
        exact: None,
        runner: run_example10,
    },
    ExampleSpec {
        name: "example11",
        category: Category::Periodic,
        summary: "delayed Lotka-Volterra limit cycle, K = 7/5, gamma = 2/15, delta = 1, s = 1",
        default_n: 129,
        panel_offsets: &[0],
        exact: None,
        runner: run_example11,
    },
    ExampleSpec {
        name: "example12",
        category: Category::Functional,
        summary: "u(f(t)) = u(t)/2 with f(t) = sin(t)/2 on [0, pi], u'(0) = 1",
        default_n: 30,
        panel_offsets: &[0],
        exact: Some(koenigs),
        runner: run_example12,
    },
    ExampleSpec {
        name: "example13",
        category: Category::Periodic,
        summary: "delayed logistic limit cycle y' = (1.7 - y(t - 1)) y, trigonometric grid",
        default_n: 25,
        panel_offsets: &[0],
        exact: None,
        runner: run_example13_trig,
    },
    ExampleSpec {
        name: "example13_chebyshev",
        category: Category::Periodic,
        summary: "delayed logistic limit cycle on a Chebyshev grid with a periodic boundary row",
        default_n: 50,
        panel_offsets: &[0],
        exact: None,
        runner: run_example13_cheb,
    },
    ExampleSpec {
        name: "chebfun_ex1",
        category: Category::Dde,
        summary: "proportional and Volterra delays on [0, 20], q = 1/2",
        default_n: 20,
        panel_offsets: &[0],
        exact: Some(chebfun_ex1_exact),
        runner: run_chebfun_ex1,
    },
    ExampleSpec {
        name: "chebfun_ex2",
        category: Category::Dde,
        summary: "neutral DDE on [0, 0.1], initial slope 2",
        default_n: 16,
        panel_offsets: &[0],
        exact: Some(chebfun_ex2_exact),
        runner: run_chebfun_ex2,
    },
    ExampleSpec {
        name: "chebfun_ex2_w",
        category: Category::Dde,
        summary: "neutral DDE on [0, 0.1], initial slope -W(-2/e^2)",
        default_n: 16,
        panel_offsets: &[0],
        exact: None,
        runner: run_chebfun_ex2_w,
    },
    ExampleSpec {
        name: "chebfun_ex3",
        category: Category::Fde,
        summary: "y' + y(y) = 0, y(0) = 1",
        default_n: 12,
        panel_offsets: &[0],
        exact: None,
        runner: run_example9,
    },
    ExampleSpec {
        name: "chebfun_ex4",
        category: Category::Dde,
        summary: "y' = -y - y(p t) + exp(-t/2), y(0) = 1, y(1) = 1/4 with p unknown",
        default_n: 16,
        panel_offsets: &[0],
        exact: None,
        runner: run_chebfun_ex4,
    },
    ExampleSpec {
        name: "chebfun_ex5",
        category: Category::Evp,
        summary: "y'' = -lambda y(t/2), y(0) = y(1) = 0",
        default_n: 60,
        panel_offsets: &[0],
        exact: None,
        runner: run_chebfun_ex5,
    },
];

fn exp_neg(t: f64) -> f64 {
    (-t).exp()
}

pub fn example3_exact(t: f64) -> f64 {
    if t <= 0.5 {
        (-t).exp()
    } else {
        (-t + 0.5).exp() * (0.5 - t + (-0.5f64).exp())
    }
}

fn chebfun_ex1_exact(t: f64) -> f64 {
    (t / 10.0 - 1.0).exp()
}

fn chebfun_ex2_exact(t: f64) -> f64 {
    (2.0 * t).sin().exp()
}

/// Koenigs limit `lambda^-k f^k(t)` for `f = sin/2`, `lambda = 1/2`.
pub fn koenigs(t: f64) -> f64 {
    let mut x = t;
    for _ in 0..60 {
        x = 0.5 * x.sin();
    }
    x * 2f64.powi(60)
}

/// Principal branch of the Lambert W function for `x >= -1/e`.
pub fn lambert_w0(x: f64) -> f64 {
    let mut w = if x < 1.0 { 0.0 } else { x.ln() - x.ln().ln().max(0.0) };
    for _ in 0..100 {
        let e = w.exp();
        let f = w * e - x;
        let step = f / (e * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() <= 1e-16 * w.abs().max(1.0) {
            break;
        }
    }
    w
}

/// Solves `problem` directly if it is affine and by Newton from `init`
/// otherwise.
fn solve_problem(problem: &Problem<'_>, init: Vec<f64>, cfg: &RunConfig) -> Result<(Vec<f64>, Option<NewtonReport>, f64)> {
    if problem.is_affine() {
        let s = solve_linear(problem)?;
        Ok((s.x, None, s.cond))
    } else {
        let s = newton(problem, init, &cfg.newton_options())?;
        let cond = s.report.final_jacobian_cond;
        Ok((s.x, Some(s.report), cond))
    }
}

fn ivp_run(
    g: PiecewiseGrid,
    equation: OpExpr,
    y0: f64,
    init: impl Fn(f64) -> f64,
    cfg: &RunConfig,
) -> Result<Outcome> {
    let x0: Vec<f64> = g.nodes().iter().map(|&t| init(t)).collect();
    let problem = Problem::scalar(&g, equation).with_constraints(ivp_constraints(&g, y0)?);
    let (x, report, cond) = solve_problem(&problem, x0, cfg)?;
    let solution = Solution::Piecewise(PiecewiseFunction::new(g, x)?);
    Ok(Outcome::Collocation(CollocationRun { solution, params: Vec::new(), report, cond }))
}

fn unit(sizes: &[usize]) -> Result<PiecewiseGrid> {
    build_piecewise_grid(&[0.0, 1.0], sizes)
}

fn run_example1(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    ivp_run(unit(sizes)?, y().diff(1) + y(), 1.0, |_| 1.0, cfg)
}

fn run_example2(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let e = y().diff(1) + y() + y().delay(DelayMap::Proportional(0.5)) - func(|t| (-t / 2.0).exp());
    ivp_run(unit(sizes)?, e, 1.0, |_| 1.0, cfg)
}

fn half_delay_equation() -> OpExpr {
    y().diff(1) + y() + y().delay_with_history(DelayMap::Shift(0.5), HistorySpec::Constant(0.0))
}

fn run_example3(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let g = build_piecewise_grid(&[0.0, 0.5, 1.0], sizes)?;
    ivp_run(g, half_delay_equation(), 1.0, |_| 1.0, cfg)
}

fn run_example3_single(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    ivp_run(unit(sizes)?, half_delay_equation(), 1.0, |_| 1.0, cfg)
}

fn run_example4(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let breaks = propagate_breakpoints(|t| t - 0.5, (0.0, 2.0), &[0.0], PropagationOptions::default())?;
    let mut all = vec![0.0];
    all.extend(breaks);
    all.push(2.0);
    let g = build_piecewise_grid(&all, sizes)?;
    ivp_run(g, half_delay_equation(), 1.0, |_| 1.0, cfg)
}

fn run_example5(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let tau = |t: f64| t * t - 0.25;
    let breaks = propagate_breakpoints(tau, (0.0, 1.0), &[0.0], PropagationOptions::default())?;
    let mut all = vec![0.0];
    all.extend(breaks);
    all.push(1.0);
    let g = build_piecewise_grid(&all, sizes)?;
    let e = y().diff(1) + y() + y().delay_with_history(DelayMap::map(tau), HistorySpec::Constant(0.0));
    ivp_run(g, e, 1.0, |_| 1.0, cfg)
}

fn run_example6(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let e = y().diff(1) + y().at_state(y(), PointFn::identity()) - func(|t| t.cos() + t.sin().sin());
    ivp_run(unit(sizes)?, e, 0.0, |t| t, cfg)
}

fn run_example7(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let e = y().diff(1) + 0.5 * y().delay(DelayMap::Proportional(0.5)) - y().volterra(|t, s| (-(t - s) * (t - s)).exp());
    ivp_run(unit(sizes)?, e, 1.0, |_| 1.0, cfg)
}

fn run_example8(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let e = y().diff(1) + y() + y().delay(DelayMap::map(|t| 1.0 - t * t)) - func(|t| (t * t - 1.0).exp());
    ivp_run(unit(sizes)?, e, 1.0, |_| 1.0, cfg)
}

fn run_example9(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let e = y().diff(1) + y().at_state(y(), PointFn::identity());
    ivp_run(unit(sizes)?, e, 1.0, |_| 1.0, cfg)
}

/// The periodic linear problem with forcing 1 on `[0, 2 pi)`.
pub fn example10_equation() -> OpExpr {
    y().diff(2)
        + func(f64::sin) * y().neutral(DelayMap::Shift(PI / SQRT_2))
        + func(f64::cos) * y().delay(DelayMap::Shift(FRAC_PI_2))
        - constant(1.0)
}

fn run_example10(sizes: &[usize], _cfg: &RunConfig) -> Result<Outcome> {
    let g = trig_grid(sizes[0], 0.0, 2.0 * PI)?;
    let u = solve_periodic_linear(example10_equation(), &g)?;
    let cond = solve_linear(&Problem::scalar(&g, example10_equation()))?.cond;
    Ok(Outcome::Collocation(CollocationRun { solution: Solution::Single(u), params: Vec::new(), report: None, cond }))
}

/// Lotka-Volterra parameters `(K, gamma, delta, s)`.
pub const LOTKA_VOLTERRA: (f64, f64, f64, f64) = (7.0 / 5.0, 2.0 / 15.0, 1.0, 1.0);

pub fn lotka_volterra_problem() -> PeriodicProblem {
    let (k, gamma, delta, s) = LOTKA_VOLTERRA;
    let x = || OpExpr::Unknown(0);
    let holling = || x() * OpExpr::Unknown(1).delay(DelayMap::Shift(s)) * (constant(1.0) + x()).apply(PointFn::recip());
    PeriodicProblem::new(vec![x() - (1.0 / k) * x() * x() - holling(), -gamma * OpExpr::Unknown(1) + delta * holling()])
}

/// Step-integrator trajectory from a point near the coexistence equilibrium.
pub fn lotka_volterra_trajectory() -> Result<Trajectory> {
    let (k, gamma, delta, s) = LOTKA_VOLTERRA;
    let alpha = gamma / delta;
    let xe = alpha / (1.0 - alpha);
    let ye = (1.0 - xe / k) * (1.0 + xe);
    let start = [xe + 0.05, ye];
    rk4_method_of_steps(
        |_, u, d| {
            let h = u[0] * d[0][1] / (1.0 + u[0]);
            vec![u[0] - u[0] * u[0] / k - h, -gamma * u[1] + delta * h]
        },
        &start,
        &[HistorySpec::Constant(start[0]), HistorySpec::Constant(start[1])],
        &[s],
        600.0,
        0.01,
    )
}

pub const LOGISTIC_LAMBDA: f64 = 1.7;

pub fn logistic_problem() -> PeriodicProblem {
    PeriodicProblem::new(vec![(constant(LOGISTIC_LAMBDA) - y().delay(DelayMap::Shift(1.0))) * y()])
}

/// Step-integrator trajectory from the constant history `y = 1/2`.
pub fn logistic_trajectory() -> Result<Trajectory> {
    rk4_method_of_steps(
        |_, u, d| vec![(LOGISTIC_LAMBDA - d[0][0]) * u[0]],
        &[0.5],
        &[HistorySpec::Constant(0.5)],
        &[1.0],
        100.0,
        0.01,
    )
}

fn cycle_run(p: PeriodicProblem, traj: Trajectory, grid: CycleGrid, cfg: &RunConfig) -> Result<Outcome> {
    let period_guess = match cfg.period_guess {
        Some(t) => t,
        None => estimate_period(&traj, 0)?,
    };
    let nodes = match grid {
        CycleGrid::Trig(n) => trig_grid(n, 0.0, 1.0)?,
        CycleGrid::Chebyshev(n) => cheb_grid(n, 0.0, 1.0)?,
    };
    let init = initial_guess(&traj, p.phase, period_guess, nodes.nodes());
    let cycle = solve_limit_cycle(&p, grid, &init, period_guess, &cfg.newton_options())?;
    Ok(Outcome::Cycle(CycleRun { cycle, trajectory: traj, period_guess }))
}

fn run_example11(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    cycle_run(lotka_volterra_problem(), lotka_volterra_trajectory()?, CycleGrid::Trig(sizes[0]), cfg)
}

fn run_example13_trig(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    cycle_run(logistic_problem(), logistic_trajectory()?, CycleGrid::Trig(sizes[0]), cfg)
}

fn run_example13_cheb(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    cycle_run(logistic_problem(), logistic_trajectory()?, CycleGrid::Chebyshev(sizes[0]), cfg)
}

fn run_example12(sizes: &[usize], _cfg: &RunConfig) -> Result<Outcome> {
    let g = cheb_grid(sizes[0], 0.0, PI)?;
    let u = functional_equation(|t| 0.5 * t.sin(), 0.5, &g)?;
    let mut a = Matrix::from_fn(g.len(), g.len(), |i, j| if i == j { -0.5 } else { 0.0 });
    a.add_assign_scaled(&crate::interp::barymat(&g.nodes().iter().map(|t| 0.5 * t.sin()).collect::<Vec<_>>(), &g)?, 1.0);
    a.set_row(0, crate::interp::diffmat(&g, 1)?.row(0));
    let cond = crate::solve::cond_inf(&a)?;
    Ok(Outcome::Collocation(CollocationRun { solution: Solution::Single(u), params: Vec::new(), report: None, cond }))
}

fn run_chebfun_ex1(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let q = 0.5;
    let e = y().diff(1)
        - 0.01 * (func(move |t| q * t - t - 10.0) * y().delay(DelayMap::Proportional(q)))
        - func(|t| 0.01 * (t + 20.0) * (-1.0f64).exp())
        - 0.01 * y().cumsum()
        - 0.001 * y().volterra(move |x, s| x / q - s).delay(DelayMap::Proportional(q));
    let g = build_piecewise_grid(&[0.0, 20.0], sizes)?;
    ivp_run(g, e, (-1.0f64).exp(), |_| (-1.0f64).exp(), cfg)
}

fn neutral_equation() -> OpExpr {
    y().diff(1)
        - func(|t| 2.0 * (2.0 * t).cos()) * y().delay(DelayMap::Proportional(0.5)).apply(PointFn::pow_t(|t| 2.0 * t.cos()))
        - y().neutral(DelayMap::Proportional(0.5)).apply(PointFn::ln())
        + func(|t| (2.0 * t.cos()).ln() + t.sin())
}

/// The second consistent initial slope of the neutral example.
pub fn neutral_second_slope() -> f64 {
    -lambert_w0(-2.0 * (-2.0f64).exp())
}

fn neutral_run(sizes: &[usize], slope: f64, cfg: &RunConfig) -> Result<Outcome> {
    let g = build_piecewise_grid(&[0.0, 0.1], sizes)?;
    ivp_run(g, neutral_equation(), 1.0, |t| 1.0 + slope * t, cfg)
}

fn run_chebfun_ex2(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    neutral_run(sizes, 2.0, cfg)
}

fn run_chebfun_ex2_w(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    neutral_run(sizes, neutral_second_slope(), cfg)
}

/// The unknown-delay boundary value problem for a given `p` equation.
pub fn unknown_delay_equation(tau: DelayMap) -> OpExpr {
    y().diff(1) + y() + y().delay(tau) - func(|t| (-t / 2.0).exp())
}

fn run_chebfun_ex4(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let g = unit(sizes)?;
    let tau = DelayMap::parametric(|t, p| p[0] * t, |t, _| vec![t]);
    let problem = Problem::scalar(&g, unknown_delay_equation(tau))
        .with_constraints([point_condition(&g, 0.0, 0, 1.0, Some(0))?, point_condition(&g, 1.0, 0, 0.25, None)?])
        .with_params(1);
    let mut x0: Vec<f64> = g.nodes().iter().map(|t| 1.0 - 0.75 * t).collect();
    x0.push(0.5);
    let s = newton(&problem, x0, &cfg.newton_options())?;
    let n = g.len();
    let params = s.x[n..].to_vec();
    let solution = Solution::Piecewise(PiecewiseFunction::new(g, s.x[..n].to_vec())?);
    let cond = s.report.final_jacobian_cond;
    Ok(Outcome::Collocation(CollocationRun { solution, params, report: Some(s.report), cond }))
}

/// Pencil `(A, B)` of `y'' = -lambda y(t/2)` with Dirichlet rows in `A` and
/// zero rows in `B`.
pub fn delay_evp_pencil(n: usize) -> Result<(Matrix, Matrix, Vec<f64>)> {
    let g = unit(&[n])?;
    let mut a = g.diffmat(2)?;
    let mut b = Problem::scalar(&g, -y().delay(DelayMap::Proportional(0.5))).assemble_linear()?.matrix;
    let constraints = [point_condition(&g, 0.0, 0, 0.0, Some(0))?, point_condition(&g, 1.0, 0, 0.0, Some(n - 1))?];
    for c in &constraints {
        let r = c.position.unwrap();
        a.set_row(r, &c.coeffs);
        b.set_row(r, &vec![0.0; n]);
    }
    Ok((a, b, g.nodes()))
}

fn run_chebfun_ex5(sizes: &[usize], cfg: &RunConfig) -> Result<Outcome> {
    let (a, b, nodes) = delay_evp_pencil(sizes[0])?;
    let r = eig_smoothest(&a, &b, 6, cfg.shift.unwrap_or(0.0), GridKind::ChebyshevLobatto)?;
    let pairs = r.pairs;
    Ok(Outcome::Eigen(EigenRun {
        nodes,
        values: pairs.iter().map(|p| p.value).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        vectors: pairs.iter().map(|p| p.real_vector()).collect(),
    }))
}
