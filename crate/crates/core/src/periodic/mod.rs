//! Periodic problems: Fourier collocation, limit cycles with unknown period,
//! and a step integrator that produces initial guesses.

mod steps;

pub use steps::{estimate_period, rk4_method_of_steps, Trajectory};

use crate::blocksys::{point_functional, Constraint, HistorySpec};
use crate::error::{Error, Result};
use crate::exprgraph::{DelayMap, OpExpr};
use crate::interp::{cheb_grid, trig_grid, Grid, GridKind, SampledFunction};
use crate::solve::{newton, solve_linear, NewtonOptions, NewtonReport, Problem};

/// Condition number above which a periodic linear solve is declared singular.
pub const SINGULAR_COND: f64 = 1e12;

/// Solves an affine scalar problem on a periodic grid.
pub fn solve_periodic_linear(equation: OpExpr, g: &Grid) -> Result<SampledFunction> {
    if g.kind() != GridKind::TrigUniform {
        return Err(Error::InvalidArgument("periodic solve needs a trigonometric grid".into()));
    }
    let sol = solve_linear(&Problem::scalar(g, equation))?;
    if !(sol.cond <= SINGULAR_COND) {
        return Err(Error::SingularMatrix);
    }
    SampledFunction::new(g.clone(), sol.x)
}

/// Removes the time-translation freedom of an autonomous periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseCondition {
    /// `y_c(0) = value`.
    FixValue { component: usize, value: f64 },
    /// `y_c'(0) = 0`.
    DerivativeZero { component: usize },
}

impl Default for PhaseCondition {
    fn default() -> Self {
        PhaseCondition::DerivativeZero { component: 0 }
    }
}

/// An autonomous system `y_c'(t) = F_c(y(t), y(t - s_1), ...)` whose periodic
/// orbit is sought.
///
/// The right-hand sides may use `Unknown`, constants, sums, products,
/// pointwise functions and constant-lag delays (`DelayMap::Shift`).
#[derive(Debug, Clone)]
pub struct PeriodicProblem {
    pub rhs: Vec<OpExpr>,
    pub phase: PhaseCondition,
}

impl PeriodicProblem {
    pub fn new(rhs: Vec<OpExpr>) -> Self {
        PeriodicProblem { rhs, phase: PhaseCondition::default() }
    }

    pub fn with_phase(mut self, phase: PhaseCondition) -> Self {
        self.phase = phase;
        self
    }

    pub fn components(&self) -> usize {
        self.rhs.len()
    }

    /// Constant lags appearing in the right-hand sides.
    pub fn lags(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for e in &self.rhs {
            collect_lags(e, &mut out)?;
        }
        Ok(out)
    }
}

fn collect_lags(e: &OpExpr, out: &mut Vec<f64>) -> Result<()> {
    match e {
        OpExpr::Unknown(_) | OpExpr::Const(_) => Ok(()),
        OpExpr::DelayEval { child, tau: DelayMap::Shift(s), .. } => {
            if !out.contains(s) {
                out.push(*s);
            }
            collect_lags(child, out)
        }
        OpExpr::Sum(v) | OpExpr::Product(v) => v.iter().try_for_each(|x| collect_lags(x, out)),
        OpExpr::Scale(_, c) | OpExpr::Elementwise(_, c) => collect_lags(c, out),
        other => Err(Error::Unsupported(format!("{other:?} in a periodic right-hand side"))),
    }
}

/// Rewrites a right-hand side in the time `theta = t / T`, with `T = p[0]`.
fn rescale(e: &OpExpr, history: Option<&HistorySpec>) -> Result<OpExpr> {
    Ok(match e {
        OpExpr::Unknown(_) | OpExpr::Const(_) => e.clone(),
        OpExpr::DelayEval { child, tau: DelayMap::Shift(s), .. } => OpExpr::DelayEval {
            child: Box::new(rescale(child, history)?),
            tau: DelayMap::rescaled_shift(*s, 0),
            history: history.cloned(),
        },
        OpExpr::Sum(v) => OpExpr::Sum(v.iter().map(|x| rescale(x, history)).collect::<Result<_>>()?),
        OpExpr::Product(v) => OpExpr::Product(v.iter().map(|x| rescale(x, history)).collect::<Result<_>>()?),
        OpExpr::Scale(a, c) => OpExpr::Scale(*a, Box::new(rescale(c, history)?)),
        OpExpr::Elementwise(f, c) => OpExpr::Elementwise(f.clone(), Box::new(rescale(c, history)?)),
        other => return Err(Error::Unsupported(format!("{other:?} in a periodic right-hand side"))),
    })
}

/// Discretisation used for a limit cycle on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleGrid {
    /// `n` equispaced nodes with trigonometric interpolation.
    Trig(usize),
    /// `n` Chebyshev points with a periodic boundary row per component.
    Chebyshev(usize),
}

impl CycleGrid {
    pub fn len(&self) -> usize {
        match *self {
            CycleGrid::Trig(n) | CycleGrid::Chebyshev(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn build(&self, a: f64, b: f64) -> Result<Grid> {
        match *self {
            CycleGrid::Trig(n) => trig_grid(n, a, b),
            CycleGrid::Chebyshev(n) => cheb_grid(n, a, b),
        }
    }
}

/// A converged (or last-iterate) periodic orbit.
#[derive(Debug, Clone)]
pub struct LimitCycle {
    /// Grid on `[0, 1]` in rescaled time.
    pub grid: Grid,
    /// Nodal values per component.
    pub states: Vec<Vec<f64>>,
    pub period: f64,
    pub report: NewtonReport,
}

impl LimitCycle {
    /// Component `c` as a function on `[0, T]`.
    pub fn on_period(&self, c: usize) -> Result<SampledFunction> {
        let g = match self.grid.kind() {
            GridKind::TrigUniform => trig_grid(self.grid.len(), 0.0, self.period)?,
            GridKind::ChebyshevLobatto => cheb_grid(self.grid.len(), 0.0, self.period)?,
        };
        SampledFunction::new(g, self.states[c].clone())
    }

    /// Component `c` at rescaled times `theta` in `[0, 1]` (wrapped).
    pub fn eval(&self, c: usize, theta: &[f64]) -> Result<Vec<f64>> {
        let wrapped: Vec<f64> = theta.iter().map(|&x| crate::interp::wrap_periodic(x, 0.0, 1.0)).collect();
        Ok(SampledFunction::new(self.grid.clone(), self.states[c].clone())?.eval(&wrapped))
    }
}

/// Initial guess for a limit cycle: one estimated period of the trajectory,
/// starting from its last maximum of the anchored component that still
/// leaves a full period of data.
pub fn initial_guess(traj: &Trajectory, phase: PhaseCondition, period: f64, nodes: &[f64]) -> Vec<Vec<f64>> {
    let c = match phase {
        PhaseCondition::FixValue { component, .. } | PhaseCondition::DerivativeZero { component } => component,
    };
    let end = *traj.times.last().unwrap();
    let start = traj
        .maxima(c, traj.times[0])
        .into_iter()
        .rev()
        .find(|&m| m + period <= end)
        .unwrap_or((end - period).max(traj.times[0]));
    let samples: Vec<Vec<f64>> = nodes.iter().map(|&th| traj.sample(start + th * period)).collect();
    (0..traj.dim()).map(|i| samples.iter().map(|s| s[i]).collect()).collect()
}

/// Newton solve for the orbit and its period.
///
/// In rescaled time the unknowns satisfy `y_c'(theta) = T F_c(y(theta),
/// y(theta - s/T), ...)`, delays wrap around the unit interval, and the phase
/// condition closes the system. The period is the last unknown.
pub fn solve_limit_cycle(
    p: &PeriodicProblem,
    grid: CycleGrid,
    initial: &[Vec<f64>],
    period_guess: f64,
    opts: &NewtonOptions,
) -> Result<LimitCycle> {
    let d = p.components();
    if d == 0 || initial.len() != d {
        return Err(Error::InvalidArgument(format!("initial guess has {} components, system has {d}", initial.len())));
    }
    if !(period_guess > 0.0) {
        return Err(Error::NonPositivePeriod(period_guess));
    }
    let g = grid.build(0.0, 1.0)?;
    let n = g.len();
    if initial.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidArgument(format!("initial guess must have {n} values per component")));
    }
    let history = match grid {
        CycleGrid::Trig(_) => None,
        CycleGrid::Chebyshev(_) => Some(HistorySpec::periodic(1.0)?),
    };
    let equations = p
        .rhs
        .iter()
        .enumerate()
        .map(|(c, f)| Ok(OpExpr::Unknown(c).diff(1) - OpExpr::Product(vec![OpExpr::Param(0), rescale(f, history.as_ref())?])))
        .collect::<Result<Vec<_>>>()?;

    let mut constraints = Vec::new();
    if let CycleGrid::Chebyshev(_) = grid {
        for c in 0..d {
            let mut row = vec![0.0; n];
            row[0] = 1.0;
            row[n - 1] = -1.0;
            constraints.push(Constraint::new(Some(0), row, 0.0, format!("y{c}(0) = y{c}(1)")).for_component(c, n));
        }
    }
    constraints.push(phase_row(p.phase, &g, d)?);

    let problem = Problem::new(&g, equations).with_constraints(constraints).with_params(1);
    let mut x0: Vec<f64> = initial.concat();
    x0.push(period_guess);
    let opts = NewtonOptions { positive_params: vec![0], ..opts.clone() };
    let sol = newton(&problem, x0, &opts)?;
    let states = (0..d).map(|c| sol.component(c, n).to_vec()).collect();
    let period = sol.x[d * n];
    Ok(LimitCycle { grid: g, states, period, report: sol.report })
}

fn phase_row(phase: PhaseCondition, g: &Grid, d: usize) -> Result<Constraint> {
    let n = g.len();
    let (c, row, rhs, what) = match phase {
        PhaseCondition::FixValue { component, value } => {
            (component, point_functional(g, 0.0, 0)?, value, format!("y{component}(0) = {value}"))
        }
        PhaseCondition::DerivativeZero { component } => {
            (component, point_functional(g, 0.0, 1)?, 0.0, format!("y{component}'(0) = 0"))
        }
    };
    if c >= d {
        return Err(Error::InvalidArgument(format!("phase condition on component {c} of a {d}-component system")));
    }
    Ok(Constraint::new(None, row, rhs, what).for_component(c, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprgraph::{constant, func, unknown, y};

    #[test]
    fn forced_oscillator_is_exact() {
        // u'' + u(t - pi/2) = cos 2t is solved by u = -cos(2t)/5
        let g = trig_grid(16, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let e = y().diff(2) + y().delay(DelayMap::Shift(std::f64::consts::FRAC_PI_2)) - func(|t| (2.0 * t).cos());
        let u = solve_periodic_linear(e, &g).unwrap();
        for (t, v) in g.nodes().iter().zip(u.values()) {
            assert!((v + (2.0 * t).cos() / 5.0).abs() < 1e-12, "{t} {v}");
        }
    }

    #[test]
    fn constant_forcing_without_restoring_term_is_singular() {
        let g = trig_grid(16, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let r = solve_periodic_linear(y().diff(2) - constant(1.0), &g);
        assert!(matches!(r, Err(Error::SingularMatrix)), "{r:?}");
    }

    #[test]
    fn unsupported_rhs_is_rejected() {
        let p = PeriodicProblem::new(vec![y().diff(1)]);
        assert!(matches!(p.lags(), Err(Error::Unsupported(_))));
        let guess = vec![vec![0.0; 8]];
        assert!(solve_limit_cycle(&p, CycleGrid::Trig(8), &guess, 1.0, &NewtonOptions::default()).is_err());
    }

    #[test]
    fn circular_cycle_period() {
        // x' = x - y - x r^2, y' = x + y - y r^2: unit circle, period 2 pi
        let r2 = || unknown(0) * unknown(0) + unknown(1) * unknown(1);
        let p = PeriodicProblem::new(vec![
            unknown(0) - unknown(1) - unknown(0) * r2(),
            unknown(0) + unknown(1) - unknown(1) * r2(),
        ]);
        let g = trig_grid(16, 0.0, 1.0).unwrap();
        let guess = vec![
            g.nodes().iter().map(|th| 1.1 * (6.0 * th).cos()).collect(),
            g.nodes().iter().map(|th| 0.9 * (6.0 * th).sin()).collect(),
        ];
        let lc = solve_limit_cycle(&p, CycleGrid::Trig(16), &guess, 6.0, &NewtonOptions::default()).unwrap();
        assert!(lc.report.converged);
        assert!((lc.period - 2.0 * std::f64::consts::PI).abs() < 1e-12, "{}", lc.period);
        assert!((lc.states[0][0] - 1.0).abs() < 1e-12);
    }
}
