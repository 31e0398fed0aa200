//! Operator expressions with discretisation and Fréchet-derivative rules.
//!
//! A problem is written as a residual `F(y, p) = 0` built from a closed set
//! of primitive nodes. Each node knows how to produce its nodal values on a
//! [`Discretization`] and its Jacobian with respect to every unknown (all
//! solution components followed by the scalar parameters), so Newton
//! iterations need nothing problem-specific.
//!
//! The state-dependent evaluation `y(g(y))` is linearised as
//! `diag(g'(y) . (P(g(y); t) D y)) + P(g(y); t)`, using `P' = P D` for the
//! derivative of the interpolant.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::blocksys::{Discretization, HistorySpec, OutsidePolicy};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type ParamMapFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type ParamGradFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// A pointwise map `u -> f(t, u)` together with `df/du`.
#[derive(Clone)]
pub struct PointFn {
    name: String,
    f: KernelFn,
    df: KernelFn,
}

impl PointFn {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PointFn { name: name.into(), f: Arc::new(f), df: Arc::new(df) }
    }

    pub fn identity() -> Self {
        Self::new("id", |_, u| u, |_, _| 1.0)
    }

    pub fn exp() -> Self {
        Self::new("exp", |_, u| u.exp(), |_, u| u.exp())
    }

    pub fn ln() -> Self {
        Self::new("log", |_, u| u.ln(), |_, u| 1.0 / u)
    }

    pub fn sin() -> Self {
        Self::new("sin", |_, u| u.sin(), |_, u| u.cos())
    }

    pub fn cos() -> Self {
        Self::new("cos", |_, u| u.cos(), |_, u| -u.sin())
    }

    pub fn recip() -> Self {
        Self::new("recip", |_, u| 1.0 / u, |_, u| -1.0 / (u * u))
    }

    pub fn powi(k: i32) -> Self {
        Self::new(format!("pow{k}"), move |_, u| u.powi(k), move |_, u| k as f64 * u.powi(k - 1))
    }

    /// `u^e(t)` with a time-dependent exponent.
    pub fn pow_t(exponent: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let e = Arc::new(exponent);
        let e2 = e.clone();
        Self::new(
            "pow_t",
            move |t, u| u.powf(e(t)),
            move |t, u| {
                let k = e2(t);
                k * u.powf(k - 1.0)
            },
        )
    }

    pub fn eval(&self, t: f64, u: f64) -> f64 {
        (self.f)(t, u)
    }

    pub fn deriv(&self, t: f64, u: f64) -> f64 {
        (self.df)(t, u)
    }
}

impl fmt::Debug for PointFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// The argument map `tau(t)` of a delay (or advance) term.
#[derive(Clone)]
pub enum DelayMap {
    /// `t - s`.
    Shift(f64),
    /// `q t`.
    Proportional(f64),
    /// Any fixed map of `t`.
    Map(TimeFn),
    /// A map depending on the unknown parameters, with its parameter gradient.
    Parametric { map: ParamMapFn, grad: ParamGradFn },
}

impl DelayMap {
    pub fn map(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        DelayMap::Map(Arc::new(f))
    }

    pub fn parametric(
        map: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        DelayMap::Parametric { map: Arc::new(map), grad: Arc::new(grad) }
    }

    /// `t - lag / p[index]`: a fixed lag expressed in time rescaled by an
    /// unknown period.
    pub fn rescaled_shift(lag: f64, index: usize) -> Self {
        Self::parametric(
            move |t, p| t - lag / p[index],
            move |_, p| {
                let mut g = vec![0.0; p.len()];
                g[index] = lag / (p[index] * p[index]);
                g
            },
        )
    }

    pub fn eval(&self, t: f64, params: &[f64]) -> f64 {
        match self {
            DelayMap::Shift(s) => t - s,
            DelayMap::Proportional(q) => q * t,
            DelayMap::Map(f) => f(t),
            DelayMap::Parametric { map, .. } => map(t, params),
        }
    }

    fn param_grad(&self, t: f64, params: &[f64]) -> Option<Vec<f64>> {
        match self {
            DelayMap::Parametric { grad, .. } => Some(grad(t, params)),
            _ => None,
        }
    }
}

impl fmt::Debug for DelayMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayMap::Shift(s) => write!(f, "t-{s}"),
            DelayMap::Proportional(q) => write!(f, "{q}*t"),
            DelayMap::Map(_) => write!(f, "tau(t)"),
            DelayMap::Parametric { .. } => write!(f, "tau(t;p)"),
        }
    }
}

/// Expression graph node.
#[derive(Clone)]
pub enum OpExpr {
    /// Solution component `c`.
    Unknown(usize),
    IndepVar,
    Const(TimeFn),
    Diff(Box<OpExpr>, usize),
    /// `child(tau(t))`, with history for arguments outside the domain.
    DelayEval { child: Box<OpExpr>, tau: DelayMap, history: Option<HistorySpec> },
    /// `target(g(t, argument(t)))`: a delay whose argument depends on the state.
    StateDelayEval { target: Box<OpExpr>, argument: Box<OpExpr>, g: PointFn },
    /// `child'(tau(t))`; the history (if any) supplies values of the derivative.
    NeutralEval { child: Box<OpExpr>, tau: DelayMap, history: Option<HistorySpec> },
    /// `integral from T_0 to t of child`.
    Cumsum(Box<OpExpr>),
    /// `integral from T_0 to t of K(t, s) child(s) ds`.
    Volterra { kernel: KernelFn, child: Box<OpExpr> },
    Sum(Vec<OpExpr>),
    Product(Vec<OpExpr>),
    Scale(f64, Box<OpExpr>),
    Elementwise(PointFn, Box<OpExpr>),
    /// Unknown scalar parameter `p[index]`, broadcast over the nodes.
    Param(usize),
}

impl fmt::Debug for OpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpExpr::Unknown(c) => write!(f, "y{c}"),
            OpExpr::IndepVar => write!(f, "t"),
            OpExpr::Const(_) => write!(f, "c(t)"),
            OpExpr::Diff(e, k) => write!(f, "D{k}({e:?})"),
            OpExpr::DelayEval { child, tau, .. } => write!(f, "({child:?})@({tau:?})"),
            OpExpr::StateDelayEval { target, argument, g } => {
                write!(f, "({target:?})@{g:?}({argument:?})")
            }
            OpExpr::NeutralEval { child, tau, .. } => write!(f, "({child:?})'@({tau:?})"),
            OpExpr::Cumsum(e) => write!(f, "cumsum({e:?})"),
            OpExpr::Volterra { child, .. } => write!(f, "volterra({child:?})"),
            OpExpr::Sum(v) => {
                write!(f, "(")?;
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{e:?}")?;
                }
                write!(f, ")")
            }
            OpExpr::Product(v) => {
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{e:?}")?;
                }
                Ok(())
            }
            OpExpr::Scale(a, e) => write!(f, "{a}*{e:?}"),
            OpExpr::Elementwise(p, e) => write!(f, "{p:?}({e:?})"),
            OpExpr::Param(i) => write!(f, "p{i}"),
        }
    }
}

// ---- construction helpers -------------------------------------------------

/// The (first) unknown function.
pub fn y() -> OpExpr {
    OpExpr::Unknown(0)
}

pub fn unknown(c: usize) -> OpExpr {
    OpExpr::Unknown(c)
}

pub fn t() -> OpExpr {
    OpExpr::IndepVar
}

pub fn param(i: usize) -> OpExpr {
    OpExpr::Param(i)
}

pub fn constant(c: f64) -> OpExpr {
    OpExpr::Const(Arc::new(move |_| c))
}

pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> OpExpr {
    OpExpr::Const(Arc::new(f))
}

impl OpExpr {
    pub fn diff(self, order: usize) -> OpExpr {
        OpExpr::Diff(Box::new(self), order)
    }

    pub fn delay(self, tau: DelayMap) -> OpExpr {
        OpExpr::DelayEval { child: Box::new(self), tau, history: None }
    }

    pub fn delay_with_history(self, tau: DelayMap, history: HistorySpec) -> OpExpr {
        OpExpr::DelayEval { child: Box::new(self), tau, history: Some(history) }
    }

    pub fn neutral(self, tau: DelayMap) -> OpExpr {
        OpExpr::NeutralEval { child: Box::new(self), tau, history: None }
    }

    /// `self(g(t, argument(t)))`.
    pub fn at_state(self, argument: OpExpr, g: PointFn) -> OpExpr {
        OpExpr::StateDelayEval { target: Box::new(self), argument: Box::new(argument), g }
    }

    pub fn cumsum(self) -> OpExpr {
        OpExpr::Cumsum(Box::new(self))
    }

    pub fn volterra(self, kernel: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> OpExpr {
        OpExpr::Volterra { kernel: Arc::new(kernel), child: Box::new(self) }
    }

    pub fn apply(self, f: PointFn) -> OpExpr {
        OpExpr::Elementwise(f, Box::new(self))
    }

    /// True when the expression is affine in the unknowns and parameters.
    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    // 0: independent of unknowns, 1: affine, 2: nonlinear.
    fn degree(&self) -> u8 {
        match self {
            OpExpr::Unknown(_) | OpExpr::Param(_) => 1,
            OpExpr::IndepVar | OpExpr::Const(_) => 0,
            OpExpr::Diff(e, _) | OpExpr::Cumsum(e) | OpExpr::Scale(_, e) => e.degree(),
            OpExpr::Volterra { child, .. } => child.degree(),
            OpExpr::DelayEval { child, tau, .. } | OpExpr::NeutralEval { child, tau, .. } => {
                match tau {
                    DelayMap::Parametric { .. } => 2,
                    _ => child.degree(),
                }
            }
            OpExpr::StateDelayEval { .. } => 2,
            OpExpr::Elementwise(_, e) => {
                if e.degree() == 0 {
                    0
                } else {
                    2
                }
            }
            OpExpr::Sum(v) => v.iter().map(OpExpr::degree).max().unwrap_or(0),
            OpExpr::Product(v) => v.iter().map(OpExpr::degree).sum::<u8>().min(2),
        }
    }
}

impl Add for OpExpr {
    type Output = OpExpr;
    fn add(self, rhs: OpExpr) -> OpExpr {
        match self {
            OpExpr::Sum(mut v) => {
                v.push(rhs);
                OpExpr::Sum(v)
            }
            lhs => OpExpr::Sum(vec![lhs, rhs]),
        }
    }
}

impl Sub for OpExpr {
    type Output = OpExpr;
    fn sub(self, rhs: OpExpr) -> OpExpr {
        self + (-rhs)
    }
}

impl Neg for OpExpr {
    type Output = OpExpr;
    fn neg(self) -> OpExpr {
        OpExpr::Scale(-1.0, Box::new(self))
    }
}

impl Mul for OpExpr {
    type Output = OpExpr;
    fn mul(self, rhs: OpExpr) -> OpExpr {
        match self {
            OpExpr::Product(mut v) => {
                v.push(rhs);
                OpExpr::Product(v)
            }
            lhs => OpExpr::Product(vec![lhs, rhs]),
        }
    }
}

impl Mul<OpExpr> for f64 {
    type Output = OpExpr;
    fn mul(self, rhs: OpExpr) -> OpExpr {
        OpExpr::Scale(self, Box::new(rhs))
    }
}

// ---- evaluation -----------------------------------------------------------

/// Shape of the unknown vector: `components` blocks of `n` nodal values,
/// followed by `params` scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub components: usize,
    pub params: usize,
}

impl Layout {
    pub fn unknowns(&self) -> usize {
        self.n * self.components + self.params
    }
}

/// Residual values and Jacobian of an expression at a given state.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// `n x (components * n + params)`.
    pub jac: Matrix,
    pub residual: Vec<f64>,
    /// State-dependent arguments clamped into the domain during evaluation.
    pub clamped: usize,
}

struct Ctx<'a> {
    disc: &'a dyn Discretization,
    nodes: Vec<f64>,
    state: &'a [f64],
    params: &'a [f64],
    layout: Layout,
    diff_cache: RefCell<HashMap<usize, Matrix>>,
    clamped: RefCell<usize>,
}

impl<'a> Ctx<'a> {
    fn new(disc: &'a dyn Discretization, state: &'a [f64], params: &'a [f64], components: usize) -> Result<Self> {
        let n = disc.len();
        if components == 0 || state.len() != n * components {
            return Err(Error::InvalidArgument(format!(
                "state of length {} does not match {components} components of {n} values",
                state.len()
            )));
        }
        Ok(Ctx {
            disc,
            nodes: disc.nodes(),
            state,
            params,
            layout: Layout { n, components, params: params.len() },
            diff_cache: RefCell::new(HashMap::new()),
            clamped: RefCell::new(0),
        })
    }

    fn diffmat(&self, order: usize) -> Result<Matrix> {
        if let Some(m) = self.diff_cache.borrow().get(&order) {
            return Ok(m.clone());
        }
        let m = self.disc.diffmat(order)?;
        self.diff_cache.borrow_mut().insert(order, m.clone());
        Ok(m)
    }

    fn zero_jac(&self) -> Matrix {
        Matrix::zeros(self.layout.n, self.layout.unknowns())
    }

    fn param(&self, i: usize) -> Result<f64> {
        self.params.get(i).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("parameter p{i} referenced but only {} given", self.params.len()))
        })
    }
}

type Eval = (Vec<f64>, Option<Matrix>);

/// Nodal values of `e` (one value per node of `disc`).
///
/// `state` holds `components` blocks of nodal values.
pub fn discretize(
    e: &OpExpr,
    disc: &dyn Discretization,
    state: &[f64],
    params: &[f64],
    components: usize,
) -> Result<Vec<f64>> {
    let ctx = Ctx::new(disc, state, params, components)?;
    Ok(eval(e, &ctx, false)?.0)
}

/// Values and Jacobian of `e` with respect to all unknowns and parameters.
pub fn linearize(
    e: &OpExpr,
    disc: &dyn Discretization,
    state: &[f64],
    params: &[f64],
    components: usize,
) -> Result<Linearization> {
    let ctx = Ctx::new(disc, state, params, components)?;
    let (residual, jac) = eval(e, &ctx, true)?;
    let clamped = *ctx.clamped.borrow();
    Ok(Linearization { jac: jac.expect("jacobian requested"), residual, clamped })
}

fn eval(e: &OpExpr, ctx: &Ctx<'_>, jac: bool) -> Result<Eval> {
    let n = ctx.layout.n;
    match e {
        OpExpr::Unknown(c) => {
            if *c >= ctx.layout.components {
                return Err(Error::InvalidArgument(format!("unknown y{c} out of range")));
            }
            let v = ctx.state[c * n..(c + 1) * n].to_vec();
            let j = jac.then(|| {
                let mut m = ctx.zero_jac();
                for i in 0..n {
                    m[(i, c * n + i)] = 1.0;
                }
                m
            });
            Ok((v, j))
        }
        OpExpr::IndepVar => Ok((ctx.nodes.clone(), jac.then(|| ctx.zero_jac()))),
        OpExpr::Const(f) => Ok((ctx.nodes.iter().map(|&t| f(t)).collect(), jac.then(|| ctx.zero_jac()))),
        OpExpr::Param(i) => {
            let p = ctx.param(*i)?;
            let j = jac.then(|| {
                let mut m = ctx.zero_jac();
                let col = ctx.layout.n * ctx.layout.components + i;
                for r in 0..n {
                    m[(r, col)] = 1.0;
                }
                m
            });
            Ok((vec![p; n], j))
        }
        OpExpr::Diff(child, order) => {
            let (v, j) = eval(child, ctx, jac)?;
            let d = ctx.diffmat(*order)?;
            Ok((d.matvec(&v), j.map(|j| d.matmul(&j))))
        }
        OpExpr::Cumsum(child) => {
            let (v, j) = eval(child, ctx, jac)?;
            let w = ctx.disc.cumsummat()?;
            Ok((w.matvec(&v), j.map(|j| w.matmul(&j))))
        }
        OpExpr::Volterra { kernel, child } => {
            let (v, j) = eval(child, ctx, jac)?;
            let w = ctx.disc.cumsummat()?;
            let k = Matrix::from_fn(n, n, |a, b| kernel(ctx.nodes[a], ctx.nodes[b]));
            let vm = k.hadamard(&w);
            Ok((vm.matvec(&v), j.map(|j| vm.matmul(&j))))
        }
        OpExpr::DelayEval { child, tau, history } => {
            let (v, j) = eval(child, ctx, jac)?;
            delay_apply(ctx, tau, history.as_ref(), v, j)
        }
        OpExpr::NeutralEval { child, tau, history } => {
            let (v, j) = eval(child, ctx, jac)?;
            let d = ctx.diffmat(1)?;
            delay_apply(ctx, tau, history.as_ref(), d.matvec(&v), j.map(|j| d.matmul(&j)))
        }
        OpExpr::StateDelayEval { target, argument, g } => {
            let (v, jv) = eval(target, ctx, jac)?;
            let (a, ja) = eval(argument, ctx, jac)?;
            let points: Vec<f64> = ctx.nodes.iter().zip(&a).map(|(&t, &u)| g.eval(t, u)).collect();
            let (lo, hi) = ctx.disc.domain();
            let periodic = ctx.disc.is_periodic();
            let inside: Vec<bool> =
                points.iter().map(|&x| periodic || (x >= lo && x <= hi)).collect();
            let r = ctx.disc.resample(&points, OutsidePolicy::Clamp)?;
            *ctx.clamped.borrow_mut() += r.clamped;
            let values = r.matrix.matvec(&v);
            let j = match (jv, ja) {
                (Some(jv), Some(ja)) => {
                    let d = ctx.diffmat(1)?;
                    let slope = r.matrix.matvec(&d.matvec(&v));
                    let scale: Vec<f64> = (0..n)
                        .map(|i| if inside[i] { g.deriv(ctx.nodes[i], a[i]) * slope[i] } else { 0.0 })
                        .collect();
                    let mut m = r.matrix.matmul(&jv);
                    m.add_assign_scaled(&ja.scale_rows(&scale), 1.0);
                    Some(m)
                }
                _ => None,
            };
            Ok((values, j))
        }
        OpExpr::Sum(terms) => {
            let mut v = vec![0.0; n];
            let mut m = jac.then(|| ctx.zero_jac());
            for term in terms {
                let (tv, tj) = eval(term, ctx, jac)?;
                v.iter_mut().zip(&tv).for_each(|(a, b)| *a += b);
                if let (Some(m), Some(tj)) = (m.as_mut(), tj) {
                    m.add_assign_scaled(&tj, 1.0);
                }
            }
            Ok((v, m))
        }
        OpExpr::Product(factors) => {
            let evals: Vec<Eval> = factors.iter().map(|f| eval(f, ctx, jac)).collect::<Result<_>>()?;
            let mut v = vec![1.0; n];
            for (fv, _) in &evals {
                v.iter_mut().zip(fv).for_each(|(a, b)| *a *= b);
            }
            let m = if jac {
                let mut m = ctx.zero_jac();
                for (i, (_, fj)) in evals.iter().enumerate() {
                    let others: Vec<f64> = (0..n)
                        .map(|r| {
                            evals
                                .iter()
                                .enumerate()
                                .filter(|(k, _)| *k != i)
                                .map(|(_, (ov, _))| ov[r])
                                .product()
                        })
                        .collect();
                    m.add_assign_scaled(&fj.as_ref().unwrap().scale_rows(&others), 1.0);
                }
                Some(m)
            } else {
                None
            };
            Ok((v, m))
        }
        OpExpr::Scale(a, child) => {
            let (v, j) = eval(child, ctx, jac)?;
            Ok((v.iter().map(|x| a * x).collect(), j.map(|j| j.scale(*a))))
        }
        OpExpr::Elementwise(f, child) => {
            let (v, j) = eval(child, ctx, jac)?;
            let values = ctx.nodes.iter().zip(&v).map(|(&t, &u)| f.eval(t, u)).collect();
            let j = j.map(|j| {
                let d: Vec<f64> = ctx.nodes.iter().zip(&v).map(|(&t, &u)| f.deriv(t, u)).collect();
                j.scale_rows(&d)
            });
            Ok((values, j))
        }
    }
}

/// Resamples nodal values `v` (with Jacobian `j`) at `tau(t_i)`.
fn delay_apply(
    ctx: &Ctx<'_>,
    tau: &DelayMap,
    history: Option<&HistorySpec>,
    v: Vec<f64>,
    j: Option<Matrix>,
) -> Result<Eval> {
    let (lo, _) = ctx.disc.domain();
    // a lag landing exactly on the left end takes the history's left limit
    let left_limit = matches!(history, Some(HistorySpec::Explicit(_) | HistorySpec::Constant(_)));
    let below = lo - f64::EPSILON * lo.abs().max(1.0);
    let points: Vec<f64> = ctx
        .nodes
        .iter()
        .map(|&t| {
            let p = tau.eval(t, ctx.params);
            if left_limit && p == lo && t > lo {
                below
            } else {
                p
            }
        })
        .collect();
    let r = ctx.disc.resample(&points, OutsidePolicy::History(history))?;
    let mut values = r.matrix.matvec(&v);
    values.iter_mut().zip(&r.history).for_each(|(a, h)| *a += h);
    let j = match j {
        None => None,
        Some(j) => {
            let mut m = r.matrix.matmul(&j);
            if ctx.layout.params > 0 {
                if let Some(first) = tau.param_grad(ctx.nodes[0], ctx.params) {
                    let d = ctx.diffmat(1)?;
                    let slope_inside = r.matrix.matvec(&d.matvec(&v));
                    let base = ctx.layout.n * ctx.layout.components;
                    for (i, &t) in ctx.nodes.iter().enumerate() {
                        let grad = if i == 0 { first.clone() } else { tau.param_grad(t, ctx.params).unwrap() };
                        let slope = if r.outside[i] { r.history_slope[i] } else { slope_inside[i] };
                        for (p, gp) in grad.iter().enumerate().take(ctx.layout.params) {
                            m[(i, base + p)] += gp * slope;
                        }
                    }
                }
            }
            Some(m)
        }
    };
    Ok((values, j))
}
