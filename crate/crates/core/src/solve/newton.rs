use crate::blocksys::{BlockSystem, Constraint, Discretization};
use crate::error::{Error, Result};
use crate::exprgraph::{discretize, linearize, OpExpr};
use crate::matrix::{norm_inf, Matrix};

use super::lu::{cond_inf, Lu};

/// A square collocation problem: one residual expression per solution
/// component, linear side conditions, and optional scalar parameters.
///
/// The unknown vector is every component's nodal values (component-major)
/// followed by the parameters. Constraints with a position overwrite that
/// collocation row; the others are appended in order, one per parameter.
pub struct Problem<'a> {
    pub disc: &'a dyn Discretization,
    pub equations: Vec<OpExpr>,
    pub constraints: Vec<Constraint>,
    pub n_params: usize,
}

impl<'a> Problem<'a> {
    pub fn new(disc: &'a dyn Discretization, equations: Vec<OpExpr>) -> Self {
        Problem { disc, equations, constraints: Vec::new(), n_params: 0 }
    }

    pub fn scalar(disc: &'a dyn Discretization, equation: OpExpr) -> Self {
        Self::new(disc, vec![equation])
    }

    pub fn with_constraints(mut self, constraints: impl IntoIterator<Item = Constraint>) -> Self {
        self.constraints.extend(constraints);
        self
    }

    pub fn with_params(mut self, n_params: usize) -> Self {
        self.n_params = n_params;
        self
    }

    pub fn components(&self) -> usize {
        self.equations.len()
    }

    pub fn unknowns(&self) -> usize {
        self.disc.len() * self.components() + self.n_params
    }

    pub fn is_affine(&self) -> bool {
        self.equations.iter().all(OpExpr::is_affine)
    }

    fn check_shape(&self) -> Result<()> {
        let rows = self.disc.len() * self.components();
        let appended = self.constraints.iter().filter(|c| c.position.is_none()).count();
        if rows + appended != self.unknowns() {
            return Err(Error::InvalidArgument(format!(
                "{} rows ({} collocation + {appended} appended) for {} unknowns",
                rows + appended,
                rows,
                self.unknowns()
            )));
        }
        let mut seen = Vec::new();
        for c in &self.constraints {
            if c.coeffs.len() > self.unknowns() {
                return Err(Error::InvalidArgument(format!("constraint '{}' is too long", c.description)));
            }
            if let Some(p) = c.position {
                if p >= rows || seen.contains(&p) {
                    return Err(Error::InvalidArgument(format!(
                        "constraint '{}' targets row {p}, which is out of range or already used",
                        c.description
                    )));
                }
                seen.push(p);
            }
        }
        Ok(())
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64]) {
        x.split_at(self.disc.len() * self.components())
    }

    fn border_residual(&self, r: &mut Vec<f64>, x: &[f64]) {
        for c in &self.constraints {
            let v = c.apply(x) - c.rhs;
            match c.position {
                Some(p) => r[p] = v,
                None => r.push(v),
            }
        }
    }

    /// Bordered residual at `x`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_shape()?;
        let (state, params) = self.split(x);
        let mut r = Vec::with_capacity(self.unknowns());
        for e in &self.equations {
            r.extend(discretize(e, self.disc, state, params, self.components())?);
        }
        self.border_residual(&mut r, x);
        Ok(r)
    }

    /// Bordered residual and Jacobian at `x`, plus the number of clamped
    /// state-dependent evaluations.
    pub fn linearize(&self, x: &[f64]) -> Result<(Matrix, Vec<f64>, usize)> {
        self.check_shape()?;
        let n = self.disc.len();
        let m = self.unknowns();
        let (state, params) = self.split(x);
        let mut jac = Matrix::zeros(m, m);
        let mut r = Vec::with_capacity(m);
        let mut clamped = 0;
        for (c, e) in self.equations.iter().enumerate() {
            let lin = linearize(e, self.disc, state, params, self.components())?;
            jac.set_block(c * n, 0, &lin.jac);
            r.extend(lin.residual);
            clamped += lin.clamped;
        }
        let mut next = n * self.components();
        for c in &self.constraints {
            let row = match c.position {
                Some(p) => p,
                None => {
                    next += 1;
                    next - 1
                }
            };
            let dst = jac.row_mut(row);
            dst.iter_mut().for_each(|v| *v = 0.0);
            dst[..c.coeffs.len()].copy_from_slice(&c.coeffs);
        }
        self.border_residual(&mut r, x);
        Ok((jac, r, clamped))
    }

    /// For affine problems: the system `J x = b` with `b = -residual(0)`.
    pub fn assemble_linear(&self) -> Result<BlockSystem> {
        if !self.is_affine() {
            return Err(Error::InvalidArgument("problem is not affine".into()));
        }
        let zero = vec![0.0; self.unknowns()];
        let (jac, r, _) = self.linearize(&zero)?;
        let mut sys = BlockSystem::new(jac, r.iter().map(|v| -v).collect())?;
        sys.constraint_rows = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (c.position.unwrap_or(self.disc.len() * self.components() + i), c.description.clone()))
            .collect();
        Ok(sys)
    }
}

/// Solution of an affine problem and the condition number of its matrix.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub cond: f64,
}

pub fn solve_linear(problem: &Problem<'_>) -> Result<LinearSolution> {
    let sys = problem.assemble_linear()?;
    let lu = Lu::factor(&sys.matrix)?;
    let x = lu.solve(&sys.rhs);
    let cond = sys.matrix.norm_inf() * lu.inverse().norm_inf();
    Ok(LinearSolution { x, cond })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iteration {
    pub residual_norm: f64,
    pub update_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub iterations: Vec<Iteration>,
    pub converged: bool,
    pub final_jacobian_cond: f64,
    /// Total clamped state-dependent evaluations across all iterations.
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Update-norm tolerance; `None` means `1e-12 (1 + ||y||_inf)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Parameters (by index) that must stay positive, such as a period.
    pub positive_params: Vec<usize>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: None, max_iter: 25, positive_params: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub report: NewtonReport,
}

impl NewtonSolution {
    /// Nodal values of component `c`.
    pub fn component(&self, c: usize, n: usize) -> &[f64] {
        &self.x[c * n..(c + 1) * n]
    }

    pub fn params(&self, n_state: usize) -> &[f64] {
        &self.x[n_state..]
    }
}

/// Undamped Newton iteration `x <- x - J(x)^-1 r(x)`.
///
/// Stops when the update norm falls below the tolerance. Running out of
/// iterations is reported through `converged = false`, not as an error.
pub fn newton(problem: &Problem<'_>, x0: Vec<f64>, opts: &NewtonOptions) -> Result<NewtonSolution> {
    if x0.len() != problem.unknowns() {
        return Err(Error::InvalidArgument(format!(
            "initial guess has {} entries, problem has {} unknowns",
            x0.len(),
            problem.unknowns()
        )));
    }
    let n_state = problem.disc.len() * problem.components();
    let mut x = x0;
    let mut report = NewtonReport { iterations: Vec::new(), converged: false, final_jacobian_cond: f64::NAN, clamped: 0 };
    let mut last_jac = None;
    for _ in 0..opts.max_iter {
        let (jac, r, clamped) = problem.linearize(&x)?;
        report.clamped += clamped;
        let lu = Lu::factor(&jac)?;
        let delta = lu.solve(&r);
        if !delta.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularMatrix);
        }
        x.iter_mut().zip(&delta).for_each(|(a, d)| *a -= d);
        let update = norm_inf(&delta);
        report.iterations.push(Iteration { residual_norm: norm_inf(&r), update_norm: update });
        last_jac = Some(jac);
        for &p in &opts.positive_params {
            let v = x[n_state + p];
            if v <= 0.0 {
                return Err(Error::NonPositivePeriod(v));
            }
        }
        let tol = opts.tol.unwrap_or(1e-12 * (1.0 + norm_inf(&x[..n_state])));
        if update <= tol {
            report.converged = true;
            break;
        }
    }
    if let Some(j) = last_jac {
        report.final_jacobian_cond = cond_inf(&j)?;
    }
    Ok(NewtonSolution { x, report })
}
