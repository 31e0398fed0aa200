//! Assembly of block collocation systems.
//!
//! The unknowns of a multidomain problem are the nodal values of every panel,
//! stacked panel by panel. Differential operators act block-diagonally, delay
//! terms produce resampling blocks `P_{j,k}` (row `l` of block `(j,k)` is the
//! interpolation row for the point `tau(t_j)[l]` if that point lies in panel
//! `k`), and constraint rows (boundary and continuity conditions) overwrite
//! selected collocation rows.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::{self, barymat, cumsummat, diffmat, wrap_periodic, Grid, GridKind};
use crate::matrix::Matrix;
use crate::mesh::{locate_panel, PiecewiseGrid};

/// Values of the solution for arguments outside the computational domain.
#[derive(Clone)]
pub enum HistorySpec {
    /// `phi(t)`, used for any argument outside `[T_0, T_m]`.
    Explicit(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Constant history, equivalent to replacing `tau` by `max(tau, T_0)`
    /// when the constant matches the initial value.
    Constant(f64),
    /// Periodic continuation with the given period: `y(T_0 + mod(tau - T_0, T))`.
    Periodic(f64),
}

impl HistorySpec {
    pub fn explicit(phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        HistorySpec::Explicit(Arc::new(phi))
    }

    pub fn periodic(period: f64) -> Result<Self> {
        if period > 0.0 {
            Ok(HistorySpec::Periodic(period))
        } else {
            Err(Error::InvalidArgument(format!("period must be positive, got {period}")))
        }
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        match self {
            HistorySpec::Explicit(phi) => phi(x),
            HistorySpec::Constant(c) => *c,
            HistorySpec::Periodic(_) => unreachable!("periodic history is resolved by wrapping"),
        }
    }

    /// Derivative of the history, by central difference for explicit maps.
    fn derivative(&self, x: f64) -> f64 {
        match self {
            HistorySpec::Explicit(phi) => {
                let h = 1e-6 * x.abs().max(1.0);
                (phi(x + h) - phi(x - h)) / (2.0 * h)
            }
            _ => 0.0,
        }
    }
}

impl fmt::Debug for HistorySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistorySpec::Explicit(_) => write!(f, "Explicit(<fn>)"),
            HistorySpec::Constant(c) => write!(f, "Constant({c})"),
            HistorySpec::Periodic(p) => write!(f, "Periodic({p})"),
        }
    }
}

/// What to do with a resampling point that lands outside the domain.
#[derive(Debug, Clone, Copy)]
pub enum OutsidePolicy<'a> {
    /// Use the history (error if there is none).
    History(Option<&'a HistorySpec>),
    /// Clamp to the nearest end of the domain and count the event.
    Clamp,
}

/// Result of resampling nodal values at a set of points.
#[derive(Debug, Clone)]
pub struct Resampling {
    /// `m x N` interpolation rows; zero rows where history is used.
    pub matrix: Matrix,
    /// History values for rows outside the domain, zero elsewhere.
    pub history: Vec<f64>,
    /// History derivatives for rows outside the domain, zero elsewhere.
    pub history_slope: Vec<f64>,
    /// Rows whose value comes from the history.
    pub outside: Vec<bool>,
    /// Number of points clamped into the domain.
    pub clamped: usize,
}

/// A collocation discretisation of functions on an interval.
pub trait Discretization: Send + Sync {
    fn len(&self) -> usize;
    fn nodes(&self) -> Vec<f64>;
    fn domain(&self) -> (f64, f64);
    fn diffmat(&self, order: usize) -> Result<Matrix>;
    fn resample(&self, points: &[f64], policy: OutsidePolicy<'_>) -> Result<Resampling>;
    /// Indefinite integral from the left end of the domain.
    fn cumsummat(&self) -> Result<Matrix>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Periodic discretisations wrap every point into the domain.
    fn is_periodic(&self) -> bool {
        false
    }
}

impl Discretization for PiecewiseGrid {
    fn len(&self) -> usize {
        PiecewiseGrid::len(self)
    }

    fn nodes(&self) -> Vec<f64> {
        PiecewiseGrid::nodes(self)
    }

    fn domain(&self) -> (f64, f64) {
        PiecewiseGrid::domain(self)
    }

    fn diffmat(&self, order: usize) -> Result<Matrix> {
        let n = PiecewiseGrid::len(self);
        let mut d = Matrix::zeros(n, n);
        for (k, panel) in self.panels().iter().enumerate() {
            let off = self.offset(k);
            d.set_block(off, off, &diffmat(panel, order)?);
        }
        Ok(d)
    }

    fn resample(&self, points: &[f64], policy: OutsidePolicy<'_>) -> Result<Resampling> {
        let n = PiecewiseGrid::len(self);
        let (lo, hi) = PiecewiseGrid::domain(self);
        let m = points.len();
        let mut out = Resampling {
            matrix: Matrix::zeros(m, n),
            history: vec![0.0; m],
            history_slope: vec![0.0; m],
            outside: vec![false; m],
            clamped: 0,
        };
        for (j, &raw) in points.iter().enumerate() {
            let mut x = raw;
            if !(x >= lo && x <= hi) {
                match policy {
                    OutsidePolicy::Clamp => {
                        x = if x.is_nan() { lo } else { x.clamp(lo, hi) };
                        out.clamped += 1;
                    }
                    OutsidePolicy::History(Some(HistorySpec::Periodic(period))) => {
                        x = wrap_periodic(x, lo, lo + period);
                        if !(x >= lo && x <= hi) {
                            return Err(Error::MissingHistory { x: raw });
                        }
                    }
                    OutsidePolicy::History(Some(h)) => {
                        out.history[j] = h.value(x);
                        out.history_slope[j] = h.derivative(x);
                        out.outside[j] = true;
                        continue;
                    }
                    OutsidePolicy::History(None) => return Err(Error::MissingHistory { x: raw }),
                }
            }
            let k = locate_panel(self, x)?;
            let row = barymat(&[x], self.panel(k))?;
            let off = self.offset(k);
            out.matrix.row_mut(j)[off..off + row.cols()].copy_from_slice(row.row(0));
        }
        Ok(out)
    }

    fn cumsummat(&self) -> Result<Matrix> {
        let n = PiecewiseGrid::len(self);
        let mut w = Matrix::zeros(n, n);
        let qs: Vec<Matrix> = self.panels().iter().map(cumsummat).collect::<Result<_>>()?;
        for (p, q) in qs.iter().enumerate() {
            let off = self.offset(p);
            for l in 0..q.rows() {
                let i = off + l;
                // full integrals over every earlier panel, then the partial one
                for (r, qr) in qs.iter().enumerate().take(p) {
                    let c0 = self.offset(r);
                    w.row_mut(i)[c0..c0 + qr.cols()].copy_from_slice(qr.row(qr.rows() - 1));
                }
                w.row_mut(i)[off..off + q.cols()].copy_from_slice(q.row(l));
            }
        }
        Ok(w)
    }
}

/// Periodic (trigonometric) grids: every point is wrapped, so no history is
/// ever consulted.
impl Discretization for Grid {
    fn len(&self) -> usize {
        Grid::len(self)
    }

    fn nodes(&self) -> Vec<f64> {
        Grid::nodes(self).to_vec()
    }

    fn domain(&self) -> (f64, f64) {
        (self.a(), self.b())
    }

    fn is_periodic(&self) -> bool {
        self.kind() == GridKind::TrigUniform
    }

    fn diffmat(&self, order: usize) -> Result<Matrix> {
        diffmat(self, order)
    }

    fn resample(&self, points: &[f64], policy: OutsidePolicy<'_>) -> Result<Resampling> {
        let m = points.len();
        let matrix = match self.kind() {
            GridKind::TrigUniform => interp::trig_barymat(points, self)?,
            GridKind::ChebyshevLobatto => {
                let single = crate::mesh::build_piecewise_grid(&[self.a(), self.b()], &[Grid::len(self)])?;
                return single.resample(points, policy);
            }
        };
        Ok(Resampling {
            matrix,
            history: vec![0.0; m],
            history_slope: vec![0.0; m],
            outside: vec![false; m],
            clamped: 0,
        })
    }

    fn cumsummat(&self) -> Result<Matrix> {
        match self.kind() {
            GridKind::ChebyshevLobatto => cumsummat(self),
            GridKind::TrigUniform => {
                Err(Error::Unsupported("indefinite integration on a periodic grid".into()))
            }
        }
    }
}

/// The delay operator `y(tau(t))` on a multidomain grid, together with the
/// history contribution for nodes where `tau` leaves the domain.
pub fn delay_block(
    g: &PiecewiseGrid,
    tau: impl Fn(f64) -> f64,
    history: Option<&HistorySpec>,
) -> Result<(Matrix, Vec<f64>)> {
    let points: Vec<f64> = g.nodes().into_iter().map(tau).collect();
    let r = g.resample(&points, OutsidePolicy::History(history))?;
    Ok((r.matrix, r.history))
}

/// A linear side condition `coeffs . x = rhs`.
///
/// `position` is the row of the collocation system it overwrites; `None`
/// appends it (used when unknown parameters enlarge the system).
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub position: Option<usize>,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub description: String,
}

impl Constraint {
    pub fn new(position: Option<usize>, coeffs: Vec<f64>, rhs: f64, description: impl Into<String>) -> Self {
        Constraint { position, coeffs, rhs, description: description.into() }
    }

    /// Moves a single-component constraint onto component `c` of a system
    /// with `n` values per component.
    pub fn for_component(mut self, c: usize, n: usize) -> Self {
        if c > 0 {
            let mut coeffs = vec![0.0; c * n];
            coeffs.extend_from_slice(&self.coeffs);
            self.coeffs = coeffs;
            self.position = self.position.map(|p| p + c * n);
        }
        self
    }

    /// Dot product with a full unknown vector (missing trailing coefficients
    /// are zero).
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Row functional evaluating the `derivative`-th derivative at `x`.
pub fn point_functional(d: &dyn Discretization, x: f64, derivative: usize) -> Result<Vec<f64>> {
    let r = d.resample(&[x], OutsidePolicy::History(None))?;
    if derivative == 0 {
        return Ok(r.matrix.row(0).to_vec());
    }
    let dm = d.diffmat(derivative)?;
    Ok(r.matrix.matmul(&dm).row(0).to_vec())
}

/// Boundary condition `y^(derivative)(x) = value` placed at `position`.
pub fn point_condition(
    d: &dyn Discretization,
    x: f64,
    derivative: usize,
    value: f64,
    position: Option<usize>,
) -> Result<Constraint> {
    let coeffs = point_functional(d, x, derivative)?;
    let prime = "'".repeat(derivative);
    Ok(Constraint::new(position, coeffs, value, format!("y{prime}({x}) = {value}")))
}

/// One continuity condition at an interior breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityRow {
    pub interface: usize,
    pub derivative: usize,
    /// Row replaced by this condition (see [`continuity_rows`]).
    pub position: usize,
    pub row: Vec<f64>,
}

/// Continuity of derivatives `0..order` across every interior breakpoint:
/// `[-e_last^T D_L^d | e_first^T D_R^d] y = 0`.
///
/// Value continuity replaces the first row of the right panel; first-derivative
/// continuity replaces the last row of the left panel (higher derivatives
/// alternate inwards).
pub fn continuity_rows(g: &PiecewiseGrid, order: usize) -> Result<Vec<ContinuityRow>> {
    if order == 0 {
        return Err(Error::InvalidArgument("continuity order must be at least 1".into()));
    }
    let min_size = g.sizes().into_iter().min().unwrap_or(0);
    if order + 1 > min_size {
        return Err(Error::InvalidArgument(format!(
            "continuity of {order} derivatives needs panels with more than {order} points"
        )));
    }
    let n = g.len();
    let mut rows = Vec::new();
    for iface in 0..g.num_panels() - 1 {
        let (left, right) = (g.panel(iface), g.panel(iface + 1));
        let (lo, ro) = (g.offset(iface), g.offset(iface + 1));
        for d in 0..order {
            let mut row = vec![0.0; n];
            if d == 0 {
                row[lo + left.len() - 1] = -1.0;
                row[ro] = 1.0;
            } else {
                let dl = diffmat(left, d)?;
                let dr = diffmat(right, d)?;
                for (k, v) in dl.row(left.len() - 1).iter().enumerate() {
                    row[lo + k] = -v;
                }
                for (k, v) in dr.row(0).iter().enumerate() {
                    row[ro + k] = *v;
                }
            }
            let position =
                if d % 2 == 0 { ro + d / 2 } else { lo + left.len() - 1 - d / 2 };
            rows.push(ContinuityRow { interface: iface, derivative: d, position, row });
        }
    }
    Ok(rows)
}

impl From<ContinuityRow> for Constraint {
    fn from(c: ContinuityRow) -> Self {
        Constraint::new(
            Some(c.position),
            c.row,
            0.0,
            format!("continuity of derivative {} at interface {}", c.derivative, c.interface),
        )
    }
}

/// Square collocation system with bordered constraint rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
    pub constraint_rows: Vec<(usize, String)>,
}

impl BlockSystem {
    pub fn new(matrix: Matrix, rhs: Vec<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != rhs.len() {
            return Err(Error::InvalidArgument(format!(
                "system {}x{} with rhs of length {}",
                matrix.rows(),
                matrix.cols(),
                rhs.len()
            )));
        }
        Ok(BlockSystem { matrix, rhs, constraint_rows: Vec::new() })
    }
}

/// Replaces rows of `system` with constraint rows ("boundary bordering").
pub fn border(mut system: BlockSystem, rows: &[Constraint]) -> Result<BlockSystem> {
    let n = system.matrix.rows();
    let mut seen: Vec<usize> = system.constraint_rows.iter().map(|(p, _)| *p).collect();
    for c in rows {
        let p = c.position.ok_or_else(|| {
            Error::InvalidArgument(format!("constraint '{}' has no row position", c.description))
        })?;
        if p >= n {
            return Err(Error::InvalidArgument(format!("row {p} out of range for {n} rows")));
        }
        if seen.contains(&p) {
            return Err(Error::InvalidArgument(format!("row {p} bordered twice")));
        }
        if c.coeffs.len() > n {
            return Err(Error::InvalidArgument(format!(
                "constraint '{}' has {} coefficients for {n} unknowns",
                c.description,
                c.coeffs.len()
            )));
        }
        seen.push(p);
        let row = system.matrix.row_mut(p);
        row.iter_mut().for_each(|v| *v = 0.0);
        row[..c.coeffs.len()].copy_from_slice(&c.coeffs);
        system.rhs[p] = c.rhs;
        system.constraint_rows.push((p, c.description.clone()));
    }
    Ok(system)
}

/// Standard constraints for a first-order initial value problem on a
/// multidomain grid: `y(T_0) = y0` in row 0, value continuity in the first row
/// of every later panel.
pub fn ivp_constraints(g: &PiecewiseGrid, y0: f64) -> Result<Vec<Constraint>> {
    let mut out = vec![point_condition(g, g.domain().0, 0, y0, Some(0))?];
    out.extend(continuity_rows(g, 1)?.into_iter().map(Constraint::from).collect::<Vec<_>>());
    Ok(out)
}
