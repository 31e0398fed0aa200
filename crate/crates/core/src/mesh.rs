//! Piecewise (multidomain) Chebyshev grids and breakpoint propagation.
//!
//! A delay `y(tau(t))` with non-smooth initial data produces derivative jumps
//! wherever `tau(t)` hits an earlier jump location. Placing panel boundaries
//! at those points keeps the solution analytic on every panel, so spectral
//! convergence survives.

use crate::error::{Error, Result};
use crate::interp::{bary_eval, cheb_grid, Grid, SampledFunction};

/// Ordered Chebyshev panels `[T_{k-1}, T_k]` covering `[T_0, T_m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseGrid {
    breakpoints: Vec<f64>,
    panels: Vec<Grid>,
    offsets: Vec<usize>,
}

impl PiecewiseGrid {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn panels(&self) -> &[Grid] {
        &self.panels
    }

    pub fn panel(&self, k: usize) -> &Grid {
        &self.panels[k]
    }

    pub fn num_panels(&self) -> usize {
        self.panels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.panels.iter().map(Grid::len).collect()
    }

    /// Index of the first unknown belonging to panel `k`.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// Total degrees of freedom.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// All collocation nodes, panel by panel. Interior breakpoints appear twice.
    pub fn nodes(&self) -> Vec<f64> {
        self.panels.iter().flat_map(|p| p.nodes().iter().copied()).collect()
    }

    /// Panel index owning global unknown `i`.
    pub fn panel_of_index(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }
}

/// Builds one Chebyshev panel per consecutive pair of breakpoints.
pub fn build_piecewise_grid(breaks: &[f64], sizes: &[usize]) -> Result<PiecewiseGrid> {
    if breaks.len() < 2 {
        return Err(Error::InvalidArgument("need at least two breakpoints".into()));
    }
    if sizes.len() != breaks.len() - 1 {
        return Err(Error::InvalidArgument(format!(
            "{} panel sizes for {} panels",
            sizes.len(),
            breaks.len() - 1
        )));
    }
    let mut panels = Vec::with_capacity(sizes.len());
    let mut offsets = vec![0];
    for (w, &n) in breaks.windows(2).zip(sizes) {
        panels.push(cheb_grid(n, w[0], w[1])?);
        offsets.push(offsets.last().unwrap() + n);
    }
    Ok(PiecewiseGrid { breakpoints: breaks.to_vec(), panels, offsets })
}

/// Panel containing `x` under the rule `T_{k-1} < x <= T_k` (0-based `k - 1`),
/// with `x = T_0` assigned to the first panel.
pub fn locate_panel(g: &PiecewiseGrid, x: f64) -> Result<usize> {
    let (lo, hi) = g.domain();
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfDomain { x, lo, hi });
    }
    let interior = &g.breakpoints[1..g.breakpoints.len() - 1];
    Ok(interior.partition_point(|&b| b < x))
}

/// Values on a [`PiecewiseGrid`], concatenated panel by panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFunction {
    grid: PiecewiseGrid,
    values: Vec<f64>,
}

impl PiecewiseFunction {
    pub fn new(grid: PiecewiseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} degrees of freedom",
                values.len(),
                grid.len()
            )));
        }
        Ok(PiecewiseFunction { grid, values })
    }

    pub fn from_fn(grid: PiecewiseGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        PiecewiseFunction { grid, values }
    }

    pub fn grid(&self) -> &PiecewiseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn panel_values(&self, k: usize) -> &[f64] {
        let start = self.grid.offset(k);
        &self.values[start..start + self.grid.panel(k).len()]
    }

    pub fn panel_function(&self, k: usize) -> SampledFunction {
        SampledFunction::new(self.grid.panel(k).clone(), self.panel_values(k).to_vec())
            .expect("panel length matches")
    }

    /// Evaluates the piecewise interpolant. At an interior breakpoint the left
    /// panel is used.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let k = locate_panel(&self.grid, x)?;
        Ok(bary_eval(&self.panel_function(k), &[x])[0])
    }
}

/// Options for [`propagate_breakpoints`].
#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    /// Maximum number of generations; `None` runs until no new point appears.
    pub max_order: Option<usize>,
    /// Samples used to verify that the delay map is increasing.
    pub monotonicity_samples: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions { max_order: None, monotonicity_samples: 2048 }
    }
}

/// Traces derivative discontinuities through a delay map.
///
/// Starting from `initial_breaks` (typically `{t0}` plus any kinks in the
/// history), each generation solves `tau(b) = c` for every point `c` of the
/// previous generation. Returns the interior points (strictly inside the
/// domain), sorted and de-duplicated to `1e-11 * max(1, |T|)`.
pub fn propagate_breakpoints(
    tau: impl Fn(f64) -> f64,
    domain: (f64, f64),
    initial_breaks: &[f64],
    options: PropagationOptions,
) -> Result<Vec<f64>> {
    let (t0, t1) = domain;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("domain [{t0}, {t1}] is empty")));
    }
    let scale = t1.abs().max(t0.abs()).max(1.0);
    let dedup_tol = 1e-11 * scale;
    let root_tol = 1e-13 * scale;

    let samples = options.monotonicity_samples.max(2);
    let mut prev = tau(t0);
    for i in 1..=samples {
        let t = t0 + (t1 - t0) * i as f64 / samples as f64;
        let v = tau(t);
        if !(v > prev) {
            return Err(Error::UnsupportedDelay(format!(
                "delay map is not strictly increasing near t = {t}; supply breakpoints manually"
            )));
        }
        prev = v;
    }

    let (tau_lo, tau_hi) = (tau(t0), tau(t1));
    let is_new = |set: &[f64], x: f64| set.iter().all(|&b| (b - x).abs() > dedup_tol);

    let mut found: Vec<f64> = Vec::new();
    for &b in initial_breaks {
        if b > t0 + dedup_tol && b < t1 - dedup_tol && is_new(&found, b) {
            found.push(b);
        }
    }
    let mut frontier: Vec<f64> = initial_breaks.to_vec();
    let mut generation = 0;
    while !frontier.is_empty() && options.max_order.map_or(true, |m| generation < m) {
        generation += 1;
        let mut next = Vec::new();
        for &c in &frontier {
            if !(c > tau_lo && c < tau_hi) {
                continue;
            }
            let b = solve_increasing(&tau, c, t0, t1, root_tol);
            if b > t0 + dedup_tol && b < t1 - dedup_tol && is_new(&found, b) {
                found.push(b);
                next.push(b);
            }
        }
        frontier = next;
    }
    found.sort_by(f64::total_cmp);
    Ok(found)
}

/// Bisection for `tau(b) = c` with `tau(lo) < c < tau(hi)`, finished by one
/// secant step across the final bracket.
fn solve_increasing(tau: &impl Fn(f64) -> f64, c: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = tau(mid);
        if v == c {
            return mid;
        }
        if v < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (tau(lo) - c, tau(hi) - c);
    if fhi == flo {
        return 0.5 * (lo + hi);
    }
    (lo - flo * (hi - lo) / (fhi - flo)).clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_delay_breakpoints() {
        let b = propagate_breakpoints(|t| t - 0.5, (0.0, 2.0), &[0.0], Default::default()).unwrap();
        assert_eq!(b, vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn quadratic_delay_breakpoints() {
        let b = propagate_breakpoints(|t| t * t - 0.25, (0.0, 1.0), &[0.0], Default::default()).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b[0] - 0.5).abs() < 1e-12);
        assert!((b[1] - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn max_order_truncates() {
        let opts = PropagationOptions { max_order: Some(2), ..Default::default() };
        let b = propagate_breakpoints(|t| t - 0.5, (0.0, 2.0), &[0.0], opts).unwrap();
        assert_eq!(b, vec![0.5, 1.0]);
    }

    #[test]
    fn no_active_delay_keeps_seed() {
        // tau(t) = t - 5 never reaches the domain.
        let b = propagate_breakpoints(|t| t - 5.0, (0.0, 2.0), &[0.0, 0.7], Default::default()).unwrap();
        assert_eq!(b, vec![0.7]);
    }

    #[test]
    fn non_monotone_rejected() {
        let r = propagate_breakpoints(|t| (t - 0.5).powi(2) - 1.0, (0.0, 1.0), &[0.0], Default::default());
        assert!(matches!(r, Err(Error::UnsupportedDelay(_))));
    }

    #[test]
    fn piecewise_grid_layout() {
        let g = build_piecewise_grid(&[0.0, 0.5, 1.0], &[10, 11]).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g.offset(1), 10);
        assert_eq!((g.panel(0).a(), g.panel(0).b()), (0.0, 0.5));
        assert_eq!((g.panel(1).a(), g.panel(1).b()), (0.5, 1.0));
        assert_eq!(g.panel(1).len(), 11);
        assert_eq!(g.panel_of_index(9), 0);
        assert_eq!(g.panel_of_index(10), 1);
        assert!(build_piecewise_grid(&[0.0, 1.0], &[4, 4]).is_err());
        let s = 3f64.sqrt() / 2.0;
        let g3 = build_piecewise_grid(&[0.0, 0.5, s, 1.0], &[12, 12, 12]).unwrap();
        assert_eq!(g3.num_panels(), 3);
        assert!((g3.panel(1).width() - (s - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn locate_panel_rule() {
        let g = build_piecewise_grid(&[0.0, 0.5, 1.0], &[4, 4]).unwrap();
        assert_eq!(locate_panel(&g, 0.5).unwrap(), 0);
        assert_eq!(locate_panel(&g, 0.0).unwrap(), 0);
        assert_eq!(locate_panel(&g, 0.75).unwrap(), 1);
        assert_eq!(locate_panel(&g, 1.0).unwrap(), 1);
        assert!(matches!(locate_panel(&g, 1.2), Err(Error::OutOfDomain { .. })));
        assert!(locate_panel(&g, -0.1).is_err());
    }

    #[test]
    fn piecewise_eval_prefers_left_panel() {
        let g = build_piecewise_grid(&[0.0, 0.5, 1.0], &[3, 3]).unwrap();
        // left panel all zeros, right panel all ones: discontinuous at 0.5
        let f = PiecewiseFunction::new(g, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(f.eval(0.5).unwrap(), 0.0);
        assert_eq!(f.eval(0.75).unwrap(), 1.0);
    }
}
