//! Collocation grids, barycentric interpolation and the matrices built from it.
//!
//! Two node families are supported:
//!
//! * Chebyshev-Gauss-Lobatto points mapped affinely to `[a, b]`, with the
//!   closed-form barycentric weights `1/2, -1, 1, ..., ±1/2`;
//! * equispaced points on the periodic interval `[a, b)`, interpolated by
//!   trigonometric polynomials.
//!
//! Every operator is a dense [`Matrix`] acting on nodal values: the
//! differentiation matrix `D`, the resampling matrix `P(tau; t)` which maps
//! values at the nodes to values of the interpolant at arbitrary points, and
//! the indefinite-integration matrix `Q`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    ChebyshevLobatto,
    TrigUniform,
}

/// Nodes, barycentric weights and interval of one collocation panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
}

impl Grid {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn bary_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Length of the interval; for trigonometric grids this is the period.
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    fn require(&self, kind: GridKind, op: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{op} requires a {kind:?} grid, got {:?}", self.kind)))
        }
    }
}

fn check_interval(n: usize, a: f64, b: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {n}")));
    }
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::InvalidArgument(format!("interval [{a}, {b}] must satisfy a < b")));
    }
    Ok(())
}

/// `n` Chebyshev points of the second kind mapped to `[a, b]`, ascending.
pub fn cheb_grid(n: usize, a: f64, b: f64) -> Result<Grid> {
    check_interval(n, a, b)?;
    let m = (n - 1) as f64;
    let half_width = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    // sin form of -cos((k-1)pi/(n-1)): exactly antisymmetric about the centre.
    let mut nodes: Vec<f64> = (0..n)
        .map(|k| {
            let x = (PI * (2.0 * k as f64 - m) / (2.0 * m)).sin();
            mid + half_width * x
        })
        .collect();
    nodes[0] = a;
    nodes[n - 1] = b;

    let weights = (0..n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n - 1 {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect();

    Ok(Grid { a, b, nodes, weights, kind: GridKind::ChebyshevLobatto })
}

/// `n` equispaced nodes on the periodic interval `[a, b)`.
pub fn trig_grid(n: usize, a: f64, b: f64) -> Result<Grid> {
    check_interval(n, a, b)?;
    let h = (b - a) / n as f64;
    let nodes = (0..n).map(|k| a + k as f64 * h).collect();
    let weights = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Ok(Grid { a, b, nodes, weights, kind: GridKind::TrigUniform })
}

/// Fills `out` with the Lagrange basis values `l_k(tau)` at a single point.
fn bary_row(tau: f64, nodes: &[f64], weights: &[f64], out: &mut [f64]) {
    let mut sum = 0.0;
    for ((o, &t), &w) in out.iter_mut().zip(nodes).zip(weights) {
        *o = w / (tau - t);
        sum += *o;
    }
    let mut finite = true;
    for o in out.iter_mut() {
        *o /= sum;
        finite &= o.is_finite();
    }
    if !finite {
        // tau hit a node (0/0) or came close enough to overflow: unit row.
        let hit = nearest(tau, nodes);
        out.iter_mut().for_each(|o| *o = 0.0);
        out[hit] = 1.0;
    }
}

fn nearest(x: f64, nodes: &[f64]) -> usize {
    nodes
        .iter()
        .enumerate()
        .min_by(|(_, p), (_, q)| (x - **p).abs().total_cmp(&(x - **q).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Resampling matrix `P(tau; t)`: row `j` evaluates the interpolant at `tau[j]`.
pub fn barymat(tau: &[f64], g: &Grid) -> Result<Matrix> {
    g.require(GridKind::ChebyshevLobatto, "barymat")?;
    let n = g.len();
    let mut p = Matrix::zeros(tau.len(), n);
    for (j, &x) in tau.iter().enumerate() {
        bary_row(x, &g.nodes, &g.weights, p.row_mut(j));
    }
    Ok(p)
}

/// Pseudospectral differentiation matrix of the given order.
///
/// Orders above one are formed as powers of the first-order matrix. Direct
/// formulas are somewhat more accurate for large `n`; at the sizes used here
/// (n below a few hundred) the difference is a few digits in the second
/// derivative at worst.
pub fn diffmat(g: &Grid, order: usize) -> Result<Matrix> {
    match g.kind {
        GridKind::ChebyshevLobatto => {
            if order == 0 {
                return Err(Error::InvalidArgument("derivative order must be at least 1".into()));
            }
            Ok(cheb_diffmat1(g).pow(order))
        }
        GridKind::TrigUniform => trig_diffmat(g, order),
    }
}

fn cheb_diffmat1(g: &Grid) -> Matrix {
    let n = g.len();
    let (t, w) = (&g.nodes, &g.weights);
    let mut d = Matrix::zeros(n, n);
    for j in 0..n {
        let mut row_sum = 0.0;
        for k in 0..n {
            if j != k {
                let v = w[k] / (w[j] * (t[j] - t[k]));
                d[(j, k)] = v;
                row_sum += v;
            }
        }
        d[(j, j)] = -row_sum;
    }
    d
}

/// Chebyshev coefficients `c_0..c_{n-1}` of the interpolant to values on a
/// Chebyshev-Lobatto grid (of any interval).
pub fn cheb_coeffs(values: &[f64]) -> Vec<f64> {
    cheb_coeff_matrix(values.len()).matvec(values)
}

fn cheb_coeff_matrix(n: usize) -> Matrix {
    let m = (n - 1) as f64;
    Matrix::from_fn(n, n, |k, j| {
        // T_k at the ascending node j is (-1)^k cos(k j pi / (n-1)).
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut v = sign * (PI * (k * j) as f64 / m).cos() * 2.0 / m;
        if j == 0 || j == n - 1 {
            v *= 0.5;
        }
        if k == 0 || k == n - 1 {
            v *= 0.5;
        }
        v
    })
}

/// Indefinite integration matrix: `(Q y)_j = integral from a to t_j` of the
/// interpolant of `y`.
///
/// Built in coefficient space: values to Chebyshev coefficients, termwise
/// antiderivative (degree grows by one), constant fixed so the result
/// vanishes at `a`, then evaluation back at the nodes.
pub fn cumsummat(g: &Grid) -> Result<Matrix> {
    g.require(GridKind::ChebyshevLobatto, "cumsummat")?;
    let n = g.len();
    let m = (n - 1) as f64;
    let to_coeffs = cheb_coeff_matrix(n);

    // Antiderivative coefficients b_0..b_n from c_0..c_{n-1}.
    let mut integrate = Matrix::zeros(n + 1, n);
    for k in 1..=n {
        let kf = k as f64;
        if k == 1 {
            integrate[(1, 0)] += 1.0;
            if n > 2 {
                integrate[(1, 2)] -= 0.5;
            }
        } else {
            integrate[(k, k - 1)] += 1.0 / (2.0 * kf);
            if k + 1 < n {
                integrate[(k, k + 1)] -= 1.0 / (2.0 * kf);
            }
        }
    }
    // b_0 makes the antiderivative vanish at x = -1, where T_k = (-1)^k.
    for c in 0..n {
        let mut s = 0.0;
        for k in 1..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * integrate[(k, c)];
        }
        integrate[(0, c)] = -s;
    }

    let evaluate = Matrix::from_fn(n, n + 1, |j, k| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * (PI * (k * j) as f64 / m).cos()
    });

    let mut q = evaluate.matmul(&integrate).matmul(&to_coeffs).scale(0.5 * g.width());
    q.row_mut(0).iter_mut().for_each(|v| *v = 0.0);
    Ok(q)
}

/// Reduces `x` into `[a, b)` modulo the period `b - a`.
pub fn wrap_periodic(x: f64, a: f64, b: f64) -> f64 {
    let period = b - a;
    let mut r = a + (x - a).rem_euclid(period);
    if r >= b {
        r -= period;
    }
    r
}

/// Trigonometric resampling matrix on a periodic grid. Points outside `[a, b)`
/// are wrapped first.
pub fn trig_barymat(tau: &[f64], g: &Grid) -> Result<Matrix> {
    g.require(GridKind::TrigUniform, "trig_barymat")?;
    let n = g.len();
    let scale = PI / g.width();
    let odd = n % 2 == 1;
    let mut p = Matrix::zeros(tau.len(), n);
    for (j, &x) in tau.iter().enumerate() {
        let z = wrap_periodic(x, g.a, g.b);
        let row = p.row_mut(j);
        let mut sum = 0.0;
        for (k, (o, &t)) in row.iter_mut().zip(&g.nodes).enumerate() {
            let arg = (z - t) * scale;
            let kernel = if odd { 1.0 / arg.sin() } else { 1.0 / arg.tan() };
            *o = if k % 2 == 0 { kernel } else { -kernel };
            sum += *o;
        }
        let mut finite = true;
        for o in row.iter_mut() {
            *o /= sum;
            finite &= o.is_finite();
        }
        if !finite {
            let hit = nearest(z, &g.nodes);
            row.iter_mut().for_each(|o| *o = 0.0);
            row[hit] = 1.0;
        }
    }
    Ok(p)
}

/// Periodic spectral differentiation matrix of any order on `[a, b)`.
///
/// The matrix is circulant; its first column is the inverse discrete Fourier
/// transform of `(i k w)^order`, `w = 2 pi / (b - a)`. For even `n` the
/// Nyquist mode is dropped for odd orders and kept for even ones.
pub fn trig_diffmat(g: &Grid, order: usize) -> Result<Matrix> {
    g.require(GridKind::TrigUniform, "trig_diffmat")?;
    let n = g.len();
    let omega = 2.0 * PI / g.width();
    let kmax = (n - 1) / 2;
    let phase = order as f64 * PI / 2.0;
    let column: Vec<f64> = (0..n)
        .map(|d| {
            let theta = 2.0 * PI * d as f64 / n as f64;
            let mut s = if order == 0 { 1.0 } else { 0.0 };
            for k in 1..=kmax {
                let kf = k as f64;
                s += 2.0 * (kf * omega).powi(order as i32) * (kf * theta + phase).cos();
            }
            if n.is_multiple_of(2) && order.is_multiple_of(2) {
                let kf = (n / 2) as f64;
                s += (kf * omega).powi(order as i32) * (kf * theta + phase).cos();
            }
            s / n as f64
        })
        .collect();
    Ok(Matrix::from_fn(n, n, |j, k| column[(j + n - k) % n]))
}

/// Magnitudes of the discrete Fourier coefficients `|c_k|`, `k = 0..=n/2`, of
/// values on a periodic grid.
pub fn trig_coeff_magnitudes(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let th = 2.0 * PI * (k * j) as f64 / n as f64;
                re += v * th.cos();
                im -= v * th.sin();
            }
            (re * re + im * im).sqrt() / n as f64
        })
        .collect()
}

/// Resampling for the exponentially weighted basis `e^{-b t/2} p(t)`:
/// `diag(e^{-b tau/2}) P(tau; t) diag(e^{b t/2})`.
pub fn weighted_resample(tau: &[f64], g: &Grid, b_param: f64) -> Result<Matrix> {
    if !(b_param >= 0.0) {
        return Err(Error::InvalidArgument(format!("weight parameter must be >= 0, got {b_param}")));
    }
    let p = barymat(tau, g)?;
    let left: Vec<f64> = tau.iter().map(|x| (-0.5 * b_param * x).exp()).collect();
    let right: Vec<f64> = g.nodes.iter().map(|x| (0.5 * b_param * x).exp()).collect();
    Ok(p.scale_rows(&left).scale_cols(&right))
}

/// Values sampled on a single grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&t| f(t)).collect();
        SampledFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Evaluates the interpolant (polynomial or trigonometric, by grid kind).
    pub fn eval(&self, tau: &[f64]) -> Vec<f64> {
        match self.grid.kind {
            GridKind::ChebyshevLobatto => bary_eval(self, tau),
            GridKind::TrigUniform => {
                let p = trig_barymat(tau, &self.grid).expect("grid kind checked");
                p.matvec(&self.values)
            }
        }
    }
}

/// Evaluates the polynomial interpolant of `f` at each point of `tau`.
/// Extrapolation is permitted.
pub fn bary_eval(f: &SampledFunction, tau: &[f64]) -> Vec<f64> {
    let g = &f.grid;
    let mut row = vec![0.0; g.len()];
    tau.iter()
        .map(|&x| {
            if let Some(k) = g.nodes.iter().position(|&t| t == x) {
                return f.values[k];
            }
            bary_row(x, &g.nodes, &g.weights, &mut row);
            row.iter().zip(&f.values).map(|(l, y)| l * y).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn cheb_nodes_three_points() {
        let g = cheb_grid(3, -1.0, 1.0).unwrap();
        assert_eq!(g.nodes(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn cheb_nodes_mapped_unit_interval() {
        let g = cheb_grid(5, 0.0, 1.0).unwrap();
        let s = 2f64.sqrt();
        let expected = [0.0, (2.0 - s) / 4.0, 0.5, (2.0 + s) / 4.0, 1.0];
        assert!(close(g.nodes(), &expected, 1e-15), "{:?}", g.nodes());
    }

    #[test]
    fn cheb_weights_four_points() {
        let g = cheb_grid(4, -1.0, 1.0).unwrap();
        assert_eq!(g.bary_weights(), &[0.5, -1.0, 1.0, -0.5]);
        // weights do not depend on the interval
        assert_eq!(cheb_grid(4, 3.0, 7.5).unwrap().bary_weights(), g.bary_weights());
    }

    #[test]
    fn grid_argument_errors() {
        assert!(matches!(cheb_grid(1, 0.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(cheb_grid(4, 1.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(trig_grid(1, 0.0, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bary_eval_quadratic() {
        let g = cheb_grid(3, -1.0, 1.0).unwrap();
        let f = SampledFunction::new(g, vec![1.0, 0.0, 1.0]).unwrap();
        assert!((bary_eval(&f, &[0.5])[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bary_eval_constant_and_nodes() {
        let g = cheb_grid(7, 0.0, 2.0).unwrap();
        let f = SampledFunction::new(g.clone(), vec![3.0; 7]).unwrap();
        for v in bary_eval(&f, &[0.1, 0.77, 1.9, 2.5]) {
            assert!((v - 3.0).abs() < 1e-14);
        }
        let h = SampledFunction::from_fn(g.clone(), |t| (t * 1.3).sin());
        assert_eq!(bary_eval(&h, g.nodes()), h.values());
    }

    #[test]
    fn diffmat_two_points() {
        let g = cheb_grid(2, -1.0, 1.0).unwrap();
        let d = diffmat(&g, 1).unwrap();
        assert_eq!(d, Matrix::from_rows(&[vec![-0.5, 0.5], vec![-0.5, 0.5]]));
    }

    #[test]
    fn diffmat_kills_constants_and_maps_nodes_to_ones() {
        for n in [3, 8, 17] {
            let g = cheb_grid(n, -0.5, 2.0).unwrap();
            let d = diffmat(&g, 1).unwrap();
            let zero = d.matvec(&vec![1.0; n]);
            assert!(zero.iter().all(|v| v.abs() < 1e-12));
            let ones = d.matvec(g.nodes());
            assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-12), "{ones:?}");
        }
    }

    #[test]
    fn barymat_identity_and_rows() {
        let g = cheb_grid(9, 0.0, 1.0).unwrap();
        assert_eq!(barymat(g.nodes(), &g).unwrap(), Matrix::identity(9));
        let p = barymat(&[0.13, 0.5001, 0.9, 1.3], &g).unwrap();
        for i in 0..p.rows() {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
        let g3 = cheb_grid(3, -1.0, 1.0).unwrap();
        let p = barymat(&[0.5], &g3).unwrap();
        assert!((p.matvec(&[1.0, 0.0, 1.0])[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn barymat_rejects_trig_grid() {
        let g = trig_grid(4, 0.0, 1.0).unwrap();
        assert!(barymat(&[0.2], &g).is_err());
        assert!(cumsummat(&g).is_err());
    }

    #[test]
    fn cumsummat_integrates() {
        let g = cheb_grid(10, 0.0, 1.0).unwrap();
        let q = cumsummat(&g).unwrap();
        assert!(q.row(0).iter().all(|&v| v == 0.0));
        let c = q.matvec(&[1.0; 10]);
        assert!(close(&c, g.nodes(), 1e-14));
        let two_t: Vec<f64> = g.nodes().iter().map(|t| 2.0 * t).collect();
        let sq: Vec<f64> = g.nodes().iter().map(|t| t * t).collect();
        assert!(close(&q.matvec(&two_t), &sq, 1e-14));
    }

    #[test]
    fn cumsummat_shifted_interval() {
        let g = cheb_grid(16, 1.0, 3.0).unwrap();
        let q = cumsummat(&g).unwrap();
        let y: Vec<f64> = g.nodes().iter().map(|t| t.cos()).collect();
        let exact: Vec<f64> = g.nodes().iter().map(|t| t.sin() - 1f64.sin()).collect();
        assert!(close(&q.matvec(&y), &exact, 1e-13));
    }

    #[test]
    fn trig_grid_nodes() {
        let g = trig_grid(4, 0.0, 2.0 * PI).unwrap();
        assert!(close(g.nodes(), &[0.0, PI / 2.0, PI, 1.5 * PI], 1e-15));
        assert_eq!(trig_grid(2, 0.0, 1.0).unwrap().nodes(), &[0.0, 0.5]);
    }

    #[test]
    fn trig_barymat_identity_and_shift() {
        for n in [6, 7] {
            let g = trig_grid(n, 0.0, 1.0).unwrap();
            let p = trig_barymat(g.nodes(), &g).unwrap();
            assert_eq!(p, Matrix::identity(n));
            let h = 1.0 / n as f64;
            let shifted: Vec<f64> = g.nodes().iter().map(|t| t + h).collect();
            let p = trig_barymat(&shifted, &g).unwrap();
            for j in 0..n {
                for k in 0..n {
                    let expect = if k == (j + 1) % n { 1.0 } else { 0.0 };
                    assert!((p[(j, k)] - expect).abs() < 1e-12, "n={n} ({j},{k})");
                }
            }
        }
    }

    #[test]
    fn trig_diffmat_sin() {
        let g = trig_grid(16, 0.0, 2.0 * PI).unwrap();
        let s: Vec<f64> = g.nodes().iter().map(|t| t.sin()).collect();
        let c: Vec<f64> = g.nodes().iter().map(|t| t.cos()).collect();
        let d1 = trig_diffmat(&g, 1).unwrap();
        let d2 = trig_diffmat(&g, 2).unwrap();
        assert!(close(&d1.matvec(&s), &c, 1e-12));
        let ms: Vec<f64> = s.iter().map(|v| -v).collect();
        assert!(close(&d2.matvec(&s), &ms, 1e-10));
        assert!(d1.matvec(&[1.0; 16]).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn trig_diffmat_odd_and_scaled() {
        let g = trig_grid(15, -1.0, 2.0).unwrap();
        let w = 2.0 * PI / 3.0;
        let y: Vec<f64> = g.nodes().iter().map(|t| (2.0 * w * t).cos()).collect();
        let dy: Vec<f64> = g.nodes().iter().map(|t| -2.0 * w * (2.0 * w * t).sin()).collect();
        let d3y: Vec<f64> = g.nodes().iter().map(|t| (2.0 * w).powi(3) * (2.0 * w * t).sin()).collect();
        assert!(close(&trig_diffmat(&g, 1).unwrap().matvec(&y), &dy, 1e-11));
        assert!(close(&trig_diffmat(&g, 3).unwrap().matvec(&y), &d3y, 1e-9));
    }

    #[test]
    fn weighted_resample_reduces_to_barymat() {
        let g = cheb_grid(8, 0.0, 2.0).unwrap();
        let tau = [0.3, 1.1, 1.7];
        let p = barymat(&tau, &g).unwrap();
        assert_eq!(weighted_resample(&tau, &g, 0.0).unwrap(), p);
        let pw = weighted_resample(g.nodes(), &g, 1.5).unwrap();
        assert!((&pw - &Matrix::identity(8)).max_abs() < 1e-15);
        let b = 1.5;
        let vals: Vec<f64> = g.nodes().iter().map(|t| (-b * t / 2.0).exp()).collect();
        let out = weighted_resample(&tau, &g, b).unwrap().matvec(&vals);
        for (o, x) in out.iter().zip(tau) {
            assert!((o - (-b * x / 2.0).exp()).abs() < 1e-14);
        }
        assert!(weighted_resample(&tau, &g, -1.0).is_err());
    }

    #[test]
    fn sampled_function_length_checked() {
        let g = cheb_grid(4, 0.0, 1.0).unwrap();
        assert!(SampledFunction::new(g, vec![1.0; 3]).is_err());
    }
}
