use crate::error::{Error, Result};
use crate::interp::{barymat, diffmat, Grid, GridKind, SampledFunction};

use super::lu::lu_solve;

/// Solves the Schröder equation `u(f(t)) = lambda u(t)` normalised by
/// `u'(a) = 1`, where `a` is the left end of the grid.
///
/// The collocation system `(P(f(t); t) - lambda I) u = 0` has its first row
/// replaced by the first row of the differentiation matrix.
pub fn functional_equation(f: impl Fn(f64) -> f64, lambda: f64, g: &Grid) -> Result<SampledFunction> {
    if g.kind() != GridKind::ChebyshevLobatto {
        return Err(Error::InvalidArgument("functional equations need a Chebyshev grid".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let n = g.len();
    let ft: Vec<f64> = g.nodes().iter().map(|&t| f(t)).collect();
    if let Some(&bad) = ft.iter().find(|&&x| !(x >= g.a() && x <= g.b())) {
        return Err(Error::OutOfDomain { x: bad, lo: g.a(), hi: g.b() });
    }
    let mut a = barymat(&ft, g)?;
    for i in 0..n {
        a[(i, i)] -= lambda;
    }
    let d = diffmat(g, 1)?;
    a.set_row(0, d.row(0));
    let mut rhs = vec![0.0; n];
    rhs[0] = 1.0;
    let u = lu_solve(&a, &rhs)?;
    SampledFunction::new(g.clone(), u)
}
