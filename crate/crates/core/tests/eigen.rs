use fdecolloc::catalog::delay_evp_pencil;
use fdecolloc::solve::{eig_generalized, eig_smoothest};
use fdecolloc::{Error, GridKind, Matrix};

// y'' = -lambda y(t/2), y(0) = 0, y'(0) = 1 as a power series; returns y(1).
fn series_end_value(lambda: f64) -> f64 {
    let mut a = vec![0.0, 1.0];
    for k in 0..120 {
        let next = -lambda * a[k] / 2f64.powi(k as i32) / ((k + 2) * (k + 1)) as f64;
        a.push(next);
    }
    a.iter().sum()
}

fn series_eigenvalues(count: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut lo = 1.0;
    let mut f_lo = series_end_value(lo);
    while roots.len() < count {
        let hi = lo * 1.01;
        let f_hi = series_end_value(hi);
        if f_lo.signum() != f_hi.signum() {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = series_end_value(m);
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        lo = hi;
        f_lo = f_hi;
    }
    roots
}

#[test]
fn leading_eigenvalues_match_series_oracle() {
    let (a, b, _) = delay_evp_pencil(60).unwrap();
    let r = eig_smoothest(&a, &b, 6, 0.0, GridKind::ChebyshevLobatto).unwrap();
    let mut got: Vec<f64> = r.pairs.iter().filter(|p| p.is_real(1e-8)).map(|p| p.value.re).collect();
    got.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let oracle = series_eigenvalues(5);
    let positive: Vec<f64> = got.into_iter().filter(|v| *v > 0.0).collect();
    for (g, o) in positive.iter().zip(&oracle) {
        assert!(((g - o) / o).abs() < 1e-7, "{g} vs {o}");
    }
    assert!(positive.len() >= 5);
}

#[test]
fn eigen_residuals_are_small() {
    let (a, b, _) = delay_evp_pencil(40).unwrap();
    let r = eig_smoothest(&a, &b, 4, 0.0, GridKind::ChebyshevLobatto).unwrap();
    let scale = a.norm_inf() + b.norm_inf();
    for p in &r.pairs {
        let lam = p.value.re;
        let v = p.real_vector();
        let av = a.matvec(&v);
        let bv = b.matvec(&v);
        let res = av.iter().zip(&bv).map(|(x, y)| (x - lam * y).abs()).fold(0.0, f64::max);
        let vn = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(res <= 1e-8 * (scale * (1.0 + lam.abs())) * vn, "lambda {lam}: residual {res}");
    }
}

#[test]
fn diagonal_pencil_is_exact() {
    let a = Matrix::from_fn(4, 4, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
    let r = eig_generalized(&a, &Matrix::identity(4), 4, 0.3).unwrap();
    let mut v: Vec<f64> = r.pairs.iter().map(|p| p.value.re).collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for (k, x) in v.iter().enumerate() {
        assert!((x - (k + 1) as f64).abs() < 1e-12);
    }
}

#[test]
fn shift_on_an_eigenvalue_is_rejected() {
    let a = Matrix::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
    let r = eig_generalized(&a, &Matrix::identity(3), 1, 2.0);
    assert!(matches!(r, Err(Error::ShiftCollision(_))));
}
