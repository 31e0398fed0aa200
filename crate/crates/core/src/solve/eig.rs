//! Generalized eigenproblems `A v = lambda B v` by shift-invert.
//!
//! With `M = (A - sigma B)^-1 B`, every finite eigenvalue satisfies
//! `lambda = sigma + 1/mu` for an eigenvalue `mu` of `M`. `M` is reduced to
//! upper Hessenberg form and its eigenvalues found with the Francis
//! double-shift QR iteration; eigenvectors come from inverse iteration on the
//! original pencil. Real eigenvalues are then polished by Newton's method on
//! a bordered form of the pencil, which avoids the conditioning of
//! `A - sigma B`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interp::{cheb_coeffs, trig_coeff_magnitudes, GridKind};
use crate::matrix::Matrix;

use super::lu::{ComplexLu, Lu};

#[derive(Debug, Clone)]
pub struct EigPair {
    pub value: Complex64,
    /// Normalised so the largest entry is `1`.
    pub vector: Vec<Complex64>,
    /// `||A v - lambda B v||_inf / ||v||_inf`.
    pub residual: f64,
}

impl EigPair {
    pub fn is_real(&self, tol: f64) -> bool {
        self.value.im.abs() <= tol * self.value.norm().max(1.0)
    }

    pub fn real_vector(&self) -> Vec<f64> {
        self.vector.iter().map(|z| z.re).collect()
    }
}

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Sorted by distance from the shift.
    pub pairs: Vec<EigPair>,
    /// Matrix size the pairs were computed at.
    pub n_used: usize,
}

impl EigResult {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// The `k` eigenpairs of `A v = lambda B v` nearest `shift`.
///
/// Infinite eigenvalues (from zero rows of `B`) are discarded, as are pairs
/// whose residual exceeds `1e-8 ||A||_inf`.
pub fn eig_generalized(a: &Matrix, b: &Matrix, k: usize, shift: f64) -> Result<EigResult> {
    let all = eig_all(a, b, shift)?;
    Ok(EigResult { pairs: all.into_iter().take(k).collect(), n_used: a.rows() })
}

/// Like [`eig_generalized`] but keeps only eigenpairs whose eigenvector is
/// resolved on `grid_kind` nodes: the trailing fifth of its spectral
/// coefficients may hold at most a tenth of the coefficient mass.
pub fn eig_smoothest(a: &Matrix, b: &Matrix, k: usize, shift: f64, grid_kind: GridKind) -> Result<EigResult> {
    let all = eig_all(a, b, shift)?;
    let pairs = all.into_iter().filter(|p| is_smooth(&p.vector, grid_kind)).take(k).collect();
    Ok(EigResult { pairs, n_used: a.rows() })
}

/// Fraction of spectral coefficient mass in the trailing fifth of the
/// coefficients of `v` (real and imaginary parts combined).
pub fn tail_fraction(v: &[Complex64], kind: GridKind) -> f64 {
    let coeffs = |x: &[f64]| -> Vec<f64> {
        match kind {
            GridKind::ChebyshevLobatto => cheb_coeffs(x).iter().map(|c| c.abs()).collect(),
            GridKind::TrigUniform => trig_coeff_magnitudes(x),
        }
    };
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let c: Vec<f64> = coeffs(&re).iter().zip(coeffs(&im)).map(|(a, b)| a + b).collect();
    let total: f64 = c.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let tail = c.len() - (c.len() * 4) / 5;
    c[c.len() - tail..].iter().sum::<f64>() / total
}

fn is_smooth(v: &[Complex64], kind: GridKind) -> bool {
    tail_fraction(v, kind) <= 0.1
}

fn eig_all(a: &Matrix, b: &Matrix, shift: f64) -> Result<Vec<EigPair>> {
    if !a.is_square() || a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::InvalidArgument("A and B must be square and of equal size".into()));
    }
    let n = a.rows();
    let mut shifted = a.clone();
    shifted.add_assign_scaled(b, -shift);
    let lu = Lu::factor(&shifted).map_err(|_| Error::ShiftCollision(shift))?;
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        let col = lu.solve(&b.column(j));
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    if !m.is_finite() {
        return Err(Error::ShiftCollision(shift));
    }
    let scale = m.max_abs();
    let mus = hessenberg_eigenvalues(m)?;
    let mut mus: Vec<Complex64> = mus.into_iter().filter(|mu| mu.norm() > 1e-13 * scale.max(f64::MIN_POSITIVE)).collect();
    mus.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let lambdas: Vec<Complex64> = mus.iter().map(|mu| Complex64::new(shift, 0.0) + 1.0 / mu).collect();
    let mut out = Vec::with_capacity(lambdas.len());
    for (i, &lambda) in lambdas.iter().enumerate() {
        if lambda.im == 0.0 {
            if let Ok(p) = refine_eigenvalue(a, b, lambda.re) {
                // reject refinements that wander towards another eigenvalue
                let gap = lambdas
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, l)| (l - lambda).norm())
                    .fold(f64::INFINITY, f64::min);
                if (p.value - lambda).norm() < 0.5 * gap {
                    out.push(p);
                    continue;
                }
            }
        }
        let vector = inverse_iteration(a, b, lambda);
        let residual = pencil_residual(a, b, lambda, &vector);
        out.push(EigPair { value: lambda, vector, residual });
    }
    let bound = 1e-8 * a.norm_inf().max(b.norm_inf());
    out.retain(|p| p.residual <= bound);
    Ok(out)
}

/// Newton refinement of a simple real eigenvalue of `A v = lambda B v`.
///
/// Approximate right and left eigenvectors `v`, `w` border the pencil,
/// `[A - lambda B, w; v^T, 0] [x; g] = [0; 1]`, and `g(lambda)` vanishes
/// exactly at eigenvalues.
pub fn refine_eigenvalue(a: &Matrix, b: &Matrix, guess: f64) -> Result<EigPair> {
    let n = a.rows();
    let l0 = Complex64::new(guess, 0.0);
    let v: Vec<f64> = inverse_iteration(a, b, l0).iter().map(|z| z.re).collect();
    let w: Vec<f64> = inverse_iteration(&a.transpose(), &b.transpose(), l0).iter().map(|z| z.re).collect();
    let mut lambda = guess;
    let mut x = vec![0.0; n];
    for _ in 0..30 {
        let mut m = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = a[(i, j)] - lambda * b[(i, j)];
            }
            m[(i, n)] = w[i];
            m[(n, i)] = v[i];
        }
        let lu = Lu::factor(&m)?;
        let mut e = vec![0.0; n + 1];
        e[n] = 1.0;
        let sol = lu.solve(&e);
        x.copy_from_slice(&sol[..n]);
        let mut rhs = b.matvec(&x);
        rhs.push(0.0);
        let dg = lu.solve(&rhs)[n];
        let step = sol[n] / dg;
        if !step.is_finite() {
            return Err(Error::SingularMatrix);
        }
        lambda -= step;
        if step.abs() <= 4.0 * f64::EPSILON * lambda.abs().max(1.0) {
            break;
        }
    }
    let (imax, _) = x.iter().enumerate().fold((0, -1.0), |best, (i, z)| if z.abs() > best.1 { (i, z.abs()) } else { best });
    let vector: Vec<Complex64> = x.iter().map(|z| Complex64::new(z / x[imax], 0.0)).collect();
    let value = Complex64::new(lambda, 0.0);
    let residual = pencil_residual(a, b, value, &vector);
    Ok(EigPair { value, vector, residual })
}

fn inverse_iteration(a: &Matrix, b: &Matrix, lambda: Complex64) -> Vec<Complex64> {
    let n = a.rows();
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = Complex64::new(a[(i, j)], 0.0) - lambda * b[(i, j)];
        }
    }
    let lu = ComplexLu::factor(n, c);
    // fixed, non-symmetric start vector
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + 0.1 * ((i * 7 % 11) as f64), 0.0)).collect();
    for _ in 0..3 {
        let w = lu.solve(&v);
        let (imax, _) = w
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
        let pivot = w[imax];
        if pivot.norm() == 0.0 || !pivot.norm().is_finite() {
            break;
        }
        v = w.iter().map(|z| z / pivot).collect();
    }
    v
}

fn pencil_residual(a: &Matrix, b: &Matrix, lambda: Complex64, v: &[Complex64]) -> f64 {
    let n = a.rows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..n {
            s += (Complex64::new(a[(i, j)], 0.0) - lambda * b[(i, j)]) * v[j];
        }
        worst = worst.max(s.norm());
    }
    let vn = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    worst / vn
}

/// One-based square storage, mirroring the classical formulations of the
/// Hessenberg algorithms.
struct Sq {
    n: usize,
    d: Vec<f64>,
}

impl Sq {
    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        self.d[(i as usize - 1) * self.n + (j as usize - 1)]
    }

    #[inline]
    fn set(&mut self, i: isize, j: isize, v: f64) {
        self.d[(i as usize - 1) * self.n + (j as usize - 1)] = v;
    }

    #[inline]
    fn sub(&mut self, i: isize, j: isize, v: f64) {
        self.d[(i as usize - 1) * self.n + (j as usize - 1)] -= v;
    }
}

/// Eigenvalues of a general real matrix: elimination to Hessenberg form, then
/// the shifted QR iteration.
pub fn hessenberg_eigenvalues(m: Matrix) -> Result<Vec<Complex64>> {
    assert!(m.is_square());
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = Sq { n, d: m.into_vec() };
    reduce_hessenberg(&mut a);
    hqr(&mut a)
}

fn reduce_hessenberg(a: &mut Sq) {
    let n = a.n as isize;
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if a.at(j, m - 1).abs() > x.abs() {
                x = a.at(j, m - 1);
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a.at(i, j);
                a.set(i, j, a.at(m, j));
                a.set(m, j, t);
            }
            for j in 1..=n {
                let t = a.at(j, i);
                a.set(j, i, a.at(j, m));
                a.set(j, m, t);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a.at(i, m - 1);
                if y != 0.0 {
                    y /= x;
                    a.set(i, m - 1, y);
                    for j in m..=n {
                        let v = y * a.at(m, j);
                        a.sub(i, j, v);
                    }
                    for j in 1..=n {
                        let v = y * a.at(j, i);
                        a.sub(j, m, -v);
                    }
                }
            }
        }
    }
    for i in 3..=n {
        for j in 1..(i - 1) {
            a.set(i, j, 0.0);
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

fn hqr(a: &mut Sq) -> Result<Vec<Complex64>> {
    let n = a.n as isize;
    let mut wr = vec![0.0; a.n + 1];
    let mut wi = vec![0.0; a.n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i - 1).max(1)..=n {
            anorm += a.at(i, j).abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a.at(l - 1, l - 1).abs() + a.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a.at(l, l - 1).abs() <= f64::EPSILON * s {
                    a.set(l, l - 1, 0.0);
                    break;
                }
                l -= 1;
            }
            x = a.at(nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
            } else {
                y = a.at(nn - 1, nn - 1);
                w = a.at(nn, nn - 1) * a.at(nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    let (i1, i2) = ((nn - 1) as usize, nn as usize);
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[i1] = x + z;
                        wr[i2] = x + z;
                        if z != 0.0 {
                            wr[i2] = x - w / z;
                        }
                        wi[i1] = 0.0;
                        wi[i2] = 0.0;
                    } else {
                        wr[i1] = x + p;
                        wr[i2] = x + p;
                        wi[i1] = -z;
                        wi[i2] = z;
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(Error::Unsupported("QR iteration did not converge".into()));
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for i in 1..=nn {
                            a.sub(i, i, x);
                        }
                        let s = a.at(nn, nn - 1).abs() + a.at(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    while m >= l {
                        z = a.at(m, m);
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a.at(m + 1, m) + a.at(m, m + 1);
                        q = a.at(m + 1, m + 1) - z - r - s;
                        r = a.at(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a.at(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a.at(m - 1, m - 1).abs() + z.abs() + a.at(m + 1, m + 1).abs());
                        if u <= f64::EPSILON * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        a.set(i, i - 2, 0.0);
                        if i != m + 2 {
                            a.set(i, i - 3, 0.0);
                        }
                    }
                    let mut k = m;
                    while k <= nn - 1 {
                        if k != m {
                            p = a.at(k, k - 1);
                            q = a.at(k + 1, k - 1);
                            r = 0.0;
                            if k != nn - 1 {
                                r = a.at(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    let v = -a.at(k, k - 1);
                                    a.set(k, k - 1, v);
                                }
                            } else {
                                a.set(k, k - 1, -s * x);
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a.at(k, j) + q * a.at(k + 1, j);
                                if k != nn - 1 {
                                    p += r * a.at(k + 2, j);
                                    a.sub(k + 2, j, p * z);
                                }
                                a.sub(k + 1, j, p * y);
                                a.sub(k, j, p * x);
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a.at(i, k) + y * a.at(i, k + 1);
                                if k != nn - 1 {
                                    p += z * a.at(i, k + 2);
                                    a.sub(i, k + 2, p * r);
                                }
                                a.sub(i, k + 1, p * q);
                                a.sub(i, k, p);
                            }
                        }
                        k += 1;
                    }
                }
            }
            if !(nn >= 1 && l < nn - 1) {
                break;
            }
        }
    }
    Ok((1..=a.n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}
