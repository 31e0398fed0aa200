use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::InvalidArgument(format!("LU of a {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularMatrix);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let m = lu[(i, k)] / d;
                lu[(i, k)] = m;
                if m != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= m * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.len();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::InvalidArgument(format!("rhs of length {} for {} rows", b.len(), a.rows())));
    }
    Ok(Lu::factor(a)?.solve(b))
}

/// `||A||_inf ||A^-1||_inf` via the explicit inverse.
pub fn cond_inf(a: &Matrix) -> Result<f64> {
    let inv = Lu::factor(a)?.inverse();
    Ok(a.norm_inf() * inv.norm_inf())
}

/// Complex LU used for inverse iteration on (possibly complex) shifts.
pub(crate) struct ComplexLu {
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    n: usize,
}

impl ComplexLu {
    pub(crate) fn factor(n: usize, mut lu: Vec<Complex64>) -> ComplexLu {
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = 1e-300;
        for k in 0..n {
            let mut p = k;
            let mut best = -1.0;
            for i in k..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            // an exactly singular pivot is nudged: inverse iteration only
            // needs a direction, and the shift is an eigenvalue by design
            if lu[k * n + k].norm() < tiny {
                lu[k * n + k] = Complex64::new(f64::EPSILON, 0.0);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let m = lu[i * n + k] / d;
                lu[i * n + k] = m;
                if m.norm() != 0.0 {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= m * u;
                    }
                }
            }
        }
        ComplexLu { lu, perm, n }
    }

    pub(crate) fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..i {
                s += self.lu[i * n + j] * x[j];
            }
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..n {
                s += self.lu[i * n + j] * x[j];
            }
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}
