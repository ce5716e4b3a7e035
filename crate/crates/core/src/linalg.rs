//! Small dense complex linear algebra for per-line certificate checks.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.data[c * rows + r] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    pub fn column(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![ZERO; self.rows];
        for (c, &xc) in x.iter().enumerate() {
            for (yr, a) in y.iter_mut().zip(self.column(c)) {
                *yr += a * xc;
            }
        }
        y
    }

    /// `A^H x`.
    pub fn adjoint_mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|c| self.column(c).iter().zip(x).map(|(a, v)| a.conj() * v).sum())
            .collect()
    }

    /// `A^H A`.
    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.cols, self.cols);
        for a in 0..self.cols {
            for b in a..self.cols {
                let v: Complex64 = self
                    .column(a)
                    .iter()
                    .zip(self.column(b))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                g.data[b * self.cols + a] = v;
                g.data[a * self.cols + b] = v.conj();
            }
        }
        g
    }

    /// Singular values in descending order, by one-sided Jacobi rotations.
    pub fn singular_values(&self) -> Vec<f64> {
        // work on whichever orientation is tall
        let work = if self.rows >= self.cols {
            self.clone()
        } else {
            CMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
        };
        let (m, n) = (work.rows, work.cols);
        let mut a = work.data;
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, ZERO);
                    for i in 0..m {
                        let x = a[p * m + i];
                        let y = a[q * m + i];
                        alpha += x.norm_sqr();
                        beta += y.norm_sqr();
                        gamma += x.conj() * y;
                    }
                    let g = gamma.norm();
                    if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = cs * t;
                    for i in 0..m {
                        let x = a[p * m + i];
                        let y = a[q * m + i] * phase.conj();
                        a[p * m + i] = x * cs - y * sn;
                        a[q * m + i] = x * sn + y * cs;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n)
            .map(|c| a[c * m..(c + 1) * m].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
        sv
    }
}

/// Cholesky factor of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // lower triangle, row-major
    l: Vec<Complex64>,
}

impl Cholesky {
    /// `None` when a pivot falls below `rel_tol` times the largest diagonal.
    pub fn new(h: &CMatrix, rel_tol: f64) -> Option<Self> {
        let n = h.rows;
        assert_eq!(n, h.cols);
        let scale = (0..n).map(|i| h.get(i, i).re).fold(0.0, f64::max);
        let mut l = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = h.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                if i == j {
                    let d = s.re;
                    if !(d > rel_tol * scale) {
                        return None;
                    }
                    l[i * n + i] = Complex64::new(d.sqrt(), 0.0);
                } else {
                    l[i * n + j] = s / l[j * n + j].re;
                }
            }
        }
        Some(Cholesky { n, l })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i].conj() * y[k];
            }
            y[i] = s / self.l[i * n + i].re;
        }
        y
    }
}

/// Solves `h y = b` with a Cholesky factorization and a few rounds of
/// iterative refinement.
pub fn solve_hermitian(h: &CMatrix, b: &[Complex64], rel_tol: f64) -> Option<Vec<Complex64>> {
    let chol = Cholesky::new(h, rel_tol)?;
    let mut y = chol.solve(b);
    for _ in 0..3 {
        let hy = h.mul_vec(&y);
        let r: Vec<Complex64> = b.iter().zip(&hy).map(|(a, c)| a - c).collect();
        let dy = chol.solve(&r);
        for (v, d) in y.iter_mut().zip(dy) {
            *v += d;
        }
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn singular_values_of_diagonal_and_rank_one() {
        let d = CMatrix::from_fn(3, 2, |r, cc| if r == cc { c(3.0 - r as f64, 0.0) } else { c(0.0, 0.0) });
        let sv = d.singular_values();
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);

        let u = [c(1.0, 1.0), c(0.0, 2.0), c(-1.0, 0.5)];
        let v = [c(0.5, 0.0), c(1.0, -1.0)];
        let r1 = CMatrix::from_fn(3, 2, |i, j| u[i] * v[j].conj());
        let sv = r1.singular_values();
        assert!(sv[1].abs() < 1e-12);
        let nu: f64 = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((sv[0] - nu * nv).abs() < 1e-12);
        // wide input goes through the conjugate transpose
        let wide = CMatrix::from_fn(2, 3, |i, j| r1.get(j, i).conj());
        assert!((wide.singular_values()[0] - nu * nv).abs() < 1e-12);
    }

    #[test]
    fn hermitian_solve() {
        let a = CMatrix::from_fn(4, 3, |i, j| c(((i * i + 2 * j) as f64 * 0.3).sin() + 1.0, (i as f64 - (j * j) as f64) * 0.7));
        let g = a.gram();
        let b = [c(1.0, 0.0), c(0.0, -1.0), c(2.0, 0.5)];
        let y = solve_hermitian(&g, &b, 1e-14).unwrap();
        let back = g.mul_vec(&y);
        for (x, z) in back.iter().zip(&b) {
            assert!((x - z).norm() < 1e-12);
        }
        let singular = CMatrix::from_fn(2, 2, |_, _| c(1.0, 0.0));
        assert!(Cholesky::new(&singular, 1e-12).is_none());
    }
}
