//! Per-line dual certificates for Cartesian line sampling.
//!
//! Along a line with support `Δ` and sampled frequencies `Ω`, a certificate is
//! `ρ = m^{-1/2} A^* P_Ω w` with `P_Δ ρ = sgn` on `Δ` and `|ρ_l| < 1` off it.
//! The vertical differences are checked column by column against `Ω₁`, the
//! horizontal ones row by row against `Ω₂`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Cholesky};
use crate::ops::{diff1, diff2, freq_in_range, norm2, ComplexImage};
use crate::structure::{sgn, Support2D};

/// Margin below 1 required of the off-support sup-norm.
pub const C2_MARGIN: f64 = 1e-6;
const GRAM_TOL: f64 = 1e-13;

fn check_line(n: usize, omega: &[i64], delta: &[usize]) -> Result<()> {
    for &k in omega {
        if !freq_in_range(k, n) {
            return Err(Error::FrequencyOutOfRange { freq: k, n });
        }
    }
    let mut seen = vec![false; n];
    for &j in delta {
        if j >= n || seen[j] {
            return Err(Error::InvalidParameter(alloc::format!("support index {j} invalid for length {n}")));
        }
        seen[j] = true;
    }
    let mut sorted = omega.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("repeated frequency".into()));
    }
    Ok(())
}

/// Entry of `A` for frequency `k` and storage index `j` (spatial index `j + 1`).
fn fourier(k: i64, j: usize, n: usize) -> Complex64 {
    let t = ((k * (j as i64 + 1)).rem_euclid(n as i64)) as f64 / n as f64;
    Complex64::from_polar(1.0, -2.0 * PI * t)
}

/// `P_Ω A P_Δ` as an `|Ω| x |Δ|` matrix.
pub fn restricted_matrix(n: usize, omega: &[i64], delta: &[usize]) -> Result<CMatrix> {
    check_line(n, omega, delta)?;
    Ok(CMatrix::from_fn(omega.len(), delta.len(), |r, c| fourier(omega[r], delta[c], n)))
}

/// `σ_min(m^{-1/2} P_Ω A P_Δ)`; zero when `|Δ| > m`.
pub fn injectivity_constant(n: usize, omega: &[i64], delta: &[usize]) -> Result<f64> {
    if delta.is_empty() {
        return Err(Error::InvalidParameter("empty support".into()));
    }
    let b = restricted_matrix(n, omega, delta)?;
    if delta.len() > omega.len() {
        return Ok(0.0);
    }
    let smin = b.singular_values().into_iter().fold(f64::INFINITY, f64::min);
    Ok(smin / (omega.len() as f64).sqrt())
}

/// `m^{-1/2} A^* P_Ω w` on the whole line.
pub fn certificate_from_coefficients(n: usize, omega: &[i64], w: &[Complex64]) -> Vec<Complex64> {
    let scale = 1.0 / (omega.len() as f64).sqrt();
    (0..n)
        .map(|l| {
            omega
                .iter()
                .zip(w)
                .map(|(&k, &wk)| fourier(k, l, n).conj() * wk)
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// `ρ` over the whole line.
    pub rho: Vec<Complex64>,
    /// Coefficients on `Ω`, in the order of `omega`.
    pub w: Vec<Complex64>,
    /// `max_{l ∉ Δ} |ρ_l|`.
    pub off_sup_norm: f64,
}

fn off_sup(rho: &[Complex64], delta: &[usize]) -> f64 {
    let mut on = vec![false; rho.len()];
    for &j in delta {
        on[j] = true;
    }
    rho.iter()
        .zip(&on)
        .filter(|(_, &o)| !o)
        .map(|(v, _)| v.norm())
        .fold(0.0, f64::max)
}

struct Interpolation {
    b: CMatrix,
    chol: Cholesky,
    target: Vec<Complex64>,
}

impl Interpolation {
    fn new(n: usize, omega: &[i64], delta: &[usize], sign: &[Complex64]) -> Result<Self> {
        let b = restricted_matrix(n, omega, delta)?;
        let singular = || Error::SingularGram { support: delta.len() };
        if delta.len() > omega.len() {
            return Err(singular());
        }
        let chol = Cholesky::new(&b.gram(), GRAM_TOL).ok_or_else(singular)?;
        let root_m = (omega.len() as f64).sqrt();
        let target = sign.iter().map(|s| s * root_m).collect();
        Ok(Interpolation { b, chol, target })
    }

    /// `G^{-1} r` with iterative refinement.
    fn gram_solve(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.chol.solve(r);
        for _ in 0..3 {
            let gy = self.b.adjoint_mul_vec(&self.b.mul_vec(&y));
            let res: Vec<Complex64> = r.iter().zip(&gy).map(|(a, c)| a - c).collect();
            for (v, d) in y.iter_mut().zip(self.chol.solve(&res)) {
                *v += d;
            }
        }
        y
    }

    fn min_norm(&self) -> Vec<Complex64> {
        self.b.mul_vec(&self.gram_solve(&self.target))
    }

    /// Projection onto `{w : B^* w = √m sgn}`.
    fn project(&self, w: &mut [Complex64]) {
        let r: Vec<Complex64> = self
            .b
            .adjoint_mul_vec(w)
            .iter()
            .zip(&self.target)
            .map(|(a, t)| a - t)
            .collect();
        let corr = self.b.mul_vec(&self.gram_solve(&r));
        for (v, c) in w.iter_mut().zip(corr) {
            *v -= c;
        }
    }
}

/// Minimum-norm certificate interpolating `sign` on `delta`.
pub fn construct_certificate(n: usize, omega: &[i64], delta: &[usize], sign: &[Complex64]) -> Result<Certificate> {
    if sign.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            expected: delta.len(),
            found: sign.len(),
        });
    }
    if delta.is_empty() {
        check_line(n, omega, delta)?;
        return Ok(Certificate {
            rho: vec![Complex64::new(0.0, 0.0); n],
            w: vec![Complex64::new(0.0, 0.0); omega.len()],
            off_sup_norm: 0.0,
        });
    }
    let interp = Interpolation::new(n, omega, delta, sign)?;
    let w = interp.min_norm();
    let rho = certificate_from_coefficients(n, omega, &w);
    let off_sup_norm = off_sup(&rho, delta);
    Ok(Certificate { rho, w, off_sup_norm })
}

/// Euclidean projection of a complex vector onto the unit ℓ1 ball.
fn project_l1_ball(q: &mut [Complex64]) {
    let total: f64 = q.iter().map(|v| v.norm()).sum();
    if total <= 1.0 {
        return;
    }
    let mut mags: Vec<f64> = q.iter().map(|v| v.norm()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &a) in mags.iter().enumerate() {
        cum += a;
        let t = (cum - 1.0) / (i + 1) as f64;
        if a > t {
            theta = t;
        } else {
            break;
        }
    }
    for v in q.iter_mut() {
        let a = v.norm();
        *v = if a > theta { *v * ((a - theta) / a) } else { Complex64::new(0.0, 0.0) };
    }
}

/// Searches the interpolating coefficient vectors for one with a smaller
/// off-support sup-norm, starting from `start`. Returns the best certificate
/// found.
pub fn refine_certificate(
    n: usize,
    omega: &[i64],
    delta: &[usize],
    sign: &[Complex64],
    start: &Certificate,
    iterations: usize,
) -> Result<Certificate> {
    if delta.is_empty() {
        return Ok(start.clone());
    }
    let interp = Interpolation::new(n, omega, delta, sign)?;
    let m = omega.len();
    let scale = 1.0 / (m as f64).sqrt();
    let mut on = vec![false; n];
    for &j in delta {
        on[j] = true;
    }
    let off: Vec<usize> = (0..n).filter(|&l| !on[l]).collect();
    if off.is_empty() {
        return Ok(start.clone());
    }
    // K w = m^{-1/2} (A^* P_Ω w) restricted to the off-support positions
    let kmat = CMatrix::from_fn(off.len(), m, |r, c| fourier(omega[c], off[r], n).conj() * scale);
    let knorm = (n as f64 / m as f64).sqrt();
    let tau = 0.95 / knorm;
    let sigma = 0.95 / knorm;

    let mut w = start.w.clone();
    let mut w_bar = w.clone();
    let mut q = vec![Complex64::new(0.0, 0.0); off.len()];
    let mut best = start.clone();
    for _ in 0..iterations {
        let kw = kmat.mul_vec(&w_bar);
        for (qi, v) in q.iter_mut().zip(kw) {
            *qi += v * sigma;
        }
        project_l1_ball(&mut q);
        let kq = kmat.adjoint_mul_vec(&q);
        let prev = w.clone();
        for (wi, g) in w.iter_mut().zip(kq) {
            *wi -= g * tau;
        }
        interp.project(&mut w);
        for ((b, &cur), &old) in w_bar.iter_mut().zip(&w).zip(&prev) {
            *b = cur * 2.0 - old;
        }
        let value = kmat.mul_vec(&w).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if value < best.off_sup_norm {
            let rho = certificate_from_coefficients(n, omega, &w);
            best = Certificate {
                off_sup_norm: off_sup(&rho, delta),
                rho,
                w: w.clone(),
            };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyConfig {
    /// Run the sup-norm refinement when the minimum-norm certificate fails.
    pub refine: bool,
    pub refine_iters: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            refine: true,
            refine_iters: 3000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LineKind {
    /// Column of `D̃₁x`, checked against `Ω₁`.
    Column,
    /// Row of `D̃₂x`, checked against `Ω₂`.
    Row,
}

/// Result for one class of lines sharing support and sign data.
#[derive(Debug, Clone, PartialEq)]
pub struct LineCertificate {
    pub kind: LineKind,
    /// Every line index in the class, ascending.
    pub lines: Vec<usize>,
    pub support: Vec<usize>,
    /// Injectivity constant `σ_min / √m`.
    pub sigma_min: f64,
    /// Sup-norm of the minimum-norm certificate.
    pub min_norm_off_sup: f64,
    /// Reported sup-norm after refinement (equal to the above without it).
    pub off_sup_norm: f64,
    pub w_norm: f64,
    pub solvable: bool,
}

impl LineCertificate {
    pub fn passes(&self) -> bool {
        self.solvable && self.sigma_min > 0.0 && self.off_sup_norm < 1.0 - C2_MARGIN
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Smallest injectivity constant over all lines with nonempty support;
    /// infinite when there are none.
    pub c1_min: f64,
    pub c2_max: f64,
    /// `max(Σ_j ‖w_j‖₂, Σ_j ‖u_j‖₂)` over all lines, duplicates included.
    pub l_sq: f64,
    pub per_line: Vec<LineCertificate>,
    pub all_pass: bool,
}

fn sign_key(v: Complex64) -> (u64, u64) {
    // -0.0 and 0.0 are the same sign
    let bits = |x: f64| if x == 0.0 { 0 } else { x.to_bits() };
    (bits(v.re), bits(v.im))
}

type ClassKey = (Vec<usize>, Vec<(u64, u64)>);

fn certify_family(
    n: usize,
    kind: LineKind,
    omega: &[i64],
    lines: impl Iterator<Item = (usize, Vec<usize>, Vec<Complex64>)>,
    config: &CertifyConfig,
    out: &mut Vec<LineCertificate>,
) -> Result<f64> {
    let mut classes: BTreeMap<ClassKey, (Vec<usize>, Vec<Complex64>)> = BTreeMap::new();
    for (index, support, sign) in lines {
        if support.is_empty() {
            continue;
        }
        let key = (support.clone(), sign.iter().map(|&s| sign_key(s)).collect());
        classes.entry(key).or_insert_with(|| (Vec::new(), sign)).0.push(index);
    }
    let mut w_sum = 0.0;
    for ((support, _), (members, sign)) in classes {
        let sigma_min = injectivity_constant(n, omega, &support)?;
        let mut entry = LineCertificate {
            kind,
            lines: members,
            support,
            sigma_min,
            min_norm_off_sup: f64::INFINITY,
            off_sup_norm: f64::INFINITY,
            w_norm: f64::INFINITY,
            solvable: false,
        };
        match construct_certificate(n, omega, &entry.support, &sign) {
            Ok(cert) => {
                entry.solvable = true;
                entry.min_norm_off_sup = cert.off_sup_norm;
                let mut chosen = cert;
                if config.refine && chosen.off_sup_norm >= 1.0 - C2_MARGIN {
                    chosen = refine_certificate(n, omega, &entry.support, &sign, &chosen, config.refine_iters)?;
                }
                entry.off_sup_norm = chosen.off_sup_norm;
                entry.w_norm = norm2(&chosen.w);
            }
            Err(Error::SingularGram { .. }) => {}
            Err(e) => return Err(e),
        }
        w_sum += entry.w_norm * entry.lines.len() as f64;
        out.push(entry);
    }
    Ok(w_sum)
}

/// Checks the certificate conditions for every column of `Δ₁` against `Ω₁`
/// and every row of `Δ₂` against `Ω₂`.
pub fn verify_dual_conditions(
    x: &ComplexImage,
    delta1: &Support2D,
    delta2: &Support2D,
    omega1: &[i64],
    omega2: &[i64],
    config: &CertifyConfig,
) -> Result<CertificateReport> {
    let n = x.n();
    if delta1.n() != n || delta2.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if delta1.n() != n { delta1.n() } else { delta2.n() },
        });
    }
    let d1 = diff1(x);
    let d2 = diff2(x);
    let columns = (0..n).map(|j| {
        let support = delta1.column_members(j);
        let sign = support.iter().map(|&r| sgn(d1.get(r, j))).collect();
        (j, support, sign)
    });
    let rows = (0..n).map(|i| {
        let support = delta2.row_members(i);
        let sign = support.iter().map(|&c| sgn(d2.get(i, c))).collect();
        (i, support, sign)
    });
    let mut per_line = Vec::new();
    let w_sum = certify_family(n, LineKind::Column, omega1, columns, config, &mut per_line)?;
    let u_sum = certify_family(n, LineKind::Row, omega2, rows, config, &mut per_line)?;

    let c1_min = per_line.iter().map(|l| l.sigma_min).fold(f64::INFINITY, f64::min);
    let c2_max = per_line.iter().map(|l| l.off_sup_norm).fold(0.0, f64::max);
    let all_pass = c1_min > 0.0 && c2_max < 1.0 - C2_MARGIN && per_line.iter().all(|l| l.solvable);
    Ok(CertificateReport {
        c1_min,
        c2_max,
        l_sq: w_sum.max(u_sum),
        per_line,
        all_pass,
    })
}

/// `max{0.99993, 1 - 0.92 (M^2 - 1) / N^2}`.
pub fn c_of_m(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    f64::max(0.99993, 1.0 - 0.92 * (m * m - 1.0) / (n * n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofConstants {
    /// Reference lower bound for the injectivity constant, `3 / (2√5)`.
    pub c1: f64,
}

impl ProofConstants {
    /// `max{log^2(M/ε), s log(s/ε) log(M/ε)}`.
    pub fn budget(&self, s: usize, bandwidth: usize, eps: f64) -> f64 {
        let lm = (bandwidth as f64 / eps).ln();
        let ls = (s as f64 / eps).ln();
        f64::max(lm * lm, s as f64 * ls * lm)
    }
}

pub fn proof_constants() -> ProofConstants {
    ProofConstants {
        c1: 3.0 / (2.0 * 5f64.sqrt()),
    }
}
