//! Constrained anisotropic TV recovery
//!
//! ```text
//! min ||z||_TV  subject to  ||P̃_Ω Ã z - ξ||_2 <= δ sqrt(m)
//! ```
//!
//! solved with a first-order primal-dual iteration on
//! `min_z max_{|p| <= 1} Re<D̃z, p> + ι_C(z)`. Since `Ã / N` is unitary the
//! projection onto the feasible set `C` is closed form: transform, pull the
//! sampled coefficients back onto the data ball, transform back. Every primal
//! iterate is therefore feasible up to rounding.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ops::{gradient, tv_norm, tv_restricted, ComplexImage, Dft};
use crate::sampling::{stream_rng, streams, SampleSet};
use crate::structure::Support2D;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bound on `||D̃||^2` for circular differences in two directions.
pub const DIFF_NORM_SQ: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryProblem {
    pub n: usize,
    pub omega: SampleSet,
    /// Measured Fourier data, zero off `Ω`.
    pub xi: ComplexImage,
    pub delta: f64,
    pub m: usize,
}

impl RecoveryProblem {
    pub fn new(omega: SampleSet, xi: ComplexImage, delta: f64) -> Result<Self> {
        if xi.n() != omega.n() {
            return Err(Error::DimensionMismatch {
                expected: omega.n(),
                found: xi.n(),
            });
        }
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("noise level {delta} must be >= 0")));
        }
        let xi = crate::ops::project(&omega.omega, &xi)?;
        Ok(RecoveryProblem {
            n: omega.n(),
            m: omega.m,
            omega,
            xi,
            delta,
        })
    }

    /// `δ sqrt(m)`.
    pub fn radius(&self) -> f64 {
        self.delta * (self.m as f64).sqrt()
    }

    /// `||P̃_Ω Ã z - ξ||_2`.
    pub fn residual_norm(&self, z: &ComplexImage) -> f64 {
        self.residual_norm_with(&Dft::new(self.n), z)
    }

    fn residual_norm_with(&self, dft: &Dft, z: &ComplexImage) -> f64 {
        let f = dft.forward2(z);
        f.data()
            .iter()
            .zip(self.xi.data())
            .zip(self.omega.omega.mask())
            .filter(|(_, &keep)| keep)
            .map(|((a, b), _)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `max(0, ||P̃_Ω Ã z - ξ|| - δ sqrt(m))`.
    pub fn feasibility_violation(&self, z: &ComplexImage) -> f64 {
        (self.residual_norm(z) - self.radius()).max(0.0)
    }
}

/// `ξ = P̃_Ω Ã x + η` with `η` supported on `Ω` and `||η||_2 = δ sqrt(m)`
/// exactly (a Gaussian direction rescaled to the worst-case length).
pub fn measure(x: &ComplexImage, omega: &SampleSet, delta: f64, seed: u64) -> Result<RecoveryProblem> {
    if x.n() != omega.n() {
        return Err(Error::DimensionMismatch {
            expected: omega.n(),
            found: x.n(),
        });
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("noise level {delta} must be >= 0")));
    }
    let mut xi = crate::ops::project(&omega.omega, &crate::ops::dft2(x))?;
    if delta > 0.0 {
        let mut rng = stream_rng(seed, streams::NOISE);
        let mask = omega.omega.mask();
        let mut eta: Vec<Complex64> = mask
            .iter()
            .map(|&keep| {
                if keep {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                } else {
                    ZERO
                }
            })
            .collect();
        let len = eta.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let target = delta * (omega.m as f64).sqrt();
        for v in eta.iter_mut() {
            *v *= target / len;
        }
        for (d, e) in xi.data_mut().iter_mut().zip(eta) {
            *d += e;
        }
    }
    RecoveryProblem::new(omega.clone(), xi, delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Feasibility tolerance, relative to `1 + ||ξ||_2`.
    pub tol_feas: f64,
    /// Relative change of both the primal iterate and the dual variable at
    /// which to stop.
    pub tol_change: f64,
    /// Primal step; `None` picks `sqrt(0.95 / (L^2 balance))`.
    pub step_primal: Option<f64>,
    /// Dual step; `None` picks `0.95 / (L^2 step_primal)`.
    pub step_dual: Option<f64>,
    /// Ratio of dual to primal step used in auto mode.
    pub balance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 20_000,
            tol_feas: 1e-9,
            tol_change: 1e-9,
            step_primal: None,
            step_dual: None,
            balance: 10.0,
        }
    }
}

impl SolverConfig {
    /// `(primal, dual)` steps with `primal * dual * ||D̃||^2 <= 0.95` in auto mode.
    pub fn steps(&self) -> (f64, f64) {
        let product = 0.95 / DIFF_NORM_SQ;
        match (self.step_primal, self.step_dual) {
            (Some(t), Some(s)) => (t, s),
            (Some(t), None) => (t, product / t),
            (None, Some(s)) => (product / s, s),
            (None, None) => {
                let t = (product / self.balance).sqrt();
                (t, product / t)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (t, s) = self.steps();
        if !(self.tol_feas > 0.0 && self.tol_change > 0.0) {
            return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
        }
        if !(t > 0.0 && s > 0.0) || t * s * DIFF_NORM_SQ > 1.0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "steps ({t}, {s}) violate primal * dual * 8 <= 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub xhat: ComplexImage,
    pub iterations: usize,
    /// `max(0, ||P̃_Ω Ã x̂ - ξ|| - δ sqrt(m))` evaluated on `xhat`.
    pub feas_violation: f64,
    /// `||x̂||_TV`.
    pub objective: f64,
    /// Last relative iterate change (larger of primal and dual).
    pub last_change: f64,
    pub converged: bool,
}

struct FeasibleSet<'a> {
    problem: &'a RecoveryProblem,
    dft: &'a Dft,
}

impl FeasibleSet<'_> {
    fn project(&self, z: &mut ComplexImage) {
        self.dft.forward2_in_place(z);
        let mask = self.problem.omega.omega.mask();
        let xi = self.problem.xi.data();
        let data = z.data_mut();
        let radius = self.problem.radius();
        let mut r2 = 0.0;
        for ((v, d), &keep) in data.iter().zip(xi).zip(mask) {
            if keep {
                r2 += (v - d).norm_sqr();
            }
        }
        let r = r2.sqrt();
        if r > radius {
            let shrink = if r > 0.0 { radius / r } else { 0.0 };
            for ((v, d), &keep) in data.iter_mut().zip(xi).zip(mask) {
                if keep {
                    *v = d + (*v - d) * shrink;
                }
            }
        }
        self.dft.inverse2_in_place(z);
    }
}

fn grad_into(z: &[Complex64], n: usize, d1: &mut [Complex64], d2: &mut [Complex64]) {
    for r in 0..n {
        let up = (r + n - 1) % n;
        for c in 0..n {
            let left = (c + n - 1) % n;
            let v = z[r * n + c];
            d1[r * n + c] = v - z[up * n + c];
            d2[r * n + c] = v - z[r * n + left];
        }
    }
}

fn div_into(p1: &[Complex64], p2: &[Complex64], n: usize, out: &mut [Complex64]) {
    for r in 0..n {
        let down = (r + 1) % n;
        for c in 0..n {
            let right = (c + 1) % n;
            out[r * n + c] = p1[r * n + c] - p1[down * n + c] + p2[r * n + c] - p2[r * n + right];
        }
    }
}

fn clip_unit(v: Complex64) -> Complex64 {
    let a = v.norm();
    if a > 1.0 {
        v / a
    } else {
        v
    }
}

pub fn solve_tv(problem: &RecoveryProblem, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    let n = problem.n;
    let dft = Dft::new(n);
    let feasible = FeasibleSet { problem, dft: &dft };
    let (tau, sigma) = config.steps();
    let xi_norm = problem.xi.norm2();

    // zero-filled start, projected
    let mut z = ComplexImage::zeros(n);
    feasible.project(&mut z);
    let mut zbar = z.clone();
    let mut next = ComplexImage::zeros(n);
    let len = n * n;
    let (mut p1, mut p2) = (vec![ZERO; len], vec![ZERO; len]);
    let (mut g1, mut g2) = (vec![ZERO; len], vec![ZERO; len]);
    let mut div = vec![ZERO; len];

    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    while iterations < config.max_iters {
        iterations += 1;
        grad_into(zbar.data(), n, &mut g1, &mut g2);
        let (mut dual_diff2, mut dual_norm2) = (0.0, 0.0);
        for (p, g) in p1.iter_mut().chain(p2.iter_mut()).zip(g1.iter().chain(&g2)) {
            let updated = clip_unit(*p + g * sigma);
            dual_diff2 += (updated - *p).norm_sqr();
            dual_norm2 += updated.norm_sqr();
            *p = updated;
        }
        div_into(&p1, &p2, n, &mut div);
        for ((o, zi), d) in next.data_mut().iter_mut().zip(z.data()).zip(&div) {
            *o = zi - d * tau;
        }
        feasible.project(&mut next);

        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for ((zb, zn), zo) in zbar.data_mut().iter_mut().zip(next.data()).zip(z.data()) {
            let d = zn - zo;
            diff2 += d.norm_sqr();
            norm2 += zn.norm_sqr();
            *zb = zn + d;
        }
        core::mem::swap(&mut z, &mut next);
        // the dual change guards against the early phase where the dual
        // variable grows while the primal iterate stands still
        last_change = (diff2 / norm2.max(f64::MIN_POSITIVE))
            .sqrt()
            .max((dual_diff2 / dual_norm2.max(f64::MIN_POSITIVE)).sqrt());
        if last_change < config.tol_change {
            let violation = (problem.residual_norm_with(&dft, &z) - problem.radius()).max(0.0);
            if violation <= config.tol_feas * (1.0 + xi_norm) {
                converged = true;
                break;
            }
        }
    }

    let feas_violation = (problem.residual_norm_with(&dft, &z) - problem.radius()).max(0.0);
    Ok(SolverResult {
        objective: tv_norm(&z),
        xhat: z,
        iterations,
        feas_violation,
        last_change,
        converged,
    })
}

/// Error of a reconstruction against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// `||x - x̂||_2`
    pub l2: f64,
    /// `||x - x̂||_2 / ||x||_2` (`l2` itself when `x = 0`)
    pub rel_l2: f64,
    /// `||D̃(x - x̂)||_2`
    pub grad_l2: f64,
    /// `||x - x̂||_TV`
    pub tv: f64,
    /// `||x||_{TV, Δ1^c, Δ2^c}`
    pub tv_tail: f64,
}

pub fn error_metrics(x: &ComplexImage, xhat: &ComplexImage, delta1: &Support2D, delta2: &Support2D) -> ErrorMetrics {
    let h = x.sub(xhat);
    let l2 = h.norm2();
    let scale = x.norm2();
    ErrorMetrics {
        l2,
        rel_l2: if scale > 0.0 { l2 / scale } else { l2 },
        grad_l2: gradient(&h).norm2(),
        tv: tv_norm(&h),
        tv_tail: tv_restricted(x, &delta1.complement(), &delta2.complement()),
    }
}

/// Inputs of the error bounds; all counts as in the sampling set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    /// `max(s1, s2)`
    pub s: usize,
    /// `|Ω|`
    pub m: usize,
    /// `min(m1, m2)`
    pub m0: usize,
    /// `min(M1, M2)`
    pub bandwidth0: usize,
    pub n: usize,
    pub delta: f64,
    /// `||x||_{TV, Δ1^c, Δ2^c}`
    pub tv_tail: f64,
}

/// Right-hand sides of the gradient and image error bounds, with the hidden
/// constant set to one:
///
/// ```text
/// bound1 = N^2/M0^2 ((m0 N)^{-1/2} sqrt(m) δ + tail)
/// bound2 = N^2/M0^2 (sqrt(m/m0) sqrt(s) δ + sqrt(s) tail)
/// ```
pub fn theoretical_rhs(p: &BoundParams) -> (f64, f64) {
    let n = p.n as f64;
    let lead = n * n / (p.bandwidth0 as f64).powi(2);
    let (m, m0, s) = (p.m as f64, p.m0 as f64, p.s as f64);
    let bound1 = lead * (m.sqrt() * p.delta / (m0 * n).sqrt() + p.tv_tail);
    let bound2 = lead * ((m / m0).sqrt() * s.sqrt() * p.delta + s.sqrt() * p.tv_tail);
    (bound1, bound2)
}
