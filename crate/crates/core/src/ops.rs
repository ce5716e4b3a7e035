//! Linear operators on `N x N` complex images and their index conventions.
//!
//! Spatial indices run over `{1..N}` in the mathematical notation and are
//! stored 0-based: row `k` lives at storage row `k - 1`. Frequencies run over
//! the signed set `[N] = {-ceil(N/2)+1, ..., floor(N/2)}` and are stored at
//! position `k mod N`, the usual FFT layout.
//!
//! The Fourier transform is `(Az)_k = sum_{j=1}^N z_j exp(-2 pi i k j / N)`.
//! Because `j` starts at 1 there is an extra phase `exp(-2 pi i k / N)` with
//! respect to a zero-based FFT; [`Dft`] applies it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftPlan;
use crate::structure::Support2D;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Smallest member of `[n]`.
pub fn freq_min(n: usize) -> i64 {
    -(n.div_ceil(2) as i64) + 1
}

/// Largest member of `[n]`.
pub fn freq_max(n: usize) -> i64 {
    (n / 2) as i64
}

/// The signed frequency set `[n]` as an inclusive range.
pub fn freq_range(n: usize) -> RangeInclusive<i64> {
    freq_min(n)..=freq_max(n)
}

pub fn freq_in_range(k: i64, n: usize) -> bool {
    freq_range(n).contains(&k)
}

/// Storage position `k mod n` of a signed frequency.
pub fn freq_to_pos(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Inverse of [`freq_to_pos`] on `[n]`.
pub fn pos_to_freq(p: usize, n: usize) -> i64 {
    debug_assert!(p < n);
    let k = p as i64;
    if k > freq_max(n) {
        k - n as i64
    } else {
        k
    }
}

/// Square complex image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "image side must be positive");
        ComplexImage {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(ComplexImage { n, data })
    }

    /// Builds an image from `f(row, col)` with 0-based storage indices.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        ComplexImage { n, data }
    }

    pub fn from_real(n: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(n, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.n + col] = v;
    }

    /// Entry at signed frequency `(k1, k2)` of a frequency-domain image.
    pub fn at_freq(&self, k1: i64, k2: i64) -> Complex64 {
        self.get(freq_to_pos(k1, self.n), freq_to_pos(k2, self.n))
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    pub fn row(&self, row: usize) -> Vec<Complex64> {
        self.data[row * self.n..(row + 1) * self.n].to_vec()
    }

    pub fn transpose(&self) -> Self {
        ComplexImage::from_fn(self.n, |r, c| self.get(c, r))
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sum(&self) -> Complex64 {
        self.data.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        ComplexImage {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &ComplexImage) -> Self {
        assert_eq!(self.n, other.n);
        ComplexImage {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `<self, other> = sum self_i * conj(other_i)`.
    pub fn inner(&self, other: &ComplexImage) -> Complex64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Vertical and horizontal circular differences of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub d1: ComplexImage,
    pub d2: ComplexImage,
}

impl GradientPair {
    pub fn zeros(n: usize) -> Self {
        GradientPair {
            d1: ComplexImage::zeros(n),
            d2: ComplexImage::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.d1.n
    }

    /// `sqrt(||d1||^2 + ||d2||^2)`.
    pub fn norm2(&self) -> f64 {
        (self.d1.norm2().powi(2) + self.d2.norm2().powi(2)).sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.d1.norm1() + self.d2.norm1()
    }

    pub fn inner(&self, other: &GradientPair) -> Complex64 {
        self.d1.inner(&other.d1) + self.d2.inner(&other.d2)
    }
}

/// Set of 2D frequencies `(k1, k2)` in `[N]^2`, backed by a dense mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet2D {
    n: usize,
    mask: Vec<bool>,
    count: usize,
}

impl IndexSet2D {
    pub fn empty(n: usize) -> Self {
        IndexSet2D {
            n,
            mask: vec![false; n * n],
            count: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        IndexSet2D {
            n,
            mask: vec![true; n * n],
            count: n * n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn insert(&mut self, k1: i64, k2: i64) -> Result<bool> {
        for k in [k1, k2] {
            if !freq_in_range(k, self.n) {
                return Err(Error::FrequencyOutOfRange { freq: k, n: self.n });
            }
        }
        Ok(self.insert_pos(freq_to_pos(k1, self.n), freq_to_pos(k2, self.n)))
    }

    pub fn insert_pos(&mut self, p1: usize, p2: usize) -> bool {
        let slot = &mut self.mask[p1 * self.n + p2];
        let fresh = !*slot;
        if fresh {
            *slot = true;
            self.count += 1;
        }
        fresh
    }

    pub fn contains(&self, k1: i64, k2: i64) -> bool {
        freq_in_range(k1, self.n)
            && freq_in_range(k2, self.n)
            && self.contains_pos(freq_to_pos(k1, self.n), freq_to_pos(k2, self.n))
    }

    pub fn contains_pos(&self, p1: usize, p2: usize) -> bool {
        self.mask[p1 * self.n + p2]
    }

    /// Row-major mask over storage positions.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Members as signed frequency pairs, in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let n = self.n;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (pos_to_freq(i / n, n), pos_to_freq(i % n, n)))
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = IndexSet2D::empty(n);
        for p1 in 0..n {
            for p2 in 0..n {
                if self.contains_pos(p1, p2) {
                    out.insert_pos(p2, p1);
                }
            }
        }
        out
    }
}

/// Cached 1D/2D transform of a fixed side length.
#[derive(Debug, Clone)]
pub struct Dft {
    n: usize,
    plan: FftPlan,
    // twist[p] = exp(-2 pi i p / n), accounts for 1-based spatial indices
    twist: Vec<Complex64>,
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let twist = (0..n)
            .map(|p| {
                let a = -2.0 * PI * p as f64 / n as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Dft {
            n,
            plan: FftPlan::new(n),
            twist,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward_in_place(&self, v: &mut [Complex64]) {
        self.plan.forward(v);
        for (x, t) in v.iter_mut().zip(&self.twist) {
            *x *= t;
        }
    }

    pub fn inverse_in_place(&self, v: &mut [Complex64]) {
        for (x, t) in v.iter_mut().zip(&self.twist) {
            *x *= t.conj();
        }
        self.plan.inverse(v);
        let s = 1.0 / self.n as f64;
        for x in v.iter_mut() {
            *x *= s;
        }
    }

    pub fn forward(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut v = z.to_vec();
        self.forward_in_place(&mut v);
        v
    }

    pub fn inverse(&self, w: &[Complex64]) -> Vec<Complex64> {
        let mut v = w.to_vec();
        self.inverse_in_place(&mut v);
        v
    }

    fn separable(&self, img: &mut ComplexImage, pass: impl Fn(&Self, &mut [Complex64])) {
        let n = self.n;
        let mut col = vec![ZERO; n];
        for c in 0..n {
            for r in 0..n {
                col[r] = img.data[r * n + c];
            }
            pass(self, &mut col);
            for r in 0..n {
                img.data[r * n + c] = col[r];
            }
        }
        for r in 0..n {
            pass(self, &mut img.data[r * n..(r + 1) * n]);
        }
    }

    pub fn forward2_in_place(&self, img: &mut ComplexImage) {
        assert_eq!(img.n, self.n);
        self.separable(img, Self::forward_in_place);
    }

    pub fn inverse2_in_place(&self, img: &mut ComplexImage) {
        assert_eq!(img.n, self.n);
        self.separable(img, Self::inverse_in_place);
    }

    pub fn forward2(&self, img: &ComplexImage) -> ComplexImage {
        let mut out = img.clone();
        self.forward2_in_place(&mut out);
        out
    }

    pub fn inverse2(&self, img: &ComplexImage) -> ComplexImage {
        let mut out = img.clone();
        self.inverse2_in_place(&mut out);
        out
    }
}

/// `A z`, output stored at positions `k mod N`.
pub fn dft1(z: &[Complex64]) -> Vec<Complex64> {
    Dft::new(z.len()).forward(z)
}

/// Inverse of [`dft1`] (carries the `1/N`).
pub fn idft1(w: &[Complex64]) -> Vec<Complex64> {
    Dft::new(w.len()).inverse(w)
}

/// `Ã z`, computed as column transforms followed by row transforms.
pub fn dft2(z: &ComplexImage) -> ComplexImage {
    Dft::new(z.n).forward2(z)
}

pub fn idft2(w: &ComplexImage) -> ComplexImage {
    Dft::new(w.n).inverse2(w)
}

/// `(D̃1 z)_{k,j} = z_{k,j} - z_{k-1,j}` with row 0 wrapping to row N.
pub fn diff1(z: &ComplexImage) -> ComplexImage {
    let n = z.n;
    ComplexImage::from_fn(n, |r, c| z.get(r, c) - z.get((r + n - 1) % n, c))
}

/// `(D̃2 z)_{k,j} = z_{k,j} - z_{k,j-1}` with column 0 wrapping to column N.
pub fn diff2(z: &ComplexImage) -> ComplexImage {
    let n = z.n;
    ComplexImage::from_fn(n, |r, c| z.get(r, c) - z.get(r, (c + n - 1) % n))
}

pub fn gradient(z: &ComplexImage) -> GradientPair {
    GradientPair {
        d1: diff1(z),
        d2: diff2(z),
    }
}

/// `D̃* g`, the negative circular divergence.
pub fn adjoint_diff(g: &GradientPair) -> Result<ComplexImage> {
    let n = g.d1.n;
    if g.d2.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.d2.n,
        });
    }
    Ok(ComplexImage::from_fn(n, |r, c| {
        g.d1.get(r, c) - g.d1.get((r + 1) % n, c) + g.d2.get(r, c) - g.d2.get(r, (c + 1) % n)
    }))
}

/// `P̃_Ω z` on a frequency-domain image.
pub fn project(omega: &IndexSet2D, z: &ComplexImage) -> Result<ComplexImage> {
    if omega.n != z.n {
        return Err(Error::DimensionMismatch {
            expected: omega.n,
            found: z.n,
        });
    }
    let data = z
        .data
        .iter()
        .zip(&omega.mask)
        .map(|(&v, &keep)| if keep { v } else { ZERO })
        .collect();
    Ok(ComplexImage { n: z.n, data })
}

/// Anisotropic TV, `||D̃1 z||_1 + ||D̃2 z||_1`.
pub fn tv_norm(z: &ComplexImage) -> f64 {
    gradient(z).norm1()
}

/// `||P̃_{Δ1} D̃1 z||_1 + ||P̃_{Δ2} D̃2 z||_1`.
pub fn tv_restricted(z: &ComplexImage, delta1: &Support2D, delta2: &Support2D) -> f64 {
    let g = gradient(z);
    let part = |d: &ComplexImage, s: &Support2D| -> f64 {
        s.iter().map(|(r, c)| d.get(r, c).norm()).sum()
    };
    part(&g.d1, delta1) + part(&g.d2, delta2)
}

/// Orientation of a family of Cartesian k-space lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineAxis {
    /// `Ω x [N]`: fixed first frequency, all second frequencies.
    Horizontal,
    /// `[N] x Ω`: fixed second frequency, all first frequencies.
    Vertical,
}

/// Both sides of the line-energy identity
/// `||P̃_{Ω x [N]} Ã z||^2 = N sum_k ||P_Ω A z^{[col,k]}||^2`
/// (rows instead of columns for the vertical orientation).
pub fn line_energy_identity_check(omega: &[i64], z: &ComplexImage, axis: LineAxis) -> (f64, f64) {
    let n = z.n;
    let dft = Dft::new(n);
    let mut wanted = vec![false; n];
    for &k in omega {
        if freq_in_range(k, n) {
            wanted[freq_to_pos(k, n)] = true;
        }
    }

    let full = dft.forward2(z);
    let mut lhs = 0.0;
    for p1 in 0..n {
        for p2 in 0..n {
            let hit = match axis {
                LineAxis::Horizontal => wanted[p1],
                LineAxis::Vertical => wanted[p2],
            };
            if hit {
                lhs += full.get(p1, p2).norm_sqr();
            }
        }
    }

    let mut rhs = 0.0;
    for line in 0..n {
        let v = match axis {
            LineAxis::Horizontal => z.column(line),
            LineAxis::Vertical => z.row(line),
        };
        let f = dft.forward(&v);
        rhs += f
            .iter()
            .zip(&wanted)
            .filter(|(_, &w)| w)
            .map(|(x, _)| x.norm_sqr())
            .sum::<f64>();
    }
    (lhs, n as f64 * rhs)
}
