//! Plain complex FFT usable without `std`.
//!
//! Power-of-two lengths use an iterative radix-2 kernel; every other length
//! goes through Bluestein's chirp-z reduction onto a power-of-two plan.
//! Both directions are unnormalized.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kind: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    Trivial,
    Radix2 {
        // twiddles[k] = exp(-2 pi i k / len), k < len / 2
        twiddles: Vec<Complex64>,
        bitrev: Vec<usize>,
    },
    Bluestein {
        inner: Box<FftPlan>,
        // chirp[k] = exp(-i pi k^2 / len)
        chirp: Vec<Complex64>,
        // forward transform of the conjugate chirp, wrapped onto the inner length
        kernel_hat: Vec<Complex64>,
    },
}

fn unit(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "FFT length must be positive");
        let kind = if len == 1 {
            Kernel::Trivial
        } else if len.is_power_of_two() {
            let twiddles = (0..len / 2)
                .map(|k| unit(-2.0 * PI * k as f64 / len as f64))
                .collect();
            let bits = len.trailing_zeros();
            let bitrev = (0..len)
                .map(|i| i.reverse_bits() >> (usize::BITS - bits))
                .collect();
            Kernel::Radix2 { twiddles, bitrev }
        } else {
            let inner_len = (2 * len - 1).next_power_of_two();
            let inner = FftPlan::new(inner_len);
            let two_n = 2 * len as u128;
            let chirp: Vec<Complex64> = (0..len)
                .map(|k| {
                    // k^2 mod 2n keeps the angle small and exact
                    let q = ((k as u128 * k as u128) % two_n) as f64;
                    unit(-PI * q / len as f64)
                })
                .collect();
            let mut kernel_hat = vec![Complex64::new(0.0, 0.0); inner_len];
            kernel_hat[0] = chirp[0].conj();
            for k in 1..len {
                kernel_hat[k] = chirp[k].conj();
                kernel_hat[inner_len - k] = chirp[k].conj();
            }
            inner.forward(&mut kernel_hat);
            Kernel::Bluestein {
                inner: Box::new(inner),
                chirp,
                kernel_hat,
            }
        };
        FftPlan { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place `X_k = sum_j x_j exp(-2 pi i j k / n)`, `j, k` zero-based.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        match &self.kind {
            Kernel::Trivial => {}
            Kernel::Radix2 { twiddles, bitrev } => radix2(buf, twiddles, bitrev),
            Kernel::Bluestein {
                inner,
                chirp,
                kernel_hat,
            } => {
                let m = inner.len;
                let mut work = vec![Complex64::new(0.0, 0.0); m];
                for (k, (w, x)) in work.iter_mut().zip(buf.iter()).enumerate() {
                    *w = x * chirp[k];
                }
                inner.forward(&mut work);
                for (w, h) in work.iter_mut().zip(kernel_hat) {
                    *w *= h;
                }
                inner.inverse(&mut work);
                let scale = 1.0 / m as f64;
                for (k, x) in buf.iter_mut().enumerate() {
                    *x = work[k] * chirp[k] * scale;
                }
            }
        }
    }

    /// In-place `x_j = sum_k X_k exp(+2 pi i j k / n)` (no `1/n` factor).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        for v in buf.iter_mut() {
            *v = v.conj();
        }
    }
}

fn radix2(buf: &mut [Complex64], twiddles: &[Complex64], bitrev: &[usize]) {
    let n = buf.len();
    for i in 0..n {
        let j = bitrev[i];
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let stride = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let t = twiddles[k * stride] * buf[start + k + half];
                let u = buf[start + k];
                buf[start + k] = u + t;
                buf[start + k + half] = u - t;
            }
        }
        half *= 2;
    }
}
