//! Cartesian line sampling sets `Ω = {0} ∪ (Ω1 x [N]) ∪ ([N] x Ω2)`, the
//! uniform pointwise baseline, and the line-budget rule.
//!
//! Randomness comes from ChaCha8, a counter-based generator: a 64-bit seed is
//! expanded with `SeedableRng::seed_from_u64` and each `(seed, stream)` pair
//! selects an independent keystream, so parallel trials never share state.

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ops::{freq_in_range, freq_range, freq_to_pos, IndexSet2D};

/// Independent generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used by the library's own draws.
pub mod streams {
    pub const SAMPLING: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const PHANTOM: u64 = 3;
}

/// The signed line index set `[m]`.
pub fn low_frequencies(m: usize) -> Vec<i64> {
    if m == 0 {
        return Vec::new();
    }
    freq_range(m).collect()
}

/// `m` distinct members of `pool`, uniform over all `m`-subsets, ascending.
pub fn unif_without_replacement<R: Rng + ?Sized>(pool: &[i64], m: usize, rng: &mut R) -> Result<Vec<i64>> {
    if m > pool.len() {
        return Err(Error::SampleTooLarge {
            requested: m,
            available: pool.len(),
        });
    }
    let mut out: Vec<i64> = index::sample(rng, pool.len(), m)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub omega: IndexSet2D,
    /// First-frequency indices of the sampled horizontal lines.
    pub omega1: Vec<i64>,
    /// Second-frequency indices of the sampled vertical lines.
    pub omega2: Vec<i64>,
    pub includes_zero: bool,
    /// `|Ω|`, overlaps counted once.
    pub m: usize,
}

impl SampleSet {
    pub fn n(&self) -> usize {
        self.omega.n()
    }

    /// Same set with the roles of the two frequency axes exchanged.
    pub fn transpose(&self) -> Self {
        SampleSet {
            omega: self.omega.transpose(),
            omega1: self.omega2.clone(),
            omega2: self.omega1.clone(),
            includes_zero: self.includes_zero,
            m: self.m,
        }
    }

    /// Sampled fraction of the `N^2` grid.
    pub fn coverage(&self) -> f64 {
        self.m as f64 / (self.n() * self.n()) as f64
    }

    /// Wraps an arbitrary mask, recording every fully sampled horizontal and
    /// vertical line.
    pub fn from_mask(omega: IndexSet2D) -> Self {
        let n = omega.n();
        let full_h = |p1: usize| (0..n).all(|p2| omega.contains_pos(p1, p2));
        let full_v = |p2: usize| (0..n).all(|p1| omega.contains_pos(p1, p2));
        let omega1 = freq_range(n).filter(|&k| full_h(freq_to_pos(k, n))).collect();
        let omega2 = freq_range(n).filter(|&k| full_v(freq_to_pos(k, n))).collect();
        SampleSet {
            m: omega.len(),
            includes_zero: omega.contains_pos(0, 0),
            omega,
            omega1,
            omega2,
        }
    }
}

fn dedup_lines(lines: &[i64], n: usize) -> Result<Vec<i64>> {
    let mut v = lines.to_vec();
    if let Some(&bad) = v.iter().find(|&&k| !freq_in_range(k, n)) {
        return Err(Error::FrequencyOutOfRange { freq: bad, n });
    }
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// `{(0,0)} ∪ (Ω1 x [N]) ∪ ([N] x Ω2)`.
pub fn cartesian_line_set(omega1: &[i64], omega2: &[i64], n: usize) -> Result<SampleSet> {
    let omega1 = dedup_lines(omega1, n)?;
    let omega2 = dedup_lines(omega2, n)?;
    let mut omega = IndexSet2D::empty(n);
    omega.insert_pos(0, 0);
    for &k1 in &omega1 {
        let p1 = freq_to_pos(k1, n);
        for p2 in 0..n {
            omega.insert_pos(p1, p2);
        }
    }
    for &k2 in &omega2 {
        let p2 = freq_to_pos(k2, n);
        for p1 in 0..n {
            omega.insert_pos(p1, p2);
        }
    }
    Ok(SampleSet {
        m: omega.len(),
        omega,
        omega1,
        omega2,
        includes_zero: true,
    })
}

/// Line budget for one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineBudget {
    /// `min(M, ceil(C s log(T s / eps) log(T M / eps)))`.
    pub lines: usize,
    /// The uncapped value before rounding.
    pub raw: f64,
    /// Whether `s log(T s / eps) >= log(T M / eps)` holds.
    pub consistent: bool,
}

pub fn line_budget(s: usize, t: usize, bandwidth: usize, eps: f64, constant: f64) -> Result<LineBudget> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("eps = {eps} must lie in (0, 1)")));
    }
    if s == 0 || t == 0 || bandwidth == 0 {
        return Err(Error::InvalidParameter(
            "sparsity, distinct-support count and bandwidth must be positive".into(),
        ));
    }
    if !(constant > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("budget constant {constant} must be positive")));
    }
    let (s, t, m) = (s as f64, t as f64, bandwidth as f64);
    let raw = constant * s * (t * s / eps).ln() * (t * m / eps).ln();
    let lines = (raw.ceil().max(0.0) as usize).min(bandwidth);
    Ok(LineBudget {
        lines,
        raw,
        consistent: s * (t * s / eps).ln() >= (t * m / eps).ln(),
    })
}

/// Budgets `(m1, m2)` for both directions.
#[allow(clippy::too_many_arguments)]
pub fn theorem_budget(
    s1: usize,
    s2: usize,
    t1: usize,
    t2: usize,
    bandwidth1: usize,
    bandwidth2: usize,
    eps: f64,
    constant: f64,
) -> Result<(LineBudget, LineBudget)> {
    Ok((
        line_budget(s1, t1, bandwidth1, eps, constant)?,
        line_budget(s2, t2, bandwidth2, eps, constant)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSamplingSpec {
    pub n: usize,
    /// `M1`: horizontal lines are drawn from `[M1]`.
    pub bandwidth1: usize,
    /// `M2`: vertical lines are drawn from `[M2]`.
    pub bandwidth2: usize,
    /// `m1`
    pub lines1: usize,
    /// `m2`
    pub lines2: usize,
    pub seed: u64,
    /// Take `Ω1 = [M1]` and `Ω2 = [M2]` outright.
    pub deterministic: bool,
}

impl LineSamplingSpec {
    pub fn validate(&self) -> Result<()> {
        for (band, lines) in [(self.bandwidth1, self.lines1), (self.bandwidth2, self.lines2)] {
            if band > self.n {
                return Err(Error::InvalidParameter(alloc::format!(
                    "bandwidth {band} exceeds side length {}",
                    self.n
                )));
            }
            if !self.deterministic && lines > band {
                return Err(Error::SampleTooLarge {
                    requested: lines,
                    available: band,
                });
            }
        }
        Ok(())
    }
}

pub fn draw_theorem_sampling(spec: &LineSamplingSpec) -> Result<SampleSet> {
    spec.validate()?;
    let band1 = low_frequencies(spec.bandwidth1);
    let band2 = low_frequencies(spec.bandwidth2);
    if spec.deterministic {
        return cartesian_line_set(&band1, &band2, spec.n);
    }
    let mut rng = stream_rng(spec.seed, streams::SAMPLING);
    let omega1 = unif_without_replacement(&band1, spec.lines1, &mut rng)?;
    let omega2 = unif_without_replacement(&band2, spec.lines2, &mut rng)?;
    cartesian_line_set(&omega1, &omega2, spec.n)
}

/// `m` distinct frequencies drawn uniformly, with `(0,0)` always present.
pub fn uniform_pointwise_mask(n: usize, m: usize, seed: u64) -> Result<SampleSet> {
    let total = n * n;
    if m == 0 || m > total {
        return Err(Error::SampleTooLarge {
            requested: m,
            available: total,
        });
    }
    let mut rng = stream_rng(seed, streams::SAMPLING);
    let mut omega = IndexSet2D::empty(n);
    omega.insert_pos(0, 0);
    // positions 1..total, i.e. everything but DC
    for i in index::sample(&mut rng, total - 1, m - 1) {
        let p = i + 1;
        omega.insert_pos(p / n, p % n);
    }
    Ok(SampleSet {
        m: omega.len(),
        omega,
        omega1: Vec::new(),
        omega2: Vec::new(),
        includes_zero: true,
    })
}
