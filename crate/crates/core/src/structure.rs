//! Sparsity structure of gradient supports: per-line cardinality, minimum
//! separation, and the number of distinct column/row patterns.
//!
//! Supports hold 0-based storage coordinates `(row, col)`; the CSV export in
//! the companion crate shifts them to 1-based.
//!
//! The separation helpers follow the literal index pattern of the
//! definitions: [`min_sep_rows`] compares members sharing the same *column*
//! (the separation along each column), and [`min_sep_cols`] compares members
//! sharing the same *row*. The names are kept as defined even though they read
//! backwards.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ops::{diff1, diff2, ComplexImage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support2D {
    n: usize,
    members: BTreeSet<(usize, usize)>,
}

impl Support2D {
    pub fn empty(n: usize) -> Self {
        Support2D {
            n,
            members: BTreeSet::new(),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for r in 0..n {
            for c in 0..n {
                s.members.insert((r, c));
            }
        }
        s
    }

    pub fn from_members(n: usize, members: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut s = Self::empty(n);
        for (r, c) in members {
            s.insert(r, c)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, row: usize, col: usize) -> Result<bool> {
        if row >= self.n || col >= self.n {
            return Err(Error::InvalidParameter(alloc::format!(
                "support member ({row}, {col}) outside a {n}x{n} grid",
                n = self.n
            )));
        }
        Ok(self.members.insert((row, col)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.members.contains(&(row, col))
    }

    /// Members in (row, col) lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().copied()
    }

    pub fn complement(&self) -> Self {
        let mut s = Self::empty(self.n);
        for r in 0..self.n {
            for c in 0..self.n {
                if !self.contains(r, c) {
                    s.members.insert((r, c));
                }
            }
        }
        s
    }

    /// Row indices of the members in column `col`, ascending.
    pub fn column_members(&self, col: usize) -> Vec<usize> {
        self.members
            .iter()
            .filter(|&&(_, c)| c == col)
            .map(|&(r, _)| r)
            .collect()
    }

    /// Column indices of the members in row `row`, ascending.
    pub fn row_members(&self, row: usize) -> Vec<usize> {
        self.members
            .range((row, 0)..(row + 1, 0))
            .map(|&(_, c)| c)
            .collect()
    }

    /// Restriction `P̃_Δ z` of a spatial image.
    pub fn restrict(&self, z: &ComplexImage) -> ComplexImage {
        let mut out = ComplexImage::zeros(z.n());
        for (r, c) in self.iter() {
            out.set(r, c, z.get(r, c));
        }
        out
    }

    fn per_column(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(r, c) in &self.members {
            map.entry(c).or_default().push(r);
        }
        map
    }

    fn per_row(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(r, c) in &self.members {
            map.entry(r).or_default().push(c);
        }
        map
    }
}

/// `sgn(w) = w / |w|`, zero at zero.
pub fn sgn(w: Complex64) -> Complex64 {
    let a = w.norm();
    if a == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        w / a
    }
}

/// `P̃_Δ sgn(z)`.
pub fn sign_pattern(z: &ComplexImage, support: &Support2D) -> ComplexImage {
    let mut out = ComplexImage::zeros(z.n());
    for (r, c) in support.iter() {
        out.set(r, c, sgn(z.get(r, c)));
    }
    out
}

pub fn support_of(z: &ComplexImage, tol: f64) -> Support2D {
    let n = z.n();
    let mut s = Support2D::empty(n);
    for r in 0..n {
        for c in 0..n {
            if z.get(r, c).norm() > tol {
                s.members.insert((r, c));
            }
        }
    }
    s
}

/// Largest number of members in a single column.
pub fn column_cardinality(delta: &Support2D) -> usize {
    delta.per_column().values().map(Vec::len).max().unwrap_or(0)
}

/// Largest number of members in a single row.
pub fn row_cardinality(delta: &Support2D) -> usize {
    delta.per_row().values().map(Vec::len).max().unwrap_or(0)
}

fn min_gap(lines: BTreeMap<usize, Vec<usize>>, n: usize) -> Option<f64> {
    lines
        .values()
        .flat_map(|idx| idx.windows(2).map(|w| w[1] - w[0]))
        .min()
        .map(|g| g as f64 / n as f64)
}

/// `min_n min{|j-k|/N : (j,n), (k,n) in Δ, j != k}`; `None` when no column
/// holds two members.
pub fn min_sep_rows(delta: &Support2D) -> Option<f64> {
    min_gap(delta.per_column(), delta.n)
}

/// `min_n min{|j-k|/N : (n,j), (n,k) in Δ, j != k}`; `None` when no row
/// holds two members.
pub fn min_sep_cols(delta: &Support2D) -> Option<f64> {
    min_gap(delta.per_row(), delta.n)
}

fn entry_key(v: Complex64) -> (u64, u64) {
    // +0.0 and -0.0 are the same entry
    let norm = |x: f64| if x == 0.0 { 0.0f64.to_bits() } else { x.to_bits() };
    (norm(v.re), norm(v.im))
}

/// Number of distinct columns of `z`, compared as exact vectors.
pub fn distinct_column_supports(z: &ComplexImage) -> usize {
    let n = z.n();
    (0..n)
        .map(|c| (0..n).map(|r| entry_key(z.get(r, c))).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Number of distinct rows of `z`, compared as exact vectors.
pub fn distinct_row_supports(z: &ComplexImage) -> usize {
    let n = z.n();
    (0..n)
        .map(|r| (0..n).map(|c| entry_key(z.get(r, c))).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Rounds sign entries to a 2^-30 grid so that signs equal up to rounding
/// (e.g. of `x` and `0.1 x`) count as the same.
fn snapped(mut z: ComplexImage) -> ComplexImage {
    const GRID: f64 = (1u64 << 30) as f64;
    for v in z.data_mut() {
        *v = Complex64::new((v.re * GRID).round() / GRID, (v.im * GRID).round() / GRID);
    }
    z
}

/// Default support threshold: `1e-9` times the largest gradient magnitude.
pub fn default_tolerance(x: &ComplexImage) -> f64 {
    1e-9 * diff1(x).max_abs().max(diff2(x).max_abs())
}

/// `(Δ1, Δ2) = (supp D̃1 x, supp D̃2 x)` at threshold `tol`.
pub fn gradient_supports(x: &ComplexImage, tol: f64) -> (Support2D, Support2D) {
    (support_of(&diff1(x), tol), support_of(&diff2(x), tol))
}

/// Structure quantities that parameterize the line-sampling budgets.
///
/// `nu_row` is the separation along the columns of `Δ1` and `nu_col` the
/// separation along the rows of `Δ2`; these are the separations that fix the
/// line ranges `M1` and `M2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub n: usize,
    pub s1: usize,
    pub s2: usize,
    pub nu_row: Option<f64>,
    pub nu_col: Option<f64>,
    pub t1: usize,
    pub t2: usize,
    pub m1: usize,
    pub m2: usize,
}

/// `floor(2 / nu)` capped at `n`, or the fallback when `nu` is undefined.
pub fn bandwidth_from_separation(nu: Option<f64>, n: usize, fallback: Option<usize>) -> usize {
    match nu {
        Some(nu) => {
            // guard against 2/(2/N) landing a hair under an integer
            let m = (2.0 / nu + 1e-9).floor() as usize;
            m.clamp(1, n)
        }
        None => fallback.unwrap_or(n / 4).clamp(1, n),
    }
}

pub fn structure_summary(x: &ComplexImage, tol: f64) -> StructureReport {
    structure_summary_with(x, tol, None)
}

/// As [`structure_summary`], with an explicit bandwidth for directions that
/// have at most one jump per line.
pub fn structure_summary_with(x: &ComplexImage, tol: f64, fallback: Option<usize>) -> StructureReport {
    let n = x.n();
    let g1 = diff1(x);
    let g2 = diff2(x);
    let delta1 = support_of(&g1, tol);
    let delta2 = support_of(&g2, tol);
    let nu_row = min_sep_rows(&delta1);
    let nu_col = min_sep_cols(&delta2);
    StructureReport {
        n,
        s1: column_cardinality(&delta1),
        s2: row_cardinality(&delta2),
        nu_row,
        nu_col,
        t1: distinct_column_supports(&snapped(sign_pattern(&g1, &delta1))),
        t2: distinct_row_supports(&snapped(sign_pattern(&g2, &delta2))),
        m1: bandwidth_from_separation(nu_row, n, fallback),
        m2: bandwidth_from_separation(nu_col, n, fallback),
    }
}
