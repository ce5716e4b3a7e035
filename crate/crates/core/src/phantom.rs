//! Piecewise-constant test images with known gradient supports.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ops::ComplexImage;
use crate::sampling::{stream_rng, streams};
use crate::structure::{default_tolerance, gradient_supports, structure_summary, StructureReport, Support2D};

#[derive(Debug, Clone, PartialEq)]
pub enum PhantomKind {
    /// Indicator of an axis-aligned rectangle times `height`. Bounds are
    /// 1-based and inclusive.
    Rect {
        rows: (usize, usize),
        cols: (usize, usize),
        height: f64,
    },
    /// Tensor grid of constant cells: `row_lines` equispaced horizontal jump
    /// lines and `col_lines` equispaced vertical ones, starting at storage
    /// row/column `offset`. Cell values are drawn so that every jump line is
    /// full, i.e. neighbouring cells differ by at least `0.2`.
    LineGrid {
        row_lines: usize,
        col_lines: usize,
        offset: usize,
    },
    /// Sum of `rects` random rectangles whose edges are pairwise at least
    /// `min_sep * N` apart (circularly) in each direction.
    RandomPiecewise { rects: usize, min_sep: f64 },
    /// Externally supplied image.
    Provided,
}

impl PhantomKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::Rect { .. } => "rect",
            PhantomKind::LineGrid { .. } => "line-grid",
            PhantomKind::RandomPiecewise { .. } => "random-piecewise",
            PhantomKind::Provided => "from-file",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: ComplexImage,
    pub kind: PhantomKind,
    pub delta1: Support2D,
    pub delta2: Support2D,
    pub tol: f64,
    pub structure: StructureReport,
}

impl Phantom {
    /// Wraps an image, deriving supports and structure at the default tolerance.
    pub fn from_image(image: ComplexImage, kind: PhantomKind) -> Self {
        let tol = default_tolerance(&image);
        let (delta1, delta2) = gradient_supports(&image, tol);
        let structure = structure_summary(&image, tol);
        Phantom {
            image,
            kind,
            delta1,
            delta2,
            tol,
            structure,
        }
    }
}

pub fn make_phantom(kind: &PhantomKind, n: usize, seed: u64) -> Result<Phantom> {
    if n < 2 {
        return Err(Error::InvalidParameter(alloc::format!("side length {n} is below 2")));
    }
    let mut rng = stream_rng(seed, streams::PHANTOM);
    let image = match *kind {
        PhantomKind::Rect { rows, cols, height } => rect(n, rows, cols, height)?,
        PhantomKind::LineGrid {
            row_lines,
            col_lines,
            offset,
        } => line_grid(n, row_lines, col_lines, offset, &mut rng)?,
        PhantomKind::RandomPiecewise { rects, min_sep } => random_piecewise(n, rects, min_sep, &mut rng)?,
        PhantomKind::Provided => {
            return Err(Error::InvalidParameter(
                "provided phantoms are built with Phantom::from_image".into(),
            ))
        }
    };
    Ok(Phantom::from_image(image, kind.clone()))
}

fn rect(n: usize, rows: (usize, usize), cols: (usize, usize), height: f64) -> Result<ComplexImage> {
    let ok = |(a, b): (usize, usize)| a >= 1 && a <= b && b <= n;
    if !ok(rows) || !ok(cols) {
        return Err(Error::InvalidParameter(alloc::format!(
            "rectangle rows {rows:?} cols {cols:?} do not fit in 1..={n}"
        )));
    }
    Ok(ComplexImage::from_fn(n, |r, c| {
        let inside = (rows.0 - 1..rows.1).contains(&r) && (cols.0 - 1..cols.1).contains(&c);
        Complex64::new(if inside { height } else { 0.0 }, 0.0)
    }))
}

fn boundaries(n: usize, count: usize, offset: usize) -> Vec<usize> {
    (0..count).map(|i| (i * n / count + offset) % n).collect()
}

/// Index of the cell holding position `p`, given sorted cut positions.
fn cell_of(cuts: &[usize], p: usize) -> usize {
    match cuts.iter().rposition(|&b| b <= p) {
        Some(i) => i,
        // before the first cut: the wrap-around cell
        None => cuts.len() - 1,
    }
}

fn line_grid<R: Rng>(n: usize, row_lines: usize, col_lines: usize, offset: usize, rng: &mut R) -> Result<ComplexImage> {
    if row_lines > n || col_lines > n || row_lines == 1 || col_lines == 1 {
        return Err(Error::InvalidParameter(alloc::format!(
            "line counts ({row_lines}, {col_lines}) must be 0 or between 2 and {n}"
        )));
    }
    let mut rows = boundaries(n, row_lines.max(1), offset);
    let mut cols = boundaries(n, col_lines.max(1), offset);
    rows.sort_unstable();
    cols.sort_unstable();
    let (nr, nc) = (rows.len(), cols.len());
    let mut values = vec![0.0; nr * nc];
    let gap = 0.2;
    for i in 0..nr {
        for j in 0..nc {
            let mut neighbours = Vec::with_capacity(4);
            if row_lines > 0 && i > 0 {
                neighbours.push(values[(i - 1) * nc + j]);
            }
            if row_lines > 0 && i == nr - 1 && nr > 1 {
                neighbours.push(values[j]);
            }
            if col_lines > 0 && j > 0 {
                neighbours.push(values[i * nc + j - 1]);
            }
            if col_lines > 0 && j == nc - 1 && nc > 1 {
                neighbours.push(values[i * nc]);
            }
            values[i * nc + j] = loop {
                let v: f64 = rng.random_range(-1.0..1.0);
                if neighbours.iter().all(|&u| (u - v).abs() >= gap) {
                    break v;
                }
            };
        }
    }
    Ok(ComplexImage::from_fn(n, |r, c| {
        let i = if row_lines == 0 { 0 } else { cell_of(&rows, r) };
        let j = if col_lines == 0 { 0 } else { cell_of(&cols, c) };
        Complex64::new(values[i * nc + j], 0.0)
    }))
}

fn circular_gap(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// `count` positions in `0..n`, pairwise at least `gap` apart circularly.
/// Draws sequentially, rejecting candidates that land too close, and restarts
/// when no room is left.
fn separated_positions<R: Rng>(n: usize, count: usize, gap: usize, rng: &mut R) -> Option<Vec<usize>> {
    'restart: for _ in 0..1000 {
        let mut picked: Vec<usize> = Vec::with_capacity(count);
        for _ in 0..count {
            let mut placed = false;
            for _ in 0..64 * n {
                let p = rng.random_range(0..n);
                if picked.iter().all(|&q| circular_gap(p, q, n) >= gap) {
                    picked.push(p);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'restart;
            }
        }
        return Some(picked);
    }
    None
}

fn random_piecewise<R: Rng>(n: usize, rects: usize, min_sep: f64, rng: &mut R) -> Result<ComplexImage> {
    let edges = 2 * rects;
    if !(min_sep > 0.0) || edges as f64 * min_sep > 1.0 {
        return Err(Error::InfeasibleSeparation {
            count: edges,
            separation: min_sep,
        });
    }
    let gap = (min_sep * n as f64).ceil() as usize;
    let rows = separated_positions(n, edges, gap, rng).ok_or(Error::InfeasibleSeparation {
        count: edges,
        separation: min_sep,
    })?;
    let cols = separated_positions(n, edges, gap, rng).ok_or(Error::InfeasibleSeparation {
        count: edges,
        separation: min_sep,
    })?;
    let mut image = ComplexImage::zeros(n);
    for k in 0..rects {
        let magnitude: f64 = rng.random_range(0.5..1.5);
        let height = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        // circular spans [start, end)
        let (r0, r1) = (rows[2 * k], rows[2 * k + 1]);
        let (c0, c1) = (cols[2 * k], cols[2 * k + 1]);
        let span = |a: usize, b: usize, p: usize| if a <= b { (a..b).contains(&p) } else { p >= a || p < b };
        for r in 0..n {
            if !span(r0, r1, r) {
                continue;
            }
            for c in 0..n {
                if span(c0, c1, c) {
                    let v = image.get(r, c);
                    image.set(r, c, v + Complex64::new(height, 0.0));
                }
            }
        }
    }
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{min_sep_cols, min_sep_rows};

    #[test]
    fn rectangle_phantom_structure() {
        let kind = PhantomKind::Rect {
            rows: (8, 16),
            cols: (8, 16),
            height: 1.0,
        };
        let p = make_phantom(&kind, 32, 0).unwrap();
        assert_eq!((p.structure.s1, p.structure.s2), (2, 2));
        // one nonzero sign column class plus the all-zero class
        assert_eq!((p.structure.t1, p.structure.t2), (2, 2));
        assert!(make_phantom(
            &PhantomKind::Rect {
                rows: (0, 3),
                cols: (1, 2),
                height: 1.0
            },
            8,
            0
        )
        .is_err());
    }

    #[test]
    fn line_grid_has_full_equispaced_lines() {
        for lines in [2, 4, 8] {
            let kind = PhantomKind::LineGrid {
                row_lines: lines,
                col_lines: lines,
                offset: 3,
            };
            let p = make_phantom(&kind, 64, 11).unwrap();
            assert_eq!(p.delta1.len(), lines * 64);
            assert_eq!(p.delta2.len(), lines * 64);
            assert_eq!(p.structure.s1, lines);
            assert_eq!(min_sep_rows(&p.delta1), Some(1.0 / lines as f64));
            assert_eq!(min_sep_cols(&p.delta2), Some(1.0 / lines as f64));
        }
        let stripes = make_phantom(
            &PhantomKind::LineGrid {
                row_lines: 4,
                col_lines: 0,
                offset: 0,
            },
            16,
            1,
        )
        .unwrap();
        assert!(stripes.delta2.is_empty());
        assert_eq!(stripes.structure.t1, 1);
    }

    #[test]
    fn random_piecewise_respects_separation() {
        let kind = PhantomKind::RandomPiecewise { rects: 2, min_sep: 0.2 };
        for seed in 0..20 {
            let p = make_phantom(&kind, 32, seed).unwrap();
            let floor = (0.2f64 * 32.0).ceil() / 32.0;
            if let Some(nu) = min_sep_rows(&p.delta1) {
                assert!(nu >= floor - 1e-12);
            }
            if let Some(nu) = min_sep_cols(&p.delta2) {
                assert!(nu >= floor - 1e-12);
            }
            assert!(p.structure.s1 <= 4 && p.structure.s2 <= 4);
        }
        assert_eq!(make_phantom(&kind, 32, 4).unwrap(), make_phantom(&kind, 32, 4).unwrap());
        assert!(matches!(
            make_phantom(&PhantomKind::RandomPiecewise { rects: 3, min_sep: 0.2 }, 32, 0),
            Err(Error::InfeasibleSeparation { .. })
        ));
    }
}
