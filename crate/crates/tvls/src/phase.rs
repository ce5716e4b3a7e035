//! Success-rate sweeps over line counts or over the budget constant.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tvls_core::sampling::{draw_theorem_sampling, theorem_budget, LineSamplingSpec};
use tvls_core::solver::{error_metrics, measure, solve_tv};

use crate::error::{Error, Result};
use crate::experiment::{PhantomSpec, SolverSettings, SUCCESS_TOL};
use crate::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseCell {
    /// Requested `(m1, m2)`; counts above a bandwidth take the whole band.
    Lines([usize; 2]),
    /// Line counts from the theorem budget with this constant.
    Constant(f64),
}

fn default_eps() -> f64 {
    0.5
}

fn default_constant() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub name: String,
    pub n: usize,
    pub seeds: Vec<u64>,
    /// Failure probability used in the budget overlay.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Constant used in the budget overlay of `Lines` cells.
    #[serde(default = "default_constant")]
    pub constant: f64,
    /// Fixed `[M1, M2]`; the phantom's separation-derived values otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<[usize; 2]>,
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    pub grid: Vec<PhaseCell>,
}

impl PhaseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(format!("{}: grid and seeds must be nonempty", self.name)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!("{}: eps must lie in (0, 1)", self.name)));
        }
        if let Some([b1, b2]) = self.bandwidth {
            if b1 == 0 || b2 == 0 || b1 > self.n || b2 > self.n {
                return Err(Error::Config(format!("{}: bandwidths must lie in 1..={}", self.name, self.n)));
            }
        }
        self.solver.config().validate()?;
        Ok(())
    }

    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("spec serializes");
        Sha256::digest(text.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub cell: PhaseCell,
    pub trials: usize,
    pub successes: usize,
    /// Largest bandwidths and budget predictions seen over the seeds.
    pub bandwidth1: usize,
    pub bandwidth2: usize,
    pub lines1: usize,
    pub lines2: usize,
    pub predicted1: usize,
    pub predicted2: usize,
    /// Budget below both bandwidths for every seed.
    pub consistent: bool,
}

impl PhaseRow {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResults {
    pub spec_hash: String,
    pub rows: Vec<PhaseRow>,
}

struct Trial {
    success: bool,
    bandwidth: (usize, usize),
    lines: (usize, usize),
    predicted: (usize, usize),
    consistent: bool,
}

fn run_trial(spec: &PhaseSpec, cell: PhaseCell, seed: u64) -> Result<Trial> {
    let phantom = spec.phantom.build(spec.n, seed)?;
    let st = &phantom.structure;
    let [band1, band2] = spec.bandwidth.unwrap_or([st.m1, st.m2]);
    let budget = |c: f64| theorem_budget(st.s1.max(1), st.s2.max(1), st.t1, st.t2, band1, band2, spec.eps, c);
    let (overlay1, overlay2) = budget(match cell {
        PhaseCell::Constant(c) => c,
        PhaseCell::Lines(_) => spec.constant,
    })?;
    let (m1, m2) = match cell {
        PhaseCell::Lines([a, b]) => (a.min(band1), b.min(band2)),
        PhaseCell::Constant(_) => (overlay1.lines, overlay2.lines),
    };
    let omega = draw_theorem_sampling(&LineSamplingSpec {
        n: spec.n,
        bandwidth1: band1,
        bandwidth2: band2,
        lines1: m1,
        lines2: m2,
        seed,
        deterministic: false,
    })?;
    let problem = measure(&phantom.image, &omega, 0.0, seed)?;
    let res = solve_tv(&problem, &spec.solver.config())?;
    let em = error_metrics(&phantom.image, &res.xhat, &phantom.delta1, &phantom.delta2);
    Ok(Trial {
        success: em.rel_l2 <= SUCCESS_TOL,
        bandwidth: (band1, band2),
        lines: (m1, m2),
        predicted: (overlay1.lines, overlay2.lines),
        consistent: overlay1.consistent && overlay2.consistent,
    })
}

/// Noiseless success rates per grid cell.
pub fn phase_transition(spec: &PhaseSpec) -> Result<PhaseResults> {
    spec.validate()?;
    let jobs: Vec<(usize, u64)> = (0..spec.grid.len())
        .flat_map(|c| spec.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let trials: Vec<Trial> = jobs
        .par_iter()
        .map(|&(c, s)| run_trial(spec, spec.grid[c], s))
        .collect::<Result<_>>()?;
    let per_cell = spec.seeds.len();
    let rows = spec
        .grid
        .iter()
        .zip(trials.chunks(per_cell))
        .map(|(&cell, ts)| PhaseRow {
            cell,
            trials: ts.len(),
            successes: ts.iter().filter(|t| t.success).count(),
            bandwidth1: ts.iter().map(|t| t.bandwidth.0).max().unwrap_or(0),
            bandwidth2: ts.iter().map(|t| t.bandwidth.1).max().unwrap_or(0),
            lines1: ts.iter().map(|t| t.lines.0).max().unwrap_or(0),
            lines2: ts.iter().map(|t| t.lines.1).max().unwrap_or(0),
            predicted1: ts.iter().map(|t| t.predicted.0).max().unwrap_or(0),
            predicted2: ts.iter().map(|t| t.predicted.1).max().unwrap_or(0),
            consistent: ts.iter().all(|t| t.consistent),
        })
        .collect();
    Ok(PhaseResults {
        spec_hash: spec.hash(),
        rows,
    })
}

pub fn write_phase_csv<W: Write>(w: W, results: &PhaseResults) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "cell",
        "lines1",
        "lines2",
        "bandwidth1",
        "bandwidth2",
        "trials",
        "successes",
        "rate",
        "predicted1",
        "predicted2",
        "consistent",
        "spec_hash",
        "version",
    ])?;
    for r in &results.rows {
        let cell = match r.cell {
            PhaseCell::Lines([a, b]) => format!("lines {a} {b}"),
            PhaseCell::Constant(c) => format!("constant {c}"),
        };
        out.write_record([
            cell,
            r.lines1.to_string(),
            r.lines2.to_string(),
            r.bandwidth1.to_string(),
            r.bandwidth2.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            format!("{:e}", r.rate()),
            r.predicted1.to_string(),
            r.predicted2.to_string(),
            r.consistent.to_string(),
            results.spec_hash.clone(),
            VERSION.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cells_parse_from_toml() {
        let text = r#"
            name = "p"
            n = 16
            seeds = [0, 1]
            grid = [{ lines = [2, 3] }, { constant = 0.25 }]
            [phantom]
            kind = "rect"
            rows = [4, 9]
            cols = [2, 12]
        "#;
        let spec: PhaseSpec = toml::from_str(text).unwrap();
        assert_eq!(spec.grid, vec![PhaseCell::Lines([2, 3]), PhaseCell::Constant(0.25)]);
        assert_eq!(spec.eps, 0.5);
        assert!(spec.validate().is_ok());
    }
}
