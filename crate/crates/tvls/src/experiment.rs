//! Seeded recovery experiments: phantom, sampling, measurement, solve,
//! metrics, optional certificate check, one CSV row per (seed, condition).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tvls_core::certify::{verify_dual_conditions, CertifyConfig};
use tvls_core::ops::{freq_range, IndexSet2D};
use tvls_core::sampling::{
    cartesian_line_set, draw_theorem_sampling, low_frequencies, stream_rng, streams, uniform_pointwise_mask,
    unif_without_replacement, LineSamplingSpec,
};
use tvls_core::solver::{error_metrics, measure, solve_tv, theoretical_rhs, BoundParams, SolverConfig};
use tvls_core::{make_phantom, ComplexImage, Phantom, PhantomKind, SampleSet, StructureReport};

use crate::error::{Error, Result};
use crate::formats::{read_tvls, write_mask_pgm, write_pgm_magnitude};
use crate::VERSION;

/// Relative ℓ2 error at or below which a reconstruction counts as exact.
pub const SUCCESS_TOL: f64 = 1e-4;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhantomSpec {
    /// 1-based inclusive bounds.
    Rect {
        rows: [usize; 2],
        cols: [usize; 2],
        #[serde(default = "one")]
        height: f64,
    },
    LineGrid {
        row_lines: usize,
        col_lines: usize,
        #[serde(default)]
        offset: usize,
    },
    RandomPiecewise { rects: usize, min_sep: f64 },
    /// TVLS binary image; the seed is ignored.
    FromFile { path: String },
}

impl PhantomSpec {
    pub fn build(&self, n: usize, seed: u64) -> Result<Phantom> {
        let kind = match *self {
            PhantomSpec::Rect { rows, cols, height } => PhantomKind::Rect {
                rows: (rows[0], rows[1]),
                cols: (cols[0], cols[1]),
                height,
            },
            PhantomSpec::LineGrid {
                row_lines,
                col_lines,
                offset,
            } => PhantomKind::LineGrid {
                row_lines,
                col_lines,
                offset,
            },
            PhantomSpec::RandomPiecewise { rects, min_sep } => PhantomKind::RandomPiecewise { rects, min_sep },
            PhantomSpec::FromFile { ref path } => {
                let img = read_tvls(File::open(path)?)?;
                if img.n() != n {
                    return Err(Error::Config(format!("{path} is {0}x{0}, spec asks for N = {n}", img.n())));
                }
                return Ok(Phantom::from_image(img, PhantomKind::Provided));
            }
        };
        Ok(make_phantom(&kind, n, seed)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Random horizontal lines, lowest vertical lines.
    A,
    /// The transpose of `A`.
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SamplingMode {
    /// `lines1` of `[M1]` and `lines2` of `[M2]` uniformly at random; the
    /// bandwidths default to the phantom's separation-derived values.
    TheoremLines {
        lines1: usize,
        lines2: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth1: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth2: Option<usize>,
    },
    /// `[M1] x [N] ∪ [N] x [M2]`.
    DeterministicLines { bandwidth1: usize, bandwidth2: usize },
    /// `m` uniform points, or as many as the deterministic line set
    /// `match_lines = [M1, M2]` holds.
    UniformPoints {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        match_lines: Option<[usize; 2]>,
    },
    /// `random` lines drawn from all frequencies one way and the `lowest`
    /// lowest-frequency lines the other way.
    OrientedLines {
        random: usize,
        lowest: usize,
        orientation: Orientation,
    },
}

impl SamplingMode {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingMode::TheoremLines { .. } => "theorem-lines",
            SamplingMode::DeterministicLines { .. } => "deterministic-lines",
            SamplingMode::UniformPoints { .. } => "uniform-points",
            SamplingMode::OrientedLines { .. } => "oriented-lines",
        }
    }

    pub fn draw(&self, n: usize, structure: &StructureReport, seed: u64) -> Result<SampleSet> {
        Ok(match *self {
            SamplingMode::TheoremLines {
                lines1,
                lines2,
                bandwidth1,
                bandwidth2,
            } => draw_theorem_sampling(&LineSamplingSpec {
                n,
                bandwidth1: bandwidth1.unwrap_or(structure.m1),
                bandwidth2: bandwidth2.unwrap_or(structure.m2),
                lines1,
                lines2,
                seed,
                deterministic: false,
            })?,
            SamplingMode::DeterministicLines { bandwidth1, bandwidth2 } => {
                if bandwidth1 > n || bandwidth2 > n {
                    return Err(Error::Config(format!("bandwidths exceed N = {n}")));
                }
                cartesian_line_set(&low_frequencies(bandwidth1), &low_frequencies(bandwidth2), n)?
            }
            SamplingMode::UniformPoints { m, match_lines } => {
                let count = match (m, match_lines) {
                    (Some(m), None) => m,
                    (None, Some([b1, b2])) => {
                        cartesian_line_set(&low_frequencies(b1.min(n)), &low_frequencies(b2.min(n)), n)?.m
                    }
                    _ => return Err(Error::Config("uniform-points needs exactly one of m, match_lines".into())),
                };
                uniform_pointwise_mask(n, count, seed)?
            }
            SamplingMode::OrientedLines {
                random,
                lowest,
                orientation,
            } => {
                let all: Vec<i64> = freq_range(n).collect();
                let mut rng = stream_rng(seed, streams::SAMPLING);
                let drawn = unif_without_replacement(&all, random, &mut rng)?;
                let a = cartesian_line_set(&drawn, &low_frequencies(lowest.min(n)), n)?;
                match orientation {
                    Orientation::A => a,
                    Orientation::B => a.transpose(),
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    /// Non-convergence in a gating condition makes the CLI exit with 2.
    #[serde(default)]
    pub gating: bool,
    #[serde(flatten)]
    pub sampling: SamplingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub tol_feas: f64,
    pub tol_change: f64,
    pub balance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSettings {
            max_iters: c.max_iters,
            tol_feas: c.tol_feas,
            tol_change: c.tol_change,
            balance: c.balance,
        }
    }
}

impl SolverSettings {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            tol_feas: self.tol_feas,
            tol_change: self.tol_change,
            balance: self.balance,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub delta: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub certify: bool,
    #[serde(default)]
    pub write_images: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    pub conditions: Vec<Condition>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("{}: {m}", self.name)));
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty");
        }
        if self.conditions.is_empty() {
            return bad("no conditions");
        }
        if self.n < 2 {
            return bad("N must be at least 2");
        }
        if !(self.delta >= 0.0) {
            return bad("delta must be nonnegative");
        }
        let mut labels: Vec<&str> = self.conditions.iter().map(|c| c.label.as_str()).collect();
        if labels
            .iter()
            .any(|l| l.is_empty() || !l.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_'))
        {
            return bad("labels must be nonempty and use [A-Za-z0-9_-]");
        }
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate condition label");
        }
        self.solver.config().validate()?;
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form, output
    /// directory excluded.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out_dir = None;
        let text = toml::to_string(&canon).expect("spec serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    pub condition: String,
    pub mode: &'static str,
    pub gating: bool,
    pub m: usize,
    pub coverage: f64,
    pub lines1: usize,
    pub lines2: usize,
    pub iterations: usize,
    pub converged: bool,
    pub feas_violation: f64,
    pub rel_err: f64,
    pub l2: f64,
    pub grad_l2: f64,
    pub tv_err: f64,
    pub tv_tail: f64,
    pub cert_pass: Option<bool>,
    pub c1_min: Option<f64>,
    pub c2_max: Option<f64>,
    pub l_sq: Option<f64>,
    pub rhs_grad: Option<f64>,
    pub rhs_image: Option<f64>,
}

impl TrialRow {
    pub fn success(&self) -> bool {
        self.rel_err <= SUCCESS_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialImages {
    pub seed: u64,
    pub condition: String,
    pub mask: IndexSet2D,
    pub xhat: ComplexImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub spec: ExperimentSpec,
    pub spec_hash: String,
    pub rows: Vec<TrialRow>,
    pub phantoms: Vec<(u64, ComplexImage)>,
    pub images: Vec<TrialImages>,
}

impl ExperimentResults {
    pub fn rows_for(&self, condition: &str) -> impl Iterator<Item = &TrialRow> + '_ {
        let c = condition.to_string();
        self.rows.iter().filter(move |r| r.condition == c)
    }

    pub fn gating_failure(&self) -> bool {
        self.rows.iter().any(|r| r.gating && !r.converged)
    }
}

struct SeedOutput {
    rows: Vec<TrialRow>,
    phantom: ComplexImage,
    images: Vec<TrialImages>,
}

fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let phantom = spec.phantom.build(spec.n, seed)?;
    let solver = spec.solver.config();
    let st = &phantom.structure;
    let mut rows = Vec::with_capacity(spec.conditions.len());
    let mut images = Vec::new();
    for cond in &spec.conditions {
        let omega = cond.sampling.draw(spec.n, st, seed)?;
        let problem = measure(&phantom.image, &omega, spec.delta, seed)?;
        let res = solve_tv(&problem, &solver)?;
        let em = error_metrics(&phantom.image, &res.xhat, &phantom.delta1, &phantom.delta2);
        let cert = if spec.certify {
            Some(verify_dual_conditions(
                &phantom.image,
                &phantom.delta1,
                &phantom.delta2,
                &omega.omega1,
                &omega.omega2,
                &CertifyConfig::default(),
            )?)
        } else {
            None
        };
        let m0 = omega.omega1.len().min(omega.omega2.len());
        let rhs = (m0 > 0).then(|| {
            theoretical_rhs(&BoundParams {
                s: st.s1.max(st.s2),
                m: omega.m,
                m0,
                bandwidth0: st.m1.min(st.m2),
                n: spec.n,
                delta: spec.delta,
                tv_tail: em.tv_tail,
            })
        });
        rows.push(TrialRow {
            seed,
            condition: cond.label.clone(),
            mode: cond.sampling.name(),
            gating: cond.gating,
            m: omega.m,
            coverage: omega.coverage(),
            lines1: omega.omega1.len(),
            lines2: omega.omega2.len(),
            iterations: res.iterations,
            converged: res.converged,
            feas_violation: res.feas_violation,
            rel_err: em.rel_l2,
            l2: em.l2,
            grad_l2: em.grad_l2,
            tv_err: em.tv,
            tv_tail: em.tv_tail,
            cert_pass: cert.as_ref().map(|c| c.all_pass),
            c1_min: cert.as_ref().map(|c| c.c1_min),
            c2_max: cert.as_ref().map(|c| c.c2_max),
            l_sq: cert.as_ref().map(|c| c.l_sq),
            rhs_grad: rhs.map(|r| r.0),
            rhs_image: rhs.map(|r| r.1),
        });
        if spec.write_images {
            images.push(TrialImages {
                seed,
                condition: cond.label.clone(),
                mask: omega.omega,
                xhat: res.xhat,
            });
        }
    }
    Ok(SeedOutput {
        rows,
        phantom: phantom.image,
        images,
    })
}

/// Runs every (seed, condition) pair; seeds run in parallel and rows come
/// back in spec order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let outputs: Vec<SeedOutput> = spec
        .seeds
        .par_iter()
        .map(|&seed| run_seed(spec, seed))
        .collect::<Result<_>>()?;
    let mut results = ExperimentResults {
        spec: spec.clone(),
        spec_hash: spec.hash(),
        rows: Vec::new(),
        phantoms: Vec::new(),
        images: Vec::new(),
    };
    for (seed, out) in spec.seeds.iter().zip(outputs) {
        results.rows.extend(out.rows);
        if spec.write_images {
            results.phantoms.push((*seed, out.phantom));
        }
        results.images.extend(out.images);
    }
    Ok(results)
}

pub const CSV_HEADER: [&str; 26] = [
    "seed",
    "condition",
    "mode",
    "gating",
    "m",
    "coverage",
    "lines1",
    "lines2",
    "iterations",
    "converged",
    "feas_violation",
    "rel_err",
    "l2",
    "grad_l2",
    "tv_err",
    "tv_tail",
    "success",
    "cert_pass",
    "c1_min",
    "c2_max",
    "l_sq",
    "rhs_grad",
    "rhs_image",
    "spec_hash",
    "version",
    "experiment",
];

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn sci(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_results_csv<W: Write>(w: W, results: &ExperimentResults) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in &results.rows {
        out.write_record([
            r.seed.to_string(),
            r.condition.clone(),
            r.mode.to_string(),
            r.gating.to_string(),
            r.m.to_string(),
            sci(r.coverage),
            r.lines1.to_string(),
            r.lines2.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            sci(r.feas_violation),
            sci(r.rel_err),
            sci(r.l2),
            sci(r.grad_l2),
            sci(r.tv_err),
            sci(r.tv_tail),
            r.success().to_string(),
            opt(r.cert_pass),
            opt(r.c1_min.map(sci)),
            opt(r.c2_max.map(sci)),
            opt(r.l_sq.map(sci)),
            opt(r.rhs_grad.map(sci)),
            opt(r.rhs_image.map(sci)),
            results.spec_hash.clone(),
            VERSION.to_string(),
            results.spec.name.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `results.csv`, `spec.toml` and, when requested, PGM previews of the
/// phantoms, masks and reconstructions.
pub fn write_outputs(results: &ExperimentResults, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_results_csv(BufWriter::new(File::create(dir.join("results.csv"))?), results)?;
    let mut canon = results.spec.clone();
    canon.out_dir = None;
    let text = toml::to_string(&canon).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join("spec.toml"), text)?;
    for (seed, img) in &results.phantoms {
        write_pgm_magnitude(BufWriter::new(File::create(dir.join(format!("seed{seed}_phantom.pgm")))?), img)?;
    }
    for t in &results.images {
        let stem = format!("seed{}_{}", t.seed, t.condition);
        write_mask_pgm(BufWriter::new(File::create(dir.join(format!("{stem}_mask.pgm")))?), &t.mask)?;
        write_pgm_magnitude(BufWriter::new(File::create(dir.join(format!("{stem}_xhat.pgm")))?), &t.xhat)?;
    }
    Ok(())
}

/// Ready-made specs for the two sampling comparisons.
pub mod presets {
    use super::*;

    /// Five equispaced jump lines each way at N = 64; the low-frequency line
    /// set `[5] x [N] ∪ [N] x [5]` against as many uniform points.
    pub fn structured_vs_uniform(seeds: Vec<u64>) -> ExperimentSpec {
        ExperimentSpec {
            name: "structured-vs-uniform".into(),
            n: 64,
            delta: 0.0,
            seeds,
            certify: false,
            write_images: false,
            out_dir: None,
            phantom: PhantomSpec::LineGrid {
                row_lines: 5,
                col_lines: 5,
                offset: 3,
            },
            solver: SolverSettings::default(),
            conditions: vec![
                Condition {
                    label: "lines".into(),
                    gating: true,
                    sampling: SamplingMode::DeterministicLines {
                        bandwidth1: 5,
                        bandwidth2: 5,
                    },
                },
                Condition {
                    label: "uniform".into(),
                    gating: false,
                    sampling: SamplingMode::UniformPoints {
                        m: None,
                        match_lines: Some([5, 5]),
                    },
                },
            ],
        }
    }

    /// Four horizontal and two vertical jump lines at N = 64; 8 random
    /// horizontal k-space lines with the 3 lowest vertical ones, against the
    /// transposed set.
    pub fn orientation(seeds: Vec<u64>) -> ExperimentSpec {
        let oriented = |label: &str, gating: bool, orientation| Condition {
            label: label.into(),
            gating,
            sampling: SamplingMode::OrientedLines {
                random: 8,
                lowest: 3,
                orientation,
            },
        };
        ExperimentSpec {
            name: "orientation".into(),
            n: 64,
            delta: 0.0,
            seeds,
            certify: false,
            write_images: false,
            out_dir: None,
            phantom: PhantomSpec::LineGrid {
                row_lines: 4,
                col_lines: 2,
                offset: 5,
            },
            solver: SolverSettings::default(),
            conditions: vec![oriented("aligned", true, Orientation::A), oriented("transposed", false, Orientation::B)],
        }
    }
}
