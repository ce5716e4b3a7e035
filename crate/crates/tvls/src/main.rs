use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tvls::config::{config_tokens, find_config_path, read_toml};
use tvls::experiment::{presets, write_outputs, ExperimentSpec, Orientation, PhantomSpec, SamplingMode};
use tvls::formats::{
    certificate_summary, read_mask_csv, read_tvls, structure_block, write_certificate_csv, write_mask_csv,
    write_mask_pgm, write_pgm_magnitude, write_support_csv, write_tvls, KvBlock,
};
use tvls::phase::write_phase_csv;
use tvls::{phase_transition, run_experiment, PhaseSpec, VERSION};
use tvls_core::certify::{verify_dual_conditions, CertifyConfig};
use tvls_core::solver::{measure, solve_tv, SolverConfig};
use tvls_core::{Phantom, PhantomKind, SampleSet};

#[derive(Parser)]
#[command(name = "tvls", version, about = "TV recovery from Cartesian Fourier line samples")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sampling mask
    Mask(MaskArgs),
    /// Generate a phantom with its gradient supports and structure report
    Phantom(PhantomArgs),
    /// Measure an image through a mask and reconstruct it
    Solve(SolveArgs),
    /// Check the per-line certificate conditions for an image and mask
    Certify(CertifyArgs),
    /// Run an experiment spec over its seeds
    Experiment(ExperimentArgs),
    /// Run a phase-transition sweep
    Phase(PhaseArgs),
}

#[derive(Args)]
struct Common {
    /// TOML file with defaults for any option
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskMode {
    Deterministic,
    Theorem,
    Uniform,
    OrientedA,
    OrientedB,
}

#[derive(Args)]
struct MaskArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, value_enum, default_value_t = MaskMode::Deterministic)]
    mode: MaskMode,
    #[arg(long, default_value_t = 4)]
    bandwidth1: usize,
    #[arg(long, default_value_t = 4)]
    bandwidth2: usize,
    #[arg(long, default_value_t = 2)]
    lines1: usize,
    #[arg(long, default_value_t = 2)]
    lines2: usize,
    /// Point count for uniform masks
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 8)]
    random: usize,
    #[arg(long, default_value_t = 3)]
    lowest: usize,
    /// Also write a PGM preview with the zero frequency centred
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Rect,
    LineGrid,
    RandomPiecewise,
}

#[derive(Args)]
struct PhantomArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Kind::LineGrid)]
    kind: Kind,
    /// 1-based inclusive row range, `a,b`
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16])]
    rows: Vec<usize>,
    /// 1-based inclusive column range, `a,b`
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16])]
    cols: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    #[arg(long, default_value_t = 4)]
    row_lines: usize,
    #[arg(long, default_value_t = 4)]
    col_lines: usize,
    #[arg(long, default_value_t = 0)]
    offset: usize,
    #[arg(long, default_value_t = 2)]
    rects: usize,
    #[arg(long, default_value_t = 0.1)]
    min_sep: f64,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol_feas: Option<f64>,
    #[arg(long)]
    tol_change: Option<f64>,
    #[arg(long)]
    balance: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tol_feas: self.tol_feas.unwrap_or(d.tol_feas),
            tol_change: self.tol_change.unwrap_or(d.tol_change),
            balance: self.balance.unwrap_or(d.balance),
            ..d
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Ground-truth image (TVLS binary)
    #[arg(long)]
    image: PathBuf,
    /// Mask CSV with `k1,k2` rows
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// Report the minimum-norm certificates without refinement
    #[arg(long)]
    no_refine: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    StructuredVsUniform,
    Orientation,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec (TOML)
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Run this single seed instead of the spec's list
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    n: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    images: bool,
}

#[derive(Args)]
struct PhaseArgs {
    /// Phase spec (TOML)
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    /// Output CSV; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad option values found after parsing; exits like a parse error.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn load_mask(path: &Path, n: usize) -> anyhow::Result<SampleSet> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(SampleSet::from_mask(read_mask_csv(f, n)?))
}

fn load_image(path: &Path) -> anyhow::Result<tvls_core::ComplexImage> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(read_tvls(io::BufReader::new(f))?)
}

fn cmd_mask(a: &MaskArgs) -> anyhow::Result<u8> {
    let mode = match a.mode {
        MaskMode::Deterministic => SamplingMode::DeterministicLines {
            bandwidth1: a.bandwidth1,
            bandwidth2: a.bandwidth2,
        },
        MaskMode::Theorem => SamplingMode::TheoremLines {
            lines1: a.lines1,
            lines2: a.lines2,
            bandwidth1: Some(a.bandwidth1),
            bandwidth2: Some(a.bandwidth2),
        },
        MaskMode::Uniform => SamplingMode::UniformPoints {
            m: a.m,
            match_lines: if a.m.is_none() { Some([a.bandwidth1, a.bandwidth2]) } else { None },
        },
        MaskMode::OrientedA | MaskMode::OrientedB => SamplingMode::OrientedLines {
            random: a.random,
            lowest: a.lowest,
            orientation: if matches!(a.mode, MaskMode::OrientedA) { Orientation::A } else { Orientation::B },
        },
    };
    // explicit bandwidths make the structure report irrelevant here
    let unused = tvls_core::structure::structure_summary(&tvls_core::ComplexImage::zeros(a.n), 0.0);
    let set = mode.draw(a.n, &unused, a.common.seed)?;
    match &a.common.out {
        Some(p) => write_mask_csv(create(p)?, &set.omega)?,
        None => write_mask_csv(io::stdout().lock(), &set.omega)?,
    }
    if let Some(p) = &a.pgm {
        write_mask_pgm(create(p)?, &set.omega)?;
    }
    eprintln!("m = {} ({:.2}% of {}x{})", set.m, 100.0 * set.coverage(), a.n, a.n);
    Ok(0)
}

fn cmd_phantom(a: &PhantomArgs) -> anyhow::Result<u8> {
    if a.rows.len() != 2 || a.cols.len() != 2 {
        return Err(UsageError("--rows and --cols take two values, `a,b`".into()).into());
    }
    let spec = match a.kind {
        Kind::Rect => PhantomSpec::Rect {
            rows: [a.rows[0], a.rows[1]],
            cols: [a.cols[0], a.cols[1]],
            height: a.height,
        },
        Kind::LineGrid => PhantomSpec::LineGrid {
            row_lines: a.row_lines,
            col_lines: a.col_lines,
            offset: a.offset,
        },
        Kind::RandomPiecewise => PhantomSpec::RandomPiecewise {
            rects: a.rects,
            min_sep: a.min_sep,
        },
    };
    let ph = spec.build(a.n, a.common.seed)?;
    let block = structure_block(&ph.structure);
    if let Some(out) = &a.common.out {
        write_tvls(create(out)?, &ph.image)?;
        write_pgm_magnitude(create(&sibling(out, ".pgm"))?, &ph.image)?;
        write_support_csv(create(&sibling(out, ".delta1.csv"))?, &ph.delta1)?;
        write_support_csv(create(&sibling(out, ".delta2.csv"))?, &ph.delta2)?;
        let mut meta = block.clone();
        meta.push("kind", ph.kind.name()).push("seed", a.common.seed).push("version", VERSION);
        meta.write(create(&sibling(out, ".structure.txt"))?)?;
    }
    block.write(io::stdout().lock())?;
    Ok(0)
}

fn cmd_solve(a: &SolveArgs) -> anyhow::Result<u8> {
    let x = load_image(&a.image)?;
    let omega = load_mask(&a.mask, x.n())?;
    let problem = measure(&x, &omega, a.delta, a.common.seed)?;
    let res = solve_tv(&problem, &a.solver.config())?;
    let rel = x.sub(&res.xhat).norm2() / x.norm2().max(f64::MIN_POSITIVE);
    let mut meta = KvBlock::new();
    meta.push("seed", a.common.seed)
        .push("delta", a.delta)
        .push("m", omega.m)
        .push("iterations", res.iterations)
        .push("converged", res.converged)
        .push("feas_violation", format!("{:e}", res.feas_violation))
        .push("objective", format!("{:e}", res.objective))
        .push("last_change", format!("{:e}", res.last_change))
        .push("rel_err", format!("{rel:e}"))
        .push("version", VERSION);
    if let Some(out) = &a.common.out {
        write_tvls(create(out)?, &res.xhat)?;
        write_pgm_magnitude(create(&sibling(out, ".pgm"))?, &res.xhat)?;
        meta.write(create(&sibling(out, ".meta.txt"))?)?;
    }
    meta.write(io::stdout().lock())?;
    Ok(if res.converged { 0 } else { 2 })
}

fn cmd_certify(a: &CertifyArgs) -> anyhow::Result<u8> {
    let x = load_image(&a.image)?;
    let omega = load_mask(&a.mask, x.n())?;
    let ph = Phantom::from_image(x, PhantomKind::Provided);
    let config = CertifyConfig {
        refine: !a.no_refine,
        ..CertifyConfig::default()
    };
    let report = verify_dual_conditions(&ph.image, &ph.delta1, &ph.delta2, &omega.omega1, &omega.omega2, &config)?;
    let summary = certificate_summary(&report);
    if let Some(out) = &a.common.out {
        write_certificate_csv(create(out)?, &report)?;
        summary.write(create(&sibling(out, ".summary.txt"))?)?;
    }
    summary.write(io::stdout().lock())?;
    Ok(0)
}

fn cmd_experiment(a: &ExperimentArgs) -> anyhow::Result<u8> {
    let mut spec: ExperimentSpec = match (&a.config, a.preset) {
        (Some(p), _) => read_toml(p)?,
        (None, Some(Preset::StructuredVsUniform)) => presets::structured_vs_uniform((0..10).collect()),
        (None, Some(Preset::Orientation)) => presets::orientation((0..10).collect()),
        (None, None) => bail!("give --config or --preset"),
    };
    if let Some(s) = &a.seeds {
        spec.seeds = s.clone();
    }
    if let Some(s) = a.seed {
        spec.seeds = vec![s];
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    if a.images {
        spec.write_images = true;
    }
    let dir = match (&a.out, &spec.out_dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => bail!("give --out or set out_dir in the spec"),
    };
    let results = run_experiment(&spec)?;
    write_outputs(&results, &dir)?;
    let mut out = io::stdout().lock();
    for c in &spec.conditions {
        let rows: Vec<_> = results.rows_for(&c.label).collect();
        let ok = rows.iter().filter(|r| r.success()).count();
        let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
        writeln!(out, "{}: {ok}/{} exact, worst rel. err {worst:.3e}", c.label, rows.len())?;
    }
    Ok(if results.gating_failure() { 2 } else { 0 })
}

fn cmd_phase(a: &PhaseArgs) -> anyhow::Result<u8> {
    let mut spec: PhaseSpec = read_toml(&a.config)?;
    if let Some(s) = a.seed {
        spec.seeds = vec![s];
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    let results = phase_transition(&spec)?;
    match &a.out {
        Some(p) => write_phase_csv(create(p)?, &results)?,
        None => write_phase_csv(io::stdout().lock(), &results)?,
    }
    Ok(0)
}

/// Splices options from `--config` into the arguments of the flat
/// subcommands; experiment and phase read their config as a spec instead.
fn expand_args(mut args: Vec<String>) -> anyhow::Result<Vec<String>> {
    let flat = ["mask", "phantom", "solve", "certify"];
    if args.get(1).is_some_and(|s| flat.contains(&s.as_str())) {
        if let Some(path) = find_config_path(&args) {
            let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {path}"))?;
            let extra = config_tokens(&text, &args)?;
            args.extend(extra);
        }
    }
    Ok(args)
}

fn main() -> ExitCode {
    let args = match expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.cmd {
        Command::Mask(a) => cmd_mask(a),
        Command::Phantom(a) => cmd_phantom(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Phase(a) => cmd_phase(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
