//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use tvls::experiment::{presets, write_results_csv, PhantomSpec, SolverSettings};
use tvls::phase::{write_phase_csv, PhaseCell};
use tvls::{phase_transition, run_experiment, PhaseSpec};
use tvls_core::certify::*;
use tvls_core::ops::*;
use tvls_core::sampling::*;
use tvls_core::solver::{measure, solve_tv, SolverConfig};
use tvls_core::structure::*;
use tvls_core::{make_phantom, Complex64, ComplexImage, PhantomKind};

const SUCCESS: f64 = 1e-4;
const FAILURE: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_image(n: usize, rng: &mut impl Rng) -> ComplexImage {
    ComplexImage::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_lines(n: usize, rng: &mut impl Rng) -> Vec<i64> {
    let pool: Vec<i64> = freq_range(n).collect();
    let m = rng.random_range(0..=n);
    unif_without_replacement(&pool, m, rng).unwrap()
}

fn line_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = stream_rng(1, 1000);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [4, 8, 16] {
        for _ in 0..100 {
            let z = random_image(n, &mut rng);
            let omega = random_lines(n, &mut rng);
            for axis in [LineAxis::Horizontal, LineAxis::Vertical] {
                let (lhs, rhs) = line_energy_identity_check(&omega, &z, axis);
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
                count += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("{count} checks, worst rel. gap {worst:.1e}, {secs:.2} s"),
    )
}

fn modulation_and_parseval() -> Outcome {
    let mut rng = stream_rng(2, 1000);
    let (mut worst_mod, mut worst_pars): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let n = 2 + i % 23;
        let z = random_image(n, &mut rng);
        let a = dft2(&z);
        let a1 = dft2(&diff1(&z));
        let a2 = dft2(&diff2(&z));
        let scale = a.max_abs().max(1.0);
        for k1 in freq_range(n) {
            for k2 in freq_range(n) {
                let f = |k: i64| Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64);
                let e1 = (a1.at_freq(k1, k2) - f(k1) * a.at_freq(k1, k2)).norm() / scale;
                let e2 = (a2.at_freq(k1, k2) - f(k2) * a.at_freq(k1, k2)).norm() / scale;
                worst_mod = worst_mod.max(e1).max(e2);
            }
        }
        let v = z.column(0);
        let lhs = norm2(&dft1(&v)).powi(2);
        let rhs = n as f64 * norm2(&v).powi(2);
        worst_pars = worst_pars.max((lhs - rhs).abs() / rhs);
    }
    outcome(
        worst_mod <= 1e-10 && worst_pars <= 1e-10,
        format!("100 instances, modulation {worst_mod:.1e}, Parseval {worst_pars:.1e}"),
    )
}

fn poincare() -> Outcome {
    let mut rng = stream_rng(3, 1000);
    let mut violations = 0;
    for i in 0..1000 {
        let n = 1 + i % 32;
        let mut z = random_image(n, &mut rng);
        let mean = z.sum() / (n * n) as f64;
        for v in z.data_mut() {
            *v -= mean;
        }
        violations += usize::from(z.norm2() > tv_norm(&z));
    }
    outcome(violations == 0, format!("1000 images, {violations} violations"))
}

fn full_sampling() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [16, 32] {
        let mut rng = stream_rng(n as u64, 1000);
        let x = random_image(n, &mut rng);
        let omega = SampleSet::from_mask(IndexSet2D::full(n));
        let p = measure(&x, &omega, 0.0, 0).unwrap();
        let res = solve_tv(&p, &SolverConfig::default()).unwrap();
        worst = worst.max(x.sub(&res.xhat).norm2() / x.norm2());
    }
    outcome(worst <= 1e-8, format!("worst rel. err {worst:.1e} at N = 16, 32"))
}

fn contrast(spec: tvls::ExperimentSpec, good: &str, bad: &str) -> Outcome {
    let start = Instant::now();
    let res = run_experiment(&spec).unwrap();
    let good_rows: Vec<f64> = res.rows_for(good).map(|r| r.rel_err).collect();
    let bad_rows: Vec<f64> = res.rows_for(bad).map(|r| r.rel_err).collect();
    let wins = good_rows
        .iter()
        .zip(&bad_rows)
        .filter(|(g, b)| **g <= SUCCESS && **b >= FAILURE)
        .count();
    let m: Vec<usize> = res.rows.iter().map(|r| r.m).collect();
    let secs = start.elapsed().as_secs_f64();
    let worst_good = good_rows.iter().cloned().fold(0.0, f64::max);
    let best_bad = bad_rows.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        wins >= 9 && secs < 600.0,
        format!(
            "{wins}/10 seeds, {good} worst {worst_good:.1e}, {bad} best {best_bad:.2}, m = {}..{}, {secs:.0} s",
            m.iter().min().unwrap(),
            m.iter().max().unwrap()
        ),
    )
}

fn certified_recovery() -> Outcome {
    let n = 32;
    let mut certified = 0;
    let mut exact = 0;
    let mut worst: f64 = 0.0;
    let mut seed = 0u64;
    while certified < 20 && seed < 400 {
        let rects = 1 + (seed % 3) as usize;
        let ph = make_phantom(&PhantomKind::RandomPiecewise { rects, min_sep: 0.1 }, n, seed).unwrap();
        let st = &ph.structure;
        let omega = draw_theorem_sampling(&LineSamplingSpec {
            n,
            bandwidth1: st.m1,
            bandwidth2: st.m2,
            lines1: (3 * st.m1).div_ceil(4),
            lines2: (3 * st.m2).div_ceil(4),
            seed,
            deterministic: false,
        })
        .unwrap();
        seed += 1;
        let report = verify_dual_conditions(
            &ph.image,
            &ph.delta1,
            &ph.delta2,
            &omega.omega1,
            &omega.omega2,
            &CertifyConfig::default(),
        )
        .unwrap();
        if !report.all_pass {
            continue;
        }
        certified += 1;
        let p = measure(&ph.image, &omega, 0.0, seed).unwrap();
        let res = solve_tv(&p, &SolverConfig::default()).unwrap();
        let rel = ph.image.sub(&res.xhat).norm2() / ph.image.norm2();
        worst = worst.max(rel);
        exact += usize::from(rel <= SUCCESS);
    }
    outcome(
        certified == 20 && exact == 20,
        format!("{exact}/{certified} certified instances exact ({seed} drawn), worst rel. err {worst:.1e}"),
    )
}

fn verifier_correctness() -> Outcome {
    let n = 16;
    let mut rng = stream_rng(8, 1000);
    let pool: Vec<i64> = freq_range(n).collect();
    let positions: Vec<i64> = (0..n as i64).collect();
    let (mut svd_gap, mut interp, mut range): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..50 {
        let m = rng.random_range(1..=n);
        let omega = unif_without_replacement(&pool, m, &mut rng).unwrap();
        let s = rng.random_range(1..=m.min(5));
        let delta: Vec<usize> = unif_without_replacement(&positions, s, &mut rng)
            .unwrap()
            .into_iter()
            .map(|j| j as usize)
            .collect();
        let dense = DMatrix::from_fn(m, s, |r, c| {
            nalgebra::Complex::from_polar(1.0, -2.0 * PI * omega[r] as f64 * (delta[c] + 1) as f64 / n as f64)
        });
        let oracle = dense.singular_values().iter().cloned().fold(f64::INFINITY, f64::min) / (m as f64).sqrt();
        let ours = injectivity_constant(n, &omega, &delta).unwrap();
        svd_gap = svd_gap.max((ours - oracle).abs());
        if ours < 1e-3 {
            continue;
        }
        let sign: Vec<Complex64> = (0..s)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)))
            .collect();
        let cert = construct_certificate(n, &omega, &delta, &sign).unwrap();
        for (&j, sg) in delta.iter().zip(&sign) {
            interp = interp.max((cert.rho[j] - sg).norm());
        }
        let rebuilt = certificate_from_coefficients(n, &omega, &cert.w);
        for (a, b) in rebuilt.iter().zip(&cert.rho) {
            range = range.max((a - b).norm());
        }
    }
    outcome(
        svd_gap <= 1e-10 && interp <= 1e-10 && range <= 1e-12,
        format!("50 pairs, SVD gap {svd_gap:.1e}, interpolation {interp:.1e}, range {range:.1e}"),
    )
}

fn constants() -> Outcome {
    let a = c_of_m(1, 64);
    let b = c_of_m(10, 100);
    let c1 = proof_constants().c1;
    let c1_gap = (c1 - 3.0 / (2.0 * 5f64.sqrt())).abs();
    outcome(
        a == 1.0 && b == 0.99993 && c1_gap <= 1e-12,
        format!("c(1) = {a}, c(10; N=100) = {b}, c1 = {c1:.6}"),
    )
}

fn brute_cardinality(s: &Support2D, by_column: bool) -> usize {
    let n = s.n();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&t| if by_column { s.contains(t, i) } else { s.contains(i, t) })
                .count()
        })
        .max()
        .unwrap_or(0)
}

fn brute_separation(s: &Support2D, by_column: bool) -> Option<f64> {
    let n = s.n();
    let mut best: Option<usize> = None;
    for line in 0..n {
        for j in 0..n {
            for k in 0..n {
                let both = if by_column {
                    s.contains(j, line) && s.contains(k, line)
                } else {
                    s.contains(line, j) && s.contains(line, k)
                };
                if j != k && both {
                    best = Some(best.map_or(j.abs_diff(k), |b| b.min(j.abs_diff(k))));
                }
            }
        }
    }
    best.map(|d| d as f64 / n as f64)
}

fn brute_distinct(z: &ComplexImage, columns: bool) -> usize {
    let n = z.n();
    let line = |i: usize| -> Vec<Complex64> { (0..n).map(|t| if columns { z.get(t, i) } else { z.get(i, t) }).collect() };
    (0..n).filter(|&i| (0..i).all(|p| line(p) != line(i))).count()
}

fn structure_oracles() -> Outcome {
    let mut rng = stream_rng(10, 1000);
    let palette = [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    let mut mismatches = 0;
    for i in 0..200 {
        let n = 2 + i % 15;
        let density = [0.05, 0.2, 0.5][i % 3];
        let mut members = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if rng.random_bool(density) {
                    members.push((r, c));
                }
            }
        }
        let s = Support2D::from_members(n, members).unwrap();
        mismatches += usize::from(column_cardinality(&s) != brute_cardinality(&s, true));
        mismatches += usize::from(row_cardinality(&s) != brute_cardinality(&s, false));
        mismatches += usize::from(min_sep_rows(&s) != brute_separation(&s, true));
        mismatches += usize::from(min_sep_cols(&s) != brute_separation(&s, false));
        let template: Vec<Complex64> = (0..n).map(|_| palette[rng.random_range(0..4)]).collect();
        let z = ComplexImage::from_fn(n, |r, c| if c % 3 == 0 { template[r] } else { palette[(r * c + i) % 4] });
        mismatches += usize::from(distinct_column_supports(&z) != brute_distinct(&z, true));
        mismatches += usize::from(distinct_row_supports(&z) != brute_distinct(&z, false));
    }
    outcome(mismatches == 0, format!("200 supports, {mismatches} mismatches"))
}

fn separated_phase() -> PhaseSpec {
    PhaseSpec {
        name: "probability-one".into(),
        n: 32,
        seeds: (0..10).collect(),
        eps: 0.5,
        constant: 1.0,
        bandwidth: None,
        phantom: PhantomSpec::RandomPiecewise {
            rects: 2,
            min_sep: 0.1,
        },
        solver: SolverSettings::default(),
        // counts above the bandwidths take the whole band
        grid: vec![PhaseCell::Lines([32, 32])],
    }
}

fn probability_one() -> Outcome {
    let res = phase_transition(&separated_phase()).unwrap();
    let row = &res.rows[0];
    let saturated = row.lines1 == row.bandwidth1 && row.lines2 == row.bandwidth2;
    outcome(
        row.rate() == 1.0 && saturated,
        format!(
            "rate {} over {} seeds, bandwidths up to ({}, {})",
            row.rate(),
            row.trials,
            row.bandwidth1,
            row.bandwidth2
        ),
    )
}

fn determinism() -> Outcome {
    let exp = presets::orientation(vec![0, 1]);
    let run = || {
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &run_experiment(&exp).unwrap()).unwrap();
        buf
    };
    let mut phase = separated_phase();
    phase.seeds = vec![0, 1];
    let run_phase = || {
        let mut buf = Vec::new();
        write_phase_csv(&mut buf, &phase_transition(&phase).unwrap()).unwrap();
        buf
    };
    let (a, b) = (run(), run());
    let (c, d) = (run_phase(), run_phase());
    outcome(
        a == b && c == d,
        format!("experiment CSV {} bytes, phase CSV {} bytes, reruns identical: {}", a.len(), c.len(), a == b && c == d),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("line-energy identity", line_identity),
        ("modulation and Parseval", modulation_and_parseval),
        ("Poincare inequality", poincare),
        ("full-sampling exactness", full_sampling),
        ("structured lines vs uniform points", || {
            contrast(presets::structured_vs_uniform((0..10).collect()), "lines", "uniform")
        }),
        ("aligned vs transposed orientation", || {
            contrast(presets::orientation((0..10).collect()), "aligned", "transposed")
        }),
        ("certified instances recover", certified_recovery),
        ("certificate verifier vs dense oracles", verifier_correctness),
        ("constants", constants),
        ("structure oracles", structure_oracles),
        ("probability-one cell", probability_one),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {:>2} {}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
