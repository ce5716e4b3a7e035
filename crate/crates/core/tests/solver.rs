use core::f64::consts::PI;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use proptest::prelude::*;
use rand::Rng;
use tvls_core::ops::{freq_range, tv_norm, IndexSet2D};
use tvls_core::sampling::*;
use tvls_core::solver::*;
use tvls_core::structure::gradient_supports;
use tvls_core::{make_phantom, Complex64, ComplexImage, PhantomKind};

fn rect16() -> ComplexImage {
    make_phantom(
        &PhantomKind::Rect {
            rows: (5, 10),
            cols: (4, 12),
            height: 1.0,
        },
        16,
        0,
    )
    .unwrap()
    .image
}

fn random_image(n: usize, seed: u64) -> ComplexImage {
    let mut rng = stream_rng(seed, 300);
    ComplexImage::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn tight() -> SolverConfig {
    SolverConfig {
        max_iters: 100_000,
        ..SolverConfig::default()
    }
}

/// Solution of the same program from a generic interior-point conic solver.
///
/// Variables are `[Re z, Im z, t]` with one `t` per gradient entry; each
/// `(t, Re D z, Im D z)` lies in a 3-dimensional second-order cone and the
/// data term, scaled by `1/N`, is either an equality or one larger cone.
struct Reference {
    image: ComplexImage,
    objective: f64,
}

fn reference_solve(problem: &RecoveryProblem) -> Reference {
    let n = problem.n;
    let nn = n * n;
    let nvar = 4 * nn;
    let idx = |r: usize, c: usize| r * n + c;
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let mut row = 0;
    // gradient cones, vertical differences first
    for dir in 0..2 {
        for r in 0..n {
            for c in 0..n {
                let t = 2 * nn + dir * nn + idx(r, c);
                let prev = if dir == 0 { idx((r + n - 1) % n, c) } else { idx(r, (c + n - 1) % n) };
                rows.push(row);
                cols.push(t);
                vals.push(-1.0);
                for part in 0..2 {
                    let off = part * nn;
                    rows.extend([row + 1 + part, row + 1 + part]);
                    cols.extend([off + idx(r, c), off + prev]);
                    vals.extend([-1.0, 1.0]);
                }
                b.extend([0.0, 0.0, 0.0]);
                cones.push(SupportedConeT::SecondOrderConeT(3));
                row += 3;
            }
        }
    }
    // data rows: (P Ã z)/N - ξ/N
    let freqs: Vec<(i64, i64)> = problem.omega.omega.iter().collect();
    let radius = problem.radius() / n as f64;
    let noisy = radius > 0.0;
    if noisy {
        rows.push(row);
        cols.push(0);
        vals.push(0.0);
        b.push(radius);
        row += 1;
    }
    let data_start = row;
    for (i, &(k1, k2)) in freqs.iter().enumerate() {
        let xi = problem.xi.at_freq(k1, k2) / n as f64;
        for r in 0..n {
            for c in 0..n {
                let phi = 2.0 * PI * ((k1 * (r as i64 + 1) + k2 * (c as i64 + 1)) as f64) / n as f64;
                let (s, co) = phi.sin_cos();
                let sign = if noisy { -1.0 } else { 1.0 };
                // Re: zr cos + zi sin, Im: zi cos - zr sin
                rows.extend([data_start + 2 * i, data_start + 2 * i, data_start + 2 * i + 1, data_start + 2 * i + 1]);
                cols.extend([idx(r, c), nn + idx(r, c), nn + idx(r, c), idx(r, c)]);
                vals.extend([sign * co / n as f64, sign * s / n as f64, sign * co / n as f64, -sign * s / n as f64]);
            }
        }
        if noisy {
            b.extend([-xi.re, -xi.im]);
        } else {
            b.extend([xi.re, xi.im]);
        }
    }
    let data_rows = 2 * freqs.len();
    row = data_start + data_rows;
    if noisy {
        cones.push(SupportedConeT::SecondOrderConeT(data_rows + 1));
    } else {
        cones.push(SupportedConeT::ZeroConeT(data_rows));
    }
    let a = CscMatrix::new_from_triplets(row, nvar, rows, cols, vals);
    let p = CscMatrix::zeros((nvar, nvar));
    let mut q = vec![0.0; nvar];
    for v in q.iter_mut().skip(2 * nn) {
        *v = 1.0;
    }
    let settings = DefaultSettings {
        verbose: false,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).unwrap();
    solver.solve();
    assert_eq!(solver.solution.status, SolverStatus::Solved);
    let x = &solver.solution.x;
    Reference {
        image: ComplexImage::from_fn(n, |r, c| Complex64::new(x[idx(r, c)], x[nn + idx(r, c)])),
        objective: solver.solution.obj_val,
    }
}

fn rect_problem(delta: f64) -> (ComplexImage, RecoveryProblem) {
    let x = rect16();
    let omega = draw_theorem_sampling(&LineSamplingSpec {
        n: 16,
        bandwidth1: 5,
        bandwidth2: 4,
        lines1: 5,
        lines2: 4,
        seed: 0,
        deterministic: true,
    })
    .unwrap();
    let p = measure(&x, &omega, delta, 4).unwrap();
    (x, p)
}

#[test]
fn full_sampling_is_exact() {
    for n in [16, 32] {
        let x = random_image(n, n as u64);
        let omega = SampleSet::from_mask(IndexSet2D::full(n));
        let p = measure(&x, &omega, 0.0, 0).unwrap();
        let res = solve_tv(&p, &SolverConfig::default()).unwrap();
        let rel = x.sub(&res.xhat).norm2() / x.norm2();
        assert!(rel <= 1e-8, "n = {n}: {rel}");
    }
}

#[test]
fn rectangle_matches_reference_solver() {
    let (x, p) = rect_problem(0.0);
    let ours = solve_tv(&p, &tight()).unwrap();
    assert!(ours.converged);
    let reference = reference_solve(&p);
    let gap = ours.xhat.sub(&reference.image).norm2() / reference.image.norm2();
    assert!(gap <= 1e-5, "distance to reference {gap}");
    assert!(x.sub(&ours.xhat).norm2() / x.norm2() <= 1e-4);
    assert!((ours.objective - reference.objective).abs() <= 1e-5 * reference.objective);
}

#[test]
fn noisy_objective_matches_reference_solver() {
    let (x, p) = rect_problem(0.05);
    let ours = solve_tv(&p, &tight()).unwrap();
    let reference = reference_solve(&p);
    assert!(p.feasibility_violation(&ours.xhat) <= 1e-9 * (1.0 + p.xi.norm2()));
    assert!((ours.objective - reference.objective).abs() <= 1e-5 * reference.objective);
    assert!(ours.objective <= tv_norm(&x) + 1e-9);
}

#[test]
fn reported_feasibility_is_reproducible() {
    for seed in 0..4 {
        let x = random_image(16, seed);
        let omega = uniform_pointwise_mask(16, 80, seed).unwrap();
        let p = measure(&x, &omega, 0.02 * seed as f64, seed).unwrap();
        let res = solve_tv(
            &p,
            &SolverConfig {
                max_iters: 300,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(res.feas_violation, p.feasibility_violation(&res.xhat));
        assert!((res.objective - tv_norm(&res.xhat)).abs() <= 1e-12 * res.objective.max(1.0));
        assert!(res.iterations <= 300);
    }
}

#[test]
fn solve_is_deterministic() {
    let (_, p) = rect_problem(0.01);
    let config = SolverConfig {
        max_iters: 500,
        ..SolverConfig::default()
    };
    assert_eq!(solve_tv(&p, &config).unwrap(), solve_tv(&p, &config).unwrap());
}

#[test]
fn error_metric_examples() {
    let x = rect16();
    let (d1, d2) = gradient_supports(&x, 1e-9);
    let same = error_metrics(&x, &x, &d1, &d2);
    assert_eq!((same.l2, same.rel_l2, same.grad_l2, same.tv, same.tv_tail), (0.0, 0.0, 0.0, 0.0, 0.0));
    let zero = error_metrics(&x, &ComplexImage::zeros(16), &d1, &d2);
    assert!((zero.rel_l2 - 1.0).abs() < 1e-15);
    assert!((zero.tv - tv_norm(&x)).abs() < 1e-12);
}

#[test]
fn bound_examples() {
    let base = BoundParams {
        s: 4,
        m: 8,
        m0: 8,
        bandwidth0: 16,
        n: 64,
        delta: 0.1,
        tv_tail: 0.0,
    };
    let (_, b2) = theoretical_rhs(&base);
    assert!((b2 - 3.2).abs() < 1e-12);
    let (b1, b2) = theoretical_rhs(&BoundParams { delta: 0.0, ..base });
    assert_eq!((b1, b2), (0.0, 0.0));
    let (c1, c2) = theoretical_rhs(&base);
    let (d1, d2) = theoretical_rhs(&BoundParams { delta: 0.2, ..base });
    assert!((d1 - 2.0 * c1).abs() < 1e-12 && (d2 - 2.0 * c2).abs() < 1e-12);
}

#[test]
fn invalid_configs_are_rejected() {
    let (_, p) = rect_problem(0.0);
    for bad in [
        SolverConfig { tol_feas: 0.0, ..SolverConfig::default() },
        SolverConfig { tol_change: -1.0, ..SolverConfig::default() },
        SolverConfig { step_primal: Some(1.0), step_dual: Some(1.0), ..SolverConfig::default() },
    ] {
        assert!(solve_tv(&p, &bad).is_err());
    }
    assert!(measure(&rect16(), &p.omega, -1.0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn iterates_stay_feasible_and_never_beat_truth_by_much(seed: u64, delta in 0.0f64..0.2) {
        let n = 16;
        let x = make_phantom(&PhantomKind::RandomPiecewise { rects: 2, min_sep: 0.1 }, n, seed).unwrap().image;
        let lines: Vec<i64> = freq_range(n).filter(|k| k.abs() <= 2).collect();
        let omega = cartesian_line_set(&lines, &lines[1..3], n).unwrap();
        let p = measure(&x, &omega, delta, seed).unwrap();
        let res = solve_tv(&p, &SolverConfig { max_iters: 400, ..SolverConfig::default() }).unwrap();
        prop_assert!(res.feas_violation <= 1e-9 * (1.0 + p.xi.norm2()));
        prop_assert_eq!(res.feas_violation, p.feasibility_violation(&res.xhat));
    }
}
