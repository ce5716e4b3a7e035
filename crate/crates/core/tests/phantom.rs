use proptest::prelude::*;
use tvls_core::structure::{min_sep_cols, min_sep_rows};
use tvls_core::{make_phantom, Error, Phantom, PhantomKind};

#[test]
fn rectangle_structure() {
    let p = make_phantom(
        &PhantomKind::Rect {
            rows: (8, 16),
            cols: (8, 16),
            height: 1.0,
        },
        32,
        0,
    )
    .unwrap();
    let st = p.structure;
    assert_eq!((st.s1, st.s2), (2, 2));
    assert_eq!((st.t1, st.t2), (2, 2));
    assert_eq!(st.nu_row, Some(9.0 / 32.0));
    assert_eq!((st.m1, st.m2), (7, 7));
    assert_eq!(p.delta1.len(), 18);
}

#[test]
fn equispaced_line_grid_separation() {
    for k in [2, 4, 8] {
        let p = make_phantom(
            &PhantomKind::LineGrid {
                row_lines: k,
                col_lines: k,
                offset: 1,
            },
            64,
            5,
        )
        .unwrap();
        assert_eq!(min_sep_rows(&p.delta1), Some(1.0 / k as f64));
        assert_eq!(min_sep_cols(&p.delta2), Some(1.0 / k as f64));
        // every column of Δ₁ and every row of Δ₂ is a full line of jumps
        assert_eq!(p.delta1.len(), 64 * k);
        assert_eq!(p.delta2.len(), 64 * k);
        assert_eq!((p.structure.s1, p.structure.s2), (k, k));
    }
}

#[test]
fn infeasible_separation_is_an_error() {
    let r = make_phantom(
        &PhantomKind::RandomPiecewise {
            rects: 3,
            min_sep: 0.2,
        },
        32,
        0,
    );
    assert!(matches!(r, Err(Error::InfeasibleSeparation { .. })));
    assert!(make_phantom(
        &PhantomKind::LineGrid {
            row_lines: 1,
            col_lines: 2,
            offset: 0
        },
        16,
        0
    )
    .is_err());
}

#[test]
fn provided_image_round_trip() {
    let p = make_phantom(
        &PhantomKind::RandomPiecewise {
            rects: 2,
            min_sep: 0.1,
        },
        32,
        4,
    )
    .unwrap();
    let q = Phantom::from_image(p.image.clone(), PhantomKind::Provided);
    assert_eq!(q.image, p.image);
    assert_eq!(q.structure, p.structure);
    assert_eq!(q.kind.name(), "from-file");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_piecewise_respects_separation(seed: u64, rects in 1usize..=4, sep_pick in 0usize..3) {
        let n = 32;
        let min_sep = [0.05, 0.08, 0.1][sep_pick];
        let a = make_phantom(&PhantomKind::RandomPiecewise { rects, min_sep }, n, seed).unwrap();
        let b = make_phantom(&PhantomKind::RandomPiecewise { rects, min_sep }, n, seed).unwrap();
        prop_assert_eq!(&a.image, &b.image);
        let need = (min_sep * n as f64).ceil() / n as f64;
        if let Some(nu) = min_sep_rows(&a.delta1) {
            prop_assert!(nu >= need - 1e-12);
        }
        if let Some(nu) = min_sep_cols(&a.delta2) {
            prop_assert!(nu >= need - 1e-12);
        }
    }
}
