use nalgebra::DVector;
use proptest::prelude::*;

use slag_core::cohomology::{betti, relative_betti};
use slag_core::complex::Cochain;
use slag_core::fixtures;
use slag_core::hodge::{HodgeConfig, HodgeSolver};
use slag_core::io::{parse_mesh_json, parse_off};
use slag_core::metric::MetricComplex;
use slag_core::Error;

fn fixture(i: usize) -> MetricComplex {
    let (_, cx, emb) = fixtures::all().swap_remove(i % 7);
    MetricComplex::barycentric(cx, emb).unwrap()
}

fn cochain(m: &MetricComplex, k: usize, seed: &[f64]) -> Cochain {
    let n = m.complex().count(k);
    Cochain::new(k, DVector::from_fn(n, |i, _| seed[i % seed.len()] * (1.0 + i as f64).sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn d_squared_vanishes(f in 0usize..7, seed in prop::collection::vec(-1.0f64..1.0, 1..9)) {
        let m = fixture(f);
        for k in 0..m.dim().saturating_sub(1) {
            let a = cochain(&m, k, &seed);
            let dd = m.d(k + 1).unwrap() * (m.d(k).unwrap() * &a.values);
            prop_assert!(dd.amax() < 1e-13);
        }
    }

    #[test]
    fn codifferential_is_adjoint(f in 0usize..7, seed in prop::collection::vec(-1.0f64..1.0, 2..9)) {
        let m = fixture(f);
        for k in 0..m.dim() {
            let a = cochain(&m, k, &seed);
            let b = cochain(&m, k + 1, &seed[1..]);
            let da = Cochain::new(k + 1, m.d(k).unwrap() * &a.values);
            let db = Cochain::new(k, m.codifferential(k + 1).unwrap() * &b.values);
            let lhs = m.inner(&da, &b).unwrap();
            let rhs = m.inner(&a, &db).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn split_reassembles(f in 0usize..7, k in 0usize..4, seed in prop::collection::vec(-1.0f64..1.0, 1..9)) {
        let m = fixture(f);
        let k = k % (m.dim() + 1);
        let solver = HodgeSolver::new(&m, HodgeConfig::default());
        let split = solver.decompose(&cochain(&m, k, &seed)).unwrap();
        prop_assert!(split.residuals.max() < 1e-8, "{:?}", split.residuals);
    }

    #[test]
    fn off_parser_never_panics(text in "\\PC{0,120}") {
        let _ = parse_off(&text);
        let _ = parse_mesh_json(&text);
    }
}

#[test]
fn lefschetz_duality_on_fixtures() {
    for (name, cx, _) in fixtures::all() {
        let n = cx.dim();
        for k in 0..=n {
            assert_eq!(betti(&cx, k).unwrap(), relative_betti(&cx, n - k).unwrap(), "{name} k={k}");
        }
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let off = "OFF\n# a comment\n3 1 0\n0 0 0\n1 0 0\n0 1 zero\n3 0 1 2\n";
    match parse_off(off) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, Some(6)),
        other => panic!("{other:?}"),
    }
    let quads = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
    assert!(matches!(parse_off(quads), Err(Error::Parse { .. })));
    let json = "{\n  \"dim\": 2,\n  \"top_simplices\": [[0, 1, 2]\n}";
    match parse_mesh_json(json) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, Some(4)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn off_triangle_reads() {
    let mesh = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    let cx = mesh.complex().unwrap();
    assert_eq!((cx.count(0), cx.count(1), cx.count(2)), (3, 3, 1));
    assert_eq!(betti(&cx, 0).unwrap(), 1);
}
