use super::configs::*;
use super::*;
use crate::fixtures;

fn pure_translation(imm: &Immersion, v: &[f64]) -> DeformationField {
    DeformationField {
        vectors: vec![v.to_vec(); imm.complex().num_vertices()],
    }
}

#[test]
fn interval_sign_convention() {
    let imm = interval_between_lines(4, 1.0, 2.0, 0.0).unwrap();
    let v = pure_translation(&imm, &[0.0, 1.0]);
    let theta = tangent_one_form(&imm, &v).unwrap();
    let phi = dual_form(&imm, &v).unwrap();
    let len = (imm.positions()[1][0] - imm.positions()[0][0]).abs();
    for x in theta.values.iter() {
        assert!((x + len).abs() < 1e-14);
    }
    for x in phi.values.iter() {
        assert!((x - 1.0).abs() < 1e-14);
    }
    let rep = hodge_duality_check(&imm, &v, 1e-12).unwrap();
    assert!(rep.residual < 1e-14, "{}", rep.residual);
}

#[test]
fn zero_theta_is_identity() {
    let imm = cylinder_sl(3, 6, 1.0, 2.0).unwrap();
    let zero = Cochain::zeros(imm.complex(), 1);
    let out = deform(&imm, &zero).unwrap();
    assert_eq!(out.positions(), imm.positions());
    assert!(sl_operator(&imm, &zero).unwrap().max() < 1e-12);
}

#[test]
fn two_line_trace_follows_horizontal_segments() {
    let (b1, b2) = (1.1, 2.0);
    let imm = interval_between_lines(6, b1, b2, 0.0).unwrap();
    let opts = TraceOptions {
        step: 0.05,
        steps: 8,
        ..TraceOptions::default()
    };
    let trace = newton_trace(&imm, &opts).unwrap();
    assert_eq!(trace.len(), 9);
    let mut heights = Vec::new();
    for (step, imm) in &trace {
        let p = imm.positions();
        let c = p[0][1];
        assert!(p.iter().all(|q| (q[1] - c).abs() < 1e-10));
        let (x0, x1) = two_line_endpoints(b1, b2, c);
        assert!((p[0][0] - x0).abs() < 1e-9 && (p[6][0] - x1).abs() < 1e-9);
        assert!(step.boundary_residual < 1e-12);
        heights.push(c);
    }
    assert!(heights.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-3));
    assert!(heights.windows(3).all(|w| (w[2] - w[1]) * (w[1] - w[0]) > 0.0));
    for (s, _) in &trace[1..] {
        assert!((s.theta_norm - 0.05).abs() < 1e-12);
    }
}

#[test]
fn moduli_dimensions_of_fixture_configurations() {
    let cfg = HodgeConfig::default();
    let cases = [
        (interval_between_lines(8, 1.0, 2.0, 0.0).unwrap(), 1),
        (disk_in_plane(3, 6).unwrap(), 0),
        (cylinder_sl(3, 6, 1.0, 2.0).unwrap(), 1),
        (pants_in_plane(1).unwrap(), 2),
    ];
    for (imm, dim) in cases {
        assert_eq!(moduli_dimension(&imm, &cfg).unwrap().harmonic, dim);
    }
}

#[test]
fn disk_trace_has_no_directions() {
    let (cx, emb) = fixtures::disk(2, 6);
    let pos: Vec<Vec<f64>> = emb.positions.iter().map(|p| vec![p[0], 0.0, p[1], 0.0]).collect();
    let lam = LagrangianAffine::new(vec![0.0; 4], vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]]).unwrap();
    // the disk lies inside its own Lagrangian, so a(p) is undefined
    let err = Immersion::new(cx, CYSpace::flat(2), pos, vec![lam]).unwrap_err();
    assert!(matches!(err, Error::TangentEqualsLambda(_)));
    let imm = disk_in_plane(2, 6).unwrap();
    assert!(matches!(newton_trace(&imm, &TraceOptions::default()), Err(Error::InvalidImmersion(_))));
}

#[test]
fn curved_annulus_defect_is_first_order() {
    let coarse = curved_annulus(2, 12, 0.2).unwrap();
    let fine = curved_annulus(4, 24, 0.2).unwrap();
    let ratio = sl_defect(&coarse) / sl_defect(&fine);
    assert!(ratio > 1.7 && ratio < 2.5, "{ratio}");
    assert_eq!(moduli_dimension(&fine, &HodgeConfig::default()).unwrap().harmonic, 1);
}

#[test]
fn corrector_converges_on_flat_cylinder() {
    let imm = cylinder_sl(2, 6, 1.0, 2.0).unwrap();
    let mut pos = imm.positions().to_vec();
    for (v, p) in pos.iter_mut().enumerate() {
        if !imm.complex().is_boundary(0, v) {
            p[1] += 1e-3 * (v as f64).sin();
            p[3] += 1e-3 * (v as f64).cos();
        }
    }
    let bumped = imm.with_positions(pos).unwrap();
    let (out, rep) = project_to_sl(&bumped, 1e-13, 25, 0.0).unwrap();
    assert!(sl_residual(&out).max() <= 1e-13);
    assert!(rep.iterations <= 6, "{:?}", rep.history);
}

#[test]
fn jacobian_matches_finite_differences() {
    let imm = curved_annulus(1, 8, 0.3).unwrap();
    let base = sl_residual(&imm).stacked();
    let mut rng = 0.37_f64;
    let field = DeformationField {
        vectors: imm
            .frames()
            .iter()
            .map(|f| {
                let mut v: Vec<f64> = (0..4)
                    .map(|_| {
                        rng = (rng * 97.13).fract();
                        rng - 0.5
                    })
                    .collect();
                if let Some(c) = f.component {
                    v = project(&v, &imm.lambdas()[c].basis);
                }
                v
            })
            .collect(),
    };
    let theta_hat = tangent_one_form(&imm, &field).unwrap();
    let phi_hat = dual_form(&imm, &field).unwrap();
    let lin = stack(
        &imm.complex().d(&theta_hat).unwrap().values,
        &imm.complex().d(&phi_hat).unwrap().values,
    );
    let t = 1e-6;
    let moved = DeformationField {
        vectors: field.vectors.iter().map(|v| v.iter().map(|x| x * t).collect()).collect(),
    };
    let f = sl_residual(&imm.displaced(&moved).unwrap()).stacked();
    let fd = (f - base) / t;
    assert!((fd - &lin).amax() < 1e-5 * lin.amax().max(1.0));
}

#[test]
fn flat_patch_duality_is_exact() {
    let imm = flat_patch(3, 3, 0.4).unwrap();
    assert!(sl_residual(&imm).max() < 1e-14);
    let w = imm.top_edges(0)[0].clone();
    let v = pure_translation(&imm, &cy::jay(&w));
    let rep = hodge_duality_check(&imm, &v, 1e-12).unwrap();
    assert!(rep.residual < 1e-10, "{}", rep.residual);
}

#[test]
fn product_plane_phase() {
    for &(a1, a2) in &[(0.3, 0.5), (1.0, -0.2), (0.7, 0.7)] {
        let (cx, emb) = fixtures::square_grid(1, 1);
        let pos = emb
            .positions
            .iter()
            .map(|p| vec![p[0] * f64::cos(a1), p[0] * f64::sin(a1), p[1] * f64::cos(a2), p[1] * f64::sin(a2)])
            .collect();
        let imm = Immersion::unconstrained(cx, CYSpace::flat(2), pos, 0.0).unwrap();
        let im = pullback_im_omega(&imm);
        for i in 0..im.len() {
            let area = simplex_volume(&imm.embedding().local_points(imm.complex().simplex(2, i)));
            assert!((im.values[i].abs() - area * (a1 + a2).sin().abs()).abs() < 1e-14);
        }
    }
}

#[test]
fn linearization_on_curved_annulus() {
    let imm = curved_annulus(2, 12, 0.2).unwrap();
    let metric = imm.pullback_metric(DualScheme::Barycentric).unwrap();
    let h = harmonic_fields_dirichlet(&metric, 1, &HodgeConfig::default()).unwrap();
    let ts = [1e-2, 1e-3, 1e-4];
    let rep = linearization_check(&imm, &h.fields[0], &ts, 1.0).unwrap();
    assert!((rep.residual_slope - 1.0).abs() < 0.15, "{rep:?}");
    assert!(rep.omega_exactness < 1e-12);
}

#[test]
fn deform_keeps_boundary_on_lambda() {
    let imm = curved_annulus(2, 12, 0.2).unwrap();
    let metric = imm.pullback_metric(DualScheme::Barycentric).unwrap();
    let h = harmonic_fields_dirichlet(&metric, 1, &HodgeConfig::default()).unwrap();
    let mut theta = h.fields[0].clone();
    theta.values *= 0.05;
    let out = deform(&imm, &theta).unwrap();
    for (v, f) in imm.frames().iter().enumerate() {
        if let Some(c) = f.component {
            assert!(imm.lambdas()[c].distance(&out.positions()[v], &[None; 4]) < 1e-14);
        }
    }
}

#[test]
fn cylinder_trace_translates_vertically() {
    let imm = cylinder_sl(2, 6, 1.0, 2.0).unwrap();
    let opts = TraceOptions {
        step: 0.02,
        steps: 3,
        ..TraceOptions::default()
    };
    let trace = newton_trace(&imm, &opts).unwrap();
    let last = &trace.last().unwrap().1;
    let y = last.positions()[0][1];
    assert!(y.abs() > 1e-3);
    assert!(last.positions().iter().all(|p| (p[1] - y).abs() < 1e-9 && p[3].abs() < 1e-9));
}

