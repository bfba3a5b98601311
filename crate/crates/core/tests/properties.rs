//! Cross-module invariants, mostly property-based.

use proptest::prelude::*;
use std::f64::consts::TAU;

use qcrb_core::bounds::{
    frontier_point, qubit_attainable_c, rld_bound_closed, FrontierParams, WeightMatrix,
};
use qcrb_core::families::{eval_derivs, eval_state, extend_iid, ParamPoint, StateFamily};
use qcrb_core::infogeo::point_info;
use qcrb_core::matcore::eig_hermitian;
use qcrb_core::povmopt::{inner_value, optimize, product_embed, random_povm, SearchOpts};

fn qubit_family_strategy() -> impl Strategy<Value = (StateFamily, Vec<f64>)> {
    let full = (0.05f64..0.95, 0.1f64..TAU - 0.1, 0.1f64..TAU - 0.1)
        .prop_map(|(r, th, ph)| (StateFamily::QubitFull, vec![r, th, ph]));
    let rfix = (0.1f64..0.95, 0.1f64..TAU - 0.1, 0.1f64..TAU - 0.1)
        .prop_map(|(r0, th, ph)| (StateFamily::QubitRFixed { r0 }, vec![th, ph]));
    let phi0 = (0.05f64..0.95, 0.1f64..TAU - 0.1)
        .prop_map(|(r, th)| (StateFamily::QubitPhiZero, vec![r, th]));
    prop_oneof![full, rfix, phi0]
}

fn pd_weight_2x2() -> impl Strategy<Value = WeightMatrix> {
    (0.05f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(margin, g2, g3, s)| {
        let g1 = (g2 * g2 + g3 * g3).sqrt() + margin;
        let scale = 0.5 + s.abs();
        WeightMatrix::from_g_coords(scale * g1, scale * g2, scale * g3).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn states_are_density_operators((family, coords) in qubit_family_strategy()) {
        let rho = eval_state(&family, &ParamPoint::new(coords)).unwrap();
        let eig = eig_hermitian(rho.operator()).unwrap();
        prop_assert!(eig.eigenvalues[0] >= -1e-12);
        prop_assert!((rho.operator().trace_re() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_are_traceless((family, coords) in qubit_family_strategy()) {
        let fp = eval_derivs(&family, &ParamPoint::new(coords)).unwrap();
        for d in &fp.derivs {
            prop_assert!(d.trace_re().abs() < 1e-12);
        }
    }

    #[test]
    fn bounds_are_positively_homogeneous(
        (family, coords) in qubit_family_strategy(),
        g in pd_weight_2x2(),
        c in 0.1f64..10.0,
    ) {
        // C(cG) = c·C(G) and C_R(cG) = c·C_R(G).
        prop_assume!(family.param_dim() == 2);
        let info = point_info(&family, &ParamPoint::new(coords)).unwrap();
        let gc = g.scale(c).unwrap();
        let (c1, _) = qubit_attainable_c(&info.j_sld, &g).unwrap();
        let (c2, _) = qubit_attainable_c(&info.j_sld, &gc).unwrap();
        prop_assert!((c2 - c * c1).abs() <= 1e-9 * c2.abs());
        if let Some(jt) = info.j_rld.as_ref() {
            let r1 = rld_bound_closed(jt, &g).unwrap();
            let r2 = rld_bound_closed(jt, &gc).unwrap();
            prop_assert!((r2 - c * r1).abs() <= 1e-9 * r2.abs());
        }
    }

    #[test]
    fn frontier_points_satisfy_their_displays(
        r0 in 0.1f64..1.0,
        y in -3.0f64..3.0,
        z in -3.0f64..3.0,
        asymptotic in any::<bool>(),
    ) {
        let params = if asymptotic {
            FrontierParams::RFixedAsymptotic { r0, y, z }
        } else {
            FrontierParams::RFixedSingle { r0, y, z }
        };
        let pt = frontier_point(&params).unwrap();
        let v = &pt.v;
        // Chart coordinates recoverable from V.
        let x = 0.5 * (v.entry(0, 0) + v.entry(1, 1));
        let y_back = 0.5 * (v.entry(0, 0) - v.entry(1, 1));
        let b = if asymptotic { r0 * r0 } else { 1.0 };
        let x_want = (1.0 + (r0.powi(4) * (y * y + z * z) + b).sqrt()) / (r0 * r0);
        prop_assert!((x - x_want).abs() < 1e-10);
        prop_assert!((y_back - y).abs() < 1e-12);
        prop_assert!((v.entry(0, 1) - z).abs() < 1e-12);
        // V is positive definite on the frontier.
        prop_assert!(v.min_eigenvalue().unwrap() > 0.0);
    }

    #[test]
    fn random_povms_resolve_identity(dim in 2usize..5, extra in 0usize..5, seed in any::<u64>()) {
        let m = dim + extra;
        let povm = random_povm(dim, m, seed).unwrap();
        let mut sum = qcrb_core::matcore::ComplexMatrix::zeros(dim);
        for e in povm.elements() {
            sum = sum.add(e.matrix());
        }
        let defect = sum.sub(&qcrb_core::matcore::ComplexMatrix::identity(dim)).max_abs();
        prop_assert!(defect < 1e-9);
        for e in povm.elements() {
            prop_assert!(e.min_eigenvalue().unwrap() >= -1e-10);
        }
    }
}

#[test]
fn log_derivative_residuals_on_random_draws() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(314159);
    for trial in 0..100 {
        let (family, coords) = match trial % 3 {
            0 => (
                StateFamily::QubitFull,
                vec![
                    rng.gen_range(0.1..0.9),
                    rng.gen_range(0.2..TAU - 0.2),
                    rng.gen_range(0.2..TAU - 0.2),
                ],
            ),
            1 => (
                StateFamily::QubitRFixed {
                    r0: rng.gen_range(0.1..0.95),
                },
                vec![rng.gen_range(0.2..TAU - 0.2), rng.gen_range(0.2..TAU - 0.2)],
            ),
            _ => (
                StateFamily::QubitPhiZero,
                vec![rng.gen_range(0.1..0.9), rng.gen_range(0.2..TAU - 0.2)],
            ),
        };
        let fp = eval_derivs(&family, &ParamPoint::new(coords)).unwrap();
        for drho in &fp.derivs {
            let l = qcrb_core::infogeo::solve_sld(&fp.rho, drho).unwrap();
            let lr = l.matrix().matmul(fp.rho.operator().matrix());
            let rl = fp.rho.operator().matrix().matmul(l.matrix());
            let lyap = lr.add(&rl).scale_re(0.5).sub(drho.matrix()).max_abs();
            assert!(lyap < 1e-9, "trial {trial}: Lyapunov residual {lyap:e}");

            let lt = qcrb_core::infogeo::solve_rld(&fp.rho, drho).unwrap();
            let rld = lt
                .matmul(fp.rho.operator().matrix())
                .sub(drho.matrix())
                .max_abs();
            assert!(rld < 1e-9, "trial {trial}: RLD residual {rld:e}");
        }
    }
}

#[test]
fn searched_values_respect_the_bound_floors() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let family = StateFamily::QubitRFixed { r0: 0.5 };
    let theta = ParamPoint::new(vec![std::f64::consts::FRAC_PI_2, 0.0]);
    let fp = eval_derivs(&family, &theta).unwrap();
    let info = point_info(&family, &theta).unwrap();
    let g = WeightMatrix::identity(2);
    let c = qubit_attainable_c(&info.j_sld, &g).unwrap().0;
    let cr = rld_bound_closed(info.j_rld.as_ref().unwrap(), &g).unwrap();
    let mut rng = StdRng::seed_from_u64(2718);
    for _ in 0..50 {
        let povm = random_povm(2, rng.gen_range(3..8), rng.gen()).unwrap();
        let v = match inner_value(&povm, &fp, &g) {
            Ok(v) => v,
            Err(_) => continue,
        };
        assert!(v >= c - 1e-6, "single-copy value {v} beat C = {c}");
        assert!(v >= cr - 1e-6, "single-copy value {v} beat C_R = {cr}");
    }
}

#[test]
fn searched_value_is_monotone_in_copies() {
    let family = StateFamily::QubitRFixed { r0: 0.5 };
    let theta = ParamPoint::new(vec![std::f64::consts::FRAC_PI_2, 0.0]);
    let fp = eval_derivs(&family, &theta).unwrap();
    let g = WeightMatrix::identity(2);

    let single = optimize(
        &fp,
        &g,
        1,
        &SearchOpts {
            outcomes: Some(6),
            restarts: 16,
            iters: 200,
            seed: 11,
        },
        &theta,
    )
    .unwrap();
    let double = optimize(
        &fp,
        &g,
        2,
        &SearchOpts {
            outcomes: Some(10),
            restarts: 32,
            iters: 300,
            seed: 11,
        },
        &theta,
    )
    .unwrap();
    assert!(
        double.best_value <= single.best_value + 1e-6,
        "normalized 2-copy value {} exceeds single-copy {}",
        double.best_value,
        single.best_value
    );

    // The embedding argument behind monotonicity: measuring each copy
    // independently with any single-copy POVM reproduces its normalized value.
    let embedded = product_embed(&single.best_povm, 2).unwrap();
    let ext = extend_iid(&fp, 2).unwrap();
    let v2 = 2.0 * inner_value(&embedded, &ext, &g).unwrap();
    assert!((v2 - single.best_value).abs() < 1e-8 * single.best_value);
}

#[test]
fn search_results_serialize_round_trip() {
    let family = StateFamily::QubitRFixed { r0: 0.5 };
    let theta = ParamPoint::new(vec![std::f64::consts::FRAC_PI_2, 0.0]);
    let fp = eval_derivs(&family, &theta).unwrap();
    let g = WeightMatrix::identity(2);
    let res = optimize(
        &fp,
        &g,
        1,
        &SearchOpts {
            outcomes: Some(5),
            restarts: 4,
            iters: 40,
            seed: 3,
        },
        &theta,
    )
    .unwrap();
    let json = serde_json::to_string(&res).unwrap();
    let back: qcrb_core::povmopt::SearchResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.best_value.to_bits(), res.best_value.to_bits());
    assert_eq!(back.best_povm, res.best_povm);
}

#[test]
fn bound_report_serializes_losslessly() {
    let report = qcrb_core::bounds::bound_report(
        &StateFamily::QubitRFixed { r0: 0.5 },
        &ParamPoint::new(vec![std::f64::consts::FRAC_PI_2, 0.0]),
        &WeightMatrix::identity(2),
    )
    .unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: qcrb_core::bounds::BoundReport = serde_json::from_str(&json).unwrap();
    assert_eq!(
        back.c_single.unwrap().to_bits(),
        report.c_single.unwrap().to_bits()
    );
    assert_eq!(
        back.c_rld.unwrap().to_bits(),
        report.c_rld.unwrap().to_bits()
    );
    assert_eq!(back.j_sld, report.j_sld);
}
