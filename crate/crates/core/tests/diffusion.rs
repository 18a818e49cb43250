use nalgebra::DVector;
use wsld::bench::loglog_slope;
use wsld::solver::*;
use wsld::wsld::{assemble_left, WsldScheme};

#[test]
fn steady_residual_is_round_off() {
    for (alpha, bc) in [
        (-0.5, SteadyBoundary::default()),
        (
            0.5,
            SteadyBoundary {
                left: Some(0.0),
                right: None,
            },
        ),
        (
            1.8,
            SteadyBoundary {
                left: Some(0.0),
                right: Some(1.0),
            },
        ),
    ] {
        let scheme = WsldScheme::single(5, alpha, 0).unwrap();
        let grid = Grid1D::new(0.0, 1.0, 40).unwrap();
        let f: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&x| power_derivative(8, alpha, x))
            .collect();
        let u = solve_steady(&scheme, &grid, &f, bc).unwrap();
        let r = steady_residual(&scheme, &grid, &u, &f, bc).unwrap();
        let fmax = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(r <= 1e-12 * fmax.max(1.0), "alpha={alpha}: {r:e}");
    }
}

#[test]
fn steady_solution_converges_for_integrals() {
    let errs: Vec<f64> = [10usize, 20, 40]
        .iter()
        .map(|&n| wsld::bench::steady_x8_error(-0.5, n).unwrap())
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
}

#[test]
fn zero_data_stays_zero() {
    let p = DiffusionProblem::zero(1.5, 20, 10).unwrap();
    let s = WsldScheme::stable_fourth_order(4, 1.5).unwrap();
    let st = cn_solve(&p, &s).unwrap();
    assert!(st.u.iter().all(|&v| v == 0.0));
    let r = stability_probe(&p, &s, 10.0).unwrap();
    assert!(r.bounded);
}

#[test]
fn table2_spot_values() {
    let cases = [(4u32, 1.5, 20usize, 5.2600e-04), (3, 1.8, 40, 1.6131e-04)];
    for (nu, alpha, hinv, want) in cases {
        let p = DiffusionProblem::table2(alpha, 2 * hinv, hinv * hinv).unwrap();
        assert!(p.kappa_consistent());
        let s = WsldScheme::stable_fourth_order(nu, alpha).unwrap();
        let err = cn_solve(&p, &s).unwrap().max_error.unwrap();
        assert!(
            ((err - want) / want).abs() < 0.05,
            "nu={nu} alpha={alpha}: {err:e}"
        );
    }
}

#[test]
fn factor_once_equals_refactor() {
    let p = DiffusionProblem::table2(1.5, 40, 100).unwrap();
    let s = WsldScheme::stable_fourth_order(3, 1.5).unwrap();
    let a = cn_solve(&p, &s).unwrap();
    let b = cn_solve_with(
        &p,
        &s,
        CnOptions {
            refactor_each_step: true,
            ..CnOptions::default()
        },
    )
    .unwrap();
    assert_eq!(a.u, b.u);
}

#[test]
fn first_step_consistent_with_operator() {
    let alpha = 1.5;
    let s = WsldScheme::stable_fourth_order(4, alpha).unwrap();
    let mut p = DiffusionProblem::table2(alpha, 40, 1).unwrap();
    let h = p.grid.h();
    let a = assemble_left(&s, 40).unwrap().scaled(alpha, h).entries;
    let nodes = p.grid.nodes();
    let u0 = DVector::from_vec(nodes.iter().map(|&x| (p.initial)(x)).collect());
    let au = &a * &u0;
    let atu = a.transpose() * &u0;
    let defect = |p: &DiffusionProblem| {
        let tau = p.tau();
        let u1 = cn_solve(p, &s).unwrap().u;
        (1..40)
            .map(|i| {
                let x = nodes[i];
                let rate =
                    (p.d_plus)(x) * au[i] + (p.d_minus)(x) * atu[i] + (p.source)(x, 0.5 * tau);
                (u1[i] - u0[i] - tau * rate).abs()
            })
            .fold(0.0, f64::max)
    };
    let taus = [4e-6, 2e-6, 1e-6];
    let ds: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            p.t_final = tau;
            defect(&p)
        })
        .collect();
    let slope = loglog_slope(&taus, &ds).unwrap();
    assert!(slope > 1.8, "defect slope {slope} {ds:?}");
}

#[test]
fn second_order_in_time() {
    let alpha = 1.5;
    let s = WsldScheme::stable_fourth_order(4, alpha).unwrap();
    let run = |nt: usize| {
        cn_solve(&DiffusionProblem::table2(alpha, 80, nt).unwrap(), &s)
            .unwrap()
            .u
    };
    let reference = run(1024);
    let nts = [8usize, 16, 32];
    let errs: Vec<f64> = nts
        .iter()
        .map(|&nt| {
            run(nt)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let taus: Vec<f64> = nts.iter().map(|&n| 1.0 / n as f64).collect();
    let slope = loglog_slope(&taus, &errs).unwrap();
    assert!((slope - 2.0).abs() <= 0.3, "{slope} {errs:?}");
}

#[test]
fn stable_tuple_survives_large_steps() {
    for ratio in [1.0, 10.0, 100.0] {
        for nu in [3, 4] {
            let p = DiffusionProblem::table2(1.5, 80, 1).unwrap();
            let s = WsldScheme::stable_fourth_order(nu, 1.5).unwrap();
            let r = stability_probe(&p, &s, ratio).unwrap();
            assert!(r.bounded, "nu={nu} ratio={ratio}: {r:?}");
        }
    }
}

#[test]
fn unshifted_operator_blows_up() {
    let p = DiffusionProblem::table2(1.5, 80, 1).unwrap();
    let s = WsldScheme::single(3, 1.5, 0).unwrap();
    let r = stability_probe(&p, &s, 10.0).unwrap();
    assert!(!r.bounded && r.sup_norm > BLOWUP_THRESHOLD);
}

#[test]
fn alpha_mismatch_is_rejected() {
    let p = DiffusionProblem::table2(1.5, 20, 10).unwrap();
    let s = WsldScheme::stable_fourth_order(4, 1.4).unwrap();
    assert!(assemble_cn_system(&p, &s).is_err());
}
