use wsld::bench::*;

fn meta() -> ReportMeta {
    ReportMeta {
        suite: "test".into(),
        problem: "model".into(),
        nu: 4,
        alpha: 1.5,
        shifts: vec![1, -1, 1, 2, 1, -1, 1, 3],
        nominal_order: 4,
        tau_rule: None,
    }
}

#[test]
fn exact_power_law_has_exact_slope() {
    let data: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|n: &f64| (1.0 / n, 2.5 * n.powi(-4)))
        .collect();
    let r = ConvergenceReport::from_errors(meta(), &data).unwrap();
    assert!((order_regression(&r).unwrap() - 4.0).abs() < 1e-12);
    assert!(r.rates().iter().all(|v| (v - 4.0).abs() < 1e-12));
}

#[test]
fn reference_rows_regress_to_four() {
    let (_, _, errs, _) = TABLE2_REFERENCE
        .iter()
        .find(|r| r.0 == 4 && r.1 == 1.8)
        .unwrap();
    let data: Vec<(f64, f64)> = TABLE2_HINV
        .iter()
        .zip(errs)
        .map(|(&n, &e)| (1.0 / n as f64, e))
        .collect();
    let r = ConvergenceReport::from_errors(meta(), &data).unwrap();
    assert!((order_regression(&r).unwrap() - 4.0).abs() <= 0.1);
}

#[test]
fn csv_rates_recompute_from_csv_errors() {
    let reports = run_table1(&[-0.5, 0.5, 1.8], &TABLE1_HINV).unwrap();
    for r in &reports {
        let rows = parse_report_csv(&r.to_csv()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].2.is_none());
        for k in 1..rows.len() {
            let recomputed = observed_rate(rows[k - 1].0, rows[k - 1].1, rows[k].0, rows[k].1);
            assert!((recomputed - rows[k].2.unwrap()).abs() <= 1e-3);
        }
    }
}

#[test]
fn csv_is_deterministic() {
    let a = run_consistency(&[3], 1.5, &[4], &CONSISTENCY_HINV).unwrap();
    let b = run_consistency(&[3], 1.5, &[4], &CONSISTENCY_HINV).unwrap();
    assert_eq!(a[0].to_csv(), b[0].to_csv());
    assert!(a[0].to_csv().starts_with("h,error,rate\n"));
}

#[test]
fn non_dyadic_rate() {
    let r = observed_rate(1.0 / 40.0, 2.1214e-06, 1.0 / 60.0, 3.0790e-07);
    assert!((r - 4.7601).abs() < 1e-3);
}

#[test]
fn config_round_trip() {
    let text = r#"{"alpha":1.5,"xL":0,"xR":2,"Nx":40,"T":1,"Nt":400,"problem":"table2"}"#;
    let cfg = ProblemConfig::from_json(text).unwrap();
    let p = cfg.diffusion_problem().unwrap();
    assert_eq!(p.grid.n_x, 40);
    assert_eq!(p.kappa, Some(2.0));

    let custom = r#"{"alpha":1.3,"xL":0,"xR":1,"Nx":20,"T":0.5,"Nt":10,
        "d_plus":"x^alpha","d_minus":3,"initial":"bump","problem":"custom"}"#;
    let p = ProblemConfig::from_json(custom)
        .unwrap()
        .diffusion_problem()
        .unwrap();
    assert_eq!(p.kappa, Some(3.0));
    assert!(p.kappa_consistent());

    let named = r#"{"alpha":1.3,"xL":0,"xR":1,"Nx":20,"d_plus":"x^alpha",
        "d_minus":"2x^alpha","problem":"custom"}"#;
    let p = ProblemConfig::from_json(named)
        .unwrap()
        .diffusion_problem()
        .unwrap();
    assert_eq!(p.kappa, None);

    let unknown = r#"{"alpha":1.3,"xL":0,"xR":1,"Nx":20,"d_plus":"cosh","problem":"custom"}"#;
    assert!(ProblemConfig::from_json(unknown)
        .unwrap()
        .diffusion_problem()
        .is_err());
    let both = r#"{"alpha":1.3,"xL":0,"xR":1,"Nx":20,"d_minus":2,"kappa":2,"problem":"custom"}"#;
    assert!(ProblemConfig::from_json(both)
        .unwrap()
        .diffusion_problem()
        .is_err());
}
