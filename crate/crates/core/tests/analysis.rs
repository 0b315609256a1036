use rsnl_core::analysis::{
    amplification_spectrum, locate_lambda0, locate_t0, log_grid, verify_kernel_bounds, Located,
};
use rsnl_core::nonlocal::SolverConfig;
use rsnl_core::spectrum::Spectrum;
use rsnl_core::{FracParams, QuadConfig};

fn params() -> FracParams {
    FracParams::new(0.5, 1.0).unwrap()
}

#[test]
fn amplification_bounded_outside_unit_interval() {
    let s = Spectrum::dirichlet_interval(std::f64::consts::PI, 30).unwrap();
    let cfg = SolverConfig::default();
    for beta in [-2.0, -0.5, 1.5, 3.0] {
        let dist = if beta < 0.0 { -beta } else { beta - 1.0 };
        let table = amplification_spectrum(beta, 1.0, &s, &params(), &cfg).unwrap();
        assert!(
            table.max_amplification() <= 1.0 / dist + 1e-12,
            "beta {beta}"
        );
    }
    let table = amplification_spectrum(1.0, 1.0, &s, &params(), &cfg).unwrap();
    let max_b = table.rows.iter().map(|r| r.b_at_t0).fold(0.0, f64::max);
    assert!(table.max_amplification() <= 1.0 / (1.0 - max_b) + 1e-12);
}

#[test]
fn located_lambda0_is_stable_under_refinement() {
    let cfg = QuadConfig::default();
    let coarse = log_grid(1e-2, 1e4, 25);
    let fine = log_grid(1e-2, 1e4, 49);
    for t0 in [0.1, 1.0, 3.0] {
        let a = locate_lambda0(&params(), t0, &coarse, &cfg)
            .unwrap()
            .value()
            .unwrap();
        let b = locate_lambda0(&params(), t0, &fine, &cfg)
            .unwrap()
            .value()
            .unwrap();
        let cell = coarse[1] / coarse[0];
        assert!(b >= a / cell && b <= a * cell, "t0 {t0}: {a} vs {b}");
    }
}

#[test]
fn located_t0_reaches_horizon() {
    let t = [0.5, 1.0, 2.0, 4.0];
    let got = locate_t0(
        &params(),
        1.0,
        &t,
        &log_grid(1.0, 1e4, 13),
        &QuadConfig::default(),
    )
    .unwrap();
    assert_eq!(got, Located::Found(1.0));
}

#[test]
fn bound_ids_are_reported() {
    let reports = verify_kernel_bounds(
        &params(),
        &[1.0, 100.0],
        &[0.1, 1.0],
        1.0,
        &QuadConfig::default(),
    )
    .unwrap();
    let ids: Vec<&str> = reports.iter().map(|r| r.id.as_str()).collect();
    for id in [
        "lemma-3.1-1",
        "lemma-3.1-2",
        "lemma-3.1-3",
        "lemma-3.1-4",
        "lemma-3.3",
        "lemma-3.4",
    ] {
        assert!(ids.contains(&id), "{id} missing");
    }
    assert!(reports.iter().all(|r| r.pass));
}
