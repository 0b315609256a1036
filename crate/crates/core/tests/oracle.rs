use proptest::prelude::*;
use rsnl_core::kernel::eval_b;
use rsnl_core::oracle::{solve_scalar_ivp, solve_step_halving, TimeGrid};
use rsnl_core::{FracParams, QuadConfig};

#[test]
fn time_stepping_matches_quadrature() {
    let cfg = QuadConfig::default();
    for &(a, g) in &[(0.3, 2.0), (0.5, 1.0), (0.7, 0.5)] {
        let params = FracParams::new(a, g).unwrap();
        for &l in &[1.0, 10.0, 100.0] {
            let run = solve_step_halving(&params, l, 1.0, |_| 0.0, 1.0, 8192, 16384, 1e-6).unwrap();
            for i in 1..=10 {
                let t = i as f64 / 10.0;
                let b = eval_b(&params, l, t, &cfg).unwrap().value;
                let rel = (run.series.at(t) - b).abs() / b;
                assert!(rel <= 1e-3, "alpha {a} gamma {g} lambda {l} t {t}: {rel:e}");
            }
        }
    }
}

/// `λγh^{1−α}(1/Γ(2−α) − 1)`; the first step stays positive while this is
/// below 1, and the trajectory is monotone below about 0.1.
fn stiffness(params: &FracParams, lambda: f64, h: f64) -> f64 {
    let a = params.alpha();
    lambda
        * params.gamma()
        * h.powf(1.0 - a)
        * (1.0 / statrs::function::gamma::gamma(2.0 - a) - 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resolved_trajectory_is_positive_and_decreasing(
        a in 0.05f64..0.95,
        g in 0.1f64..5.0,
        l in -1.0f64..4.0,
        n in 64usize..1024,
    ) {
        let params = FracParams::new(a, g).unwrap();
        let l = 10f64.powf(l);
        prop_assume!(stiffness(&params, l, 1.0 / n as f64) < 0.1);
        let y = solve_scalar_ivp(&params, l, 1.0, |_| 0.0, TimeGrid::new(1.0, n).unwrap()).unwrap();
        let v = y.values();
        prop_assert_eq!(v[0], 1.0);
        prop_assert!(v.iter().all(|&x| x > 0.0));
        prop_assert!(v.windows(2).all(|w| w[1] < w[0]));
    }
}
