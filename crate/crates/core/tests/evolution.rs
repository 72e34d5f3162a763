use nlstrain_core::evolution::{uniform_times, Integrator};
use nlstrain_core::{Field, Grid1D, Nonlinearity};
use num_complex::Complex64;
use proptest::prelude::*;

fn bump(grid: &Grid1D, amp: f64, k: f64, x0: f64) -> Field {
    let values = grid
        .xs()
        .iter()
        .map(|&x| Complex64::from_polar(amp * (-(x - x0) * (x - x0)).exp(), k * x))
        .collect();
    Field::new(0.0, values)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniform_times_end_exactly_at_the_horizon(t in 1e-3f64..100.0, n in 1usize..500) {
        let ts = uniform_times(t, n);
        prop_assert_eq!(ts.len(), n + 1);
        prop_assert_eq!(ts[0], 0.0);
        prop_assert_eq!(ts[n], t);
        prop_assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn mass_is_conserved(amp in 0.1f64..1.5, k in -3.0f64..3.0, x0 in -5.0f64..5.0) {
        let grid = Grid1D::new(40.0, 256).unwrap();
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let mut u = bump(&grid, amp, k, x0);
        let report = Integrator::new(&grid, &nl).evolve(&mut u, 0.5, 0.01).unwrap();
        prop_assert!(report.mass_drift < 1e-12);
    }

    #[test]
    fn monitoring_does_not_change_the_solution(every in 1usize..40, amp in 0.1f64..1.5) {
        let grid = Grid1D::new(40.0, 256).unwrap();
        let nl = Nonlinearity::pure_power(2.0);
        let u0 = bump(&grid, amp, 1.0, 0.0);
        let mut a = u0.clone();
        let mut b = u0;
        Integrator::new(&grid, &nl).evolve(&mut a, 0.5, 0.005).unwrap();
        let mut integ = Integrator::new(&grid, &nl);
        integ.options.monitor_every = every;
        integ.evolve(&mut b, 0.5, 0.005).unwrap();
        let err = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn backward_run_returns_to_the_start(amp in 0.1f64..1.0, k in -2.0f64..2.0) {
        let grid = Grid1D::new(40.0, 256).unwrap();
        let nl = Nonlinearity::pure_power(2.0);
        let u0 = bump(&grid, amp, k, 0.0);
        let mut u = u0.clone();
        let mut integ = Integrator::new(&grid, &nl);
        integ.evolve(&mut u, 0.4, 0.01).unwrap();
        integ.evolve(&mut u, 0.0, -0.01).unwrap();
        let err = u.values.iter().zip(&u0.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }
}

#[test]
fn sampled_energy_converges_at_second_order() {
    let grid = Grid1D::new(40.0, 256).unwrap();
    let nl = Nonlinearity::pure_power(2.0);
    let u0 = bump(&grid, 1.2, 1.0, 0.0);
    let drift = |dt: f64, every: usize| {
        let mut integ = Integrator::new(&grid, &nl);
        integ.options.monitor_every = every;
        let mut u = u0.clone();
        integ.evolve(&mut u, 1.0, dt).unwrap().energy_drift
    };
    let ratio = drift(0.01, 10) / drift(0.005, 20);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}
