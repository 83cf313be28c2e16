//! Randomized invariants on coarse grids.

use mems_core::elliptic::solve_transformed;
use mems_core::energy::{electrostatics, energy_bounds, rescale_to_energy};
use mems_core::model::{mechanical_energy, DeflectionProfile, Grid1D, Grid2D, ModelParams};
use proptest::prelude::*;

fn setup() -> (Grid1D, Grid2D) {
    let line = Grid1D::new(33).unwrap();
    (line, Grid2D::new(line, 17).unwrap())
}

fn profile(line: Grid1D, power: i32, amp: f64) -> DeflectionProfile {
    DeflectionProfile::from_fn(line, |x| -amp * (1.0 - x * x).powi(power))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_sits_between_bounds(power in 2i32..5, amp in 0.0f64..0.9, eps in 0.1f64..1.5) {
        let (line, grid) = setup();
        let p = ModelParams::new(1.0, 0.0, 0.0, eps).unwrap();
        let u = profile(line, power, amp);
        let es = electrostatics(&u, &p, &grid).unwrap();
        let (lo, up) = energy_bounds(&u, &p).unwrap();
        let slack = 10.0 * grid.heta().powi(2);
        prop_assert!(lo >= 2.0 - slack);
        prop_assert!(lo <= es.energy + slack);
        prop_assert!(es.energy <= up + slack);
        prop_assert!(es.g.iter().all(|g| *g > 0.0));
    }

    #[test]
    fn even_plate_gives_even_potential(power in 2i32..5, amp in 0.0f64..0.9, eps in 0.1f64..1.5) {
        let (line, grid) = setup();
        let p = ModelParams::new(1.0, 0.0, 0.0, eps).unwrap();
        let phi = solve_transformed(&profile(line, power, amp), &p, &grid).unwrap();
        let n = grid.nx();
        for i in 0..n {
            for j in 0..grid.neta() {
                prop_assert!((phi.at(i, j) - phi.at(n - 1 - i, j)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn deeper_plate_stores_more_energy(power in 2i32..5, a in 0.05f64..0.85, d in 0.01f64..0.1) {
        let (line, grid) = setup();
        let p = ModelParams::default();
        let shallow = electrostatics(&profile(line, power, a), &p, &grid).unwrap().energy;
        let deep = electrostatics(&profile(line, power, a + d), &p, &grid).unwrap().energy;
        prop_assert!(deep > shallow);
    }

    #[test]
    fn mechanical_energy_is_nonnegative_and_quadratic(
        amp in 0.0f64..0.9, beta in 0.1f64..5.0, tau in 0.0f64..3.0,
    ) {
        let (line, _) = setup();
        let p = ModelParams::new(beta, tau, 0.0, 0.5).unwrap();
        let u = profile(line, 2, amp);
        let e1 = mechanical_energy(&u, &p).unwrap();
        let e2 = mechanical_energy(&u.scaled(0.5), &p).unwrap();
        prop_assert!(e1 >= 0.0);
        prop_assert!((e1 - 4.0 * e2).abs() <= 1e-12 * e1.max(1.0));
    }

    #[test]
    fn rescaling_hits_the_target(rho in 2.2f64..20.0) {
        let (line, grid) = setup();
        let p = ModelParams::default();
        let r = rescale_to_energy(&profile(line, 2, 0.999), &p, &grid, rho).unwrap();
        prop_assert!((r.state.energy - rho).abs() <= 1e-8 * rho);
        prop_assert!(r.t > 0.0 && r.t <= 1.0);
    }
}
