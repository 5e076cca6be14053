use approx::assert_abs_diff_eq;

use mmsde::config::ExperimentConfig;
use mmsde::drivers::{simulate, DriverSpec, JumpLaw, ProcessSpec};
use mmsde::harness::{compare_schemes, run_convergence, run_scheme};
use mmsde::operators::MonotoneOperator;
use mmsde::paths::uniform_partition;
use mmsde::projections::Projection;
use mmsde::schemes::{euler_scheme, yosida_scheme, Coefficient, SchemeKind};
use mmsde::{Matrix, Point};

fn p1(v: f64) -> Point {
    Point::from_element(1, v)
}

/// `A = a·I` on the line with `H_t = 1 + c·t`: `x' = c − a·x`.
fn linear_config(a: f64, c: f64) -> ExperimentConfig {
    let op = MonotoneOperator::linear_monotone(Matrix::from_element(1, 1, a)).unwrap();
    let driver = DriverSpec::new(p1(1.0), ProcessSpec::zero(1))
        .unwrap()
        .with_h(ProcessSpec::drift_only(p1(c)))
        .unwrap();
    let mut cfg = ExperimentConfig::new(op, Projection::Classical, Coefficient::zero(1), driver).unwrap();
    cfg.trajectories = 1;
    cfg
}

#[test]
fn deterministic_rates_follow_the_mesh() {
    let (a, c) = (2.0, 3.0);
    let cfg = linear_config(a, c);
    let exact = |t: f64| c / a + (1.0 - c / a) * (-a * t).exp();
    let errs: Vec<f64> = cfg
        .levels
        .iter()
        .map(|&n| {
            let part = uniform_partition(1.0, n).unwrap();
            let driver = simulate(&cfg.driver, &part, 0, 0).unwrap();
            let x = run_scheme(&cfg, SchemeKind::Euler, None, &driver).unwrap().x;
            part.times()
                .iter()
                .enumerate()
                .map(|(k, &t)| (x.value(k)[0] - exact(t)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for (w, l) in errs.windows(2).zip(cfg.levels.windows(2)) {
        let ratio = w[0] / w[1];
        let refinement = (l[1] / l[0]) as f64;
        assert!(
            ratio >= refinement / 2.0 && ratio <= refinement * 2.0,
            "errors {errs:?} do not scale with the mesh"
        );
    }

    let table = run_convergence(&cfg).unwrap();
    assert!(!table.is_oracle());
    let sup: Vec<f64> = table.series(SchemeKind::Euler, 0.5).iter().map(|r| r.sup_err).collect();
    assert!(sup.windows(2).all(|w| w[1] < w[0] / 2.0), "{sup:?}");
}

#[test]
fn jump_free_comparison_rows_coincide() {
    let z = ProcessSpec::brownian(1, 0.7);
    let driver = DriverSpec::new(p1(0.5), z).unwrap();
    let mut cfg = ExperimentConfig::new(
        MonotoneOperator::indicator_halfline(),
        Projection::Classical,
        Coefficient::constant(Matrix::identity(1, 1)),
        driver,
    )
    .unwrap();
    cfg.levels = vec![8, 32];
    cfg.yosida_levels = vec![4.0, 16.0];
    cfg.reference_factor = 4;
    cfg.trajectories = 10;
    let table = compare_schemes(&cfg).unwrap();
    for n in [4.0, 16.0] {
        let plain = table.get(n, SchemeKind::Yosida, 0.5).unwrap();
        let modified = table.get(n, SchemeKind::ModifiedYosida, 0.5).unwrap();
        assert_eq!(plain.mean_err, modified.mean_err);
        assert_eq!(plain.std_err, modified.std_err);
    }
}

#[test]
fn without_an_operator_all_schemes_agree() {
    let z = ProcessSpec::brownian(2, 1.0).with_jumps(2.0, JumpLaw::UniformBall { radius: 0.5 });
    let driver = DriverSpec::new(Point::from_column_slice(&[0.3, -0.2]), z).unwrap();
    let mut cfg = ExperimentConfig::new(
        MonotoneOperator::zero(2).unwrap(),
        Projection::Classical,
        Coefficient::diagonal_state(),
        driver,
    )
    .unwrap();
    cfg.levels = vec![16, 64];
    cfg.yosida_levels = vec![4.0, 16.0];
    cfg.reference_factor = 1;
    cfg.trajectories = 6;
    let table = compare_schemes(&cfg).unwrap();
    // n = 16 runs on the 64-interval grid, which is also the reference grid.
    let rows: Vec<_> = table.rows.iter().filter(|r| r.level == 16.0).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_abs_diff_eq!(r.mean_err, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.sup_err, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn yosida_of_zero_operator_is_euler_maruyama() {
    let op = MonotoneOperator::zero(1).unwrap();
    let z = ProcessSpec::brownian(1, 1.0).with_jumps(3.0, JumpLaw::Fixed(p1(0.4)));
    let spec = DriverSpec::new(p1(1.0), z).unwrap();
    let part = uniform_partition(1.0, 50).unwrap();
    let driver = simulate(&spec, &part, 5, 2).unwrap();
    let f = Coefficient::diagonal_state();
    let out = yosida_scheme(&op, 10.0, &f, &driver, 4).unwrap();

    let (h, z) = (&driver.h, &driver.z);
    let mut x = 1.0;
    for k in 1..part.len() {
        x += (h.value(k)[0] - h.value(k - 1)[0]) + x * (z.value(k)[0] - z.value(k - 1)[0]);
        assert_abs_diff_eq!(out.x.value(k)[0], x, epsilon = 1e-12);
    }
}

#[test]
fn euler_stays_in_the_domain_and_balances() {
    let op = MonotoneOperator::indicator_ball(Point::zeros(2), 1.0).unwrap();
    let z = ProcessSpec::brownian(2, 1.5).with_jumps(
        4.0,
        JumpLaw::Gaussian {
            mean: Point::zeros(2),
            cov: Matrix::identity(2, 2),
        },
    );
    let spec = DriverSpec::new(Point::from_column_slice(&[0.2, 0.1]), z).unwrap();
    let part = uniform_partition(1.0, 64).unwrap();
    let f = Coefficient::diagonal_state();
    for j in 0..20 {
        let driver = simulate(&spec, &part, 11, j).unwrap();
        for proj in [Projection::Classical, Projection::elastic_iterated(0.5).unwrap()] {
            let out = euler_scheme(&op, &proj, &f, &driver, 8).unwrap();
            assert!(out.x.values().iter().all(|x| x.norm() <= 1.0 + 1e-12));
            assert!(out.additivity_residual() <= 1e-10);
        }
    }
}
