// Yosida and modified Yosida schemes next to the Euler scheme.
//
// The Yosida iterate may leave the half-line between jumps; its resolvent
// `J_n(Xⁿ)` does not. The modified scheme projects after big jumps.

use mmsde::drivers::{simulate, DriverSpec, JumpLaw, ProcessSpec};
use mmsde::operators::MonotoneOperator;
use mmsde::paths::{grid_distance, uniform_partition};
use mmsde::projections::Projection;
use mmsde::schemes::{euler_scheme, modified_yosida_scheme, yosida_scheme, Coefficient};
use mmsde::{Matrix, Point};

fn main() -> mmsde::Result<()> {
    let op = MonotoneOperator::indicator_halfline();
    let z = ProcessSpec::brownian(1, 1.0).with_jumps(
        2.0,
        JumpLaw::Gaussian {
            mean: Point::from_element(1, -0.8),
            cov: Matrix::from_element(1, 1, 0.1),
        },
    );
    let spec = DriverSpec::new(Point::from_element(1, 0.5), z)?;
    let f = Coefficient::constant(Matrix::identity(1, 1));
    let grid = uniform_partition(1.0, 512)?;
    let driver = simulate(&spec, &grid, 11, 0)?;
    let euler = euler_scheme(&op, &Projection::Classical, &f, &driver, 16)?;

    println!("{:>4} {:>10} {:>14} {:>14} {:>10}", "n", "min X^n", "sup|J_n X-X|", "sup|mod X-X|", "min mod");
    for n in [4.0, 16.0, 64.0, 256.0] {
        let plain = yosida_scheme(&op, n, &f, &driver, 16)?;
        let modified = modified_yosida_scheme(&op, &Projection::Classical, n, &f, &driver, 16)?;
        let lowest = |xs: &[Point]| xs.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
        println!(
            "{n:>4} {:>10.4} {:>14.4} {:>14.4} {:>10.4}",
            lowest(plain.x.values()),
            grid_distance(&plain.resolvent_path(&op)?, &euler.x, &driver.grid, 1.0),
            grid_distance(&modified.x, &euler.x, &driver.grid, 1.0),
            lowest(modified.x.values()),
        );
    }
    Ok(())
}
