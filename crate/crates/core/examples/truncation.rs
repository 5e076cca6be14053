// A locally Lipschitz coefficient `f(x) = x²` made globally Lipschitz by
// radial truncation. On a bounded domain the truncation level never has to
// grow, and the result does not depend on the starting level.

use mmsde::drivers::{simulate, DriverSpec, ProcessSpec};
use mmsde::operators::MonotoneOperator;
use mmsde::paths::uniform_partition;
use mmsde::projections::Projection;
use mmsde::schemes::{euler_scheme, run_truncated, truncate, Coefficient};
use mmsde::Point;

fn main() -> mmsde::Result<()> {
    let f = Coefficient::diagonal_square();
    let f2 = truncate(&f, 2.0)?;
    for r in [1.0, 2.5, 4.0] {
        println!("f_2({r}) = {}", f2.eval(&Point::from_element(1, r))[(0, 0)]);
    }

    let op = MonotoneOperator::indicator_box(Point::from_element(1, 0.0), Point::from_element(1, 1.0))?;
    let spec = DriverSpec::new(Point::from_element(1, 0.5), ProcessSpec::brownian(1, 2.0))?;
    let driver = simulate(&spec, &uniform_partition(1.0, 100)?, 3, 0)?;
    let run = |c: &Coefficient| euler_scheme(&op, &Projection::Classical, c, &driver, 4);
    let low = run_truncated(&f, 2.0, run)?;
    let high = run_truncated(&f, 5.0, run)?;
    println!(
        "box [0, 1]: level {} with {} escalations; identical to level 5: {}",
        low.level,
        low.escalations,
        low.output.x == high.output.x
    );

    // Without a domain the solution can wander and the level is raised.
    let free = MonotoneOperator::zero(1)?;
    let spec = DriverSpec::new(Point::from_element(1, 1.5), ProcessSpec::brownian(1, 2.0))?;
    let driver = simulate(&spec, &uniform_partition(1.0, 100)?, 3, 0)?;
    let run = |c: &Coefficient| euler_scheme(&free, &Projection::Classical, c, &driver, 4);
    let grown = run_truncated(&f, 1.0, run)?;
    println!("free motion: final level {} after {} escalations", grown.level, grown.escalations);
    Ok(())
}
