// Skorokhod problems for step inputs.
//
// A random walk is reflected at zero and compared with the explicit
// running-minimum formula, then a planar input is pushed into a disc with
// an elastic projection and the solution is checked against its defining
// properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mmsde::operators::MonotoneOperator;
use mmsde::paths::{grid_distance, uniform_partition, StepPath};
use mmsde::projections::Projection;
use mmsde::skorokhod::{reflect_halfline_oracle, solve_step, verify_solution};
use mmsde::Point;

fn main() -> mmsde::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let part = uniform_partition(1.0, 200)?;

    let mut walk = vec![0.5];
    for _ in 1..part.len() {
        let step: f64 = rng.sample(StandardNormal);
        walk.push(walk.last().unwrap() + 0.1 * step);
    }
    let y = StepPath::scalar(part.clone(), &walk)?;
    let halfline = MonotoneOperator::indicator_halfline();
    let sol = solve_step(&halfline, &Projection::Classical, &y, 8)?;
    let oracle = reflect_halfline_oracle(&y)?;
    println!("half-line: k_T = {:.4}, distance to oracle {:.1e}", sol.k.terminal()[0], grid_distance(&sol.x, &oracle.x, &part, 1.0));

    let disc = MonotoneOperator::indicator_ball(Point::zeros(2), 1.0)?;
    let y = StepPath::from_fn(part.clone(), |t| {
        let a = 5.0 * t;
        Point::from_column_slice(&[2.0 * a.sin(), 1.5 * (1.0 - a.cos())])
    })?;
    let proj = Projection::elastic_iterated(0.5)?;
    let sol = solve_step(&disc, &proj, &y, 8)?;
    let pairs = vec![(Point::zeros(2), Point::zeros(2)), (Point::from_column_slice(&[1.0, 0.0]), Point::from_column_slice(&[2.0, 0.0]))];
    let report = verify_solution(&disc, &proj, &sol, &pairs, 1e-9)?;
    println!(
        "disc: |k|_var = {:.4}, additivity {:.1e}, domain {:.1e}, passed {}",
        sol.decomposition.total_variation(),
        report.additivity_residual,
        report.domain_residual,
        report.passed
    );
    Ok(())
}
