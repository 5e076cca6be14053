// Resolvents and Yosida approximations of a few maximal monotone operators.
//
// For each operator the example prints `J_λ(z)` and the Yosida operator
// `A_n(z) = n(z − J_n(z))` with `n = 1/λ`, and checks `J_λ(z) + λ·A_n(z) = z`.

use mmsde::convex::HalfSpace;
use mmsde::operators::{resolve, yosida_a, yosida_j, MonotoneOperator};
use mmsde::{Matrix, Point};

fn main() -> mmsde::Result<()> {
    let p = |v: &[f64]| Point::from_column_slice(v);
    let ops = vec![
        MonotoneOperator::indicator_ball(p(&[0.0, 0.0]), 1.0)?,
        MonotoneOperator::indicator_polyhedron(vec![
            HalfSpace::new(p(&[1.0, 1.0]), 1.0)?,
            HalfSpace::new(p(&[-1.0, 0.0]), 0.0)?,
        ])?,
        MonotoneOperator::l1_norm(2, 0.5)?,
        MonotoneOperator::linear_monotone(Matrix::from_row_slice(2, 2, &[1.0, -2.0, 2.0, 0.0]))?,
    ];
    let z = p(&[1.5, -0.4]);
    let lambda = 0.25;
    for op in &ops {
        let j = resolve(op, lambda, &z)?;
        let n = 1.0 / lambda;
        let a = yosida_a(op, n, &z)?;
        let back = &j + &a * lambda;
        println!("{}", op.label());
        println!("  J_{lambda}(z)      = {:.6?}", j.as_slice());
        println!("  A_{n}(z)       = {:.6?}", a.as_slice());
        println!("  |J + λA − z|  = {:.2e}", (back - &z).norm());
        assert_eq!(yosida_j(op, n, &z)?, j);
    }
    Ok(())
}
