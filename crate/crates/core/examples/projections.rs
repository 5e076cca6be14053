// Classical, elastic and iterated elastic projections onto a box.

use mmsde::operators::MonotoneOperator;
use mmsde::projections::Projection;
use mmsde::Point;

fn main() -> mmsde::Result<()> {
    let op = MonotoneOperator::indicator_box(Point::from_column_slice(&[0.0, 0.0]), Point::from_column_slice(&[1.0, 1.0]))?;
    let projections = [
        ("classical", Projection::Classical),
        ("elastic c=0.5", Projection::elastic(0.5)?),
        ("elastic c=0.9", Projection::elastic(0.9)?),
        ("iterated c=0.9", Projection::elastic_iterated(0.9)?),
    ];
    for z in [[1.4, 0.5], [3.2, -0.6], [0.3, 0.7]] {
        let z = Point::from_column_slice(&z);
        println!("z = {:?}", z.as_slice());
        for (name, proj) in &projections {
            let w = proj.apply(&op, &z)?;
            let inside = op.domain().distance(&w)? == 0.0;
            println!("  {name:<15} -> {:>8.4?}  in domain: {inside}", w.as_slice());
        }
    }
    Ok(())
}
