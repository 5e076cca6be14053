// Seeded jump-diffusion drivers that stay consistent under refinement.

use mmsde::drivers::{simulate, DriverSpec, JumpLaw, ProcessSpec};
use mmsde::paths::{refine, uniform_partition};
use mmsde::{Matrix, Point};

fn main() -> mmsde::Result<()> {
    let z = ProcessSpec::brownian(2, 0.8).with_jumps(
        3.0,
        JumpLaw::Gaussian {
            mean: Point::from_column_slice(&[0.0, -0.3]),
            cov: Matrix::identity(2, 2) * 0.1,
        },
    );
    let h = ProcessSpec::drift_only(Point::from_column_slice(&[0.5, 0.0]));
    let spec = DriverSpec::new(Point::from_column_slice(&[0.1, 0.2]), z)?.with_h(h)?;

    let coarse = uniform_partition(1.0, 8)?;
    let fine = refine(&coarse, 16)?;
    let (seed, trajectory) = (2024, 3);
    let a = simulate(&spec, &coarse, seed, trajectory)?;
    let b = simulate(&spec, &fine, seed, trajectory)?;
    println!("{} jumps, coarse grid {} points, fine grid {} points", a.jump_count(), a.grid.len(), b.grid.len());
    for &t in coarse.times() {
        let (za, zb) = (a.z.eval(t), b.z.eval(t));
        println!("t = {t:.3}  Z = [{:+.4}, {:+.4}]  same on fine grid: {}", za[0], za[1], za == zb);
    }
    Ok(())
}
