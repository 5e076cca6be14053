// Partitions, step paths and the distances between them.

use std::io;

use mmsde::paths::io::{write_step_path, Format};
use mmsde::paths::{
    discretize, grid_distance, j1_distance_approx, refine, sup_distance, uniform_partition, variation, StepPath,
};
use mmsde::Point;

fn main() -> mmsde::Result<()> {
    let coarse = uniform_partition(1.0, 4)?;
    let fine = refine(&coarse, 4)?;
    println!("coarse mesh {}, fine mesh {}", coarse.mesh(), fine.mesh());

    let wave = StepPath::from_fn(fine.clone(), |t| Point::from_element(1, (6.0 * t).sin()))?;
    let sampled = discretize(&wave, &coarse);
    println!("sup distance       {:.4}", sup_distance(&wave, &sampled, 1.0));
    println!("grid distance      {:.4}", grid_distance(&wave, &sampled, &coarse, 1.0));
    println!("variation on [0,1] {:.4}", variation(&wave, 0.0, 1.0));

    // A single jump moved slightly in time is close in J1 but not uniformly.
    let step = |at: f64| StepPath::from_fn(uniform_partition(1.0, 100).unwrap().with_points(&[at]), |t| {
        Point::from_element(1, if t >= at { 1.0 } else { 0.0 })
    });
    let (a, b) = (step(0.5)?, step(0.52)?);
    println!("shifted jump: sup {:.3}, J1 {:.3}", sup_distance(&a, &b, 1.0), j1_distance_approx(&a, &b, 1.0, 200));

    println!("\ncoarse samples as CSV:");
    write_step_path(&sampled, io::stdout().lock(), Format::Csv)
}
