//! Extends Lipschitz samples to new points without raising the constant.

use maccretive::kirszbraun::{extend, extend_sequential, validate_samples, validate_samples_tol, SampleSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // g(x) = x/2 sampled at 0 and 1; at x = 2 any y in [0, 1] is admissible
    let half = SampleSet::new(vec![(vec![0.0], vec![0.0]), (vec![1.0], vec![0.5])], 0.5)?;
    println!("x/2 samples, query 2 -> {:.6}", extend(&half, &[2.0])?[0]);

    let bad = vec![(vec![0.0], vec![0.0]), (vec![1.0], vec![2.0])];
    let r = validate_samples(&bad, 1.0);
    println!("slope-2 samples with L = 1: {} (excess {:.3})", r.verdict, r.residual("max_excess").unwrap());

    // componentwise clamp in 3D, extended at 20 random points one by one
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<(Vec<f64>, Vec<f64>)> = (0..25)
        .map(|_| {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y = x.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            (x, y)
        })
        .collect();
    let set = SampleSet::new(points.clone(), 1.0)?;
    let queries: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
    let values = extend_sequential(&set, &queries)?;
    let mut all = points;
    all.extend(queries.iter().cloned().zip(values.iter().cloned()));
    let check = validate_samples_tol(&all, 1.0, 2e-6);
    println!("clamp: {} queries extended, augmented set {}", values.len(), check.verdict);
    for (x, y) in queries.iter().zip(&values).take(3) {
        println!("  {x:.3?} -> {y:.3?}");
    }
    Ok(())
}
