//! Checks `⟨Au,v⟩ + ⟨u,Av⟩ = ⟨F₁𝓗u,F₁𝓗v⟩ − ⟨F₂𝓗u,F₂𝓗v⟩` on random systems
//! and lifts prescribed boundary values back to a function.

use maccretive::funcspace::{boundary_map, graph_norm, greens_residual, lift_boundary_values, PolyFunction};
use maccretive::matnum::{norm2, sub_vec, Poly1};
use maccretive::phs::{build_q, random_system, split_q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_fn(rng: &mut ChaCha8Rng, d: usize, degree: usize, interval: (f64, f64)) -> PolyFunction {
    let comps = (0..d)
        .map(|_| Poly1::new((0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    PolyFunction::new(comps, interval)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    println!("{:>2} {:>2} {:>12} {:>12}", "n", "d", "residual", "lift miss");
    for _ in 0..8 {
        let n = rng.gen_range(1..=3);
        let d = rng.gen_range(1..=3);
        let sys = random_system(&mut rng, n, d, (0.0, 1.5), 2.0);
        let qs = split_q(&build_q(&sys))?;
        let u = random_fn(&mut rng, sys.dim(), n + 3, sys.interval());
        let v = random_fn(&mut rng, sys.dim(), n + 3, sys.interval());
        let r = greens_residual(&sys, &qs, &u, &v)? / (1.0 + graph_norm(&sys, &u)? * graph_norm(&sys, &v)?);

        let nd = qs.dim();
        let g1: Vec<f64> = (0..nd).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = (0..nd).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = lift_boundary_values(&qs, &g1, &g2, sys.dim(), sys.interval())?;
        let bv = boundary_map(&qs, &w)?;
        let miss = norm2(&sub_vec(&bv.f1, &g1)).max(norm2(&sub_vec(&bv.f2, &g2)));
        println!("{:>2} {:>2} {r:>12.2e} {miss:>12.2e}", sys.order(), sys.dim());
    }
    Ok(())
}
