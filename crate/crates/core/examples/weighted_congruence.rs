//! A nontrivial density 𝓗 changes the geometry but not the verdict: the
//! weighted problem and its flat counterpart certify identically.

use maccretive::bcspec::BoundaryCondition;
use maccretive::discrete::{certify_accretive, certify_m_accretive, discretize, CertifyMode};
use maccretive::matnum::Mat;
use maccretive::phs::{build_q, split_q, HamiltonianDensity, PhsSystem};
use maccretive::semigroup::weighted_wrap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // wave equation in first-order form, n = 1, d = 2
    let p1 = Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let base = PhsSystem::new(1, 2, vec![Mat::zeros(2, 2), p1], (0.0, 1.0), HamiltonianDensity::identity(2))?;
    let qs = split_q(&build_q(&base))?;
    let mus = [0.1, 1.0, 10.0];

    let conditions = [
        ("M = 0.8 I", BoundaryCondition::LinearM { m: Mat::identity(2).scale(0.8) }),
        ("M = 1.2 I", BoundaryCondition::LinearM { m: Mat::identity(2).scale(1.2) }),
        ("0.9 rot(0.7)", BoundaryCondition::scaled_rotation(0.9, 0.7)),
    ];
    for density in [Mat::identity(2).scale(2.0), Mat::from_diag(&[1.0, 2.0])] {
        let sys = base.with_hamiltonian(HamiltonianDensity::constant(density.clone())?)?;
        println!("H = diag({}, {})", density[(0, 0)], density[(1, 1)]);
        for (name, bc) in &conditions {
            let wrap = weighted_wrap(&sys, bc)?;
            let weighted = discretize(&sys, &qs, bc, 24)?;
            let flat = discretize(&wrap.flat, &qs, &wrap.bc, 24)?;
            let mode = if weighted.is_linear() { CertifyMode::Linear } else { CertifyMode::Sampled { samples: 16, seed: 1 } };
            println!(
                "  {name:<13} weighted {}/{}  flat {}/{}",
                certify_accretive(&weighted, mode).verdict,
                certify_m_accretive(&weighted, &mus, 8, 1).verdict,
                certify_accretive(&flat, mode).verdict,
                certify_m_accretive(&flat, &mus, 8, 1).verdict,
            );
        }
    }
    Ok(())
}
