//! Implicit Euler for `u′ = −B(u)`: energy decay, boundary flux and the
//! contraction of two trajectories. Pass a path to also write a CSV.

use std::f64::consts::PI;

use maccretive::bcspec::BoundaryCondition;
use maccretive::discrete::discretize;
use maccretive::matnum::Mat;
use maccretive::phs::{build_q, split_q, PhsSystem};
use maccretive::semigroup::{contraction_check, energy_balance_check, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = PhsSystem::transport((0.0, 1.0));
    let qs = split_q(&build_q(&sys))?;
    let cases = [
        ("outflow u(0)=0", BoundaryCondition::KernelW { w: Mat::from_rows(&[&[0.0, 1.0]]) }),
        ("periodic u(0)=u(1)", BoundaryCondition::KernelW { w: Mat::from_rows(&[&[-1.0, 1.0]]) }),
        ("clamped feedback", BoundaryCondition::clamp(-0.3, 0.3)),
    ];
    for (name, bc) in cases {
        let op = discretize(&sys, &qs, &bc, 32)?;
        let u0 = op.grid.sample(|t| (PI * t).sin().powi(2));
        let v0 = op.grid.sample(|t| 0.5 * (3.0 * t).cos());
        let a = simulate(&op, &u0, 1.0, 1e-3)?;
        let b = simulate(&op, &v0, 1.0, 1e-3)?;
        let contraction = contraction_check(&op, &a, &b)?;
        let balance = energy_balance_check(&op, &a);
        println!(
            "{name:<20} energy {:.4} -> {:.4}, max |flux| {:.2e}, contraction {}, balance {}",
            a.energies[0],
            a.energies.last().unwrap(),
            a.boundary_flux.iter().fold(0.0_f64, |m, f| m.max(f.abs())),
            contraction.verdict,
            balance.verdict,
        );
        if let Some(path) = std::env::args().nth(1) {
            if name.starts_with("outflow") {
                a.write_csv(std::path::Path::new(&path))?;
                println!("  wrote {path}");
            }
        }
    }
    Ok(())
}
