//! Classifies the transport condition `u(a) = α u(b)` for several α,
//! in both the M and the W representation.

use maccretive::bcspec::{classify, pos_def_w_matrix, BoundaryCondition};
use maccretive::matnum::Mat;
use maccretive::phs::{build_q, split_q, PhsSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = PhsSystem::transport((0.0, 1.0));
    let qs = split_q(&build_q(&sys))?;

    println!("{:>6} {:>10} {:>10} {:>14}", "alpha", "M verdict", "W verdict", "(1-a^2)/2 form");
    for alpha in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let by_m = classify(&qs, &BoundaryCondition::LinearM { m: Mat::from_diag(&[alpha]) }, 0, 0)?;
        let w = Mat::from_rows(&[&[-alpha, 1.0]]);
        let form = pos_def_w_matrix(&qs, &w)?;
        let by_w = classify(&qs, &BoundaryCondition::KernelW { w }, 0, 0)?;
        println!("{alpha:>6} {:>10} {:>10} {:>14.6}", by_m.verdict, by_w.verdict, form[(0, 0)]);
    }

    // nonlinear feedback is classified by sampling its Lipschitz constant
    let clamp = BoundaryCondition::clamp(-0.5, 0.5);
    let r = classify(&qs, &clamp, 2000, 7)?;
    println!("\nclamp(-0.5, 0.5): {} (max ratio {:.6} over {} pairs)",
        r.verdict,
        r.residual("max_ratio").unwrap_or(f64::NAN),
        r.residual("samples").unwrap_or(0.0));
    let r = classify(&qs, &BoundaryCondition::scalar_multiple(1.25), 2000, 7)?;
    println!("1.25 x: {} (max ratio {:.6})", r.verdict, r.residual("max_ratio").unwrap_or(f64::NAN));
    Ok(())
}
