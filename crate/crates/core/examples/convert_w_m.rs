//! Moves a linear boundary condition between `M` and `W = K(Q₋ − MQ₊, Q₊ − MQ₋)`.

use maccretive::bcspec::{m_to_w, w_to_m, BcError};
use maccretive::matnum::{spectral_norm, Mat};
use maccretive::phs::{build_q, split_q, HamiltonianDensity, PhsSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Euler-Bernoulli type beam: n = 2, d = 2, P₂ skew
    let p2 = Mat::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
    let sys = PhsSystem::new(2, 2, vec![Mat::zeros(2, 2), Mat::zeros(2, 2), p2], (0.0, 1.0), HamiltonianDensity::identity(2))?;
    let qs = split_q(&build_q(&sys))?;
    println!("Q =\n{}", fmt(&qs.q));

    let m = Mat::from_rows(&[
        &[0.2, 0.0, 0.1, 0.0],
        &[0.0, -0.4, 0.0, 0.3],
        &[0.5, 0.0, 0.0, 0.0],
        &[0.0, 0.1, 0.0, 0.6],
    ]);
    let k = Mat::from_diag(&[2.0, 1.0, 1.0, 0.5]);
    let w = m_to_w(&qs, &m, Some(&k))?;
    println!("W = K(Q- - M Q+, Q+ - M Q-) =\n{}", fmt(&w));

    let (m_back, k_back) = w_to_m(&qs, &w)?;
    println!("recovered M differs by {:.1e}, K by {:.1e}", (&m_back - &m).max_abs(), (&k_back - &k).max_abs());
    println!("|M| = {:.4}", spectral_norm(&m)?);

    // too few independent rows cannot describe a maximal condition
    let thin = w.block(0, 0, 4, 8).scale(0.0);
    match w_to_m(&qs, &thin) {
        Err(BcError::RankDeficient { rank, expected }) => println!("zero W: rank {rank} < {expected}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}

fn fmt(m: &Mat) -> String {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| format!("{v:8.4}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}
