//! The scalar derivative on an interval: split `u = c₁eᵗ + c₋₁e⁻ᵗ + r`, and
//! recover the map `h` induced by a feedback `u(a) = g(u(b))`.

use maccretive::discrete::{derive_h_from_g, std_system_oracle_d1};
use maccretive::funcspace::PolyFunction;
use maccretive::matnum::Poly1;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iv = (0.0, 1.0);
    let one = std_system_oracle_d1(iv, &PolyFunction::scalar(Poly1::constant(1.0), iv));
    let s = 1.0 + 1f64.exp();
    println!("u = 1: c1 = {:.12} (1/(1+e) = {:.12}), c-1 = {:.12} (e/(1+e) = {:.12})", one.c1, 1.0 / s, one.cm1, 1f64.exp() / s);

    let p = Poly1::new(vec![0.3, -1.0, 0.0, 2.0]);
    let r = std_system_oracle_d1(iv, &PolyFunction::scalar(p, iv));
    println!("0.3 - t + 2t^3: c1 = {:.6}, c-1 = {:.6}, remainder traces {:.1e} {:.1e}", r.c1, r.cm1, r.residual_traces.0, r.residual_traces.1);

    let probes: Vec<f64> = (0..10).map(|k| -2.0 + 4.0 * k as f64 / 9.0).collect();
    let maps: [(&str, &dyn Fn(f64) -> f64); 4] = [
        ("g = 0", &|_| 0.0),
        ("g = x/2", &|x| 0.5 * x),
        ("g = x", &|x| x),
        ("g = clamp", &|x: f64| x.clamp(-0.5, 0.5)),
    ];
    for (name, g) in maps {
        let h = derive_h_from_g(iv, g, &probes, 3)?;
        println!(
            "{name:<10} spread {:.1e}, graph-norm ratio {:.6}, h(2) = {:+.6}",
            h.spread, h.max_contraction_ratio, h.h.last().unwrap()
        );
    }
    Ok(())
}
