//! Standard boundary system of the scalar derivative `A = d/dt`.
//!
//! `ker(1 − A) = span{eᵗ}` and `ker(1 + A) = span{e⁻ᵗ}`; every `u ∈ H¹`
//! splits as `c₁eᵗ + c₋₁e⁻ᵗ + r` with `r ∈ H¹₀`, orthogonally in the graph
//! inner product `⟨u, v⟩_A = ⟨u, v⟩ + ⟨u′, v′⟩`.

use crate::funcspace::PolyFunction;
use crate::matnum::{Poly1, QuadRule};

use super::DiscreteError;

const TAYLOR_DEGREE: usize = 30;

/// Degree-30 Taylor polynomial of `e^{sign·t}` about the interval midpoint.
pub fn exp_taylor(sign: f64, (a, b): (f64, f64)) -> Poly1 {
    let m = 0.5 * (a + b);
    let mut coeffs = Vec::with_capacity(TAYLOR_DEGREE + 1);
    let mut term = (sign * m).exp();
    for k in 0..=TAYLOR_DEGREE {
        coeffs.push(term);
        term *= sign / (k + 1) as f64;
    }
    // expansion in (t − m)
    Poly1::new(coeffs).compose_affine(-m, 1.0)
}

fn graph_inner(p: &Poly1, q: &Poly1, interval: (f64, f64)) -> f64 {
    let rule = QuadRule::for_degree(p.degree() + q.degree() + 1, interval);
    let (dp, dq) = (p.derivative(), q.derivative());
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| w * (p.eval(t) * q.eval(t) + dp.eval(t) * dq.eval(t)))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub c1: f64,
    pub cm1: f64,
    /// `(r(a), r(b))` for `r = u − c₁eᵗ − c₋₁e⁻ᵗ`.
    pub residual_traces: (f64, f64),
}

pub fn std_system_oracle_d1(interval: (f64, f64), u: &PolyFunction) -> OracleResult {
    let p = u.components.first().cloned().unwrap_or_default();
    let ep = exp_taylor(1.0, interval);
    let em = exp_taylor(-1.0, interval);
    let c1 = graph_inner(&p, &ep, interval) / graph_inner(&ep, &ep, interval);
    let cm1 = graph_inner(&p, &em, interval) / graph_inner(&em, &em, interval);
    let r = |t: f64| p.eval(t) - c1 * ep.eval(t) - cm1 * em.eval(t);
    OracleResult {
        c1,
        cm1,
        residual_traces: (r(interval.0), r(interval.1)),
    }
}

/// The sampled map `h` with `h(π₁u) = π₋₁u` on `dom(B)`.
#[derive(Clone, Debug)]
pub struct HSample {
    pub probes: Vec<f64>,
    pub h: Vec<f64>,
    /// Largest spread of `π₋₁u` across constructions with equal `π₁u`.
    pub spread: f64,
    pub constructions: usize,
    /// Largest `‖Δ(π₋₁u)‖_A / ‖Δ(π₁u)‖_A` over probe pairs.
    pub max_contraction_ratio: f64,
}

impl HSample {
    pub fn well_defined(&self, tol: f64) -> bool {
        self.spread <= tol
    }

    pub fn is_contraction(&self) -> bool {
        self.max_contraction_ratio <= 1.0 + 1e-9
    }
}

/// Interior shape number `j`, vanishing at both endpoints.
fn bump(j: usize, (a, b): (f64, f64)) -> Poly1 {
    if j == 0 {
        return Poly1::zero();
    }
    let h = b - a;
    let base = Poly1::new(vec![-a * b, a + b, -1.0]); // (t − a)(b − t)
    let s = Poly1::new(vec![-a / h, 1.0 / h]);
    let shape = (1..j).fold(Poly1::constant(1.0), |acc, _| &acc * &s);
    let amp = if j % 2 == 0 { -0.8 } else { 1.3 } * j as f64;
    (&base * &shape).scale(amp)
}

/// For each probe `c`, builds several `u` with `u(a) = g(u(b))` and
/// `π₁u = c·eᵗ`, and records `π₋₁u`.
pub fn derive_h_from_g(
    interval: (f64, f64),
    g: &dyn Fn(f64) -> f64,
    probes: &[f64],
    constructions: usize,
) -> Result<HSample, DiscreteError> {
    let (a, b) = interval;
    let constructions = constructions.max(1);
    let mut h = Vec::with_capacity(probes.len());
    let mut spread = 0.0_f64;
    for &c in probes {
        let mut values = Vec::with_capacity(constructions);
        for j in 0..constructions {
            let shape = bump(j, interval);
            let build = |beta: f64| {
                let ya = g(beta);
                let lin = Poly1::new(vec![(b * ya - a * beta) / (b - a), (beta - ya) / (b - a)]);
                PolyFunction::scalar(&lin + &shape, interval)
            };
            let beta = increasing_root(|beta| std_system_oracle_d1(interval, &build(beta)).c1 - c)
                .ok_or_else(|| {
                    DiscreteError::ConstructionFailed(format!("no root for probe {c}"))
                })?;
            values.push(std_system_oracle_d1(interval, &build(beta)).cm1);
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
        h.push(values[0]);
    }
    let norm_p = ((2.0 * b).exp() - (2.0 * a).exp()).sqrt();
    let norm_m = ((-2.0 * a).exp() - (-2.0 * b).exp()).sqrt();
    let mut ratio = 0.0_f64;
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            let dc = (probes[i] - probes[j]).abs();
            if dc > 0.0 {
                ratio = ratio.max((h[i] - h[j]).abs() * norm_m / (dc * norm_p));
            }
        }
    }
    Ok(HSample {
        probes: probes.to_vec(),
        h,
        spread,
        constructions,
        max_contraction_ratio: ratio,
    })
}

/// Root of an increasing function by bracket expansion and bisection.
fn increasing_root(f: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut expansions = 0;
    while f(lo) > 0.0 {
        lo *= 2.0;
        expansions += 1;
        if expansions > 80 {
            return None;
        }
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 160 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_one(a: f64, b: f64) -> (f64, f64) {
        let s = a.exp() + b.exp();
        (1.0 / s, (a + b).exp() / s)
    }

    #[test]
    fn eigenfunctions_decouple() {
        let iv = (-0.5, 1.0);
        let r = std_system_oracle_d1(iv, &PolyFunction::scalar(exp_taylor(1.0, iv), iv));
        assert!((r.c1 - 1.0).abs() < 1e-12 && r.cm1.abs() < 1e-12);
        let r = std_system_oracle_d1(iv, &PolyFunction::scalar(exp_taylor(-1.0, iv), iv));
        assert!(r.c1.abs() < 1e-12 && (r.cm1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_function_closed_form() {
        for iv in [(0.0, 1.0), (-1.0, 2.0), (-2.0, 2.0)] {
            let r = std_system_oracle_d1(iv, &PolyFunction::scalar(Poly1::constant(1.0), iv));
            let (c1, cm1) = closed_form_one(iv.0, iv.1);
            assert!((r.c1 - c1).abs() < 1e-10 && (r.cm1 - cm1).abs() < 1e-10);
            assert!(r.residual_traces.0.abs() < 1e-10 && r.residual_traces.1.abs() < 1e-10);
        }
    }

    #[test]
    fn zero_probe_maps_to_zero() {
        let s = derive_h_from_g((0.0, 1.0), &|x| 0.5 * x, &[0.0], 3).unwrap();
        assert!(s.h[0].abs() < 1e-12);
    }

    #[test]
    fn identity_feedback_gives_linear_h() {
        let probes: Vec<f64> = (0..10).map(|k| -1.0 + 0.25 * k as f64).collect();
        let s = derive_h_from_g((0.0, 1.0), &|x| x, &probes, 3).unwrap();
        assert!(s.well_defined(1e-6), "{}", s.spread);
        let slope = s.h[1] / probes[1];
        for (c, h) in probes.iter().zip(&s.h) {
            assert!((h - slope * c).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_feedback_contracts_by_known_factor() {
        // g = 0 gives |Δh|·‖e⁻ᵗ‖_A / (|Δc|·‖eᵗ‖_A) = e^{a−b}
        let probes = [-1.0, 0.3, 2.0];
        let s = derive_h_from_g((0.0, 1.0), &|_| 0.0, &probes, 3).unwrap();
        assert!(s.is_contraction());
        assert!((s.max_contraction_ratio - (-1.0f64).exp()).abs() < 1e-9);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn decomposition_residual_is_in_h01(
                coeffs in proptest::collection::vec(-1.0f64..1.0, 1..=11),
                a in -1.0f64..0.0,
                len in 0.5f64..2.0,
            ) {
                let iv = (a, a + len);
                let r = std_system_oracle_d1(iv, &PolyFunction::scalar(Poly1::new(coeffs), iv));
                prop_assert!(r.residual_traces.0.abs() <= 1e-8);
                prop_assert!(r.residual_traces.1.abs() <= 1e-8);
            }

            #[test]
            fn standard_green_identity(
                cu in proptest::collection::vec(-1.0f64..1.0, 1..=8),
                cv in proptest::collection::vec(-1.0f64..1.0, 1..=8),
            ) {
                let iv = (-0.5, 1.0);
                let (p, q) = (Poly1::new(cu), Poly1::new(cv));
                let lhs = {
                    let rule = QuadRule::for_degree(p.degree() + q.degree() + 1, iv);
                    let (dp, dq) = (p.derivative(), q.derivative());
                    rule.nodes.iter().zip(&rule.weights)
                        .map(|(&t, &w)| w * (dp.eval(t) * q.eval(t) + p.eval(t) * dq.eval(t)))
                        .sum::<f64>()
                };
                let ru = std_system_oracle_d1(iv, &PolyFunction::scalar(p, iv));
                let rv = std_system_oracle_d1(iv, &PolyFunction::scalar(q, iv));
                let np = (2.0f64).exp() - (-1.0f64).exp();
                let nm = (1.0f64).exp() - (-2.0f64).exp();
                let rhs = ru.c1 * rv.c1 * np - ru.cm1 * rv.cm1 * nm;
                prop_assert!((lhs - rhs).abs() <= 1e-8, "{lhs} vs {rhs}");
            }
        }
    }
}
