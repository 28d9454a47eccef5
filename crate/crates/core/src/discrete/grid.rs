use std::f64::consts::PI;

use crate::matnum::{legendre_with_derivative, Mat};

/// Legendre–Gauss–Lobatto nodes with quadrature weights and the
/// first-derivative matrix of the nodal interpolant.
#[derive(Clone, Debug)]
pub struct CollocationGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub d: Mat,
    pub interval: (f64, f64),
}

impl CollocationGrid {
    pub fn lobatto(count: usize, (a, b): (f64, f64)) -> Self {
        assert!(count >= 2, "Lobatto grids need both endpoints");
        let m = count - 1;
        let mf = m as f64;
        let mut x = vec![0.0; count];
        x[0] = -1.0;
        x[m] = 1.0;
        // interior nodes are the roots of P_m'; P_m'' from the Legendre ODE
        for j in 1..=(m / 2) {
            let mut t = -(PI * j as f64 / mf).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(m, t);
                let ddp = (2.0 * t * dp - mf * (mf + 1.0) * p) / (1.0 - t * t);
                let step = dp / ddp;
                t -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            x[j] = t;
            x[m - j] = -t;
        }
        if m % 2 == 0 {
            x[m / 2] = 0.0;
        }
        let p: Vec<f64> = x.iter().map(|&t| legendre_with_derivative(m, t).0).collect();
        let ref_w: Vec<f64> = p.iter().map(|pi| 2.0 / (mf * (mf + 1.0) * pi * pi)).collect();

        let half = 0.5 * (b - a);
        let mut d = Mat::zeros(count, count);
        for i in 0..count {
            let mut diag = 0.0;
            for j in 0..count {
                if i != j {
                    let v = p[i] / (p[j] * (x[i] - x[j])) / half;
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            // negative row sum keeps D·1 = 0 to rounding
            d[(i, i)] = diag;
        }
        CollocationGrid {
            nodes: x.iter().map(|t| a + half * (t + 1.0)).collect(),
            weights: ref_w.iter().map(|w| w * half).collect(),
            d,
            interval: (a, b),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matnum::Poly1;

    #[test]
    fn small_rules() {
        let g = CollocationGrid::lobatto(3, (-1.0, 1.0));
        assert_eq!(g.nodes, vec![-1.0, 0.0, 1.0]);
        for (w, e) in g.weights.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((w - e).abs() < 1e-15);
        }
        let g = CollocationGrid::lobatto(4, (-1.0, 1.0));
        let r = 0.2f64.sqrt();
        assert!((g.nodes[2] - r).abs() < 1e-15);
        assert!((g.weights[1] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_exact_to_2n_minus_3() {
        for count in [5, 12, 33] {
            let g = CollocationGrid::lobatto(count, (-0.3, 1.2));
            for deg in 0..=(2 * count - 3) {
                let got = g.integrate(&g.sample(|x| x.powi(deg as i32)));
                let k = deg as i32 + 1;
                let exact = (1.2f64.powi(k) - (-0.3f64).powi(k)) / k as f64;
                assert!((got - exact).abs() < 1e-13 * (1.0 + exact.abs()), "N={count} deg={deg}");
            }
        }
    }

    #[test]
    fn differentiation_is_exact_on_polynomials() {
        let count = 32;
        let g = CollocationGrid::lobatto(count, (-1.0, 1.0));
        let p = Poly1::new((0..count - 1).map(|k| ((k * 7 % 5) as f64 - 2.0) / 10.0).collect());
        let du = g.d.matvec(&g.sample(|x| p.eval(x)));
        let exact = g.sample(|x| p.eval_derivative(1, x));
        let err = du.iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{err}");
    }
}
