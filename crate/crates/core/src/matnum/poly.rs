use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Real polynomial in the monomial basis, lowest degree first.
///
/// Trailing zero coefficients are trimmed on construction, so the zero
/// polynomial is represented by an empty coefficient list.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Poly1 {
    coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly1 { coeffs }
    }

    pub fn zero() -> Self {
        Poly1 { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Poly1::new(vec![c])
    }

    /// The identity polynomial `t`.
    pub fn monomial_t() -> Self {
        Poly1::new(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// k-th derivative evaluated at `t` by Horner on the scaled coefficients.
    pub fn eval_derivative(&self, k: usize, t: f64) -> f64 {
        if k >= self.coeffs.len() {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in (k..self.coeffs.len()).rev() {
            acc = acc * t + self.coeffs[j] * falling(j, k);
        }
        acc
    }

    pub fn derivative(&self) -> Poly1 {
        if self.coeffs.len() <= 1 {
            return Poly1::zero();
        }
        Poly1::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| c * j as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, k: usize) -> Poly1 {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: f64) -> Poly1 {
        Poly1::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `p(α + β t)` expanded in the monomial basis of `t`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Poly1 {
        let lin = Poly1::new(vec![alpha, beta]);
        self.coeffs
            .iter()
            .rev()
            .fold(Poly1::zero(), |acc, &c| &(&acc * &lin) + &Poly1::constant(c))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

/// j·(j−1)···(j−k+1)
fn falling(j: usize, k: usize) -> f64 {
    ((j - k + 1)..=j).fold(1.0, |acc, m| acc * m as f64)
}

impl From<Vec<f64>> for Poly1 {
    fn from(c: Vec<f64>) -> Self {
        Poly1::new(c)
    }
}

impl From<Poly1> for Vec<f64> {
    fn from(p: Poly1) -> Self {
        p.coeffs
    }
}

impl<'a> Add<&'a Poly1> for &'a Poly1 {
    type Output = Poly1;
    fn add(self, rhs: &Poly1) -> Poly1 {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly1::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl<'a> Sub<&'a Poly1> for &'a Poly1 {
    type Output = Poly1;
    fn sub(self, rhs: &Poly1) -> Poly1 {
        self + &rhs.scale(-1.0)
    }
}

impl<'a> Mul<&'a Poly1> for &'a Poly1 {
    type Output = Poly1;
    fn mul(self, rhs: &Poly1) -> Poly1 {
        if self.is_zero() || rhs.is_zero() {
            return Poly1::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly1::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_trimmed() {
        assert!(Poly1::new(vec![0.0, 0.0]).is_zero());
        assert_eq!(Poly1::new(vec![1.0, 2.0, 0.0]).degree(), 1);
    }

    #[test]
    fn derivative_eval_matches_symbolic() {
        let p = Poly1::new(vec![0.0, 0.0, 3.0, -2.0]);
        for k in 0..5 {
            let sym = p.nth_derivative(k).eval(0.7);
            assert!((p.eval_derivative(k, 0.7) - sym).abs() < 1e-14);
        }
        assert_eq!(p.eval_derivative(1, 1.0), 0.0);
    }

    #[test]
    fn affine_composition() {
        // p(s) = s², s = 2 + 3t  =>  4 + 12t + 9t²
        let p = Poly1::new(vec![0.0, 0.0, 1.0]);
        assert_eq!(p.compose_affine(2.0, 3.0).coeffs(), &[4.0, 12.0, 9.0]);
    }
}
