//! Lipschitz extension of finite sample data.
//!
//! Given pairs `(xᵢ, yᵢ)` with `‖yᵢ − yⱼ‖ ≤ L‖xᵢ − xⱼ‖`, a value at a new
//! point `x` is any `y` in the intersection of the balls
//! `B(yᵢ, L‖x − xᵢ‖)`. Kirszbraun's theorem guarantees the intersection is
//! nonempty, so `φ(y) = maxᵢ(‖y − yᵢ‖ − L‖x − xᵢ‖)` has minimum `≤ 0`.

use crate::bcspec::{Verdict, VerificationReport};
use crate::matnum::{norm2, sub_vec};

/// Pairwise tolerance accepted on construction.
pub const SAMPLE_TOL: f64 = 1e-9;
/// Feasibility accepted from [`extend`].
pub const EXTEND_TOL: f64 = 1e-6;
const TARGET: f64 = 1e-10;
const MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KirszbraunError {
    #[error("samples violate the Lipschitz bound: pair ({i}, {j}) excess {excess:e}")]
    InvalidSamples { i: usize, j: usize, excess: f64 },
    #[error("no samples")]
    Empty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("L must be positive and finite, got {0}")]
    BadConstant(f64),
    #[error("extension did not converge: φ = {phi:e} after {iterations} iterations")]
    NotConverged { phi: f64, iterations: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    points: Vec<(Vec<f64>, Vec<f64>)>,
    lip: f64,
}

impl SampleSet {
    pub fn new(points: Vec<(Vec<f64>, Vec<f64>)>, lip: f64) -> Result<Self, KirszbraunError> {
        Self::with_tolerance(points, lip, SAMPLE_TOL)
    }

    /// Validates against a custom pairwise tolerance.
    pub fn with_tolerance(
        points: Vec<(Vec<f64>, Vec<f64>)>,
        lip: f64,
        tol: f64,
    ) -> Result<Self, KirszbraunError> {
        if !(lip > 0.0 && lip.is_finite()) {
            return Err(KirszbraunError::BadConstant(lip));
        }
        let Some((x0, y0)) = points.first() else {
            return Err(KirszbraunError::Empty);
        };
        let (p, q) = (x0.len(), y0.len());
        if points.iter().any(|(x, y)| x.len() != p || y.len() != q) {
            return Err(KirszbraunError::DimensionMismatch(
                "all samples must share dimensions".into(),
            ));
        }
        if let Some((i, j, excess)) = worst_pair(&points, lip).filter(|w| w.2 > tol) {
            return Err(KirszbraunError::InvalidSamples { i, j, excess });
        }
        Ok(SampleSet { points, lip })
    }

    pub fn points(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.points
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.points[0].0.len()
    }
}

/// Pair with the largest `‖yᵢ − yⱼ‖ − L‖xᵢ − xⱼ‖`.
fn worst_pair(points: &[(Vec<f64>, Vec<f64>)], lip: f64) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = norm2(&sub_vec(&points[i].0, &points[j].0));
            let dy = norm2(&sub_vec(&points[i].1, &points[j].1));
            let excess = dy - lip * dx;
            if worst.map_or(true, |w| excess > w.2) {
                worst = Some((i, j, excess));
            }
        }
    }
    worst
}

pub fn validate_samples(points: &[(Vec<f64>, Vec<f64>)], lip: f64) -> VerificationReport {
    validate_samples_tol(points, lip, SAMPLE_TOL)
}

pub fn validate_samples_tol(
    points: &[(Vec<f64>, Vec<f64>)],
    lip: f64,
    tol: f64,
) -> VerificationReport {
    match worst_pair(points, lip) {
        None => VerificationReport::new("samples_lipschitz", Verdict::Pass)
            .with_residual("max_excess", 0.0),
        Some((i, j, excess)) => {
            let ok = excess <= tol;
            let mut r = VerificationReport::new("samples_lipschitz", Verdict::from_bool(ok))
                .with_residual("max_excess", excess)
                .with_residual("tolerance", tol);
            if !ok {
                let (xi, yi) = &points[i];
                let (xj, yj) = &points[j];
                r = r
                    .with_witness("x_i", xi.clone())
                    .with_witness("y_i", yi.clone())
                    .with_witness("x_j", xj.clone())
                    .with_witness("y_j", yj.clone());
            }
            r
        }
    }
}

/// `φ(y)` together with the index of the most violated ball.
pub fn objective(s: &SampleSet, x: &[f64], y: &[f64]) -> (f64, usize) {
    s.points
        .iter()
        .enumerate()
        .map(|(i, (xi, yi))| {
            (norm2(&sub_vec(y, yi)) - s.lip * norm2(&sub_vec(x, xi)), i)
        })
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
}

/// Start point: `yᵢ` weighted by `1 / (L‖x − xᵢ‖ + 1e-12)`.
pub fn barycenter(s: &SampleSet, x: &[f64]) -> Vec<f64> {
    let q = s.points[0].1.len();
    let mut acc = vec![0.0; q];
    let mut total = 0.0;
    for (xi, yi) in &s.points {
        let w = 1.0 / (s.lip * norm2(&sub_vec(x, xi)) + 1e-12);
        total += w;
        for (a, b) in acc.iter_mut().zip(yi) {
            *a += w * b;
        }
    }
    acc.iter().map(|a| a / total).collect()
}

#[derive(Clone, Debug)]
pub struct Extension {
    pub y: Vec<f64>,
    pub phi: f64,
    pub phi_start: f64,
    pub iterations: usize,
}

/// Minimizes `φ` by subgradient steps with the Polyak length for target 0.
///
/// With optimum `≤ 0` the Polyak step `φ(y)/‖∂φ‖` moves `y` exactly onto the
/// most violated sphere, so every iterate is no farther from the feasible
/// set than the last.
pub fn extend_detailed(s: &SampleSet, x: &[f64]) -> Result<Extension, KirszbraunError> {
    if x.len() != s.input_dim() {
        return Err(KirszbraunError::DimensionMismatch(format!(
            "query has length {}, samples have {}",
            x.len(),
            s.input_dim()
        )));
    }
    let start = barycenter(s, x);
    let (phi_start, _) = objective(s, x, &start);
    let mut y = start.clone();
    let mut best = (phi_start, start);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let (phi, i) = objective(s, x, &y);
        if phi < best.0 {
            best = (phi, y.clone());
        }
        if phi <= TARGET {
            break;
        }
        let yi = &s.points[i].1;
        let diff = sub_vec(&y, yi);
        let dist = norm2(&diff);
        if dist == 0.0 {
            break;
        }
        // subgradient of ‖y − yᵢ‖ is the unit vector; its norm is 1
        for (yk, dk) in y.iter_mut().zip(&diff) {
            *yk -= phi * dk / dist;
        }
        iterations += 1;
    }
    let (phi, y) = best;
    if phi > EXTEND_TOL {
        return Err(KirszbraunError::NotConverged { phi, iterations });
    }
    Ok(Extension {
        y,
        phi,
        phi_start,
        iterations,
    })
}

pub fn extend(s: &SampleSet, x: &[f64]) -> Result<Vec<f64>, KirszbraunError> {
    extend_detailed(s, x).map(|e| e.y)
}

/// Extends at each query in turn, feeding every result back as a sample.
pub fn extend_sequential(
    s: &SampleSet,
    queries: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, KirszbraunError> {
    let mut work = s.clone();
    let mut out = Vec::with_capacity(queries.len());
    for x in queries {
        let y = extend(&work, x)?;
        work.points.push((x.clone(), y.clone()));
        out.push(y);
    }
    Ok(out)
}
