use crate::bcspec::GFn;
use crate::matnum::{add_vec, norm2, sub_vec, Lu, Mat};

use super::{Constraint, DiscreteError, DiscreteOperator};

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_CAP: usize = 10_000;

enum Kind {
    /// `[[μG + GA_h, Cᵀ], [C, 0]]`: Galerkin on `ker C`.
    Linear { lu: Lu },
    /// `(μG + GA_h + F₂ᵀF₂)⁻¹` plus the boundary feedback through `g`.
    Nonlinear { lu: Lu, kmat: Mat, t: Mat, g: GFn },
}

/// Factored `(μ + B_h)⁻¹`, reusable across right-hand sides.
pub struct Resolvent<'a> {
    op: &'a DiscreteOperator,
    mu: f64,
    kind: Kind,
}

#[derive(Clone, Debug)]
pub struct ResolventSolution {
    pub u: Vec<f64>,
    pub iterations: usize,
}

impl<'a> Resolvent<'a> {
    pub fn new(op: &'a DiscreteOperator, mu: f64) -> Result<Self, DiscreteError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(DiscreteError::BadShift(mu));
        }
        let base = &op.gram.scale(mu) + &op.gram.matmul(&op.a_h);
        let kind = match &op.constraint {
            Constraint::Linear(c) => {
                let size = op.size();
                let r = c.rows();
                // equilibrate the constraint rows; only the multiplier is rescaled
                let s = base.norm_fro() / c.norm_fro().max(f64::MIN_POSITIVE);
                let cs = c.scale(s);
                let mut kkt = Mat::zeros(size + r, size + r);
                kkt.set_block(0, 0, &base);
                kkt.set_block(0, size, &cs.transpose());
                kkt.set_block(size, 0, &cs);
                let lu = Lu::factor(&kkt).map_err(DiscreteError::SingularSystem)?;
                Kind::Linear { lu }
            }
            Constraint::Nonlinear(g) => {
                let l = &base + &op.f2.transpose().matmul(&op.f2);
                let lu = Lu::factor(&l).map_err(DiscreteError::SingularSystem)?;
                let kmat = lu.solve_mat(&op.f2.transpose());
                let t = op.f1.matmul(&kmat);
                Kind::Nonlinear {
                    lu,
                    kmat,
                    t,
                    g: g.clone(),
                }
            }
        };
        Ok(Resolvent { op, mu, kind })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>, DiscreteError> {
        self.solve_detailed(f).map(|s| s.u)
    }

    pub fn solve_detailed(&self, f: &[f64]) -> Result<ResolventSolution, DiscreteError> {
        self.op.check_len(f)?;
        let gf = self.op.gram.matvec(f);
        match &self.kind {
            Kind::Linear { lu } => {
                let mut rhs = gf;
                rhs.resize(lu.dim(), 0.0);
                let mut x = lu.solve(&rhs);
                x.truncate(self.op.size());
                Ok(ResolventSolution { u: x, iterations: 0 })
            }
            Kind::Nonlinear { lu, kmat, t, g } => {
                let u0 = lu.solve(&gf);
                let c = self.op.f1.matvec(&u0);
                let (p, iterations) = boundary_fixed_point(&c, t, g.as_ref())?;
                let u = add_vec(&u0, &kmat.matvec(&g(&p)));
                Ok(ResolventSolution { u, iterations })
            }
        }
    }

    /// `T = F₁ (μG + GA_h + F₂ᵀF₂)⁻¹ F₂ᵀ`; `‖T‖ < 1` for every `μ > 0`.
    pub fn feedback_matrix(&self) -> Option<&Mat> {
        match &self.kind {
            Kind::Nonlinear { t, .. } => Some(t),
            Kind::Linear { .. } => None,
        }
    }
}

/// Solves `p = c + T g(p)`, switching to averaged steps if plain iteration stalls.
fn boundary_fixed_point(
    c: &[f64],
    t: &Mat,
    g: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync),
) -> Result<(Vec<f64>, usize), DiscreteError> {
    let mut p = c.to_vec();
    let mut averaged = false;
    let mut prev = f64::INFINITY;
    let mut step = f64::INFINITY;
    for it in 1..=FIXED_POINT_CAP {
        let tp = add_vec(c, &t.matvec(&g(&p)));
        step = norm2(&sub_vec(&tp, &p));
        if !step.is_finite() {
            break;
        }
        if step <= FIXED_POINT_TOL * (1.0 + norm2(&p)) {
            return Ok((tp, it));
        }
        if !averaged && step >= prev {
            averaged = true;
        }
        p = if averaged {
            p.iter().zip(&tp).map(|(a, b)| 0.5 * (a + b)).collect()
        } else {
            tp
        };
        prev = step;
    }
    Err(DiscreteError::NotConverged {
        iterations: FIXED_POINT_CAP,
        step,
    })
}

pub fn resolvent_solve(
    op: &DiscreteOperator,
    mu: f64,
    f: &[f64],
) -> Result<Vec<f64>, DiscreteError> {
    Resolvent::new(op, mu)?.solve(f)
}
