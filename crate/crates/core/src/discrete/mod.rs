//! Collocation discretization of `A` with boundary conditions.
//!
//! Grid vectors are node-major: entry `i·d + c` is component `c` at node `i`.
//! On Legendre–Gauss–Lobatto nodes the quadrature is exact to degree
//! `2N − 3`, which makes `⟨A_h u, u⟩_G = ½(‖F₁u‖² − ‖F₂u‖²)` an exact
//! algebraic identity for every grid vector, not just in the limit.

mod certify;
mod grid;
mod oracle;
mod resolvent;

pub use certify::{certify_accretive, certify_m_accretive, CertifyMode};
pub use grid::CollocationGrid;
pub use oracle::{derive_h_from_g, exp_taylor, std_system_oracle_d1, HSample, OracleResult};
pub use resolvent::{resolvent_solve, Resolvent};

use crate::bcspec::{as_g, BcError, BoundaryCondition, GFn};
use crate::funcspace::PolyFunction;
use crate::matnum::{dot, spectral_norm, Mat, MatError};
use crate::phs::{PhsError, PhsSystem, QSplit};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiscreteError {
    #[error("grid of {n_nodes} nodes is too coarse; need at least {min}")]
    GridTooCoarse { n_nodes: usize, min: usize },
    #[error("fixed-point iteration did not converge after {iterations} iterations (step {step:e})")]
    NotConverged { iterations: usize, step: f64 },
    #[error("singular system: {0}")]
    SingularSystem(MatError),
    #[error("μ must be positive and finite, got {0}")]
    BadShift(f64),
    #[error("grid vector has length {found}, expected {expected}")]
    BadLength { expected: usize, found: usize },
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error(transparent)]
    Phs(#[from] PhsError),
    #[error(transparent)]
    Bc(#[from] BcError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Linear constraint `C u = 0` or the nonlinear relation `g(F₁u) = F₂u`.
#[derive(Clone)]
pub enum Constraint {
    Linear(Mat),
    Nonlinear(GFn),
}

#[derive(Clone)]
pub struct DiscreteOperator {
    pub grid: CollocationGrid,
    pub sys: PhsSystem,
    pub qs: QSplit,
    pub bc: BoundaryCondition,
    /// `Σₖ (Dᵏ ⊗ Pₖ) · blockdiag 𝓗(xᵢ)`.
    pub a_h: Mat,
    /// `blockdiag wᵢ 𝓗(xᵢ)`.
    pub gram: Mat,
    /// `blockdiag 𝓗(xᵢ)`.
    pub ham: Mat,
    pub tr_b: Mat,
    pub tr_a: Mat,
    pub f1: Mat,
    pub f2: Mat,
    pub constraint: Constraint,
}

impl std::fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteOperator")
            .field("nodes", &self.grid.len())
            .field("n", &self.sys.order())
            .field("d", &self.sys.dim())
            .field("bc", &self.bc)
            .finish()
    }
}

pub fn discretize(
    sys: &PhsSystem,
    qs: &QSplit,
    bc: &BoundaryCondition,
    n_nodes: usize,
) -> Result<DiscreteOperator, DiscreteError> {
    let (n, d) = (sys.order(), sys.dim());
    let min = 2 * n + 2;
    if n_nodes < min {
        return Err(DiscreteError::GridTooCoarse { n_nodes, min });
    }
    let nd = n * d;
    if qs.dim() != nd {
        return Err(BcError::DimensionMismatch {
            expected: (nd, nd),
            found: (qs.dim(), qs.dim()),
        }
        .into());
    }
    let grid = CollocationGrid::lobatto(n_nodes, sys.interval());
    sys.hamiltonian().check_nodes(&grid.nodes)?;

    let size = n_nodes * d;
    let mut ham = Mat::zeros(size, size);
    let mut gram = Mat::zeros(size, size);
    for (i, (&x, &w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
        let h = sys.hamiltonian().eval(x);
        ham.set_block(i * d, i * d, &h);
        gram.set_block(i * d, i * d, &h.scale(w));
    }

    let mut flat = Mat::zeros(size, size);
    let mut dk = Mat::identity(n_nodes);
    let mut tr_b = Mat::zeros(nd, size);
    let mut tr_a = Mat::zeros(nd, size);
    let eye = Mat::identity(d);
    for (k, pk) in sys.coefficients().iter().enumerate() {
        if k > 0 {
            dk = grid.d.matmul(&dk);
        }
        flat = &flat + &dk.kron(pk);
        if k < n {
            // rows of Dᵏ at the endpoints give the k-th derivative traces
            let row_a = Mat::new(1, n_nodes, dk.row(0).to_vec())?;
            let row_b = Mat::new(1, n_nodes, dk.row(n_nodes - 1).to_vec())?;
            tr_a.set_block(k * d, 0, &row_a.kron(&eye));
            tr_b.set_block(k * d, 0, &row_b.kron(&eye));
        }
    }
    let a_h = flat.matmul(&ham);
    let tr_b = tr_b.matmul(&ham);
    let tr_a = tr_a.matmul(&ham);
    let f1 = &qs.q_plus.matmul(&tr_b) + &qs.q_minus.matmul(&tr_a);
    let f2 = &qs.q_minus.matmul(&tr_b) + &qs.q_plus.matmul(&tr_a);

    let constraint = match bc {
        BoundaryCondition::LinearM { m } => {
            if m.shape() != (nd, nd) {
                return Err(BcError::DimensionMismatch {
                    expected: (nd, nd),
                    found: m.shape(),
                }
                .into());
            }
            Constraint::Linear(&f2 - &m.matmul(&f1))
        }
        BoundaryCondition::KernelW { w } => {
            if w.shape() != (nd, 2 * nd) {
                return Err(BcError::DimensionMismatch {
                    expected: (nd, 2 * nd),
                    found: w.shape(),
                }
                .into());
            }
            Constraint::Linear(w.matmul(&tr_b.vcat(&tr_a)))
        }
        BoundaryCondition::NonlinearG { .. } => {
            let g = as_g(qs, bc).expect("nonlinear form carries g");
            let probe = g(&vec![0.0; nd]);
            if probe.len() != nd {
                return Err(BcError::DimensionMismatch {
                    expected: (nd, 1),
                    found: (probe.len(), 1),
                }
                .into());
            }
            Constraint::Nonlinear(g)
        }
    };

    Ok(DiscreteOperator {
        grid,
        sys: sys.clone(),
        qs: qs.clone(),
        bc: bc.clone(),
        a_h,
        gram,
        ham,
        tr_b,
        tr_a,
        f1,
        f2,
        constraint,
    })
}

impl DiscreteOperator {
    pub fn size(&self) -> usize {
        self.a_h.rows()
    }

    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    pub fn boundary_dim(&self) -> usize {
        self.qs.dim()
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.constraint, Constraint::Linear(_))
    }

    pub fn check_len(&self, u: &[f64]) -> Result<(), DiscreteError> {
        if u.len() != self.size() {
            return Err(DiscreteError::BadLength {
                expected: self.size(),
                found: u.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.a_h.matvec(u)
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(&self.gram.matvec(u), v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    pub fn boundary_values(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.f1.matvec(u), self.f2.matvec(u))
    }

    /// `‖F₁u‖² − ‖F₂u‖²`, the energy leaving through the boundary.
    pub fn boundary_flux(&self, u: &[f64]) -> f64 {
        let (f1, f2) = self.boundary_values(u);
        dot(&f1, &f1) - dot(&f2, &f2)
    }

    /// `g(F₁u) − F₂u`, or `Cu` in linear form.
    pub fn constraint_residual(&self, u: &[f64]) -> Vec<f64> {
        match &self.constraint {
            Constraint::Linear(c) => c.matvec(u),
            Constraint::Nonlinear(g) => {
                let (f1, f2) = self.boundary_values(u);
                crate::matnum::sub_vec(&g(&f1), &f2)
            }
        }
    }

    /// Penalty boundary term `G⁻¹F₂ᵀ(F₂u − g(F₁u))` applied through `G`:
    /// returns `F₂ᵀ(F₂u − g(F₁u))`.
    fn penalty_rhs(&self, u: &[f64]) -> Vec<f64> {
        match &self.constraint {
            Constraint::Linear(_) => vec![0.0; self.size()],
            Constraint::Nonlinear(g) => {
                let (f1, f2) = self.boundary_values(u);
                let r = crate::matnum::sub_vec(&f2, &g(&f1));
                self.f2.matvec_t(&r)
            }
        }
    }

    /// `⟨B_h u, v⟩_G`; on the constraint manifold this is `⟨A_h u, v⟩_G`.
    pub fn b_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.inner(&self.apply(u), v) + dot(&self.penalty_rhs(u), v)
    }

    /// `B_h u = A_h u + G⁻¹F₂ᵀ(F₂u − g(F₁u))`; equals `A_h u` for linear conditions.
    pub fn b_apply(&self, u: &[f64]) -> Result<Vec<f64>, DiscreteError> {
        let mut out = self.apply(u);
        if let Constraint::Nonlinear(_) = self.constraint {
            let p = crate::matnum::solve(&self.gram, &self.penalty_rhs(u))
                .map_err(DiscreteError::SingularSystem)?;
            for (o, q) in out.iter_mut().zip(p) {
                *o += q;
            }
        }
        Ok(out)
    }

    /// Node values of a polynomial function, node-major.
    pub fn sample(&self, u: &PolyFunction) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.size()];
        for (i, &x) in self.grid.nodes.iter().enumerate() {
            for (c, p) in u.components.iter().enumerate().take(d) {
                out[i * d + c] = p.eval(x);
            }
        }
        out
    }

    /// `‖Q‖ · max ‖𝓗‖ / (b − a)`, the natural size of `A_h` on unit data.
    pub fn scale(&self) -> f64 {
        let (a, b) = self.sys.interval();
        let qn = spectral_norm(&self.qs.q).unwrap_or(1.0);
        let hmax = self
            .grid
            .nodes
            .iter()
            .map(|&x| spectral_norm(&self.sys.hamiltonian().eval(x)).unwrap_or(1.0))
            .fold(0.0_f64, f64::max);
        qn * hmax / (b - a)
    }

    /// Accretivity tolerance `10 N⁻² · scale`.
    pub fn tolerance(&self) -> f64 {
        let n = self.grid.len() as f64;
        10.0 / (n * n) * self.scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::apply_a;
    use crate::matnum::{norm2, sub_vec, Poly1};
    use crate::phs::{build_q, split_q, HamiltonianDensity};

    pub(crate) fn beam(interval: (f64, f64)) -> PhsSystem {
        let p2 = Mat::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        PhsSystem::new(
            2,
            2,
            vec![Mat::zeros(2, 2), Mat::zeros(2, 2), p2],
            interval,
            HamiltonianDensity::identity(2),
        )
        .unwrap()
    }

    fn op_for(sys: &PhsSystem, bc: BoundaryCondition, n: usize) -> DiscreteOperator {
        let qs = split_q(&build_q(sys)).unwrap();
        discretize(sys, &qs, &bc, n).unwrap()
    }

    #[test]
    fn transport_operator_is_differentiation_matrix() {
        let sys = PhsSystem::transport((0.0, 1.0));
        let op = op_for(&sys, BoundaryCondition::LinearM { m: Mat::zeros(1, 1) }, 16);
        assert_eq!(op.a_h, op.grid.d);
    }

    #[test]
    fn beam_matches_exact_operator() {
        let sys = beam((0.0, 1.0));
        let op = op_for(&sys, BoundaryCondition::LinearM { m: Mat::zeros(4, 4) }, 24);
        let u = PolyFunction::new(vec![Poly1::new(vec![0.0, 0.0, 1.0]), Poly1::zero()], (0.0, 1.0));
        let exact = op.sample(&apply_a(&sys, &u).unwrap());
        let got = op.apply(&op.sample(&u));
        assert!(norm2(&sub_vec(&got, &exact)) < 1e-6);
    }

    #[test]
    fn weighting_scales_operator() {
        let sys = PhsSystem::transport((0.0, 1.0));
        let sys2 = sys
            .with_hamiltonian(HamiltonianDensity::constant(Mat::from_diag(&[2.0])).unwrap())
            .unwrap();
        let bc = BoundaryCondition::LinearM { m: Mat::zeros(1, 1) };
        let a1 = op_for(&sys, bc.clone(), 12).a_h;
        let a2 = op_for(&sys2, bc, 12).a_h;
        assert!((&a2 - &a1.scale(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        let sys = beam((0.0, 1.0));
        let qs = split_q(&build_q(&sys)).unwrap();
        let bc = BoundaryCondition::LinearM { m: Mat::zeros(4, 4) };
        assert_eq!(
            discretize(&sys, &qs, &bc, 5).unwrap_err(),
            DiscreteError::GridTooCoarse { n_nodes: 5, min: 6 }
        );
    }

    #[test]
    fn discrete_green_identity_is_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for sys in [PhsSystem::transport((-0.5, 1.0)), beam((0.0, 1.0))] {
            let op = op_for(&sys, BoundaryCondition::LinearM { m: Mat::zeros(sys.order() * sys.dim(), sys.order() * sys.dim()) }, 20);
            let u: Vec<f64> = (0..op.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = 2.0 * op.inner(&op.apply(&u), &u);
            let rhs = op.boundary_flux(&u);
            let scale = norm2(&op.apply(&u)) * norm2(&u) + rhs.abs();
            assert!((lhs - rhs).abs() <= 1e-10 * scale, "{lhs} vs {rhs}");
        }
    }

    mod props {
        use super::super::*;
        use crate::funcspace::apply_a;
        use crate::matnum::{norm2, sub_vec, Poly1};
        use crate::phs::{build_q, random_system, split_q};
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn grid_matches_exact_operator(seed in any::<u64>(), n in 1usize..=2, d in 1usize..=2, deg in 0usize..=8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let iv = (0.0, 1.0);
                let sys = random_system(&mut rng, n, d, iv, 1.0);
                let qs = split_q(&build_q(&sys)).unwrap();
                let nd = qs.dim();
                let bc = BoundaryCondition::LinearM { m: Mat::zeros(nd, nd) };
                let n_nodes = 24;
                let op = discretize(&sys, &qs, &bc, n_nodes).unwrap();
                let u = PolyFunction::new(
                    (0..sys.dim())
                        .map(|_| Poly1::new((0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect()))
                        .collect(),
                    iv,
                );
                let exact = op.sample(&apply_a(&sys, &u).unwrap());
                let got = op.apply(&op.sample(&u));
                let err = norm2(&sub_vec(&got, &exact)) / (1.0 + norm2(&exact));
                prop_assert!(err <= 1e-6, "{err}");
            }
        }
    }
}
