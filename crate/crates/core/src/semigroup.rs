//! Implicit Euler for `u′ = −B(u)` and the checks that certify its output.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::bcspec::{BoundaryCondition, Verdict, VerificationReport};
use crate::discrete::{DiscreteError, DiscreteOperator, Resolvent};
use crate::matnum::sub_vec;
use crate::phs::{HamiltonianDensity, PhsError, PhsSystem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemigroupError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("final time must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("trajectories differ in {0}")]
    MismatchedTrajectories(&'static str),
    #[error("step {step} failed: {source}")]
    StepFailed { step: usize, source: DiscreteError },
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
    #[error(transparent)]
    Phs(#[from] PhsError),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `‖u‖²_G` per recorded state.
    pub energies: Vec<f64>,
    /// `‖F₁u‖² − ‖F₂u‖²` per recorded state.
    pub boundary_flux: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, op: &DiscreteOperator, t: f64, u: Vec<f64>) {
        self.times.push(t);
        self.energies.push(op.inner(&u, &u));
        self.boundary_flux.push(op.boundary_flux(&u));
        self.states.push(u);
    }

    /// Header `time,energy,flux,u0,…` and one row per state, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let width = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("time,energy,flux");
        for i in 0..width {
            let _ = write!(out, ",u{i}");
        }
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.times[k], self.energies[k], self.boundary_flux[k]
            );
            for v in &self.states[k] {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Reusable implicit Euler step `u ↦ (1/dt + B_h)⁻¹(u/dt)`.
pub struct Stepper<'a> {
    res: Resolvent<'a>,
    dt: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a DiscreteOperator, dt: f64) -> Result<Self, SemigroupError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SemigroupError::BadStep(dt));
        }
        Ok(Stepper {
            res: Resolvent::new(op, 1.0 / dt)?,
            dt,
        })
    }

    pub fn step(&self, u: &[f64]) -> Result<Vec<f64>, SemigroupError> {
        let f: Vec<f64> = u.iter().map(|v| v / self.dt).collect();
        Ok(self.res.solve(&f)?)
    }
}

pub fn step_implicit(op: &DiscreteOperator, u: &[f64], dt: f64) -> Result<Vec<f64>, SemigroupError> {
    Stepper::new(op, dt)?.step(u)
}

/// Moves `u₀` onto the constraint manifold with one resolvent solve at large `μ`.
pub fn project_initial(op: &DiscreteOperator, u0: &[f64]) -> Result<Vec<f64>, SemigroupError> {
    let mu = 1e6 * op.scale().max(1.0);
    let f: Vec<f64> = u0.iter().map(|v| mu * v).collect();
    Ok(Resolvent::new(op, mu)?.solve(&f)?)
}

pub fn simulate(
    op: &DiscreteOperator,
    u0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SemigroupError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SemigroupError::BadHorizon(t_end));
    }
    op.check_len(u0).map_err(SemigroupError::Discrete)?;
    let stepper = Stepper::new(op, dt)?;
    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut traj = Trajectory::default();
    let mut u = project_initial(op, u0)?;
    traj.push(op, 0.0, u.clone());
    for k in 1..=steps {
        u = stepper.step(&u).map_err(|e| match e {
            SemigroupError::Discrete(source) => SemigroupError::StepFailed { step: k, source },
            other => other,
        })?;
        traj.push(op, k as f64 * dt, u.clone());
    }
    Ok(traj)
}

/// Passes iff `‖u_k − v_k‖_G` never grows by more than `1e-8 · ‖u_0 − v_0‖_G`.
pub fn contraction_check(
    op: &DiscreteOperator,
    a: &Trajectory,
    b: &Trajectory,
) -> Result<VerificationReport, SemigroupError> {
    if a.len() != b.len() {
        return Err(SemigroupError::MismatchedTrajectories("length"));
    }
    if a.times.iter().zip(&b.times).any(|(s, t)| (s - t).abs() > 1e-12 * (1.0 + s.abs())) {
        return Err(SemigroupError::MismatchedTrajectories("times"));
    }
    if a.states.first().map(Vec::len) != b.states.first().map(Vec::len) {
        return Err(SemigroupError::MismatchedTrajectories("grid"));
    }
    let dist: Vec<f64> = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(u, v)| op.norm(&sub_vec(u, v)))
        .collect();
    let d0 = dist.first().copied().unwrap_or(0.0);
    let slack = 1e-8 * d0;
    let mut worst = (f64::NEG_INFINITY, 0);
    for k in 1..dist.len() {
        let growth = dist[k] - dist[k - 1];
        if growth > worst.0 {
            worst = (growth, k);
        }
    }
    let growth = worst.0.max(0.0);
    let ok = growth <= slack;
    let mut r = VerificationReport::new("contraction", Verdict::from_bool(ok))
        .with_residual("max_growth", growth)
        .with_residual("initial_distance", d0)
        .with_residual("final_distance", dist.last().copied().unwrap_or(0.0));
    if !ok {
        r = r.with_witness("step_time_distances", vec![
            a.times[worst.1],
            dist[worst.1 - 1],
            dist[worst.1],
        ]);
    }
    Ok(r)
}

/// Per-step `|ΔE/Δt + flux|` against `10 (dt + N⁻²) (‖u₀‖²_G + ‖B_h u₀‖²_G)`.
pub fn energy_balance_check(op: &DiscreteOperator, traj: &Trajectory) -> VerificationReport {
    if traj.len() < 2 {
        return VerificationReport::new("energy_balance", Verdict::Pass)
            .with_residual("max_defect", 0.0);
    }
    let dt = traj.times[1] - traj.times[0];
    let n = op.grid.len() as f64;
    let u0 = &traj.states[0];
    let bu0 = op.b_apply(u0).map(|b| op.inner(&b, &b)).unwrap_or(f64::INFINITY);
    let tol = 10.0 * (dt + 1.0 / (n * n)) * (traj.energies[0] + bu0);
    let mut worst = (0.0_f64, 0);
    for k in 1..traj.len() {
        let h = traj.times[k] - traj.times[k - 1];
        let defect = ((traj.energies[k] - traj.energies[k - 1]) / h + traj.boundary_flux[k]).abs();
        if defect > worst.0 {
            worst = (defect, k);
        }
    }
    let ok = worst.0 <= tol;
    let mut r = VerificationReport::new("energy_balance", Verdict::from_bool(ok))
        .with_residual("max_defect", worst.0)
        .with_residual("tolerance", tol);
    if !ok {
        r = r.with_witness("time_defect", vec![traj.times[worst.1], worst.0]);
    }
    r
}

/// The flat-space problem for `v = 𝓗u`: identity density, the same coefficients
/// and the same condition, now imposed on the traces of `v` directly.
#[derive(Clone, Debug)]
pub struct WeightedWrap {
    pub flat: PhsSystem,
    pub bc: BoundaryCondition,
    weighted: PhsSystem,
}

impl WeightedWrap {
    /// `v = 𝓗u` pointwise on a node-major grid vector.
    pub fn to_flat(&self, nodes: &[f64], u: &[f64]) -> Vec<f64> {
        self.map(nodes, u, false)
    }

    /// `u = 𝓗⁻¹v` pointwise.
    pub fn from_flat(&self, nodes: &[f64], v: &[f64]) -> Vec<f64> {
        self.map(nodes, v, true)
    }

    fn map(&self, nodes: &[f64], x: &[f64], invert: bool) -> Vec<f64> {
        let d = self.weighted.dim();
        let mut out = Vec::with_capacity(x.len());
        for (i, &t) in nodes.iter().enumerate() {
            let h = self.weighted.hamiltonian().eval(t);
            let block = &x[i * d..(i + 1) * d];
            if invert {
                out.extend(crate::matnum::solve(&h, block).expect("density is positive definite"));
            } else {
                out.extend(h.matvec(block));
            }
        }
        out
    }
}

pub fn weighted_wrap(sys: &PhsSystem, bc: &BoundaryCondition) -> Result<WeightedWrap, SemigroupError> {
    let flat = sys.with_hamiltonian(HamiltonianDensity::identity(sys.dim()))?;
    Ok(WeightedWrap {
        flat,
        bc: bc.clone(),
        weighted: sys.clone(),
    })
}
