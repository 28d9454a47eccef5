use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bcspec::{Verdict, VerificationReport};
use crate::funcspace::PolyFunction;
use crate::matnum::{cholesky, dot, inverse, null_space, spectral_norm, sub_vec, sym_eig, Mat, Poly1};

use super::{Constraint, DiscreteError, DiscreteOperator, Resolvent};

/// Slack on `μ‖(μ + B_h)⁻¹‖ ≤ 1`.
pub const RESOLVENT_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CertifyMode {
    /// Exact spectral test on the constraint null space (linear conditions only).
    Linear,
    /// Monotonicity ratios over sampled pairs of resolvent outputs.
    Sampled { samples: usize, seed: u64 },
}

/// Random smooth grid vector: a degree-6 polynomial per component.
pub(crate) fn smooth_random(op: &DiscreteOperator, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (a, b) = op.sys.interval();
    let comps = (0..op.dim())
        .map(|_| {
            let c: Vec<f64> = (0..7).map(|k| rng.gen_range(-1.0..1.0) / (k + 1) as f64).collect();
            // polynomial in s = (2t − a − b)/(b − a) ∈ [−1, 1]
            Poly1::new(c).compose_affine(-(a + b) / (b - a), 2.0 / (b - a))
        })
        .collect();
    op.sample(&PolyFunction::new(comps, (a, b)))
}

fn rough_random(op: &DiscreteOperator, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..op.size()).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Columns spanning `ker C`, orthonormal in the `G` inner product.
fn g_orthonormal_kernel(op: &DiscreteOperator, c: &Mat) -> Result<Option<Mat>, DiscreteError> {
    let Some(z) = null_space(c, 1e-10) else {
        return Ok(None);
    };
    let s = z.transpose().matmul(&op.gram).matmul(&z).symmetric_part();
    let l = cholesky(&s)?;
    Ok(Some(z.matmul(&inverse(&l)?.transpose())))
}

pub fn certify_accretive(op: &DiscreteOperator, mode: CertifyMode) -> VerificationReport {
    let tol = op.tolerance();
    match (mode, &op.constraint) {
        (CertifyMode::Linear, Constraint::Linear(c)) => match linear_certificate(op, c, tol) {
            Ok(r) => r,
            Err(e) => VerificationReport::new("accretive_linear", Verdict::Fail)
                .with_residual("tolerance", tol)
                .with_witness(&format!("error: {e}"), vec![]),
        },
        (CertifyMode::Sampled { samples, seed }, _) => sampled_certificate(op, samples, seed, tol),
        // no null space for a nonlinear relation; fall back to sampling
        (CertifyMode::Linear, Constraint::Nonlinear(_)) => sampled_certificate(op, 32, 0, tol),
    }
}

fn linear_certificate(
    op: &DiscreteOperator,
    c: &Mat,
    tol: f64,
) -> Result<VerificationReport, DiscreteError> {
    let Some(z) = g_orthonormal_kernel(op, c)? else {
        return Ok(VerificationReport::new("accretive_linear", Verdict::Pass)
            .with_residual("kernel_dim", 0.0));
    };
    let h = z.transpose().matmul(&op.gram).matmul(&op.a_h).matmul(&z).symmetric_part();
    let eig = sym_eig(&h)?;
    let k = eig.values.len() - 1;
    let min = eig.values[k];
    let u = z.matvec(&eig.vectors.col(k));
    let (f1, _) = op.boundary_values(&u);
    let f1sq = dot(&f1, &f1);
    let normalized = if f1sq > 1e-300 {
        op.inner(&op.apply(&u), &u) / f1sq
    } else {
        0.0
    };
    let ok = min >= -tol;
    let mut r = VerificationReport::new("accretive_linear", Verdict::from_bool(ok))
        .with_residual("min_eigenvalue", min)
        .with_residual("tolerance", tol)
        .with_residual("normalized_witness", normalized)
        .with_residual("kernel_dim", z.cols() as f64);
    if !ok {
        r = r.with_witness("u", u);
    }
    Ok(r)
}

fn sampled_certificate(op: &DiscreteOperator, samples: usize, seed: u64, tol: f64) -> VerificationReport {
    let mu = (10.0 * op.scale()).max(1.0);
    let res = match Resolvent::new(op, mu) {
        Ok(r) => r,
        Err(e) => {
            return VerificationReport::new("accretive_sampled", Verdict::Fail)
                .with_witness(&format!("error: {e}"), vec![])
        }
    };
    let results: Vec<Option<f64>> = (0..samples.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let u = res.solve(&smooth_random(op, &mut rng)).ok()?;
            let v = res.solve(&smooth_random(op, &mut rng)).ok()?;
            let e = sub_vec(&u, &v);
            let ee = op.inner(&e, &e);
            (ee > 0.0).then(|| (op.b_inner(&u, &e) - op.b_inner(&v, &e)) / ee)
        })
        .collect();
    let values: Vec<f64> = results.iter().flatten().copied().collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = !values.is_empty() && min >= -tol;
    VerificationReport::new("accretive_sampled", Verdict::from_bool(ok))
        .with_residual("min_ratio", if values.is_empty() { f64::NAN } else { min })
        .with_residual("tolerance", tol)
        .with_residual("pairs", values.len() as f64)
        .with_residual("failed_solves", (results.len() - values.len()) as f64)
}

/// `μ‖(μ + B_h)⁻¹‖` in the `G` norm, computed from the full resolvent matrix.
pub fn worst_case_ratio(res: &Resolvent<'_>, op: &DiscreteOperator) -> Result<f64, DiscreteError> {
    let size = op.size();
    let mut r = Mat::zeros(size, size);
    for j in 0..size {
        let mut e = vec![0.0; size];
        e[j] = 1.0;
        r.set_col(j, &res.solve(&e)?);
    }
    // ‖u‖_G = ‖Lᵀu‖ with G = LLᵀ
    let l = cholesky(&op.gram.symmetric_part())?;
    let m = l.transpose().matmul(&r).matmul(&inverse(&l.transpose())?);
    Ok(res.mu() * spectral_norm(&m)?)
}

pub fn certify_m_accretive(
    op: &DiscreteOperator,
    mus: &[f64],
    samples: usize,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new("m_accretive", Verdict::Pass);
    let mut ok = true;
    for &mu in mus {
        let res = match Resolvent::new(op, mu) {
            Ok(r) => r,
            Err(_) => {
                ok = false;
                report = report.with_residual(&format!("solve_failed@mu={mu}"), 1.0);
                continue;
            }
        };
        let ratios: Vec<Option<f64>> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed ^ mu.to_bits(), i);
                let (f1, f2) = if i % 2 == 0 {
                    (smooth_random(op, &mut rng), smooth_random(op, &mut rng))
                } else {
                    (rough_random(op, &mut rng), rough_random(op, &mut rng))
                };
                let u1 = res.solve(&f1).ok()?;
                let u2 = res.solve(&f2).ok()?;
                let df = op.norm(&sub_vec(&f1, &f2));
                Some(if df > 0.0 { mu * op.norm(&sub_vec(&u1, &u2)) / df } else { 0.0 })
            })
            .collect();
        let failed = ratios.iter().filter(|r| r.is_none()).count();
        let max = ratios.iter().flatten().copied().fold(0.0_f64, f64::max);
        report = report.with_residual(&format!("max_ratio@mu={mu}"), max);
        if failed > 0 {
            report = report.with_residual(&format!("failed_solves@mu={mu}"), failed as f64);
            ok = false;
        }
        let mut worst = max;
        if op.is_linear() {
            match worst_case_ratio(&res, op) {
                Ok(w) => {
                    report = report.with_residual(&format!("worst_case@mu={mu}"), w);
                    worst = worst.max(w);
                }
                Err(_) => ok = false,
            }
        }
        if worst > 1.0 + RESOLVENT_SLACK {
            ok = false;
            report = report.with_witness(&format!("mu={mu}"), vec![mu, worst]);
        }
    }
    report.verdict = Verdict::from_bool(ok);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcspec::BoundaryCondition;
    use crate::discrete::discretize;
    use crate::phs::{build_q, split_q, PhsSystem};

    fn transport_op(bc: BoundaryCondition, n: usize) -> DiscreteOperator {
        let sys = PhsSystem::transport((0.0, 1.0));
        let qs = split_q(&build_q(&sys)).unwrap();
        discretize(&sys, &qs, &bc, n).unwrap()
    }

    fn kernel(alpha: f64) -> BoundaryCondition {
        BoundaryCondition::KernelW { w: Mat::from_rows(&[&[-alpha, 1.0]]) }
    }

    #[test]
    fn transport_accretivity_verdicts() {
        let pass = certify_accretive(&transport_op(kernel(0.5), 32), CertifyMode::Linear);
        assert!(pass.passed(), "{pass:?}");
        let fail = certify_accretive(&transport_op(kernel(2.0), 32), CertifyMode::Linear);
        assert!(!fail.passed());
        let w = fail.residual("normalized_witness").unwrap();
        assert!((w + 1.5).abs() < 1e-9, "{w}");
    }

    #[test]
    fn zero_g_is_accretive() {
        let op = transport_op(BoundaryCondition::scalar_multiple(0.0), 24);
        let r = certify_accretive(&op, CertifyMode::Sampled { samples: 16, seed: 3 });
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn resolvent_bound_verdicts() {
        let mus = [0.1, 1.0, 10.0];
        for bc in [kernel(0.5), kernel(1.0), BoundaryCondition::clamp(-0.5, 0.5)] {
            let r = certify_m_accretive(&transport_op(bc, 24), &mus, 10, 1);
            assert!(r.passed(), "{r:?}");
        }
        let r = certify_m_accretive(&transport_op(kernel(2.0), 24), &mus, 10, 1);
        assert!(!r.passed());
    }
}
