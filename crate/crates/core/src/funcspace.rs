//! Vector-valued polynomials as elements of `Hⁿ(a,b)^d`.
//!
//! Polynomials are dense in the Sobolev space, have exact traces and are
//! integrated exactly by Gauss–Legendre rules, so the Green identity of the
//! boundary system can be checked down to rounding.

use crate::matnum::{dot, solve, Mat, MatError, Poly1, QuadRule};
use crate::phs::{boundary_block, HamiltonianKind, PhsError, PhsSystem, QSplit};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FuncError {
    #[error("evaluation point {t} lies outside [{a}, {b}]")]
    OutOfInterval { t: f64, a: f64, b: f64 },
    #[error("Hamiltonian with interior breakpoints is not supported in exact polynomial mode")]
    UnsupportedHamiltonian,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Hermite system singular: {0}")]
    Singular(MatError),
    #[error(transparent)]
    Phs(#[from] PhsError),
}

/// `u = (u₁, …, u_d)` with polynomial components on a common interval.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFunction {
    pub components: Vec<Poly1>,
    pub interval: (f64, f64),
}

impl PolyFunction {
    pub fn new(components: Vec<Poly1>, interval: (f64, f64)) -> Self {
        PolyFunction { components, interval }
    }

    pub fn zero(d: usize, interval: (f64, f64)) -> Self {
        PolyFunction::new(vec![Poly1::zero(); d], interval)
    }

    pub fn scalar(p: Poly1, interval: (f64, f64)) -> Self {
        PolyFunction::new(vec![p], interval)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn degree(&self) -> usize {
        self.components.iter().map(Poly1::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(t)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly1::is_zero)
    }

    pub fn add(&self, other: &PolyFunction) -> PolyFunction {
        PolyFunction::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(p, q)| p + q)
                .collect(),
            self.interval,
        )
    }

    pub fn scale(&self, s: f64) -> PolyFunction {
        PolyFunction::new(self.components.iter().map(|p| p.scale(s)).collect(), self.interval)
    }

    /// Pointwise product `M(t)·u(t)` with a matrix polynomial given by coefficients.
    pub fn left_mul(&self, coeffs: &[Mat]) -> PolyFunction {
        let d = self.dim();
        let mut out = vec![Poly1::zero(); coeffs[0].rows()];
        for (m, hm) in coeffs.iter().enumerate() {
            let mut shift = vec![0.0; m + 1];
            shift[m] = 1.0;
            let tm = Poly1::new(shift);
            for (i, o) in out.iter_mut().enumerate() {
                for j in 0..d {
                    let h = hm[(i, j)];
                    if h != 0.0 {
                        *o = &*o + &(&tm * &self.components[j].scale(h));
                    }
                }
            }
        }
        PolyFunction::new(out, self.interval)
    }
}

/// Stacked endpoint derivatives `(u(t), u'(t), …, u^{(n−1)}(t))`, derivative-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceVector(pub Vec<f64>);

impl TraceVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn in_interval(t: f64, (a, b): (f64, f64)) -> bool {
    let slack = 1e-12 * (b - a).abs().max(a.abs()).max(b.abs()).max(1.0);
    t >= a - slack && t <= b + slack
}

pub fn trace(u: &PolyFunction, t: f64, n: usize) -> Result<TraceVector, FuncError> {
    let (a, b) = u.interval;
    if !in_interval(t, u.interval) {
        return Err(FuncError::OutOfInterval { t, a, b });
    }
    let mut out = Vec::with_capacity(n * u.dim());
    for k in 0..n {
        out.extend(u.components.iter().map(|p| p.eval_derivative(k, t)));
    }
    Ok(TraceVector(out))
}

/// Unique componentwise polynomial of degree `≤ 2n − 1` with prescribed traces at both ends.
pub fn hermite_interpolate(
    tb: &TraceVector,
    ta: &TraceVector,
    n: usize,
    d: usize,
    interval: (f64, f64),
) -> Result<PolyFunction, FuncError> {
    if tb.0.len() != n * d || ta.0.len() != n * d {
        return Err(FuncError::DimensionMismatch(format!(
            "trace vectors must have length {}",
            n * d
        )));
    }
    let (a, b) = interval;
    let h = b - a;
    // Confluent Vandermonde in the reference variable s = (t − a)/h.
    let m = 2 * n;
    let mut v = Mat::zeros(m, m);
    for k in 0..n {
        let kf: f64 = (1..=k).map(|i| i as f64).product();
        v[(k, k)] = kf;
        for j in k..m {
            let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
            v[(n + k, j)] = falling;
        }
    }
    let mut components = Vec::with_capacity(d);
    for c in 0..d {
        let mut rhs = vec![0.0; m];
        for k in 0..n {
            let hk = h.powi(k as i32);
            rhs[k] = hk * ta.0[k * d + c];
            rhs[n + k] = hk * tb.0[k * d + c];
        }
        let coeffs = solve(&v, &rhs).map_err(FuncError::Singular)?;
        components.push(Poly1::new(coeffs).compose_affine(-a / h, 1.0 / h));
    }
    Ok(PolyFunction::new(components, interval))
}

/// `𝓗u` for constant or single-piece polynomial densities.
pub fn apply_hamiltonian(sys: &PhsSystem, u: &PolyFunction) -> Result<PolyFunction, FuncError> {
    let coeffs = match sys.hamiltonian().kind() {
        HamiltonianKind::Constant(h) => vec![h.clone()],
        HamiltonianKind::PiecewisePolynomial { breakpoints, pieces } => {
            if !breakpoints.is_empty() {
                return Err(FuncError::UnsupportedHamiltonian);
            }
            pieces[0].coeffs.clone()
        }
    };
    if sys.hamiltonian().is_identity() {
        return Ok(u.clone());
    }
    Ok(u.left_mul(&coeffs))
}

/// `Au = Σₖ Pₖ ∂ᵏ(𝓗u)` computed on the coefficients.
pub fn apply_a(sys: &PhsSystem, u: &PolyFunction) -> Result<PolyFunction, FuncError> {
    if u.dim() != sys.dim() {
        return Err(FuncError::DimensionMismatch(format!(
            "function has {} components, system expects {}",
            u.dim(),
            sys.dim()
        )));
    }
    let w = apply_hamiltonian(sys, u)?;
    let d = sys.dim();
    let mut out = vec![Poly1::zero(); d];
    for (k, pk) in sys.coefficients().iter().enumerate() {
        let dk: Vec<Poly1> = w.components.iter().map(|p| p.nth_derivative(k)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            for (j, dkj) in dk.iter().enumerate() {
                let c = pk[(i, j)];
                if c != 0.0 {
                    *o = &*o + &dkj.scale(c);
                }
            }
        }
    }
    Ok(PolyFunction::new(out, u.interval))
}

/// `⟨u, v⟩_H = ∫ ⟨𝓗(x)u(x), v(x)⟩ dx`, integrated exactly piece by piece.
pub fn h_inner(sys: &PhsSystem, u: &PolyFunction, v: &PolyFunction) -> f64 {
    let (a, b) = sys.interval();
    let ham = sys.hamiltonian();
    let (edges, ham_deg) = match ham.kind() {
        HamiltonianKind::Constant(_) => (vec![a, b], 0),
        HamiltonianKind::PiecewisePolynomial { breakpoints, pieces } => {
            let mut e = vec![a];
            e.extend(breakpoints);
            e.push(b);
            (e, pieces.iter().map(|p| p.degree()).max().unwrap_or(0))
        }
    };
    let degree = ham_deg + u.degree() + v.degree();
    edges
        .windows(2)
        .map(|w| {
            let rule = QuadRule::for_degree(degree + 2, (w[0], w[1]));
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &wt)| {
                    // midpoint-of-piece evaluation keeps breakpoints unambiguous
                    let h = ham.eval(x.clamp(w[0], w[1]));
                    wt * dot(&h.matvec(&u.eval(x)), &v.eval(x))
                })
                .sum::<f64>()
        })
        .sum()
}

/// Graph norm `(‖u‖²_H + ‖Au‖²_H)^{1/2}`.
pub fn graph_norm(sys: &PhsSystem, u: &PolyFunction) -> Result<f64, FuncError> {
    let au = apply_a(sys, u)?;
    Ok((h_inner(sys, u, u) + h_inner(sys, &au, &au)).max(0.0).sqrt())
}

/// Boundary values of the boundary system computed from the traces of `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryValues {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

/// `F₁ = Q₊ tr_b w + Q₋ tr_a w`, `F₂ = Q₋ tr_b w + Q₊ tr_a w`.
pub fn boundary_map(qs: &QSplit, w: &PolyFunction) -> Result<BoundaryValues, FuncError> {
    let nd = qs.dim();
    let d = w.dim();
    if d == 0 || nd % d != 0 {
        return Err(FuncError::DimensionMismatch(format!(
            "Q has dimension {nd}, incompatible with {d} components"
        )));
    }
    let n = nd / d;
    let (a, b) = w.interval;
    let tb = trace(w, b, n)?;
    let ta = trace(w, a, n)?;
    Ok(boundary_values_from_traces(qs, &tb.0, &ta.0))
}

pub fn boundary_values_from_traces(qs: &QSplit, tb: &[f64], ta: &[f64]) -> BoundaryValues {
    let f1 = crate::matnum::add_vec(&qs.q_plus.matvec(tb), &qs.q_minus.matvec(ta));
    let f2 = crate::matnum::add_vec(&qs.q_minus.matvec(tb), &qs.q_plus.matvec(ta));
    BoundaryValues { f1, f2 }
}

/// `|⟨Au,v⟩_H + ⟨u,Av⟩_H − (⟨F₁𝓗u,F₁𝓗v⟩ − ⟨F₂𝓗u,F₂𝓗v⟩)|`.
pub fn greens_residual(
    sys: &PhsSystem,
    qs: &QSplit,
    u: &PolyFunction,
    v: &PolyFunction,
) -> Result<f64, FuncError> {
    let au = apply_a(sys, u)?;
    let av = apply_a(sys, v)?;
    let volume = h_inner(sys, &au, v) + h_inner(sys, u, &av);
    let fu = boundary_map(qs, &apply_hamiltonian(sys, u)?)?;
    let fv = boundary_map(qs, &apply_hamiltonian(sys, v)?)?;
    let boundary = dot(&fu.f1, &fv.f1) - dot(&fu.f2, &fv.f2);
    Ok((volume - boundary).abs())
}

/// A polynomial `w` with prescribed boundary values `F w = (g₁, g₂)`.
///
/// Inverts the boundary block to obtain endpoint traces and interpolates them.
pub fn lift_boundary_values(
    qs: &QSplit,
    g1: &[f64],
    g2: &[f64],
    d: usize,
    interval: (f64, f64),
) -> Result<PolyFunction, FuncError> {
    let nd = qs.dim();
    if g1.len() != nd || g2.len() != nd || nd % d != 0 {
        return Err(FuncError::DimensionMismatch("boundary targets".into()));
    }
    let block = boundary_block(qs)?;
    let mut rhs = g1.to_vec();
    rhs.extend_from_slice(g2);
    let traces = solve(&block, &rhs).map_err(FuncError::Singular)?;
    let tb = TraceVector(traces[..nd].to_vec());
    let ta = TraceVector(traces[nd..].to_vec());
    hermite_interpolate(&tb, &ta, nd / d, d, interval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phs::{split_q, HamiltonianDensity};

    fn unit() -> (f64, f64) {
        (0.0, 1.0)
    }

    #[test]
    fn trace_examples() {
        let u = PolyFunction::scalar(Poly1::monomial_t(), unit());
        assert_eq!(trace(&u, 1.0, 1).unwrap().0, vec![1.0]);
        let u = PolyFunction::scalar(Poly1::new(vec![0.0, 0.0, 1.0]), unit());
        assert_eq!(trace(&u, 0.0, 2).unwrap().0, vec![0.0, 0.0]);
        let u = PolyFunction::scalar(Poly1::new(vec![0.0, 0.0, 3.0, -2.0]), unit());
        assert_eq!(trace(&u, 1.0, 2).unwrap().0, vec![1.0, 0.0]);
        assert!(matches!(trace(&u, 1.5, 1), Err(FuncError::OutOfInterval { .. })));
    }

    #[test]
    fn hermite_linear_case() {
        let (a, b) = (-0.5, 2.0);
        let (x, y) = (3.0, -1.0);
        let u = hermite_interpolate(&TraceVector(vec![x]), &TraceVector(vec![y]), 1, 1, (a, b))
            .unwrap();
        for t in [a, 0.1, 1.3, b] {
            let expected = ((b - t) * y + (t - a) * x) / (b - a);
            assert!((u.eval(t)[0] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn hermite_zero_traces() {
        let z = TraceVector(vec![0.0; 4]);
        let u = hermite_interpolate(&z, &z, 2, 2, unit()).unwrap();
        assert!(u.is_zero());
    }

    #[test]
    fn hermite_cubic_smoothstep() {
        let u = hermite_interpolate(
            &TraceVector(vec![1.0, 0.0]),
            &TraceVector(vec![0.0, 0.0]),
            2,
            1,
            unit(),
        )
        .unwrap();
        let c = u.components[0].coeffs();
        let expected = [0.0, 0.0, 3.0, -2.0];
        for (got, want) in c.iter().zip(expected) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn apply_a_examples() {
        let sys = PhsSystem::transport(unit());
        let u = PolyFunction::scalar(Poly1::new(vec![0.0, 0.0, 1.0]), unit());
        let au = apply_a(&sys, &u).unwrap();
        assert_eq!(au.components[0].coeffs(), &[0.0, 2.0]);

        let p1 = Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let sys2 = PhsSystem::new(
            1,
            2,
            vec![Mat::zeros(2, 2), p1],
            unit(),
            HamiltonianDensity::identity(2),
        )
        .unwrap();
        let u = PolyFunction::new(vec![Poly1::monomial_t(), Poly1::zero()], unit());
        let au = apply_a(&sys2, &u).unwrap();
        assert!(au.components[0].is_zero());
        assert_eq!(au.components[1].coeffs(), &[1.0]);

        assert!(apply_a(&sys2, &PolyFunction::zero(2, unit())).unwrap().is_zero());
    }

    #[test]
    fn h_inner_examples() {
        let sys = PhsSystem::transport(unit());
        let one = PolyFunction::scalar(Poly1::constant(1.0), unit());
        assert!((h_inner(&sys, &one, &one) - 1.0).abs() < 1e-15);
        let sys2 = sys
            .with_hamiltonian(HamiltonianDensity::constant(Mat::from_diag(&[2.0])).unwrap())
            .unwrap();
        assert!((h_inner(&sys2, &one, &one) - 2.0).abs() < 1e-15);
        let t = PolyFunction::scalar(Poly1::monomial_t(), unit());
        assert!((h_inner(&sys, &t, &t) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_map_examples() {
        let qs = split_q(&Mat::identity(1)).unwrap();
        let u = hermite_interpolate(&TraceVector(vec![2.0]), &TraceVector(vec![5.0]), 1, 1, unit())
            .unwrap();
        let f = boundary_map(&qs, &u).unwrap();
        assert!((f.f1[0] - 2.0).abs() < 1e-14 && (f.f2[0] - 5.0).abs() < 1e-14);

        let f = boundary_map(&qs, &PolyFunction::zero(1, unit())).unwrap();
        assert_eq!((f.f1, f.f2), (vec![0.0], vec![0.0]));

        let qs = split_q(&Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let f = boundary_values_from_traces(&qs, &[1.0, 0.0], &[0.0, 0.0]);
        for (got, want) in f.f1.iter().chain(&f.f2).zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn greens_residual_examples() {
        let sys = PhsSystem::transport(unit());
        let qs = split_q(&Mat::identity(1)).unwrap();
        let z = PolyFunction::zero(1, unit());
        assert_eq!(greens_residual(&sys, &qs, &z, &z).unwrap(), 0.0);
        let t = PolyFunction::scalar(Poly1::monomial_t(), unit());
        let one = PolyFunction::scalar(Poly1::constant(1.0), unit());
        assert!(greens_residual(&sys, &qs, &t, &one).unwrap() < 1e-15);
    }

    #[test]
    fn piecewise_hamiltonian_rejected_in_exact_mode() {
        use crate::phs::MatPoly;
        let ham = HamiltonianDensity::piecewise(
            vec![0.5],
            vec![MatPoly::constant(Mat::identity(1)), MatPoly::constant(Mat::from_diag(&[2.0]))],
            unit(),
        )
        .unwrap();
        let sys = PhsSystem::transport(unit()).with_hamiltonian(ham).unwrap();
        let one = PolyFunction::scalar(Poly1::constant(1.0), unit());
        assert_eq!(apply_a(&sys, &one), Err(FuncError::UnsupportedHamiltonian));
        // the weighted inner product still integrates piecewise
        assert!((h_inner(&sys, &one, &one) - 1.5).abs() < 1e-14);
    }

    mod props {
        use super::super::*;
        use crate::matnum::{norm2, sub_vec};
        use crate::phs::{build_q, random_system, split_q};
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn random_poly_fn(rng: &mut ChaCha8Rng, d: usize, deg: usize, iv: (f64, f64)) -> PolyFunction {
            PolyFunction::new(
                (0..d)
                    .map(|_| Poly1::new((0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect()))
                    .collect(),
                iv,
            )
        }

        fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
            (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn hermite_reproduces_traces(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let iv = (-0.5, 0.5 + rng.gen_range(0.0..1.0));
                let tb = TraceVector(random_vec(&mut rng, n * d));
                let ta = TraceVector(random_vec(&mut rng, n * d));
                let u = hermite_interpolate(&tb, &ta, n, d, iv).unwrap();
                let err_b = norm2(&sub_vec(&trace(&u, iv.1, n).unwrap().0, &tb.0));
                let err_a = norm2(&sub_vec(&trace(&u, iv.0, n).unwrap().0, &ta.0));
                prop_assert!(err_a <= 1e-9 && err_b <= 1e-9, "{err_a} {err_b}");
            }

            #[test]
            fn green_identity_holds(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=4, deg in 0usize..=8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let iv = (-0.5, 0.5);
                let sys = random_system(&mut rng, n, d, iv, 2.0);
                let qs = split_q(&build_q(&sys)).unwrap();
                let u = random_poly_fn(&mut rng, sys.dim(), deg, iv);
                let v = random_poly_fn(&mut rng, sys.dim(), deg, iv);
                let r = greens_residual(&sys, &qs, &u, &v).unwrap();
                let scale = 1.0 + graph_norm(&sys, &u).unwrap() * graph_norm(&sys, &v).unwrap();
                prop_assert!(r <= 1e-9 * scale, "residual {r} scale {scale}");
            }

            #[test]
            fn boundary_map_is_onto(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let iv = (0.0, 1.0);
                let sys = random_system(&mut rng, n, d, iv, 2.0);
                let qs = split_q(&build_q(&sys)).unwrap();
                let nd = qs.dim();
                let g1 = random_vec(&mut rng, nd);
                let g2 = random_vec(&mut rng, nd);
                let w = lift_boundary_values(&qs, &g1, &g2, sys.dim(), iv).unwrap();
                let f = boundary_map(&qs, &w).unwrap();
                let err = norm2(&sub_vec(&f.f1, &g1)).max(norm2(&sub_vec(&f.f2, &g2)));
                prop_assert!(err <= 1e-8, "{err}");
            }

            #[test]
            fn kernel_is_vanishing_traces(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let iv = (0.0, 1.0);
                let sys = random_system(&mut rng, n, d, iv, 2.0);
                let qs = split_q(&build_q(&sys)).unwrap();
                let (n, d) = (sys.order(), sys.dim());
                // vanishing traces => F w = 0
                let bump = Poly1::new(vec![0.0, 1.0]);
                let bump = (0..n).fold(Poly1::constant(1.0), |p, _| {
                    &(&p * &bump) * &Poly1::new(vec![1.0, -1.0])
                });
                let core = random_poly_fn(&mut rng, d, 3, iv);
                let w = PolyFunction::new(core.components.iter().map(|c| c * &bump).collect(), iv);
                let f = boundary_map(&qs, &w).unwrap();
                prop_assert!(norm2(&f.f1) + norm2(&f.f2) <= 1e-12);
                // F w = 0 => traces vanish
                let z = vec![0.0; n * d];
                let w0 = lift_boundary_values(&qs, &z, &z, d, iv).unwrap();
                prop_assert!(norm2(&trace(&w0, 0.0, n).unwrap().0) <= 1e-12);
                prop_assert!(norm2(&trace(&w0, 1.0, n).unwrap().0) <= 1e-12);
                // and a nonzero trace pair is never in the kernel
                let tb = TraceVector(random_vec(&mut rng, n * d));
                let w1 = hermite_interpolate(&tb, &TraceVector(z.clone()), n, d, iv).unwrap();
                let f = boundary_map(&qs, &w1).unwrap();
                prop_assert!(norm2(&f.f1) + norm2(&f.f2) > 1e-6 * norm2(&tb.0));
            }
        }
    }
}
