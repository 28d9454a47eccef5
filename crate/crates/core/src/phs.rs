//! Port-Hamiltonian operator data and the boundary-form matrix.
//!
//! A [`PhsSystem`] describes `Au = Σₖ Pₖ ∂ᵏ(𝓗u)` on an interval. From the
//! coefficient tuple we build the symmetric invertible boundary-form matrix
//! `Q`, split it into the square roots of its positive and negative spectral
//! parts, and assemble the block matrix that maps endpoint traces to the
//! boundary values `(F₁u, F₂u)`.

use crate::matnum::{sym_eig, Lu, Mat, MatError, SymEig, ABS_FLOOR};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhsError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("derivative order n = {n} is even but state dimension d = {d} is odd; no invertible skew-symmetric Pₙ exists")]
    OddDimensionEvenOrder { n: usize, d: usize },
    #[error("P_{k} violates Pₖᵀ = (−1)^(k+1) Pₖ (deviation {deviation:e})")]
    SymmetryPattern { k: usize, deviation: f64 },
    #[error("P_n is singular")]
    SingularLeading,
    #[error("Hamiltonian density: {0}")]
    Hamiltonian(String),
    #[error("Q has a near-zero eigenvalue {value:e} (threshold {threshold:e})")]
    SingularQ { value: f64, threshold: f64 },
    #[error("boundary block failed the pivot check")]
    Degenerate,
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Matrix-valued polynomial `Σⱼ Hⱼ tʲ`, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct MatPoly {
    pub coeffs: Vec<Mat>,
}

impl MatPoly {
    pub fn constant(m: Mat) -> Self {
        MatPoly { coeffs: vec![m] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> Mat {
        let mut acc = Mat::zeros(self.coeffs[0].rows(), self.coeffs[0].cols());
        for c in self.coeffs.iter().rev() {
            acc = &acc.scale(t) + c;
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianKind {
    Constant(Mat),
    /// `pieces.len() == breakpoints.len() + 1`; breakpoints are interior and increasing.
    PiecewisePolynomial {
        breakpoints: Vec<f64>,
        pieces: Vec<MatPoly>,
    },
}

/// Symmetric, uniformly positive definite Hamiltonian density `𝓗(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianDensity {
    kind: HamiltonianKind,
    lower_bound: f64,
}

const HAM_SYM_TOL: f64 = 1e-12;

impl HamiltonianDensity {
    pub fn identity(d: usize) -> Self {
        HamiltonianDensity {
            kind: HamiltonianKind::Constant(Mat::identity(d)),
            lower_bound: 1.0,
        }
    }

    pub fn constant(h: Mat) -> Result<Self, PhsError> {
        let c = min_eig_checked(&h)?;
        Ok(HamiltonianDensity {
            kind: HamiltonianKind::Constant(h),
            lower_bound: c,
        })
    }

    /// A single polynomial piece on the whole interval.
    pub fn polynomial(p: MatPoly, interval: (f64, f64)) -> Result<Self, PhsError> {
        Self::piecewise(Vec::new(), vec![p], interval)
    }

    /// Piecewise polynomial density; the lower bound is measured on a dense
    /// sample of every piece (Gauss–Lobatto-style points plus endpoints).
    pub fn piecewise(
        breakpoints: Vec<f64>,
        pieces: Vec<MatPoly>,
        (a, b): (f64, f64),
    ) -> Result<Self, PhsError> {
        if pieces.len() != breakpoints.len() + 1 || pieces.is_empty() {
            return Err(PhsError::Hamiltonian(
                "need exactly one more piece than interior breakpoints".into(),
            ));
        }
        if pieces.iter().any(|p| p.coeffs.is_empty()) {
            return Err(PhsError::Hamiltonian("empty polynomial piece".into()));
        }
        let mut edges = vec![a];
        edges.extend(&breakpoints);
        edges.push(b);
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PhsError::Hamiltonian(
                "breakpoints must be increasing and interior to the interval".into(),
            ));
        }
        let d = pieces[0].coeffs[0].rows();
        if pieces
            .iter()
            .flat_map(|p| &p.coeffs)
            .any(|m| m.shape() != (d, d))
        {
            return Err(PhsError::Hamiltonian("pieces must be square of equal size".into()));
        }
        let mut h = HamiltonianDensity {
            kind: HamiltonianKind::PiecewisePolynomial { breakpoints, pieces },
            lower_bound: f64::INFINITY,
        };
        let mut c = f64::INFINITY;
        for w in edges.windows(2) {
            for k in 0..=64 {
                let x = w[0] + (w[1] - w[0]) * (1.0 - (std::f64::consts::PI * k as f64 / 64.0).cos()) / 2.0;
                c = c.min(min_eig_checked(&h.eval(x))?);
            }
        }
        h.lower_bound = c;
        Ok(h)
    }

    pub fn kind(&self) -> &HamiltonianKind {
        &self.kind
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            HamiltonianKind::Constant(m) => m.rows(),
            HamiltonianKind::PiecewisePolynomial { pieces, .. } => pieces[0].coeffs[0].rows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(&self.kind, HamiltonianKind::Constant(m) if *m == Mat::identity(m.rows()))
    }

    /// `𝓗(x)`; at a breakpoint the right-hand piece is used.
    pub fn eval(&self, x: f64) -> Mat {
        match &self.kind {
            HamiltonianKind::Constant(m) => m.clone(),
            HamiltonianKind::PiecewisePolynomial { breakpoints, pieces } => {
                let idx = breakpoints.iter().take_while(|&&bp| x >= bp).count();
                pieces[idx].eval(x)
            }
        }
    }

    /// The density as one matrix polynomial when it has no interior breakpoints.
    pub fn as_single_polynomial(&self) -> Option<MatPoly> {
        match &self.kind {
            HamiltonianKind::Constant(m) => Some(MatPoly::constant(m.clone())),
            HamiltonianKind::PiecewisePolynomial { breakpoints, pieces } if breakpoints.is_empty() => {
                Some(pieces[0].clone())
            }
            _ => None,
        }
    }

    /// Re-checks symmetry and the lower bound at the given nodes.
    pub fn check_nodes(&self, nodes: &[f64]) -> Result<(), PhsError> {
        for &x in nodes {
            let c = min_eig_checked(&self.eval(x))?;
            if c < self.lower_bound * (1.0 - 1e-12) {
                return Err(PhsError::Hamiltonian(format!(
                    "smallest eigenvalue {c:e} at x = {x} is below the bound {:e}",
                    self.lower_bound
                )));
            }
        }
        Ok(())
    }
}

fn min_eig_checked(h: &Mat) -> Result<f64, PhsError> {
    if !h.is_square() {
        return Err(PhsError::Hamiltonian("density must be square".into()));
    }
    let asym = h.asymmetry();
    if asym > HAM_SYM_TOL * h.max_abs().max(1.0) {
        return Err(PhsError::Hamiltonian(format!("not symmetric (deviation {asym:e})")));
    }
    let eig = sym_eig(&h.symmetric_part())?;
    let c = *eig.values.last().expect("non-empty");
    if c <= 0.0 {
        return Err(PhsError::Hamiltonian(format!(
            "not positive definite (smallest eigenvalue {c:e})"
        )));
    }
    Ok(c)
}

/// The operator `Au = Σₖ₌₀ⁿ Pₖ ∂ᵏ(𝓗u)` on `L₂(a,b)^d`.
#[derive(Clone, Debug)]
pub struct PhsSystem {
    n: usize,
    d: usize,
    p: Vec<Mat>,
    interval: (f64, f64),
    ham: HamiltonianDensity,
}

impl PhsSystem {
    pub fn new(
        n: usize,
        d: usize,
        p: Vec<Mat>,
        interval: (f64, f64),
        ham: HamiltonianDensity,
    ) -> Result<Self, PhsError> {
        if n == 0 || d == 0 {
            return Err(PhsError::InvalidSystem("n and d must be at least 1".into()));
        }
        if n % 2 == 0 && d % 2 == 1 {
            return Err(PhsError::OddDimensionEvenOrder { n, d });
        }
        if p.len() != n + 1 {
            return Err(PhsError::InvalidSystem(format!(
                "expected {} coefficient matrices, got {}",
                n + 1,
                p.len()
            )));
        }
        if let Some(k) = p.iter().position(|m| m.shape() != (d, d)) {
            return Err(PhsError::InvalidSystem(format!("P_{k} must be {d}x{d}")));
        }
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(PhsError::InvalidSystem("interval must satisfy a < b".into()));
        }
        if ham.dim() != d {
            return Err(PhsError::Hamiltonian(format!("density must be {d}x{d}")));
        }
        check_symmetry_pattern(&p)?;
        if Lu::factor(&p[n]).is_err() {
            return Err(PhsError::SingularLeading);
        }
        Ok(PhsSystem { n, d, p, interval, ham })
    }

    /// Transport operator `u ↦ (𝓗u)'` on `[a, b]` (n = d = 1, P₁ = 1).
    pub fn transport(interval: (f64, f64)) -> Self {
        PhsSystem::new(
            1,
            1,
            vec![Mat::zeros(1, 1), Mat::identity(1)],
            interval,
            HamiltonianDensity::identity(1),
        )
        .expect("transport system is valid")
    }

    pub fn with_hamiltonian(&self, ham: HamiltonianDensity) -> Result<Self, PhsError> {
        PhsSystem::new(self.n, self.d, self.p.clone(), self.interval, ham)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `n·d`, the dimension of each trace space.
    pub fn boundary_dim(&self) -> usize {
        self.n * self.d
    }

    pub fn coefficients(&self) -> &[Mat] {
        &self.p
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn hamiltonian(&self) -> &HamiltonianDensity {
        &self.ham
    }
}

fn check_symmetry_pattern(p: &[Mat]) -> Result<(), PhsError> {
    for (k, pk) in p.iter().enumerate() {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let dev = (&pk.transpose() - &pk.scale(sign)).max_abs();
        if dev > 1e-12 * pk.max_abs().max(1.0) {
            return Err(PhsError::SymmetryPattern { k, deviation: dev });
        }
    }
    Ok(())
}

/// Assembles the anti-triangular boundary-form matrix from raw coefficients.
///
/// Block `(i, j)` (1-based) is `(−1)^{i+1} P_{i+j−1}` when `i + j − 1 ≤ n`.
pub fn assemble_q(p: &[Mat]) -> Result<Mat, PhsError> {
    if p.len() < 2 {
        return Err(PhsError::InvalidSystem("need at least P₀ and P₁".into()));
    }
    check_symmetry_pattern(p)?;
    let n = p.len() - 1;
    let d = p[0].rows();
    let mut q = Mat::zeros(n * d, n * d);
    for i in 1..=n {
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        for j in 1..=n + 1 - i {
            q.add_block((i - 1) * d, (j - 1) * d, &p[i + j - 1], sign);
        }
    }
    Ok(q)
}

pub fn build_q(sys: &PhsSystem) -> Mat {
    assemble_q(&sys.p).expect("validated system")
}

/// `Q` together with the square roots of its positive and negative parts.
#[derive(Clone, Debug)]
pub struct QSplit {
    pub q: Mat,
    pub q_plus: Mat,
    pub q_minus: Mat,
    /// Orthonormal columns spanning the positive eigenspace.
    pub basis_plus: Mat,
    /// Orthonormal columns spanning the negative eigenspace; `None` when empty.
    pub basis_minus: Option<Mat>,
}

impl QSplit {
    pub fn dim(&self) -> usize {
        self.q.rows()
    }
}

pub fn split_q(q: &Mat) -> Result<QSplit, PhsError> {
    let eig: SymEig = sym_eig(q)?;
    let norm = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let threshold = (1e-12 * norm).max(ABS_FLOOR);
    if let Some(&value) = eig.values.iter().find(|v| v.abs() < threshold) {
        return Err(PhsError::SingularQ { value, threshold });
    }
    let q_plus = eig.reconstruct_with(|l| if l > 0.0 { l.sqrt() } else { 0.0 });
    let q_minus = eig.reconstruct_with(|l| if l < 0.0 { (-l).sqrt() } else { 0.0 });
    let n_pos = eig.values.iter().filter(|&&v| v > 0.0).count();
    let dim = q.rows();
    let basis_plus = eig.vectors.block(0, 0, dim, n_pos.max(1));
    let basis_plus = if n_pos == 0 { Mat::zeros(dim, 1) } else { basis_plus };
    let basis_minus = (n_pos < dim).then(|| eig.vectors.block(0, n_pos, dim, dim - n_pos));
    Ok(QSplit {
        q: q.clone(),
        q_plus,
        q_minus,
        basis_plus,
        basis_minus,
    })
}

/// The `2nd × 2nd` matrix `[[Q₊, Q₋], [Q₋, Q₊]]` mapping `(tr_b, tr_a)` to `(F₁, F₂)`.
pub fn boundary_block(qs: &QSplit) -> Result<Mat, PhsError> {
    let top = qs.q_plus.hcat(&qs.q_minus);
    let bottom = qs.q_minus.hcat(&qs.q_plus);
    let m = top.vcat(&bottom);
    Lu::factor(&m).map_err(|_| PhsError::Degenerate)?;
    Ok(m)
}

/// Random valid coefficient tuple with entries in `[−scale, scale]`.
///
/// Odd-index coefficients are symmetric, even-index ones skew; `P_n` is
/// redrawn until its smallest singular value exceeds `scale / 10`.
pub fn random_coefficients<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    scale: f64,
) -> Vec<Mat> {
    let draw = |rng: &mut R, k: usize| {
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let x = rng.gen_range(-scale..=scale);
                if k % 2 == 1 {
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                } else if i != j {
                    m[(i, j)] = x;
                    m[(j, i)] = -x;
                }
            }
        }
        m
    };
    let mut p: Vec<Mat> = (0..n).map(|k| draw(rng, k)).collect();
    loop {
        let lead = draw(rng, n);
        let smin = sym_eig(&lead.transpose().matmul(&lead))
            .map(|e| e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
            .unwrap_or(0.0);
        if smin > 0.1 * scale {
            p.push(lead);
            return p;
        }
    }
}

/// Random valid system with identity density; `d` is bumped to even for even `n`.
pub fn random_system<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    interval: (f64, f64),
    scale: f64,
) -> PhsSystem {
    let d = if n % 2 == 0 && d % 2 == 1 { d + 1 } else { d };
    let p = random_coefficients(rng, n, d, scale);
    PhsSystem::new(n, d, p, interval, HamiltonianDensity::identity(d)).expect("random system is valid")
}
