use super::mat::{dot, Mat};
use super::MatError;

/// Absolute floor applied under every relative tolerance.
pub const ABS_FLOOR: f64 = 1e-13;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Mat,
}

impl SymEig {
    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let mut out = Mat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            if s == 0.0 {
                continue;
            }
            let v = self.vectors.col(k);
            for i in 0..n {
                let vi = s * v[i];
                for j in 0..n {
                    out[(i, j)] += vi * v[j];
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn sym_eig(s: &Mat) -> Result<SymEig, MatError> {
    if !s.is_square() {
        return Err(MatError::NotSquare(s.shape()));
    }
    let n = s.rows();
    let scale = s.norm_fro();
    let tol = (1e-12 * scale).max(ABS_FLOOR);
    let asym = s.asymmetry();
    if asym > tol {
        return Err(MatError::NotSymmetric { deviation: asym, tolerance: tol });
    }
    let mut a = s.symmetric_part();
    let mut v = Mat::identity(n);

    let off = |a: &Mat| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[(i, j)] * a[(i, j)];
                }
            }
        }
        acc.sqrt()
    };

    let target = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    while off(&a) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(MatError::NoConvergence { iterations: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_col(dst, &v.col(src));
    }
    Ok(SymEig { values, vectors })
}

/// Largest singular value.
pub fn spectral_norm(a: &Mat) -> Result<f64, MatError> {
    let ata = if a.rows() >= a.cols() {
        a.transpose().matmul(a)
    } else {
        a.matmul(&a.transpose())
    };
    let eig = sym_eig(&ata)?;
    Ok(eig.values[0].max(0.0).sqrt())
}

/// LU factorization with partial pivoting, reusable for many right-hand sides.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Mat) -> Result<Self, MatError> {
        if !a.is_square() {
            return Err(MatError::NotSquare(a.shape()));
        }
        let n = a.rows();
        let threshold = (1e-13 * a.norm_fro()).max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, pval) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pval < threshold {
                return Err(MatError::Singular { pivot: pval, threshold });
            }
            if piv != k {
                perm.swap(piv, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                if f == 0.0 {
                    continue;
                }
                lu[(i, k)] = f;
                for j in k + 1..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs dimension mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// Solves for every column of `b`.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        let mut out = Mat::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            out.set_col(j, &self.solve(&b.col(j)));
        }
        out
    }

    pub fn inverse(&self) -> Mat {
        self.solve_mat(&Mat::identity(self.dim()))
    }
}

/// Solves `A x = b` by partial-pivoting LU.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>, MatError> {
    if b.len() != a.rows() {
        return Err(MatError::DimensionMismatch {
            expected: (a.rows(), 1),
            found: (b.len(), 1),
        });
    }
    Ok(Lu::factor(a)?.solve(b))
}

pub fn inverse(a: &Mat) -> Result<Mat, MatError> {
    Ok(Lu::factor(a)?.inverse())
}

/// Reduced row echelon form by full-row scaling and partial column pivoting.
struct Echelon {
    r: Mat,
    pivots: Vec<usize>,
}

fn echelon(a: &Mat, rel_tol: f64) -> Echelon {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let threshold = (rel_tol * a.norm_fro()).max(f64::MIN_POSITIVE);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let (piv, pval) = (row..m)
            .map(|i| (i, r[(i, col)].abs()))
            .fold((row, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= threshold {
            continue;
        }
        for j in 0..n {
            let tmp = r[(row, j)];
            r[(row, j)] = r[(piv, j)];
            r[(piv, j)] = tmp;
        }
        let d = r[(row, col)];
        for j in 0..n {
            r[(row, j)] /= d;
        }
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = r[(i, col)];
            if f != 0.0 {
                for j in 0..n {
                    r[(i, j)] -= f * r[(row, j)];
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    Echelon { r, pivots }
}

/// Numerical rank with threshold `rel_tol · ‖A‖`.
pub fn rank(a: &Mat, rel_tol: f64) -> usize {
    // Column-pivoted elimination on both orientations is overkill here; the
    // row-echelon pass with a relative threshold matches the contract.
    echelon(a, rel_tol).pivots.len()
}

/// Basis of the null space of `a` as columns (not orthonormalized).
pub fn null_space(a: &Mat, rel_tol: f64) -> Option<Mat> {
    let n = a.cols();
    let ech = echelon(a, rel_tol);
    let free: Vec<usize> = (0..n).filter(|c| !ech.pivots.contains(c)).collect();
    if free.is_empty() {
        return None;
    }
    let mut z = Mat::zeros(n, free.len());
    for (k, &f) in free.iter().enumerate() {
        z[(f, k)] = 1.0;
        for (row, &p) in ech.pivots.iter().enumerate() {
            z[(p, k)] = -ech.r[(row, f)];
        }
    }
    Some(z)
}

/// Lower-triangular Cholesky factor of an SPD matrix.
pub fn cholesky(a: &Mat) -> Result<Mat, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare(a.shape()));
    }
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return Err(MatError::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}
