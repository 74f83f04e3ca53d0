//! Dense helpers shared by the assembly, trace and Maslov modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{MaslovError, Result};

/// Relative symmetry defect ‖A − Aᵀ‖_F / ‖A‖_F (0 for the zero matrix).
pub fn sym_defect(a: &DMatrix<f64>) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).norm() / norm
}

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Mass operator of a generalized symmetric eigenproblem.
#[derive(Debug, Clone)]
pub enum Mass {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Mass {
    pub fn dim(&self) -> usize {
        match self {
            Mass::Diagonal(d) => d.len(),
            Mass::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Mass::Diagonal(d) => d.component_mul(x),
            Mass::Dense(m) => m * x,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Mass::Diagonal(d) => DMatrix::from_diagonal(d),
            Mass::Dense(m) => m.clone(),
        }
    }

    /// Returns L with M = L Lᵀ (L diagonal for lumped masses).
    fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        match self {
            Mass::Diagonal(d) => {
                if d.iter().any(|&v| v <= 0.0) {
                    return Err(MaslovError::Solver("mass not positive definite".into()));
                }
                Ok(DMatrix::from_diagonal(&d.map(f64::sqrt)))
            }
            Mass::Dense(m) => m.clone().cholesky().map(|c| c.l()).ok_or_else(|| MaslovError::Solver("mass not positive definite".into())),
        }
    }
}

/// Eigenpairs of A x = μ M x, eigenvalues ascending, eigenvectors M-orthonormal.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: DVector<f64>,
    pub vectors: Option<DMatrix<f64>>,
}

impl GeneralizedEigen {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn count_below(&self, level: f64) -> usize {
        self.values.iter().filter(|&&v| v < level).count()
    }
}

/// Reduce A x = μ M x to the standard problem C y = μ y with C = L⁻¹ A L⁻ᵀ.
fn reduce(a: &DMatrix<f64>, mass: &Mass) -> Result<(DMatrix<f64>, Option<DMatrix<f64>>)> {
    match mass {
        Mass::Diagonal(d) => {
            if d.iter().any(|&v| v <= 0.0) {
                return Err(MaslovError::Solver("mass not positive definite".into()));
            }
            let s = d.map(|v| 1.0 / v.sqrt());
            let mut c = a.clone();
            for j in 0..c.ncols() {
                for i in 0..c.nrows() {
                    c[(i, j)] *= s[i] * s[j];
                }
            }
            Ok((c, None))
        }
        Mass::Dense(_) => {
            let l = mass.cholesky_factor()?;
            let half = l.solve_lower_triangular(a).ok_or_else(|| MaslovError::Solver("singular mass factor".into()))?;
            let c = l.solve_lower_triangular(&half.transpose()).ok_or_else(|| MaslovError::Solver("singular mass factor".into()))?;
            Ok((c, Some(l)))
        }
    }
}

pub fn generalized_eigen(a: &DMatrix<f64>, mass: &Mass, vectors: bool) -> Result<GeneralizedEigen> {
    if a.nrows() != mass.dim() || a.ncols() != a.nrows() {
        return Err(MaslovError::Input("operator and mass dimensions differ".into()));
    }
    let (mut c, factor) = reduce(a, mass)?;
    symmetrize(&mut c);
    if !vectors {
        let mut vals: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(MaslovError::Solver("non-finite eigenvalue".into()));
        }
        vals.sort_by(|x, y| x.total_cmp(y));
        return Ok(GeneralizedEigen { values: DVector::from_vec(vals), vectors: None });
    }
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 0).ok_or_else(|| MaslovError::Solver("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = order.len();
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut y = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        y.set_column(k, &eig.eigenvectors.column(i));
    }
    let x = match (mass, factor) {
        (Mass::Diagonal(d), _) => {
            let s = d.map(|v| 1.0 / v.sqrt());
            DMatrix::from_fn(n, n, |i, j| y[(i, j)] * s[i])
        }
        (Mass::Dense(_), Some(l)) => l.transpose().solve_upper_triangular(&y).ok_or_else(|| MaslovError::Solver("singular mass factor".into()))?,
        _ => unreachable!(),
    };
    Ok(GeneralizedEigen { values, vectors: Some(x) })
}

/// Largest entry modulus of a complex matrix.
pub fn cmax_abs(m: &DMatrix<num_complex::Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Orthonormal basis of the column span (thin QR; columns assumed independent).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let qr = m.clone().qr();
    let q = qr.q();
    q.columns(0, cols).into_owned()
}

/// Counts (n₊, n₋) of a symmetric matrix, with |eig| ≤ tol treated as zero.
pub fn inertia(a: &DMatrix<f64>, tol: f64) -> (usize, usize, Vec<f64>) {
    if a.nrows() == 0 {
        return (0, 0, Vec::new());
    }
    let mut s = a.clone();
    symmetrize(&mut s);
    let mut vals: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|x, y| x.total_cmp(y));
    let plus = vals.iter().filter(|&&v| v > tol).count();
    let minus = vals.iter().filter(|&&v| v < -tol).count();
    (plus, minus, vals)
}

/// Eigenvalue of smallest modulus of a symmetric matrix, by inverse iteration with
/// its LU factors. Returns 0 when the factors are exactly singular.
pub fn smallest_eigenvalue_estimate(a: &DMatrix<f64>, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i * 7919 % 101) as f64 / 101.0));
    x /= x.norm();
    let mut estimate = f64::INFINITY;
    for _ in 0..60 {
        let Some(y) = lu.solve(&x) else { return 0.0 };
        let ny = y.norm();
        if !ny.is_finite() || ny == 0.0 {
            return 0.0;
        }
        x = y / ny;
        let next = 1.0 / ny;
        if (next - estimate).abs() <= 1e-10 * next {
            break;
        }
        estimate = next;
    }
    x.dot(&(a * &x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_eigen_diagonal_mass() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 6.0]);
        let m = Mass::Diagonal(DVector::from_vec(vec![2.0, 3.0]));
        let e = generalized_eigen(&a, &m, true).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 2.0).abs() < 1e-14);
        let x = e.vectors.unwrap();
        let g = x.transpose() * m.to_dense() * &x;
        assert!((g - DMatrix::identity(2, 2)).norm() < 1e-13);
    }

    #[test]
    fn generalized_eigen_dense_mass_matches_diagonal() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let d = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let e1 = generalized_eigen(&a, &Mass::Diagonal(d.clone()), false).unwrap();
        let e2 = generalized_eigen(&a, &Mass::Dense(DMatrix::from_diagonal(&d)), true).unwrap();
        assert!((e1.values - &e2.values).norm() < 1e-12);
        let x = e2.vectors.unwrap();
        let r = &a * &x - DMatrix::from_diagonal(&d) * &x * DMatrix::from_diagonal(&e2.values);
        assert!(r.norm() < 1e-12, "{r}");
    }

    #[test]
    fn inverse_iteration_finds_smallest_magnitude() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, -0.25, 3.0, 9.0]));
        let lu = a.clone().lu();
        let est = smallest_eigenvalue_estimate(&a, &lu);
        assert!((est + 0.25).abs() < 1e-8);
    }
}
