//! Finite-dimensional boundary trace space: symplectic form, Lagrangian frames,
//! projections, intersections and the Souriau unitary.
//!
//! Frames are stored in √w-normalized coordinates, where the pairing is Euclidean
//! and J = [[0, −I], [I, 0]].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{MaslovError, Result};
use crate::linalg::{cmax_abs, orthonormalize, symmetrize};

/// Principal-angle cosine threshold for counting an intersection direction.
pub const DEFAULT_INTERSECTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SymplecticSpace {
    weights: DVector<f64>,
    sqrt_w: DVector<f64>,
}

impl SymplecticSpace {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| w <= 0.0 || w.is_nan()) {
            return Err(MaslovError::Input("pairing weights must be strictly positive".into()));
        }
        let sqrt_w = weights.map(f64::sqrt);
        Ok(Self { weights, sqrt_w })
    }

    pub fn half_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn sqrt_weights(&self) -> &DVector<f64> {
        &self.sqrt_w
    }

    /// ω(x, y) = ⟨g_y, f_x⟩_w − ⟨g_x, f_y⟩_w in physical coordinates.
    pub fn symplectic_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        let m = self.half_dim();
        if x.len() != 2 * m || y.len() != 2 * m {
            return Err(MaslovError::Input(format!("expected vectors of length {}", 2 * m)));
        }
        let mut acc = 0.0;
        for i in 0..m {
            acc += self.weights[i] * (y[m + i] * x[i] - x[m + i] * y[i]);
        }
        Ok(acc)
    }

    /// Matrix J_c of ω in physical coordinates: ω(x, y) = xᵀ J_c y.
    pub fn form_matrix(&self) -> DMatrix<f64> {
        let m = self.half_dim();
        let mut jc = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            jc[(i, m + i)] = self.weights[i];
            jc[(m + i, i)] = -self.weights[i];
        }
        jc
    }

    /// Normalized complex structure J = [[0, −I], [I, 0]].
    pub fn complex_structure(&self) -> DMatrix<f64> {
        let m = self.half_dim();
        let mut j = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            j[(i, m + i)] = -1.0;
            j[(m + i, i)] = 1.0;
        }
        j
    }

    /// Physical (f, g) → normalized (√w f, √w g).
    pub fn normalize(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.half_dim();
        DVector::from_fn(2 * m, |i, _| x[i] * self.sqrt_w[i % m])
    }

    pub fn denormalize(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.half_dim();
        DVector::from_fn(2 * m, |i, _| x[i] / self.sqrt_w[i % m])
    }

    /// W^{1/2} A W^{−1/2}: the normalized form of a boundary operator.
    pub fn normalize_operator(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| self.sqrt_w[i] * a[(i, j)] / self.sqrt_w[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameTag {
    GraphOfOperator,
    InverseGraph,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    Graph,
    InverseGraph,
}

/// Orthonormal frame (normalized coordinates) of an isotropic subspace.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    half_dim: usize,
    basis: DMatrix<f64>,
    pub tag: FrameTag,
}

impl LagrangianFrame {
    /// Frame spanned by the given normalized columns (orthonormalized here).
    pub fn from_columns(columns: &DMatrix<f64>, tag: FrameTag) -> Result<Self> {
        if !columns.nrows().is_multiple_of(2) {
            return Err(MaslovError::Input("frame rows must be even".into()));
        }
        let half_dim = columns.nrows() / 2;
        let basis = orthonormalize(columns);
        let frame = Self { half_dim, basis, tag };
        let iso = frame.isotropy_defect();
        if iso > 1e-10 {
            return Err(MaslovError::Consistency(format!("frame not isotropic: defect {iso:.3e}")));
        }
        Ok(frame)
    }

    /// {(f, X f)} for a symmetric X in normalized coordinates.
    pub fn graph_normalized(x: &DMatrix<f64>) -> Self {
        Self::from_symmetric(x, GraphMode::Graph)
    }

    /// {(Y g, g)} for a symmetric Y in normalized coordinates.
    pub fn inverse_graph_normalized(y: &DMatrix<f64>) -> Self {
        Self::from_symmetric(y, GraphMode::InverseGraph)
    }

    fn from_symmetric(x: &DMatrix<f64>, mode: GraphMode) -> Self {
        let m = x.nrows();
        let mut xs = x.clone();
        symmetrize(&mut xs);
        let eig = xs.symmetric_eigen();
        let q = &eig.eigenvectors;
        let mut basis = DMatrix::zeros(2 * m, m);
        for k in 0..m {
            let d = eig.eigenvalues[k];
            // cos/sin of the angle atan(d), computed without overflow
            let (c, s) = if d.abs() > 1.0 {
                let r = 1.0 / d;
                let c = r.abs() / (1.0 + r * r).sqrt();
                (c, d.signum() / (1.0 + r * r).sqrt())
            } else {
                let c = 1.0 / (1.0 + d * d).sqrt();
                (c, d * c)
            };
            let (top, bottom) = match mode {
                GraphMode::Graph => (c, s),
                GraphMode::InverseGraph => (s, c),
            };
            for i in 0..m {
                basis[(i, k)] = q[(i, k)] * top;
                basis[(m + i, k)] = q[(i, k)] * bottom;
            }
        }
        let tag = match mode {
            GraphMode::Graph => FrameTag::GraphOfOperator,
            GraphMode::InverseGraph => FrameTag::InverseGraph,
        };
        Self { half_dim: m, basis, tag }
    }

    /// The Neumann subspace ℋ_N = {(f, 0)}.
    pub fn neumann(m: usize) -> Self {
        Self::graph_normalized(&DMatrix::zeros(m, m))
    }

    /// The Dirichlet subspace ℋ_D = {(0, g)}.
    pub fn dirichlet(m: usize) -> Self {
        Self::inverse_graph_normalized(&DMatrix::zeros(m, m))
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Basis in physical coordinates (orthonormal in the w-weighted metric).
    pub fn basis_physical(&self, space: &SymplecticSpace) -> DMatrix<f64> {
        let m = self.half_dim;
        DMatrix::from_fn(2 * m, self.rank(), |i, j| self.basis[(i, j)] / space.sqrt_weights()[i % m])
    }

    /// max |ω(col_i, col_j)| over the frame.
    pub fn isotropy_defect(&self) -> f64 {
        let m = self.half_dim;
        let f = self.basis.rows(0, m);
        let g = self.basis.rows(m, m);
        let om = g.transpose() * f - f.transpose() * g;
        om.amax()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.rank();
        (self.basis.transpose() * &self.basis - DMatrix::identity(k, k)).amax()
    }

    pub fn is_lagrangian(&self) -> bool {
        self.rank() == self.half_dim && self.isotropy_defect() <= 1e-10
    }

    /// U = X + iY, unitary when the frame is Lagrangian.
    pub fn unitary(&self) -> DMatrix<Complex64> {
        let m = self.half_dim;
        DMatrix::from_fn(m, self.rank(), |i, j| Complex64::new(self.basis[(i, j)], self.basis[(m + i, j)]))
    }
}

/// Builds Gr(A) or Gr′(A) from an operator given in physical coordinates.
pub fn build_graph_lagrangian(a: &DMatrix<f64>, mode: GraphMode, space: &SymplecticSpace) -> Result<LagrangianFrame> {
    let m = space.half_dim();
    if a.nrows() != m || a.ncols() != m {
        return Err(MaslovError::Input(format!("operator must be {m}x{m}")));
    }
    let wa = DMatrix::from_fn(m, m, |i, j| space.weights()[i] * a[(i, j)]);
    let scale = wa.norm();
    if scale > 0.0 {
        let defect = (&wa - wa.transpose()).norm() / scale;
        if defect > 1e-8 {
            return Err(MaslovError::Asymmetric { defect, tol: 1e-8 });
        }
    }
    let an = space.normalize_operator(a);
    Ok(LagrangianFrame::from_symmetric(&an, mode))
}

/// Dimension and basis of F1 ∩ F2 from principal angles: cosines ≥ 1 − tol count.
pub fn intersection_dim(f1: &LagrangianFrame, f2: &LagrangianFrame, tol: f64) -> Result<(usize, DMatrix<f64>)> {
    if f1.half_dim != f2.half_dim {
        return Err(MaslovError::Input("frames live in different spaces".into()));
    }
    let c = f1.basis.transpose() * &f2.basis;
    if c.nrows() == 0 || c.ncols() == 0 {
        return Ok((0, DMatrix::zeros(2 * f1.half_dim, 0)));
    }
    let svd = c.svd(true, false);
    let u = svd.u.as_ref().expect("requested U");
    let idx: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] >= 1.0 - tol).collect();
    let mut basis = DMatrix::zeros(2 * f1.half_dim, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        basis.set_column(k, &(&f1.basis * u.column(i)));
    }
    Ok((idx.len(), basis))
}

/// Sines of the principal angles between two Lagrangian frames, ascending.
pub fn principal_sines(f1: &LagrangianFrame, f2: &LagrangianFrame) -> Vec<f64> {
    let m = f1.half_dim;
    let jf2 = DMatrix::from_fn(2 * m, f2.rank(), |i, j| if i < m { -f2.basis[(m + i, j)] } else { f2.basis[(i - m, j)] });
    let s = (f1.basis.transpose() * jf2).singular_values();
    let mut v: Vec<f64> = s.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Orthogonal projector onto the frame span (normalized coordinates).
pub fn orth_projection(f: &LagrangianFrame) -> DMatrix<f64> {
    &f.basis * f.basis.transpose()
}

/// W = (I − 2Π_F)(2Π_G − I) folded to an m×m complex matrix, via the real 2m×2m route.
pub fn souriau_unitary(f: &LagrangianFrame, g: &LagrangianFrame) -> Result<DMatrix<Complex64>> {
    let m = f.half_dim;
    if g.half_dim != m || f.rank() != m || g.rank() != m {
        return Err(MaslovError::Input("souriau map needs two Lagrangian frames of one space".into()));
    }
    let id = DMatrix::<f64>::identity(2 * m, 2 * m);
    let w_real = (&id - orth_projection(f) * 2.0) * (orth_projection(g) * 2.0 - &id);
    let j = SymplecticSpace::new(DVector::from_element(m, 1.0))?.complex_structure();
    let comm = (&w_real * &j - &j * &w_real).amax();
    if comm > 1e-9 {
        return Err(MaslovError::Consistency(format!("souriau operator does not commute with J: {comm:.3e}")));
    }
    let w = DMatrix::from_fn(m, m, |r, c| Complex64::new(w_real[(r, c)], w_real[(m + r, c)]));
    let unit = cmax_abs(&(w.adjoint() * &w - DMatrix::<Complex64>::identity(m, m)));
    if unit > 1e-9 {
        return Err(MaslovError::Consistency(format!("souriau map not unitary: {unit:.3e}")));
    }
    Ok(w)
}

/// Same operator as [`souriau_unitary`], from W = −U_F U_Fᵀ · conj(U_G U_Gᵀ).
pub fn souriau_unitary_complex(f: &LagrangianFrame, g: &LagrangianFrame) -> DMatrix<Complex64> {
    let uf = f.unitary();
    let ug = g.unitary();
    let rf = &uf * uf.transpose();
    let rg = (&ug * ug.transpose()).map(|z| z.conj());
    -(rf * rg)
}

/// Eigenvalues of a unitary (any normal matrix), one per joint eigenvector of its
/// commuting Hermitian parts (W + Wᴴ)/2 and (W − Wᴴ)/2i.
pub fn unitary_eigenvalues(w: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let m = w.nrows();
    if w.ncols() != m {
        return Err(MaslovError::Input("unitary must be square".into()));
    }
    let wh = w.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let h1 = (w + &wh) * half;
    let h2 = (w - &wh) * Complex64::new(0.0, -0.5);
    let q = joint_eigenbasis(&[&h1, &h2], &DMatrix::identity(m, m), 0)?;
    Ok((0..m)
        .map(|k| {
            let v = q.column(k);
            v.dotc(&(w * v))
        })
        .collect())
}

/// Eigenphases ψ ∈ (−π, π] of a unitary, measured from −1 (eigenvalue e^{i(π+ψ)}), ascending.
pub fn eigenphases(w: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = unitary_eigenvalues(w)?.iter().map(|z| (-z).arg()).collect();
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Eigenphases of the Souriau map of (F, G) without a non-Hermitian eigensolver.
///
/// W is unitarily similar to −C Cᵀ with C = U_Gᴴ U_F. The symmetric unitary C Cᵀ = X + iY
/// has commuting real symmetric parts, so one real orthogonal basis diagonalizes both.
pub fn souriau_eigenphases(f: &LagrangianFrame, g: &LagrangianFrame) -> Result<Vec<f64>> {
    let m = f.half_dim;
    if g.half_dim != m || f.rank() != m || g.rank() != m {
        return Err(MaslovError::Input("souriau map needs two Lagrangian frames of one space".into()));
    }
    let c = g.unitary().adjoint() * f.unitary();
    let sym = &c * c.transpose();
    let mut x = sym.map(|z| z.re);
    let mut y = sym.map(|z| z.im);
    crate::linalg::symmetrize(&mut x);
    crate::linalg::symmetrize(&mut y);
    let q = joint_eigenbasis(&[&x, &y], &DMatrix::identity(m, m), 0)?;
    let mut out: Vec<f64> = (0..m)
        .map(|k| {
            let v = q.column(k);
            let xr = v.dot(&(&x * v));
            let yr = v.dot(&(&y * v));
            yr.atan2(xr)
        })
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Orthonormal basis of span(basis) diagonalizing the commuting Hermitian matrices in turn:
/// diagonalize the first, then split each of its eigenvalue clusters by the next one.
fn joint_eigenbasis<T>(mats: &[&DMatrix<T>], basis: &DMatrix<T>, level: usize) -> Result<DMatrix<T>>
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    let k = basis.ncols();
    if k <= 1 || level >= mats.len() {
        return Ok(basis.clone());
    }
    let r = basis.adjoint() * mats[level] * basis;
    let half = T::from_real(0.5);
    let r = (&r + r.adjoint()) * half;
    let eig = nalgebra::SymmetricEigen::try_new(r, f64::EPSILON, 0).ok_or_else(|| MaslovError::Solver("hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let rotated = basis * &eig.eigenvectors;
    let mut out = DMatrix::zeros(basis.nrows(), k);
    let mut col = 0;
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= 1e-9 {
            end += 1;
        }
        let cluster = DMatrix::from_fn(basis.nrows(), end - start, |i, j| rotated[(i, order[start + j])].clone());
        let refined = joint_eigenbasis(mats, &cluster, level + 1)?;
        out.columns_mut(col, end - start).copy_from(&refined);
        col += end - start;
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn unit_space(m: usize) -> SymplecticSpace {
        SymplecticSpace::new(DVector::from_element(m, 1.0)).unwrap()
    }

    #[test]
    fn symplectic_form_examples() {
        let sp = unit_space(2);
        let x = dvector![1.0, 0.0, 0.0, 0.0];
        let y = dvector![0.0, 0.0, 1.0, 0.0];
        assert_eq!(sp.symplectic_form(&x, &y).unwrap(), 1.0);
        assert_eq!(sp.symplectic_form(&y, &x).unwrap(), -1.0);
        assert_eq!(sp.symplectic_form(&x, &x).unwrap(), 0.0);
        let sp1 = SymplecticSpace::new(dvector![2.0]).unwrap();
        assert_eq!(sp1.symplectic_form(&dvector![1.0, 0.0], &dvector![0.0, 3.0]).unwrap(), 6.0);
        assert!(sp.symplectic_form(&dvector![1.0], &y).is_err());
    }

    #[test]
    fn form_matrix_and_complex_structure() {
        let sp = SymplecticSpace::new(dvector![0.5, 2.0, 1.5]).unwrap();
        let jc = sp.form_matrix();
        assert_eq!(jc, -jc.transpose());
        assert!(jc.clone().try_inverse().is_some());
        let j = sp.complex_structure();
        assert!((&j * &j + DMatrix::identity(6, 6)).amax() < 1e-12);
        assert!((&j + j.transpose()).amax() < 1e-12);
        let x = dvector![1.0, -2.0, 0.5, 0.3, 0.7, -1.1];
        let y = dvector![0.2, 0.4, -0.9, 1.3, -0.6, 0.8];
        let direct = sp.symplectic_form(&x, &y).unwrap();
        assert!((x.dot(&(&jc * &y)) - direct).abs() < 1e-14);
        let (xn, yn) = (sp.normalize(&x), sp.normalize(&y));
        assert!(((&j * &xn).dot(&yn) - direct).abs() < 1e-14);
    }

    #[test]
    fn graph_frames_of_zero() {
        let sp = unit_space(3);
        let z = DMatrix::zeros(3, 3);
        let n = build_graph_lagrangian(&z, GraphMode::Graph, &sp).unwrap();
        let d = build_graph_lagrangian(&z, GraphMode::InverseGraph, &sp).unwrap();
        let pn = orth_projection(&n);
        let pd = orth_projection(&d);
        let mut en = DMatrix::zeros(6, 6);
        en.view_mut((0, 0), (3, 3)).fill_with_identity();
        let mut ed = DMatrix::zeros(6, 6);
        ed.view_mut((3, 3), (3, 3)).fill_with_identity();
        assert!((pn - en).amax() < 1e-14);
        assert!((pd - ed).amax() < 1e-14);
        assert_eq!(intersection_dim(&n, &d, DEFAULT_INTERSECTION_TOL).unwrap().0, 0);
        assert_eq!(intersection_dim(&n, &n, DEFAULT_INTERSECTION_TOL).unwrap().0, 3);
    }

    #[test]
    fn one_dimensional_graph() {
        let sp = unit_space(1);
        let th = 0.7;
        let f = build_graph_lagrangian(&DMatrix::from_element(1, 1, th), GraphMode::Graph, &sp).unwrap();
        let r = (1.0 + th * th).sqrt();
        let b = f.basis();
        let sign = b[(0, 0)].signum();
        assert!((sign * b[(0, 0)] - 1.0 / r).abs() < 1e-15 && (sign * b[(1, 0)] - th / r).abs() < 1e-15);
        assert_eq!(f.isotropy_defect(), 0.0);
    }

    #[test]
    fn intersection_with_basis() {
        let sp = unit_space(2);
        let f1 = build_graph_lagrangian(&DMatrix::from_diagonal(&dvector![1.0, 0.0]), GraphMode::Graph, &sp).unwrap();
        let f2 = build_graph_lagrangian(&DMatrix::zeros(2, 2), GraphMode::Graph, &sp).unwrap();
        let (k, basis) = intersection_dim(&f1, &f2, DEFAULT_INTERSECTION_TOL).unwrap();
        assert_eq!(k, 1);
        let v = basis.column(0);
        assert!((v[1].abs() - 1.0).abs() < 1e-14);
        assert!(v[0].abs() + v[2].abs() + v[3].abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_operator() {
        let sp = SymplecticSpace::new(dvector![1.0, 2.0]).unwrap();
        // symmetric as a matrix, but not w.r.t. the weighted pairing
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(build_graph_lagrangian(&a, GraphMode::Graph, &sp), Err(MaslovError::Asymmetric { .. })));
        let ok = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 1.0, 0.0]);
        assert!(build_graph_lagrangian(&ok, GraphMode::Graph, &sp).is_ok());
    }

    #[test]
    fn souriau_of_identical_frames_is_minus_identity() {
        let sp = unit_space(3);
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, -0.5, 0.3, 0.0, 0.3, 2.0]);
        let f = build_graph_lagrangian(&a, GraphMode::Graph, &sp).unwrap();
        let w = souriau_unitary(&f, &f).unwrap();
        assert!(cmax_abs(&(w + DMatrix::<Complex64>::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn souriau_scalar_phase() {
        // Υ = Gr(tan α), G = ℋ_N: eigenvalue e^{i(π+2α)}
        let sp = unit_space(1);
        let alpha: f64 = 0.3;
        let f = build_graph_lagrangian(&DMatrix::from_element(1, 1, alpha.tan()), GraphMode::Graph, &sp).unwrap();
        let g = LagrangianFrame::neumann(1);
        let w = souriau_unitary(&f, &g).unwrap();
        let psi = eigenphases(&w).unwrap();
        assert!((psi[0] - 2.0 * alpha).abs() < 1e-14);
        let f1 = build_graph_lagrangian(&DMatrix::from_element(1, 1, 1.0), GraphMode::Graph, &sp).unwrap();
        let psi1 = eigenphases(&souriau_unitary(&f1, &g).unwrap()).unwrap();
        assert!((psi1[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn complex_formula_matches_real_route() {
        let sp = SymplecticSpace::new(dvector![0.5, 1.0, 2.0]).unwrap();
        let winv = DMatrix::from_diagonal(&dvector![2.0, 1.0, 0.5]);
        let a = &winv * DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, 0.4, -0.5, 0.3, 0.0, 0.3, 2.0]);
        let b = &winv * DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.1, 0.0, 1.0, 0.0, 0.1, 0.0, -1.0]);
        let f = build_graph_lagrangian(&a, GraphMode::Graph, &sp).unwrap();
        let g = build_graph_lagrangian(&b, GraphMode::InverseGraph, &sp).unwrap();
        let w1 = souriau_unitary(&f, &g).unwrap();
        let w2 = souriau_unitary_complex(&f, &g);
        assert!(cmax_abs(&(&w1 - w2)) < 1e-13);
        let p1 = eigenphases(&w1).unwrap();
        let p2 = souriau_eigenphases(&f, &g).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_route_handles_degenerate_spectra() {
        let sp = unit_space(4);
        let a = DMatrix::from_diagonal(&dvector![0.5, 0.5, -2.0, -2.0]);
        let f = build_graph_lagrangian(&a, GraphMode::Graph, &sp).unwrap();
        let g = LagrangianFrame::neumann(4);
        let p = souriau_eigenphases(&f, &g).unwrap();
        let mut expected: Vec<f64> = [0.5_f64, 0.5, -2.0, -2.0].iter().map(|x| 2.0 * x.atan()).collect();
        expected.sort_by(|x, y| x.total_cmp(y));
        for (x, y) in p.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!(souriau_eigenphases(&f, &f).unwrap().iter().all(|x| x.abs() < 1e-12));
    }
}
