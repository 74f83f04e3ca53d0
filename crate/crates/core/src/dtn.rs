//! Dirichlet-to-Neumann and Neumann-to-Dirichlet maps by Schur complements, and the
//! Lagrangian path Υ(s) of rescaled boundary traces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::{Model, PathPoint};
use crate::error::{MaslovError, Result};
use crate::linalg::{smallest_eigenvalue_estimate, sym_defect};
use crate::symplectic::LagrangianFrame;

/// Relative conditioning below which a trace map counts as singular.
pub const DEFAULT_FALLBACK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    DtN,
    NtD,
}

#[derive(Debug, Clone)]
pub struct DtNMap {
    /// The map in physical boundary coordinates.
    pub matrix: DMatrix<f64>,
    pub kind: MapKind,
    pub point: PathPoint,
    /// Eigenvalue of smallest modulus of the factored block (interior block for DtN, full operator for NtD).
    pub sigma_min: f64,
    /// |sigma_min| relative to the block's ∞-norm.
    pub relative_conditioning: f64,
}

impl DtNMap {
    /// Relative defect of M_b·(matrix) from symmetry.
    pub fn symmetry_defect(&self, model: &Model) -> f64 {
        let mb = &model.sm.m_b;
        let wm = DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| mb[i] * self.matrix[(i, j)]);
        sym_defect(&wm)
    }

    /// The rescaled map of Υ: N_s = −N/t (graph) or t·M (inverse graph).
    pub fn rescaled(&self) -> DMatrix<f64> {
        match self.kind {
            MapKind::DtN => -&self.matrix / self.point.t,
            MapKind::NtD => &self.matrix * self.point.t,
        }
    }
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn submatrix(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// N = −M_b⁻¹ S with S the Schur complement of the interior block of K + M_vol V_s.
pub fn dirichlet_to_neumann(model: &Model, point: &PathPoint, fallback_tol: f64) -> Result<DtNMap> {
    let local = model.local_operator(point)?;
    dirichlet_to_neumann_from_local(model, &local, point, fallback_tol)
}

pub fn dirichlet_to_neumann_from_local(model: &Model, local: &DMatrix<f64>, point: &PathPoint, fallback_tol: f64) -> Result<DtNMap> {
    let sm = &model.sm;
    let (ii, bb) = (&sm.interior_dofs, &sm.boundary_dofs);
    let aii = submatrix(local, ii, ii);
    let aib = submatrix(local, ii, bb);
    let abb = submatrix(local, bb, bb);
    let lu = aii.clone().lu();
    let sigma = smallest_eigenvalue_estimate(&aii, &lu);
    let rel = sigma.abs() / inf_norm(&aii).max(f64::MIN_POSITIVE);
    if rel < fallback_tol {
        return Err(MaslovError::DirichletSpectrumHit { s: point.s, eigenvalue: sigma });
    }
    let x = lu.solve(&aib).ok_or(MaslovError::DirichletSpectrumHit { s: point.s, eigenvalue: sigma })?;
    let schur = abb - aib.transpose() * x;
    let matrix = DMatrix::from_fn(bb.len(), bb.len(), |i, j| -schur[(i, j)] / sm.m_b[i]);
    Ok(DtNMap { matrix, kind: MapKind::DtN, point: *point, sigma_min: sigma, relative_conditioning: rel })
}

/// M = (K + M_vol V_s)⁻¹|_∂Ω · M_b: boundary values of the solution with Neumann data g.
pub fn neumann_to_dirichlet(model: &Model, point: &PathPoint, fallback_tol: f64) -> Result<DtNMap> {
    let local = model.local_operator(point)?;
    neumann_to_dirichlet_from_local(model, &local, point, fallback_tol)
}

pub fn neumann_to_dirichlet_from_local(model: &Model, local: &DMatrix<f64>, point: &PathPoint, fallback_tol: f64) -> Result<DtNMap> {
    let sm = &model.sm;
    let bb = &sm.boundary_dofs;
    let lu = local.clone().lu();
    let sigma = smallest_eigenvalue_estimate(local, &lu);
    let rel = sigma.abs() / inf_norm(local).max(f64::MIN_POSITIVE);
    if rel < fallback_tol {
        return Err(MaslovError::NeumannSpectrumHit { s: point.s, eigenvalue: sigma });
    }
    let mut rhs = DMatrix::zeros(sm.num_dofs(), bb.len());
    for (k, &i) in bb.iter().enumerate() {
        rhs[(i, k)] = sm.m_b[k];
    }
    let sol = lu.solve(&rhs).ok_or(MaslovError::NeumannSpectrumHit { s: point.s, eigenvalue: sigma })?;
    let matrix = DMatrix::from_fn(bb.len(), bb.len(), |i, j| sol[(bb[i], j)]);
    Ok(DtNMap { matrix, kind: MapKind::NtD, point: *point, sigma_min: sigma, relative_conditioning: rel })
}

/// Υ(s) = T_s(K_s) together with the map it was built from.
#[derive(Debug, Clone)]
pub struct UpsilonFrame {
    pub frame: LagrangianFrame,
    pub source: MapKind,
    pub relative_conditioning: f64,
}

/// Graph frame Gr(−N/t) from a DtN map, or inverse graph Gr′(t·M) from an NtD map.
pub fn frame_from_map(model: &Model, map: &DtNMap) -> LagrangianFrame {
    let x = model.space.normalize_operator(&map.rescaled());
    match map.kind {
        MapKind::DtN => LagrangianFrame::graph_normalized(&x),
        MapKind::NtD => LagrangianFrame::inverse_graph_normalized(&x),
    }
}

/// Υ(s): the DtN graph when the interior block is well conditioned, otherwise the
/// better conditioned of the two constructions.
pub fn upsilon_frame(model: &Model, point: &PathPoint, fallback_tol: f64) -> Result<UpsilonFrame> {
    let local = model.local_operator(point)?;
    let dtn = dirichlet_to_neumann_from_local(model, &local, point, fallback_tol);
    if let Ok(map) = &dtn {
        if map.relative_conditioning >= fallback_tol.sqrt() {
            return Ok(UpsilonFrame { frame: frame_from_map(model, map), source: MapKind::DtN, relative_conditioning: map.relative_conditioning });
        }
    }
    let ntd = neumann_to_dirichlet_from_local(model, &local, point, fallback_tol);
    let best = match (dtn, ntd) {
        (Ok(d), Ok(n)) => {
            if d.relative_conditioning >= n.relative_conditioning {
                d
            } else {
                n
            }
        }
        (Ok(d), Err(_)) => d,
        (Err(_), Ok(n)) => n,
        (Err(_), Err(_)) => return Err(MaslovError::BothMapsSingular(point.s)),
    };
    Ok(UpsilonFrame { frame: frame_from_map(model, &best), source: best.kind, relative_conditioning: best.relative_conditioning })
}

/// Harmonic extension route: column j of N is −γ_N of the solution with Dirichlet data e_j.
pub fn dirichlet_to_neumann_by_traces(model: &Model, point: &PathPoint) -> Result<DMatrix<f64>> {
    let sm = &model.sm;
    let local = model.local_operator(point)?;
    let (ii, bb) = (&sm.interior_dofs, &sm.boundary_dofs);
    let lu = submatrix(&local, ii, ii).lu();
    let aib = submatrix(&local, ii, bb);
    let mut out = DMatrix::zeros(bb.len(), bb.len());
    for j in 0..bb.len() {
        let f = DVector::from_fn(bb.len(), |i, _| if i == j { 1.0 } else { 0.0 });
        let ui = lu.solve(&(-aib.column(j))).ok_or(MaslovError::DirichletSpectrumHit { s: point.s, eigenvalue: 0.0 })?;
        let mut u = sm.extend(&f);
        for (k, &i) in ii.iter().enumerate() {
            u[i] = ui[k];
        }
        out.set_column(j, &(-model.neumann_trace(&local, &u)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{BoundaryCondition, Segment};
    use crate::grid::build_square_grid;
    use crate::potential::PotentialField;
    use crate::symplectic::{intersection_dim, principal_sines, DEFAULT_INTERSECTION_TOL};

    fn pt(lambda: f64, t: f64) -> PathPoint {
        PathPoint { s: 0.0, lambda, t, segment: Segment::Sigma2 }
    }

    fn model(d: usize, n: usize, v: f64) -> Model {
        Model::new(&build_square_grid(d, n).unwrap(), PotentialField::scalar(1, v), BoundaryCondition::neumann(1)).unwrap()
    }

    #[test]
    fn constants_have_zero_flux() {
        let m = model(2, 9, 0.0);
        let map = dirichlet_to_neumann(&m, &pt(0.0, 1.0), DEFAULT_FALLBACK_TOL).unwrap();
        let ones = DVector::from_element(map.matrix.nrows(), 1.0);
        assert!((&map.matrix * ones).amax() < 1e-12);
    }

    #[test]
    fn one_dimensional_laplace_dtn() {
        let m = model(1, 9, 0.0);
        let map = dirichlet_to_neumann(&m, &pt(0.0, 1.0), DEFAULT_FALLBACK_TOL).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[-0.5, 0.5, 0.5, -0.5]);
        assert!((map.matrix - expected).amax() < 1e-12);
    }

    #[test]
    fn schur_route_matches_trace_route() {
        let g = build_square_grid(2, 7).unwrap();
        let m = Model::new(&g, PotentialField::from_fn(1, |x| DMatrix::from_element(1, 1, -4.0 + x[0] * x[1])), BoundaryCondition::neumann(1)).unwrap();
        let p = pt(-0.3, 0.8);
        let a = dirichlet_to_neumann(&m, &p, DEFAULT_FALLBACK_TOL).unwrap();
        let b = dirichlet_to_neumann_by_traces(&m, &p).unwrap();
        assert!((a.matrix - b).amax() < 1e-11);
    }

    #[test]
    fn forced_dirichlet_hit() {
        let n = 9;
        let h = 2.0 / (n - 1) as f64;
        let mu = 8.0 / (h * h) * (std::f64::consts::PI * h / 4.0).sin().powi(2);
        let m = model(2, n, -mu);
        let r = dirichlet_to_neumann(&m, &pt(0.0, 1.0), DEFAULT_FALLBACK_TOL);
        assert!(matches!(r, Err(MaslovError::DirichletSpectrumHit { .. })));
    }

    #[test]
    fn neumann_laplacian_hit_and_positive_ntd() {
        let m0 = model(2, 9, 0.0);
        assert!(matches!(neumann_to_dirichlet(&m0, &pt(0.0, 1.0), DEFAULT_FALLBACK_TOL), Err(MaslovError::NeumannSpectrumHit { .. })));
        let m1 = model(2, 9, 1.0);
        let map = neumann_to_dirichlet(&m1, &pt(0.0, 1.0), DEFAULT_FALLBACK_TOL).unwrap();
        assert!(map.symmetry_defect(&m1) < 1e-12);
        let wm = DMatrix::from_fn(map.matrix.nrows(), map.matrix.ncols(), |i, j| m1.sm.m_b[i] * map.matrix[(i, j)]);
        assert!(wm.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn dtn_inverts_ntd_and_frames_agree() {
        let m = model(2, 9, 1.0);
        let p = pt(-0.4, 0.7);
        let n = dirichlet_to_neumann(&m, &p, DEFAULT_FALLBACK_TOL).unwrap();
        let mm = neumann_to_dirichlet(&m, &p, DEFAULT_FALLBACK_TOL).unwrap();
        let prod = &n.matrix * (-&mm.matrix);
        assert!((prod - DMatrix::identity(n.matrix.nrows(), n.matrix.nrows())).amax() < 1e-9);
        let f1 = frame_from_map(&m, &n);
        let f2 = frame_from_map(&m, &mm);
        assert!(principal_sines(&f1, &f2).last().unwrap() < &1e-9);
        assert!(f1.isotropy_defect() < 1e-12 && f2.isotropy_defect() < 1e-12);
    }

    #[test]
    fn harmonic_upsilon_contains_constants() {
        let m = model(2, 9, 0.0);
        let u = upsilon_frame(&m, &pt(0.0, 1.0), DEFAULT_FALLBACK_TOL).unwrap();
        let hn = LagrangianFrame::neumann(u.frame.half_dim());
        assert_eq!(intersection_dim(&u.frame, &hn, DEFAULT_INTERSECTION_TOL).unwrap().0, 1);
    }
}
