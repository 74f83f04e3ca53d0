//! Maslov crossing forms on the kernel at a conjugate point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::{GammaPath, Model, PathPoint, Segment};
use crate::error::{MaslovError, Result};
use crate::grid::GridDomain;
use crate::linalg::symmetrize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormRoute {
    /// (1/t)⟨V̇u,u⟩ − (ṫ/t²)⟨γ_N u, γ_D u⟩ with the weak Neumann trace.
    General,
    /// −t⁻² Σ w |γ_N u|² (ν·x): Dirichlet condition on Σ₂ only.
    Hadamard,
    /// Boundary integral with reconstructed gradients: Σ₂ only.
    BoundaryIntegral,
}

/// (n₊, n₋, degenerate, eigenvalues) of a symmetric form.
pub fn form_signature(form: &DMatrix<f64>, tol_rel: f64) -> (usize, usize, bool, Vec<f64>) {
    if form.nrows() == 0 {
        return (0, 0, false, Vec::new());
    }
    let mut f = form.clone();
    symmetrize(&mut f);
    let mut vals: Vec<f64> = f.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let scale = vals.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = tol_rel * scale;
    let np = vals.iter().filter(|&&v| v > tol).count();
    let nm = vals.iter().filter(|&&v| v < -tol).count();
    (np, nm, np + nm < vals.len(), vals)
}

/// Node-block dot product Σ_c a[node·N + c] b[node·N + c].
fn block_dot(a: &DVector<f64>, b: &DVector<f64>, node: usize, n_sys: usize) -> f64 {
    (0..n_sys).map(|c| a[node * n_sys + c] * b[node * n_sys + c]).sum()
}

pub(crate) fn general_form(model: &Model, path: &GammaPath, point: &PathPoint, kernel: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let sm = &model.sm;
    let grid = &sm.grid;
    let n_sys = sm.n_sys;
    let (ldot, tdot) = path.velocity(point.segment);
    let (t, lambda) = (point.t, point.lambda);
    let local = model.local_operator(point)?;
    let samples = model.samples(t)?;
    let vdot: Vec<DMatrix<f64>> = (0..grid.num_nodes())
        .map(|i| {
            let shift = DMatrix::identity(n_sys, n_sys) * lambda;
            let radial = model.potential.radial_derivative(grid.coords[i], t);
            (&samples[i] * 2.0 * t - shift * 2.0 * t + radial * t * t) * tdot - DMatrix::identity(n_sys, n_sys) * (ldot * t * t)
        })
        .collect();
    let traces: Vec<(DVector<f64>, DVector<f64>)> = kernel.iter().map(|u| Ok((sm.trace(u), model.neumann_trace(&local, u)?))).collect::<Result<_>>()?;
    let k = kernel.len();
    let mut form = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let mut vol = 0.0;
            for (node, vd) in vdot.iter().enumerate() {
                let w = grid.volume_weights[node];
                let ua = kernel[a].rows(node * n_sys, n_sys);
                let ub = kernel[b].rows(node * n_sys, n_sys);
                vol += w * (ua.transpose() * vd * ub)[(0, 0)];
            }
            let (fa, ga) = &traces[a];
            let (fb, gb) = &traces[b];
            let bnd: f64 = (0..fa.len()).map(|p| sm.m_b[p] * 0.5 * (fa[p] * gb[p] + fb[p] * ga[p])).sum();
            let v = vol / t - tdot / (t * t) * bnd;
            form[(a, b)] = v;
            form[(b, a)] = v;
        }
    }
    Ok(form)
}

pub(crate) fn hadamard_form(model: &Model, point: &PathPoint, kernel: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    if !model.is_pure_dirichlet() || point.segment != Segment::Sigma2 {
        return Err(MaslovError::Input("the Hadamard form applies to the Dirichlet condition on Σ₂ only".into()));
    }
    let sm = &model.sm;
    let grid = &sm.grid;
    let n_sys = sm.n_sys;
    let t = point.t;
    let local = model.local_operator(point)?;
    let gn: Vec<DVector<f64>> = kernel.iter().map(|u| model.neumann_trace(&local, u)).collect::<Result<_>>()?;
    let k = kernel.len();
    let mut form = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let mut acc = 0.0;
            for (p, _) in grid.boundary_nodes.iter().enumerate() {
                acc += grid.boundary_weights[p] * grid.nu_dot_x[p] * block_dot(&gn[a], &gn[b], p, n_sys);
            }
            let v = -acc / (t * t);
            form[(a, b)] = v;
            form[(b, a)] = v;
        }
    }
    Ok(form)
}

/// Per-axis gradient of every component at each boundary node: central differences
/// inside a face, second-order one-sided differences at face ends and across the boundary.
pub fn boundary_gradients(grid: &GridDomain, n_sys: usize, u: &DVector<f64>) -> Vec<Vec<[f64; 2]>> {
    let n = grid.n;
    let h = grid.h;
    let val = |node: usize, c: usize| u[node * n_sys + c];
    let axis_diff = |i: usize, j: usize, axis: usize, c: usize| -> f64 {
        let idx = if axis == 0 { i } else { j };
        let at = |q: usize| if axis == 0 { grid.node(q, j) } else { grid.node(i, q) };
        if idx == 0 {
            (-3.0 * val(at(0), c) + 4.0 * val(at(1), c) - val(at(2), c)) / (2.0 * h)
        } else if idx == n - 1 {
            (3.0 * val(at(n - 1), c) - 4.0 * val(at(n - 2), c) + val(at(n - 3), c)) / (2.0 * h)
        } else {
            (val(at(idx + 1), c) - val(at(idx - 1), c)) / (2.0 * h)
        }
    };
    grid.boundary_nodes
        .iter()
        .map(|&node| {
            let (i, j) = grid.ij(node);
            (0..n_sys)
                .map(|c| {
                    let gx = axis_diff(i, j, 0, c);
                    let gy = if grid.d == 2 { axis_diff(i, j, 1, c) } else { 0.0 };
                    [gx, gy]
                })
                .collect()
        })
        .collect()
}

pub(crate) fn boundary_integral_form(model: &Model, point: &PathPoint, kernel: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    if point.segment != Segment::Sigma2 {
        return Err(MaslovError::Input("the boundary-integral form applies on Σ₂ only".into()));
    }
    let sm = &model.sm;
    let grid = &sm.grid;
    let n_sys = sm.n_sys;
    let t = point.t;
    let d = grid.d as f64;
    let grads: Vec<Vec<Vec<[f64; 2]>>> = kernel.iter().map(|u| boundary_gradients(grid, n_sys, u)).collect();
    let k = kernel.len();
    let mut form = DMatrix::zeros(k, k);
    for (p, &node) in grid.boundary_nodes.iter().enumerate() {
        let x = grid.coords[node];
        let v = model.potential.eval([t * x[0], t * x[1]]);
        for part in &grid.face_parts[p] {
            let nu = part.normal;
            let nux = nu[0] * x[0] + nu[1] * x[1];
            for a in 0..k {
                for b in a..k {
                    let mut grad_term = 0.0;
                    for c in 0..n_sys {
                        let ga = grads[a][p][c];
                        let gb = grads[b][p][c];
                        let ua = kernel[a][node * n_sys + c];
                        let ub = kernel[b][node * n_sys + c];
                        let dna = nu[0] * ga[0] + nu[1] * ga[1];
                        let dnb = nu[0] * gb[0] + nu[1] * gb[1];
                        let xa = x[0] * ga[0] + x[1] * ga[1];
                        let xb = x[0] * gb[0] + x[1] * gb[1];
                        grad_term += (ga[0] * gb[0] + ga[1] * gb[1]) * nux - xa * dnb - xb * dna + (1.0 - d) * 0.5 * (dna * ub + dnb * ua);
                    }
                    let ua = kernel[a].rows(node * n_sys, n_sys);
                    let ub = kernel[b].rows(node * n_sys, n_sys);
                    let pot = (ua.transpose() * &v * ub)[(0, 0)] * nux;
                    let val = part.weight * (grad_term / (t * t) + pot);
                    form[(a, b)] += val;
                    if a != b {
                        form[(b, a)] += val;
                    }
                }
            }
        }
    }
    Ok(form)
}

pub(crate) fn evaluate(route: FormRoute, model: &Model, path: &GammaPath, point: &PathPoint, kernel: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    match route {
        FormRoute::General => general_form(model, path, point, kernel),
        FormRoute::Hadamard => hadamard_form(model, point, kernel),
        FormRoute::BoundaryIntegral => boundary_integral_form(model, point, kernel),
    }
}
