use nalgebra::{DMatrix, DVector};

use crate::grid::GridDomain;

/// Natural stiffness form, lumped volume mass and boundary mass for an N-component system.
///
/// Degrees of freedom are ordered node-major: dof = node·N + component. Boundary
/// coordinates follow `grid.boundary_nodes` with the same component layout.
#[derive(Debug, Clone)]
pub struct StiffnessMass {
    pub grid: GridDomain,
    pub n_sys: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub m_vol: DVector<f64>,
    pub m_b: DVector<f64>,
    pub boundary_dofs: Vec<usize>,
    pub interior_dofs: Vec<usize>,
}

impl StiffnessMass {
    pub fn new(grid: &GridDomain, n_sys: usize) -> Self {
        let nn = grid.num_nodes();
        let m_vol = DVector::from_fn(nn * n_sys, |i, _| grid.volume_weights[i / n_sys]);
        let m_b = DVector::from_fn(grid.boundary_nodes.len() * n_sys, |i, _| grid.boundary_weights[i / n_sys]);
        let expand = |nodes: &[usize]| nodes.iter().flat_map(|&v| (0..n_sys).map(move |c| v * n_sys + c)).collect::<Vec<_>>();
        Self {
            edges: grid.edges(),
            boundary_dofs: expand(&grid.boundary_nodes),
            interior_dofs: expand(&grid.interior_nodes),
            grid: grid.clone(),
            n_sys,
            m_vol,
            m_b,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.m_vol.len()
    }

    pub fn num_boundary_dofs(&self) -> usize {
        self.m_b.len()
    }

    /// Dense stiffness matrix K (natural boundary form).
    pub fn stiffness(&self) -> DMatrix<f64> {
        let n = self.num_dofs();
        let mut k = DMatrix::zeros(n, n);
        for &(a, b, c) in &self.edges {
            for comp in 0..self.n_sys {
                let (i, j) = (a * self.n_sys + comp, b * self.n_sys + comp);
                k[(i, i)] += c;
                k[(j, j)] += c;
                k[(i, j)] -= c;
                k[(j, i)] -= c;
            }
        }
        k
    }

    /// (∇φ, ∇u)_h as a sum over edges.
    pub fn gradient_pairing(&self, phi: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for &(a, b, c) in &self.edges {
            for comp in 0..self.n_sys {
                let (i, j) = (a * self.n_sys + comp, b * self.n_sys + comp);
                acc += c * (phi[i] - phi[j]) * (u[i] - u[j]);
            }
        }
        acc
    }

    /// γ_D: restriction to boundary coordinates.
    pub fn trace(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.boundary_dofs.len(), self.boundary_dofs.iter().map(|&i| u[i]))
    }

    /// γ_Dᵀ: extension by zero from boundary coordinates.
    pub fn extend(&self, f: &DVector<f64>) -> DVector<f64> {
        let mut u = DVector::zeros(self.num_dofs());
        for (k, &i) in self.boundary_dofs.iter().enumerate() {
            u[i] = f[k];
        }
        u
    }

    /// K + M_vol·V_s with V_s = t²(V(t·x) − λ), given the samples V(t·x_i).
    pub fn local_operator(&self, stiffness: &DMatrix<f64>, samples: &[DMatrix<f64>], t: f64, lambda: f64) -> DMatrix<f64> {
        let mut a = stiffness.clone();
        let nsys = self.n_sys;
        for (node, v) in samples.iter().enumerate() {
            let w = self.grid.volume_weights[node] * t * t;
            for p in 0..nsys {
                for q in 0..nsys {
                    let shift = if p == q { lambda } else { 0.0 };
                    a[(node * nsys + p, node * nsys + q)] += w * (v[(p, q)] - shift);
                }
            }
        }
        a
    }
}
