use nalgebra::DMatrix;

use super::stiffness::StiffnessMass;
use crate::error::{MaslovError, Result};

/// Boundary operator Θ (or Θ′) acting on boundary coordinates.
#[derive(Debug, Clone)]
pub enum BoundaryOperator {
    /// The same N×N block at every boundary node.
    Uniform(DMatrix<f64>),
    /// One N×N block per boundary node, in `grid.boundary_nodes` order.
    PerNode(Vec<DMatrix<f64>>),
    /// A full m×m operator (m = boundary nodes × N), possibly nonlocal.
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    DirichletBased,
    NeumannBased,
}

/// G = Gr′(Θ′) (Dirichlet-based) or G = Gr(Θ) (Neumann-based).
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    pub operator: BoundaryOperator,
}

impl BoundaryCondition {
    pub fn dirichlet(n_sys: usize) -> Self {
        Self { kind: BoundaryKind::DirichletBased, operator: BoundaryOperator::Uniform(DMatrix::zeros(n_sys, n_sys)) }
    }

    pub fn neumann(n_sys: usize) -> Self {
        Self { kind: BoundaryKind::NeumannBased, operator: BoundaryOperator::Uniform(DMatrix::zeros(n_sys, n_sys)) }
    }

    /// Scalar Robin coefficient θ·I_N.
    pub fn robin(n_sys: usize, theta: f64) -> Self {
        Self { kind: BoundaryKind::NeumannBased, operator: BoundaryOperator::Uniform(DMatrix::identity(n_sys, n_sys) * theta) }
    }

    pub fn robin_matrix(theta: DMatrix<f64>) -> Self {
        Self { kind: BoundaryKind::NeumannBased, operator: BoundaryOperator::Uniform(theta) }
    }

    pub fn neumann_based(operator: BoundaryOperator) -> Self {
        Self { kind: BoundaryKind::NeumannBased, operator }
    }

    pub fn dirichlet_based(operator: BoundaryOperator) -> Self {
        Self { kind: BoundaryKind::DirichletBased, operator }
    }

    /// Physical m×m matrix of the operator, checked for M_b-symmetry.
    pub fn matrix(&self, sm: &StiffnessMass) -> Result<DMatrix<f64>> {
        let m = sm.num_boundary_dofs();
        let n = sm.n_sys;
        let nb = sm.grid.boundary_nodes.len();
        let block = |out: &mut DMatrix<f64>, b: usize, blk: &DMatrix<f64>| -> Result<()> {
            if blk.nrows() != n || blk.ncols() != n {
                return Err(MaslovError::Input(format!("boundary block must be {n}x{n}")));
            }
            out.view_mut((b * n, b * n), (n, n)).copy_from(blk);
            Ok(())
        };
        let theta = match &self.operator {
            BoundaryOperator::Uniform(blk) => {
                let mut out = DMatrix::zeros(m, m);
                for b in 0..nb {
                    block(&mut out, b, blk)?;
                }
                out
            }
            BoundaryOperator::PerNode(blocks) => {
                if blocks.len() != nb {
                    return Err(MaslovError::Input(format!("expected {nb} boundary blocks, got {}", blocks.len())));
                }
                let mut out = DMatrix::zeros(m, m);
                for (b, blk) in blocks.iter().enumerate() {
                    block(&mut out, b, blk)?;
                }
                out
            }
            BoundaryOperator::Dense(a) => {
                if a.nrows() != m || a.ncols() != m {
                    return Err(MaslovError::Input(format!("boundary operator must be {m}x{m}")));
                }
                a.clone()
            }
        };
        let wt = DMatrix::from_fn(m, m, |i, j| sm.m_b[i] * theta[(i, j)]);
        let scale = wt.norm();
        if scale > 0.0 {
            let defect = (&wt - wt.transpose()).norm() / scale;
            if defect > 1e-10 {
                return Err(MaslovError::Asymmetric { defect, tol: 1e-10 });
            }
        }
        Ok(theta)
    }

    pub fn is_zero(&self) -> bool {
        match &self.operator {
            BoundaryOperator::Uniform(b) => b.iter().all(|&v| v == 0.0),
            BoundaryOperator::PerNode(bs) => bs.iter().all(|b| b.iter().all(|&v| v == 0.0)),
            BoundaryOperator::Dense(a) => a.iter().all(|&v| v == 0.0),
        }
    }

    /// The operator is given by the same block on every boundary node.
    pub fn uniform_block(&self) -> Option<&DMatrix<f64>> {
        match &self.operator {
            BoundaryOperator::Uniform(b) => Some(b),
            _ => None,
        }
    }
}
