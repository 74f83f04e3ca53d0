use nalgebra::{DMatrix, DVector};

use super::bc::{BoundaryCondition, BoundaryKind};
use super::path::{GammaPath, PathPoint};
use super::stiffness::StiffnessMass;
use crate::error::{MaslovError, Result};
use crate::grid::GridDomain;
use crate::linalg::{generalized_eigen, symmetrize, GeneralizedEigen, Mass};
use crate::potential::{sample_potential, PotentialField};
use crate::symplectic::{LagrangianFrame, SymplecticSpace};

/// Relative zero tolerance for pencil eigenvalues (× largest |eigenvalue|).
pub const DEFAULT_ZERO_TOL_REL: f64 = 1e-8;

/// Map from the pencil's coordinates to full nodal vectors.
#[derive(Debug, Clone)]
pub enum Embedding {
    Identity(usize),
    Select { full_dim: usize, dofs: Vec<usize> },
    Dense(DMatrix<f64>),
}

impl Embedding {
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Embedding::Identity(_) => x.clone(),
            Embedding::Select { full_dim, dofs } => {
                let mut u = DVector::zeros(*full_dim);
                for (k, &i) in dofs.iter().enumerate() {
                    u[i] = x[k];
                }
                u
            }
            Embedding::Dense(p) => p * x,
        }
    }
}

/// Symmetric pencil (A(s), M) realizing L_{s,G}(τ) at one path point.
#[derive(Debug, Clone)]
pub struct SchrodingerPencil {
    pub a: DMatrix<f64>,
    pub mass: Mass,
    pub embedding: Embedding,
    pub point: PathPoint,
}

impl SchrodingerPencil {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn eigen(&self, vectors: bool) -> Result<GeneralizedEigen> {
        generalized_eigen(&self.a, &self.mass, vectors)
    }
}

/// Elimination data for a Dirichlet-based condition with Θ′ ≤ 0, Θ′ ≠ 0.
#[derive(Debug, Clone)]
struct DirichletReduction {
    /// Boundary values W^{-1/2}E₋ of the free boundary coordinates.
    embed_b: DMatrix<f64>,
    /// 1/|θ_k| for the strictly negative eigenvalues of the normalized Θ′.
    coupling: DVector<f64>,
    embedding: DMatrix<f64>,
    mass: DMatrix<f64>,
}

/// The discrete problem: grid, potential, boundary condition, and cached operators.
#[derive(Debug, Clone)]
pub struct Model {
    pub sm: StiffnessMass,
    pub potential: PotentialField,
    pub bc: BoundaryCondition,
    pub space: SymplecticSpace,
    pub stiffness: DMatrix<f64>,
    theta: DMatrix<f64>,
    reduction: Option<DirichletReduction>,
    reference: LagrangianFrame,
}

impl Model {
    pub fn new(grid: &GridDomain, potential: PotentialField, bc: BoundaryCondition) -> Result<Self> {
        let n_sys = potential.dim();
        let sm = StiffnessMass::new(grid, n_sys);
        let space = SymplecticSpace::new(sm.m_b.clone())?;
        let theta = bc.matrix(&sm)?;
        let theta_n = space.normalize_operator(&theta);
        let mut reduction = None;
        let reference = match bc.kind {
            BoundaryKind::NeumannBased => LagrangianFrame::graph_normalized(&theta_n),
            BoundaryKind::DirichletBased => {
                reduction = dirichlet_reduction(&sm, &theta_n)?;
                LagrangianFrame::inverse_graph_normalized(&theta_n)
            }
        };
        Ok(Self { stiffness: sm.stiffness(), sm, potential, bc, space, theta, reduction, reference })
    }

    pub fn n_sys(&self) -> usize {
        self.sm.n_sys
    }

    pub fn grid(&self) -> &GridDomain {
        &self.sm.grid
    }

    /// Θ (or Θ′) in physical boundary coordinates.
    pub fn boundary_operator(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// The reference Lagrangian G in normalized coordinates.
    pub fn reference_frame(&self) -> &LagrangianFrame {
        &self.reference
    }

    pub fn kind(&self) -> BoundaryKind {
        self.bc.kind
    }

    /// Dirichlet-based with Θ′ = 0 up to the elimination tolerance.
    pub fn is_pure_dirichlet(&self) -> bool {
        self.bc.kind == BoundaryKind::DirichletBased && self.reduction.is_none()
    }

    pub fn samples(&self, t: f64) -> Result<Vec<DMatrix<f64>>> {
        sample_potential(&self.potential, &self.sm.grid, t)
    }

    /// K + M_vol·V_s on all nodes (no boundary condition).
    pub fn local_operator(&self, point: &PathPoint) -> Result<DMatrix<f64>> {
        let samples = self.samples(point.t)?;
        Ok(self.sm.local_operator(&self.stiffness, &samples, point.t, point.lambda))
    }

    pub fn pencil(&self, point: &PathPoint) -> Result<SchrodingerPencil> {
        let local = self.local_operator(point)?;
        self.pencil_from_local(&local, point)
    }

    pub fn pencil_from_local(&self, local: &DMatrix<f64>, point: &PathPoint) -> Result<SchrodingerPencil> {
        let sm = &self.sm;
        let full = sm.num_dofs();
        let t = point.t;
        match self.bc.kind {
            BoundaryKind::NeumannBased => {
                let mut a = local.clone();
                for (p, &i) in sm.boundary_dofs.iter().enumerate() {
                    for (q, &j) in sm.boundary_dofs.iter().enumerate() {
                        let v = sm.m_b[p] * self.theta[(p, q)];
                        if v != 0.0 {
                            a[(i, j)] -= t * v;
                        }
                    }
                }
                symmetrize(&mut a);
                Ok(SchrodingerPencil { a, mass: Mass::Diagonal(sm.m_vol.clone()), embedding: Embedding::Identity(full), point: *point })
            }
            BoundaryKind::DirichletBased => match &self.reduction {
                None => {
                    let idx = &sm.interior_dofs;
                    let a = DMatrix::from_fn(idx.len(), idx.len(), |i, j| local[(idx[i], idx[j])]);
                    let mass = DVector::from_iterator(idx.len(), idx.iter().map(|&i| sm.m_vol[i]));
                    Ok(SchrodingerPencil { a, mass: Mass::Diagonal(mass), embedding: Embedding::Select { full_dim: full, dofs: idx.clone() }, point: *point })
                }
                Some(red) => {
                    let p = &red.embedding;
                    let mut a = p.transpose() * local * p;
                    let ni = sm.interior_dofs.len();
                    for k in 0..red.coupling.len() {
                        a[(ni + k, ni + k)] += t * red.coupling[k];
                    }
                    symmetrize(&mut a);
                    Ok(SchrodingerPencil { a, mass: Mass::Dense(red.mass.clone()), embedding: Embedding::Dense(p.clone()), point: *point })
                }
            },
        }
    }

    /// γ_N u from the boundary residual of the local operator.
    pub fn neumann_trace(&self, local: &DMatrix<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        weak_neumann_trace(&self.sm, local, u)
    }

    /// Boundary values of the free boundary coordinates of a Dirichlet-based reduction.
    pub fn reduction_boundary_embedding(&self) -> Option<&DMatrix<f64>> {
        self.reduction.as_ref().map(|r| &r.embed_b)
    }
}

fn dirichlet_reduction(sm: &StiffnessMass, theta_n: &DMatrix<f64>) -> Result<Option<DirichletReduction>> {
    let m = theta_n.nrows();
    let mut ts = theta_n.clone();
    symmetrize(&mut ts);
    let eig = ts.symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let tol = 1e-10 * scale;
    let max = eig.eigenvalues.max();
    if max > tol {
        return Err(MaslovError::IndefiniteBoundaryOperator(max));
    }
    let neg: Vec<usize> = (0..m).filter(|&k| eig.eigenvalues[k] < -tol).collect();
    if neg.is_empty() {
        return Ok(None);
    }
    let r = neg.len();
    let sqrt_w = sm.m_b.map(f64::sqrt);
    let embed_b = DMatrix::from_fn(m, r, |i, k| eig.eigenvectors[(i, neg[k])] / sqrt_w[i]);
    let coupling = DVector::from_iterator(r, neg.iter().map(|&k| 1.0 / eig.eigenvalues[k].abs()));
    let ni = sm.interior_dofs.len();
    let full = sm.num_dofs();
    let mut p = DMatrix::zeros(full, ni + r);
    for (k, &i) in sm.interior_dofs.iter().enumerate() {
        p[(i, k)] = 1.0;
    }
    for (b, &i) in sm.boundary_dofs.iter().enumerate() {
        for k in 0..r {
            p[(i, ni + k)] = embed_b[(b, k)];
        }
    }
    let mut mass = p.transpose() * DMatrix::from_diagonal(&sm.m_vol) * &p;
    symmetrize(&mut mass);
    Ok(Some(DirichletReduction { embed_b, coupling, embedding: p, mass }))
}

/// Pencil of L_{s,G}(τ) at the path point s.
pub fn assemble_pencil(grid: &GridDomain, field: &PotentialField, bc: &BoundaryCondition, path: &GammaPath, s: f64) -> Result<SchrodingerPencil> {
    let model = Model::new(grid, field.clone(), bc.clone())?;
    model.pencil(&path.eval(s)?)
}

#[derive(Debug, Clone)]
pub struct MorseCount {
    pub count: usize,
    pub zero_count: usize,
    pub zero_tol: f64,
    pub eigenvalues: Vec<f64>,
}

fn resolve_tol(eig: &GeneralizedEigen, zero_tol: Option<f64>) -> f64 {
    zero_tol.unwrap_or_else(|| DEFAULT_ZERO_TOL_REL * eig.max_abs())
}

/// Number of generalized eigenvalues strictly below −zero_tol.
pub fn morse_index(pencil: &SchrodingerPencil, zero_tol: Option<f64>) -> Result<MorseCount> {
    let eig = pencil.eigen(false)?;
    let tol = resolve_tol(&eig, zero_tol);
    Ok(MorseCount {
        count: eig.count_below(-tol),
        zero_count: eig.values.iter().filter(|v| v.abs() <= tol).count(),
        zero_tol: tol,
        eigenvalues: eig.values.iter().copied().collect(),
    })
}

/// M_vol-orthonormal kernel vectors (lifted to all nodes) with |μ| ≤ zero_tol.
pub fn kernel_basis(pencil: &SchrodingerPencil, zero_tol: Option<f64>) -> Result<Vec<DVector<f64>>> {
    let eig = pencil.eigen(true)?;
    let tol = resolve_tol(&eig, zero_tol);
    let x = eig.vectors.as_ref().expect("vectors requested");
    Ok((0..eig.values.len()).filter(|&k| eig.values[k].abs() <= tol).map(|k| pencil.embedding.lift(&x.column(k).into_owned())).collect())
}

/// γ_N u := M_b⁻¹ (A_L u)|_∂Ω for a discrete weak solution u of the interior rows.
pub fn weak_neumann_trace(sm: &StiffnessMass, local: &DMatrix<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    let r = local * u;
    let scale = local.amax() * u.amax();
    let interior = sm.interior_dofs.iter().fold(0.0_f64, |m, &i| m.max(r[i].abs()));
    if scale > 0.0 && interior > 1e-9 * scale {
        return Err(MaslovError::Input(format!("not a weak solution: interior residual {:.3e}", interior / scale)));
    }
    Ok(DVector::from_iterator(sm.boundary_dofs.len(), sm.boundary_dofs.iter().enumerate().map(|(b, &i)| r[i] / sm.m_b[b])))
}
