//! Matrix-valued potentials V: Ω → Sym(N).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{MaslovError, Result};
use crate::grid::GridDomain;

/// A monomial term C·x₁^p·x₂^q.
#[derive(Debug, Clone)]
pub struct PolyTerm {
    pub coeff: DMatrix<f64>,
    pub powers: [u32; 2],
}

type Evaluator = Arc<dyn Fn([f64; 2]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant(DMatrix<f64>),
    Polynomial(Vec<PolyTerm>),
    Function(Evaluator),
}

#[derive(Clone)]
pub struct PotentialField {
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Constant(_) => "constant",
            Kind::Polynomial(_) => "polynomial",
            Kind::Function(_) => "function",
        };
        f.debug_struct("PotentialField").field("dim", &self.dim).field("kind", &kind).finish()
    }
}

fn check_square(m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(MaslovError::Input(format!("potential block must be {dim}x{dim}")));
    }
    Ok(())
}

impl PotentialField {
    pub fn constant(v: DMatrix<f64>) -> Result<Self> {
        let dim = v.nrows();
        check_square(&v, dim)?;
        Ok(Self { dim, kind: Kind::Constant(v) })
    }

    /// Scalar constant times the N×N identity.
    pub fn scalar(dim: usize, value: f64) -> Self {
        Self { dim, kind: Kind::Constant(DMatrix::identity(dim, dim) * value) }
    }

    pub fn polynomial(dim: usize, terms: Vec<PolyTerm>) -> Result<Self> {
        for t in &terms {
            check_square(&t.coeff, dim)?;
        }
        Ok(Self { dim, kind: Kind::Polynomial(terms) })
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn([f64; 2]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self { dim, kind: Kind::Function(Arc::new(f)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    pub fn eval(&self, x: [f64; 2]) -> DMatrix<f64> {
        match &self.kind {
            Kind::Constant(v) => v.clone(),
            Kind::Polynomial(terms) => {
                let mut out = DMatrix::zeros(self.dim, self.dim);
                for t in terms {
                    out += &t.coeff * (x[0].powi(t.powers[0] as i32) * x[1].powi(t.powers[1] as i32));
                }
                out
            }
            Kind::Function(f) => f(x),
        }
    }

    /// d/dt V(t·x) = ∇V(t·x)·x.
    pub fn radial_derivative(&self, x: [f64; 2], t: f64) -> DMatrix<f64> {
        match &self.kind {
            Kind::Constant(_) => DMatrix::zeros(self.dim, self.dim),
            Kind::Polynomial(terms) => {
                let mut out = DMatrix::zeros(self.dim, self.dim);
                for term in terms {
                    let deg = term.powers[0] + term.powers[1];
                    if deg == 0 {
                        continue;
                    }
                    let mono = x[0].powi(term.powers[0] as i32) * x[1].powi(term.powers[1] as i32);
                    out += &term.coeff * (deg as f64 * t.powi(deg as i32 - 1) * mono);
                }
                out
            }
            Kind::Function(f) => {
                let dt = 1e-6;
                let a = f([(t + dt) * x[0], (t + dt) * x[1]]);
                let b = f([(t - dt) * x[0], (t - dt) * x[1]]);
                (a - b) / (2.0 * dt)
            }
        }
    }

    pub fn at_origin(&self) -> DMatrix<f64> {
        self.eval([0.0, 0.0])
    }
}

/// Per-node blocks V(t·x_i); rejects non-symmetric evaluator output.
pub fn sample_potential(field: &PotentialField, grid: &GridDomain, t: f64) -> Result<Vec<DMatrix<f64>>> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(MaslovError::Input(format!("scale t must lie in (0,1], got {t}")));
    }
    grid.coords
        .iter()
        .map(|p| {
            let v = field.eval([t * p[0], t * p[1]]);
            check_square(&v, field.dim())?;
            let defect = (&v - v.transpose()).norm();
            if defect > 1e-12 * v.norm().max(1.0) {
                return Err(MaslovError::Asymmetric { defect, tol: 1e-12 });
            }
            Ok(v)
        })
        .collect()
}
