use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryCondition, BoundaryOperator, Model};
use crate::error::{MaslovError, Result};
use crate::grid::build_square_grid;
use crate::maslov::{LambdaChoice, MaslovOptions};
use crate::potential::{PolyTerm, PotentialField};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub d: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: Vec<Vec<f64>>,
    /// Exponents (p, q) of x₁^p·x₂^q.
    pub powers: [u32; 2],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinPotential {
    /// V(x) = −(c + a|x|²)·I_N.
    RadialWell,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// value·I_N.
    Scalar {
        n_sys: usize,
        value: f64,
    },
    Constant {
        value: Vec<Vec<f64>>,
    },
    Polynomial {
        terms: Vec<TermSpec>,
    },
    Builtin {
        name: BuiltinPotential,
        n_sys: usize,
        #[serde(default)]
        c: f64,
        #[serde(default)]
        a: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BcSpec {
    Dirichlet,
    Neumann,
    /// Scalar Robin coefficient θ·I_N.
    Robin {
        theta: f64,
    },
    /// One N×N block used at every boundary node: Θ for Neumann-based, Θ′ for Dirichlet-based.
    MatrixTheta {
        theta: Vec<Vec<f64>>,
        #[serde(default)]
        dirichlet_based: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LambdaSpec {
    Fixed(f64),
    /// Only "auto" is accepted.
    Named(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_lambda", rename = "Lambda")]
    pub lambda: LambdaSpec,
}

fn default_tau() -> f64 {
    0.1
}

fn default_lambda() -> LambdaSpec {
    LambdaSpec::Named("auto".into())
}

impl Default for PathSpec {
    fn default() -> Self {
        Self { tau: default_tau(), lambda: default_lambda() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSpec {
    /// Fit grid τ = 2^{−p}, p in [p_min, p_max].
    pub fit_p: [i32; 2],
    /// τ list for the small-τ Morse check.
    pub morse_p: [i32; 2],
    /// Relative tolerance on fitted slopes and curvatures.
    pub tolerance: f64,
    /// Absolute tolerance for the exact constant-potential identity.
    pub exact_tolerance: f64,
}

impl Default for AsymptoticsSpec {
    fn default() -> Self {
        Self { fit_p: [4, 9], morse_p: [1, 9], tolerance: 1e-2, exact_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DtnSpec {
    /// Randomly placed sample points per segment (seeded).
    pub samples_per_segment: usize,
    pub symmetry_tol: f64,
    pub inverse_tol: f64,
    pub angle_tol: f64,
    pub isotropy_tol: f64,
}

impl Default for DtnSpec {
    fn default() -> Self {
        Self { samples_per_segment: 6, symmetry_tol: 1e-8, inverse_tol: 1e-7, angle_tol: 1e-7, isotropy_tol: 1e-11 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    /// System dimension N; inferred from the potential when absent.
    #[serde(default)]
    pub n_sys: Option<usize>,
    pub potential: PotentialSpec,
    pub bc: BcSpec,
    #[serde(default)]
    pub path: PathSpec,
    #[serde(default)]
    pub solver: MaslovOptions,
    #[serde(default)]
    pub asymptotics: AsymptoticsSpec,
    #[serde(default)]
    pub dtn: DtnSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(MaslovError::Config(format!("{what} must be a nonempty square matrix")));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MaslovError::Config(format!("{what} has non-finite entries")));
    }
    if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(MaslovError::Config(format!("{what} must be symmetric")));
    }
    Ok(m)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| MaslovError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MaslovError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn system_dim(&self) -> Result<usize> {
        let from_potential = match &self.potential {
            PotentialSpec::Scalar { n_sys, .. } | PotentialSpec::Builtin { n_sys, .. } => *n_sys,
            PotentialSpec::Constant { value } => value.len(),
            PotentialSpec::Polynomial { terms } => terms.first().map(|t| t.coeff.len()).unwrap_or(0),
        };
        if from_potential == 0 {
            return Err(MaslovError::Config("potential has no components".into()));
        }
        if let Some(n) = self.n_sys {
            if n != from_potential {
                return Err(MaslovError::Config(format!("n_sys = {n} but the potential is {from_potential}x{from_potential}")));
            }
        }
        Ok(from_potential)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.system_dim()?;
        if self.domain.d != 1 && self.domain.d != 2 {
            return Err(MaslovError::Config(format!("domain.d must be 1 or 2, got {}", self.domain.d)));
        }
        if self.domain.n < 5 || self.domain.n.is_multiple_of(2) {
            return Err(MaslovError::Config(format!("domain.n must be odd and at least 5, got {}", self.domain.n)));
        }
        if !(self.path.tau > 0.0 && self.path.tau <= 1.0) {
            return Err(MaslovError::Config(format!("path.tau must lie in (0,1], got {}", self.path.tau)));
        }
        match &self.path.lambda {
            LambdaSpec::Fixed(v) if !(*v > 0.0 && v.is_finite()) => {
                return Err(MaslovError::Config(format!("path.Lambda must be positive, got {v}")));
            }
            LambdaSpec::Named(s) if s != "auto" => {
                return Err(MaslovError::Config(format!("path.Lambda must be a number or \"auto\", got {s:?}")));
            }
            _ => {}
        }
        let s = &self.solver;
        let positive = [
            ("refine_tol", s.refine_tol),
            ("zero_tol_rel", s.zero_tol_rel),
            ("intersection_tol", s.intersection_tol),
            ("fallback_tol", s.fallback_tol),
            ("form_tol_rel", s.form_tol_rel),
            ("max_phase_step", s.max_phase_step),
            ("phase_zero_tol", s.phase_zero_tol),
            ("asymptotics.tolerance", self.asymptotics.tolerance),
            ("asymptotics.exact_tolerance", self.asymptotics.exact_tolerance),
            ("dtn.symmetry_tol", self.dtn.symmetry_tol),
            ("dtn.inverse_tol", self.dtn.inverse_tol),
            ("dtn.angle_tol", self.dtn.angle_tol),
            ("dtn.isotropy_tol", self.dtn.isotropy_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MaslovError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if s.n_samples < 2 || s.flow_intervals < 1 {
            return Err(MaslovError::Config("solver.n_samples ≥ 2 and solver.flow_intervals ≥ 1 required".into()));
        }
        let [a, b] = self.asymptotics.fit_p;
        let [c, d] = self.asymptotics.morse_p;
        if a < 0 || b - a < 2 || c < 0 || d - c < 2 {
            return Err(MaslovError::Config("asymptotics ranges need p_min ≥ 0 and at least three values".into()));
        }
        match &self.potential {
            PotentialSpec::Constant { value } => {
                matrix(value, "potential.value")?;
            }
            PotentialSpec::Polynomial { terms } => {
                for t in terms {
                    if matrix(&t.coeff, "potential term")?.nrows() != n {
                        return Err(MaslovError::Config("potential terms differ in size".into()));
                    }
                }
            }
            _ => {}
        }
        if let BcSpec::MatrixTheta { theta, .. } = &self.bc {
            if matrix(theta, "bc.theta")?.nrows() != n {
                return Err(MaslovError::Config("bc.theta size differs from the system dimension".into()));
            }
        }
        Ok(())
    }

    pub fn potential_field(&self) -> Result<PotentialField> {
        let n = self.system_dim()?;
        match &self.potential {
            PotentialSpec::Scalar { value, .. } => Ok(PotentialField::scalar(n, *value)),
            PotentialSpec::Constant { value } => PotentialField::constant(matrix(value, "potential.value")?),
            PotentialSpec::Polynomial { terms } => {
                let terms = terms.iter().map(|t| Ok(PolyTerm { coeff: matrix(&t.coeff, "potential term")?, powers: t.powers })).collect::<Result<Vec<_>>>()?;
                PotentialField::polynomial(n, terms)
            }
            PotentialSpec::Builtin { name: BuiltinPotential::RadialWell, c, a, .. } => {
                let id = DMatrix::<f64>::identity(n, n);
                PotentialField::polynomial(
                    n,
                    vec![
                        PolyTerm { coeff: &id * -*c, powers: [0, 0] },
                        PolyTerm { coeff: &id * -*a, powers: [2, 0] },
                        PolyTerm { coeff: &id * -*a, powers: [0, 2] },
                    ],
                )
            }
        }
    }

    pub fn boundary_condition(&self) -> Result<BoundaryCondition> {
        let n = self.system_dim()?;
        Ok(match &self.bc {
            BcSpec::Dirichlet => BoundaryCondition::dirichlet(n),
            BcSpec::Neumann => BoundaryCondition::neumann(n),
            BcSpec::Robin { theta } => BoundaryCondition::robin(n, *theta),
            BcSpec::MatrixTheta { theta, dirichlet_based } => {
                let op = BoundaryOperator::Uniform(matrix(theta, "bc.theta")?);
                if *dirichlet_based {
                    BoundaryCondition::dirichlet_based(op)
                } else {
                    BoundaryCondition::neumann_based(op)
                }
            }
        })
    }

    pub fn build_model(&self) -> Result<Model> {
        let grid = build_square_grid(self.domain.d, self.domain.n)?;
        Model::new(&grid, self.potential_field()?, self.boundary_condition()?)
    }

    pub fn lambda_choice(&self) -> LambdaChoice {
        match self.path.lambda {
            LambdaSpec::Fixed(v) => LambdaChoice::Fixed(v),
            LambdaSpec::Named(_) => LambdaChoice::Auto,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"domain": {"d": 2, "n": 9}, "potential": {"type": "scalar", "n_sys": 1, "value": -30}, "bc": {"type": "dirichlet"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.path.tau, 0.1);
        assert_eq!(cfg.lambda_choice(), LambdaChoice::Auto);
        assert_eq!(cfg.solver.n_samples, 200);
        assert_eq!(cfg.system_dim().unwrap(), 1);
        assert!(cfg.build_model().is_ok());
    }

    #[test]
    fn schema_errors_are_reported() {
        let bad = [
            r#"{"domain": {"d": 2, "n": 8}, "potential": {"type": "scalar", "n_sys": 1, "value": 1}, "bc": {"type": "neumann"}}"#,
            r#"{"domain": {"d": 2, "n": 9}, "potential": {"type": "scalar", "n_sys": 1, "value": 1}, "bc": {"type": "neumann"}, "path": {"tau": 0}}"#,
            r#"{"domain": {"d": 2, "n": 9}, "potential": {"type": "scalar", "n_sys": 1, "value": 1}, "bc": {"type": "neumann"}, "path": {"Lambda": "big"}}"#,
            r#"{"domain": {"d": 2, "n": 9}, "potential": {"type": "constant", "value": [[1, 2], [0, 1]]}, "bc": {"type": "neumann"}}"#,
            r#"{"domain": {"d": 2, "n": 9}, "potential": {"type": "scalar", "n_sys": 1, "value": 1}, "bc": {"type": "neumann"}, "solver": {"refine_tol": -1}}"#,
            r#"{"domain": {"d": 2, "n": 9}, "potential": {"type": "scalar", "n_sys": 1, "value": 1}, "bc": {"type": "neumann"}, "extra": 1}"#,
            r#"{"domain": {"d": 2, "n": 9}, "n_sys": 2, "potential": {"type": "scalar", "n_sys": 1, "value": 1}, "bc": {"type": "neumann"}}"#,
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_json(text), Err(MaslovError::Config(_))), "{text}");
        }
    }

    #[test]
    fn fixed_lambda_and_matrix_theta() {
        let cfg = ExperimentConfig::from_json(
            r#"{"domain": {"d": 2, "n": 7}, "potential": {"type": "constant", "value": [[1, 0], [0, -2]]},
                "bc": {"type": "matrix-theta", "theta": [[0.3, 0], [0, 0]]}, "path": {"tau": 0.2, "Lambda": 40}}"#,
        )
        .unwrap();
        assert_eq!(cfg.lambda_choice(), LambdaChoice::Fixed(40.0));
        let m = cfg.build_model().unwrap();
        assert_eq!(m.n_sys(), 2);
    }
}
