use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaslovError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("operator not symmetric: relative defect {defect:.3e} exceeds {tol:.1e}")]
    Asymmetric { defect: f64, tol: f64 },

    #[error("dirichlet spectrum hit at s = {s}: interior block has near-zero eigenvalue {eigenvalue:.3e}")]
    DirichletSpectrumHit { s: f64, eigenvalue: f64 },

    #[error("neumann spectrum hit at s = {s}: full operator has near-zero eigenvalue {eigenvalue:.3e}")]
    NeumannSpectrumHit { s: f64, eigenvalue: f64 },

    #[error("both trace maps singular at s = {0}; perturb the sample point")]
    BothMapsSingular(f64),

    #[error("indefinite boundary operator: Dirichlet-based conditions require a nonpositive operator (largest eigenvalue {0:.3e})")]
    IndefiniteBoundaryOperator(f64),

    #[error("degenerate crossing at s = {s}: form eigenvalues {eigenvalues:?}")]
    DegenerateCrossing { s: f64, eigenvalues: Vec<f64> },

    #[error("unresolved crossing cluster in [{a}, {b}]; increase the number of samples")]
    UnresolvedCluster { a: f64, b: f64 },

    #[error("eigenphase tracking ambiguous in [{a}, {b}] after maximal refinement")]
    PhaseTracking { a: f64, b: f64 },

    #[error("degenerate second-order form on ker(B): smallest |eigenvalue| {0:.3e}")]
    DegenerateSecondOrderForm(f64),

    #[error("branch tracking ambiguous between branches {0} and {1} at tau = {2}")]
    BranchCrossing(usize, usize, f64),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("eigen-solver failure: {0}")]
    Solver(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<MaslovError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MaslovError>;
