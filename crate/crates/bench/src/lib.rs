//! Fixtures shared by the kernel benchmarks.

use maslov_core::{build_square_grid, BoundaryCondition, Model, PathPoint, PotentialField, Segment};

/// Scalar Robin model with a constant well on an n×n grid.
pub fn robin_model(n: usize) -> Model {
    let g = build_square_grid(2, n).expect("odd n ≥ 3");
    Model::new(&g, PotentialField::scalar(1, -12.0), BoundaryCondition::robin(1, 0.3)).expect("valid model")
}

/// A point on Σ₂ away from the Dirichlet spectrum of the fixture.
pub fn sigma2_point() -> PathPoint {
    PathPoint { s: 0.0, lambda: 0.0, t: 0.55, segment: Segment::Sigma2 }
}
