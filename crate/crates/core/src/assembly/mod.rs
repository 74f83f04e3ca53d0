//! Discrete operators for L_s = −Δ + V_s and the boundary-condition couplings.

mod bc;
mod path;
mod pencil;
mod stiffness;

pub use bc::{BoundaryCondition, BoundaryKind, BoundaryOperator};
pub use path::{GammaPath, PathPoint, Segment};
pub use pencil::{assemble_pencil, kernel_basis, morse_index, weak_neumann_trace, Embedding, Model, MorseCount, SchrodingerPencil};
pub use stiffness::StiffnessMass;
