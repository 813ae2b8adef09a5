//! Dense linear algebra, the fixed-depth MLP and the ridge solver.

pub mod linalg;
pub mod mlp;
pub mod ridge;

pub use linalg::{axpy, distance, dot, norm2, pairwise_sum, RealMatrix};
pub use mlp::{MlpParams, MlpShape, MlpTrace};
pub use ridge::{ridge_solve, ridge_solve_gram};
