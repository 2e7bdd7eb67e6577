//! Numerical laboratory for the lower-critical Choquard equation
//! −Δu + V_{μ,ν}u = (I_α ∗ |u|^{(N+α)/N}) |u|^{α/N−1} u,  V_{μ,ν}(x) = 1 − μ/(ν² + |x|²).

pub mod constants;
pub mod error;
pub mod grid;
pub mod landscape;
pub mod linalg;
pub mod riesz;
pub mod special;
pub mod spectrum;
pub mod variational;

pub use constants::{ConstantsBundle, ProblemParams};
pub use error::{LabError, Result};
pub use grid::{Grading, GridSpec, RadialFn, RadialGrid};
