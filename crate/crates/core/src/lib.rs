//! Numerical verification of Codazzi-tensor, Bochner–Weitzenböck and
//! conformal-curvature identities on concrete Riemannian charts.

pub mod catalog;
pub mod chart;
pub mod codazzi;
pub mod config;
pub mod conformal;
pub mod curvature_operator;
pub mod eigen;
pub mod error;
pub mod fd;
pub mod hypersurface;
pub mod report;
pub mod suite;
pub mod tensor;
pub mod weitzenbock;

pub use error::{GeomError, Result};
