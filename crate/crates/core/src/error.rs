use thiserror::Error;

/// Failure modes shared by the geometry modules.
///
/// Precondition failures (tracelessness, Codazzi property, conformal flatness,
/// minimality) are distinct variants so the suite runner can record them as
/// `inapplicable` rather than as failed checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("metric is singular or not positive definite ({0})")]
    SingularMetric(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("point lies within {margin:.3e} of the chart boundary (distance {distance:.3e})")]
    BoundaryMargin { distance: f64, margin: f64 },

    #[error("vectors do not span a plane")]
    DegeneratePlane,

    #[error("immersion Jacobian is rank deficient at this point")]
    DegenerateImmersion,

    #[error("dimension {found} not supported here (requires {required})")]
    Dimension { required: String, found: usize },

    #[error("tensor is not traceless (|trace| = {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("field is not Codazzi at this point (residual {residual:.3e})")]
    NotCodazzi { residual: f64 },

    #[error("field trace is not locally constant (|d trace| = {gradient:.3e})")]
    NonConstantTrace { gradient: f64 },

    #[error("field does not commute with Ricci ({commutator:.3e} > {tolerance:.3e})")]
    NonCommuting { commutator: f64, tolerance: f64 },

    #[error("tensor norm {norm:.3e} too small for the gradient of the norm to exist")]
    VanishingNorm { norm: f64 },

    #[error("point is not conformally flat (reconstruction residual {residual:.3e})")]
    NotConformallyFlat { residual: f64 },

    #[error("hypersurface is not minimal here (|H| = {mean_curvature:.3e})")]
    NotMinimal { mean_curvature: f64 },

    #[error("basis and geometry belong to different points")]
    PointMismatch,

    #[error("unsupported construction: {0}")]
    UnsupportedConstruction(String),
}

impl GeomError {
    /// True for errors that mean "a documented precondition of the check failed".
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            GeomError::NotTraceless { .. }
                | GeomError::NotCodazzi { .. }
                | GeomError::NonConstantTrace { .. }
                | GeomError::NonCommuting { .. }
                | GeomError::VanishingNorm { .. }
                | GeomError::NotConformallyFlat { .. }
                | GeomError::NotMinimal { .. }
                | GeomError::Dimension { .. }
                | GeomError::UnsupportedConstruction(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
