use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(
        "solver accuracy: propagator unitarity residual {residual:.3e} exceeds tolerance \
         with {time_steps} steps per period; increase time_steps"
    )]
    SolverAccuracy { residual: f64, time_steps: usize },

    #[error(
        "monodromy is numerically defective (Schur off-diagonal {residual:.3e}); \
         perturb the model parameters slightly"
    )]
    DefectiveMonodromy { residual: f64 },

    #[error(
        "extended-space truncation: edge-block population {edge_population:.3e} at cutoff \
         {cutoff}; increase harmonic_cutoff"
    )]
    Truncation { edge_population: f64, cutoff: usize },

    #[error("harmonic cutoff {harmonics} violates Nyquist limit for {time_samples} time samples")]
    Nyquist { harmonics: usize, time_samples: usize },

    #[error("harmonic cutoff too small: need {needed}, dipole set carries {available}")]
    Cutoff { needed: usize, available: usize },

    #[error(
        "symmetry classification failed for state {state}: eigenvalue is {distance:.3e} away \
         from the nearest root of unity (unverified symmetry or unresolved degeneracy)"
    )]
    Classification { state: usize, distance: f64 },

    #[error(
        "no particle-hole partner for state {state} (broken symmetry or branch mismatch)"
    )]
    Pairing { state: usize },

    #[error("symmetry rule not applicable: {}", reasons.join("; "))]
    Inapplicable { reasons: Vec<String> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
