use thiserror::Error;

/// Errors raised across the library. Each variant maps onto one of the CLI
/// exit-code classes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-manifold mesh: face {face:?} has {count} cofaces")]
    NonManifold { face: Vec<usize>, count: usize },
    #[error("mesh is not orientable (conflict at face {face:?})")]
    NonOrientable { face: Vec<usize> },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degree {degree} out of range 0..={max}")]
    DegreeOutOfRange { degree: usize, max: usize },
    #[error("degenerate simplex {simplex:?} (volume {volume:e})")]
    DegenerateSimplex { simplex: Vec<usize>, volume: f64 },
    #[error("mesh is not well-centered: circumcenter of {simplex:?} lies outside")]
    NotWellCentered { simplex: Vec<usize> },
    #[error("no clean spectral gap: last zero {last_zero:e}, first nonzero {first_nonzero:e}, ratio {ratio:e}")]
    SpectralGapTooSmall {
        last_zero: f64,
        first_nonzero: f64,
        ratio: f64,
    },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("Poincare-Lefschetz duality violated in degree {degree}: relative {relative} vs absolute {absolute}")]
    DualityViolation {
        degree: usize,
        relative: usize,
        absolute: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("plane is not special Lagrangian (residual {0:e})")]
    NotSpecialLagrangian(f64),
    #[error("tangent plane is contained in the boundary Lagrangian (d_n = {0:e})")]
    TangentEqualsLambda(f64),
    #[error("contraction by omega is singular on the given fiber")]
    SingularPhi,
    #[error("invalid immersion: {0}")]
    InvalidImmersion(String),
    #[error("simplex {0} degenerated during deformation")]
    SimplexDegenerated(usize),
    #[error("corrector diverged: {0}")]
    CorrectorDiverged(String),
    #[error("direction index {index} out of range (moduli dimension {dimension})")]
    DirectionIndexOutOfRange { index: usize, dimension: usize },
    #[error("cochain length {got} does not match {expected} simplices of degree {degree}")]
    CochainLength {
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// 2 input error, 3 empty moduli, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DirectionIndexOutOfRange { dimension: 0, .. } => 3,
            Error::SpectralGapTooSmall { .. }
            | Error::SolverFailure(_)
            | Error::DualityViolation { .. }
            | Error::DimensionMismatch(_)
            | Error::SimplexDegenerated(_)
            | Error::CorrectorDiverged(_)
            | Error::SingularPhi
            | Error::NotSpecialLagrangian(_) => 4,
            _ => 2,
        }
    }
}
