use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("violates d0 margin: distance to outer boundary {distance:.6} <= {d0}")]
    ViolatesMargin { distance: f64, d0: f64 },

    #[error("size mismatch: expected {expected} samples, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("singular evaluation: coincident points")]
    SingularEvaluation,

    #[error("boundaries must be disjoint (minimum node distance {0:.3e})")]
    BoundariesNotDisjoint(f64),

    #[error("near-singular evaluation refused: point at distance {distance:.3e} from a boundary (mesh width {mesh:.3e})")]
    NearSingularEvaluation { distance: f64, mesh: f64 },

    #[error("point is not inside the requested region")]
    OutsideRegion,

    #[error("integral system ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("capacity degeneracy: rescale geometry (single-layer condition estimate {0:.3e})")]
    CapacityDegeneracy(f64),

    #[error("Neumann data incompatible: flux balance residual {0:.3e}")]
    NeumannIncompatible(f64),

    #[error("not a critical configuration: trace mismatch {0:.3e}")]
    NotCritical(f64),

    #[error("step leaves admissible set: {0}")]
    StepLeavesAdmissibleSet(Box<Error>),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
