use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("points span an affine subspace of dimension {affine_dim}")]
    DegenerateHull { affine_dim: usize },

    #[error("region is empty")]
    EmptyRegion,

    #[error("region is unbounded and therefore not a polytope")]
    NotPolytope,

    #[error("projection is flat: affine dimension {affine_dim}")]
    FlatProjection {
        affine_dim: usize,
        /// A point of the affine hull followed by an orthonormal basis of its
        /// direction space.
        origin: Vec<f64>,
        affine_basis: Vec<Vec<f64>>,
    },

    #[error("Fourier-Motzkin elimination produced {rows} rows, exceeding the cap of {cap}")]
    RowExplosion { rows: usize, cap: usize },

    #[error("area {area}: operating region is empty (InfeasibleArea)")]
    InfeasibleArea { area: usize },

    #[error("feeder {feeder}: operating region is empty (InfeasibleFeeder)")]
    InfeasibleFeeder { feeder: usize },

    #[error("feeder {feeder} is not radial: {reason}")]
    NonRadial { feeder: usize, reason: String },

    #[error("coordinator problem is infeasible (InfeasibleCoordination)")]
    InfeasibleCoordination,

    #[error("boundary schedule is infeasible for subsystem {subsystem} (InfeasibleBoundary)")]
    InfeasibleBoundary { subsystem: usize },

    #[error("joint dispatch problem is infeasible")]
    Infeasible,

    #[error("{path}: {message} (line {line}, column {column})")]
    Schema { path: String, line: usize, column: usize, message: String },

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Lp(#[from] LpError),
}
