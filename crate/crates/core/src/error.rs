use crate::linalg::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lattice region yields {found} candidate sites, need at least {needed}")]
    InsufficientCandidates { needed: usize, found: usize },

    #[error("position inside the 0.5 nm exclusion radius: dipolar form invalid at {0} nm")]
    InsideExclusionRadius(f64),

    #[error("register of {0} qubits exceeds the {max}-qubit capacity", max = crate::qsim::MAX_QUBITS)]
    Capacity(usize),

    #[error("qubit index {index} out of range for {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error(
        "unsupported polarization vector ({0}, {1}, {2}); supported families: (0,0,1), (0,0,0), \
         (0,0,cos th), (1,0,0), (sin th1 sin th2, 0, cos th1)"
    )]
    UnsupportedPolarization(f64, f64, f64),

    #[error("series time grids differ; refusing to combine without resampling")]
    GridMismatch,

    #[error("qubits {0} and {1} are not connected in the coupling map")]
    Disconnected(usize, usize),

    #[error("invalid Bloch vector {0:?}: norm exceeds 1")]
    InvalidBlochVector(Vec3),

    #[error("shot mode requires at least 2 shots, got {0}")]
    TooFewShots(u64),

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
