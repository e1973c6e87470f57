use thiserror::Error;

/// Errors produced by the symq library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bit string: {0}")]
    InvalidBitString(String),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("bit strings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("N = {n} exceeds the limit of {limit} for {what}")]
    TooManyQubits { n: usize, limit: usize, what: &'static str },

    #[error("invalid lattice triple (m, n, k) = ({m}, {n}, {k}) for N = {n_qubits}")]
    InvalidTriple { m: usize, n: usize, k: usize, n_qubits: usize },

    #[error("unknown state family `{0}`")]
    UnknownFamily(String),

    #[error("invalid state spec: {0}")]
    InvalidSpec(String),

    #[error("{what} is not available for family `{family}`")]
    Unsupported { family: String, what: &'static str },

    #[error("state `{0}` is not invariant under qubit permutations")]
    NotSymmetric(String),

    #[error("state cannot be normalized: {0}")]
    Unnormalizable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative eigenvalue {0} in dispersion matrix")]
    NegativeEigenvalue(f64),

    #[error("model is not spherically symmetric: {0}")]
    NotSpherical(String),

    #[error("unphysical spherical parameter r = {0} (must satisfy r <= 3)")]
    Unphysical(f64),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidBitString(_) => "invalid_bitstring",
            Error::NotPowerOfTwo(_) => "not_power_of_two",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::TooManyQubits { .. } => "too_many_qubits",
            Error::InvalidTriple { .. } => "invalid_triple",
            Error::UnknownFamily(_) => "unknown_family",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Unsupported { .. } => "unsupported",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::Unnormalizable(_) => "unnormalizable",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NegativeEigenvalue(_) => "negative_eigenvalue",
            Error::NotSpherical(_) => "not_spherical",
            Error::Unphysical(_) => "unphysical",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
