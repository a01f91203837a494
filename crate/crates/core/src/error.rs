use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate form")]
    DegenerateForm,
    #[error("odd rank")]
    OddRank,
    #[error("matrix is not antisymmetric")]
    NotAntisymmetric,
    #[error("basis is odd or linearly dependent")]
    BadBasis,
    #[error("no compatible complex structure within bound {bound}")]
    NoComplexStructure { bound: i64 },
    #[error("torsion undecidable at tolerance")]
    TorsionUndecidable,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a polarization")]
    NotAPolarization,
    #[error("kernel not isotropic")]
    KernelNotIsotropic,
    #[error("parameters outside the admissible range 2 <= delta <= n <= g/2 (n={n}, g={g}, delta={delta})")]
    ParametersOutOfRange { n: usize, g: usize, delta: u64 },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("rank deficiency: {0}")]
    RankDeficient(String),
    #[error("imaginary part of the period matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("truncation tolerance must be positive")]
    NonPositiveEps,
    #[error("no base point found")]
    NoBasePoint,
    #[error("ill-conditioned sample system: increase grid_size")]
    IllConditioned,
    #[error("not on divisor")]
    NotOnDivisor,
    #[error("Gauss map undefined at a singular point")]
    GaussUndefined,
    #[error("invalid base point: {0}")]
    InvalidBasePoint(String),
    #[error("translate contained in Sing(Theta)")]
    TranslateSingular,
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("numerical inconsistency: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
