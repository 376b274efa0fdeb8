use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("odd grid count: {0}")]
    OddGridCount(usize),
    #[error("grid count {0} below the minimum of 8")]
    GridTooSmall(usize),
    #[error("empty extent [{lo}, {hi})")]
    EmptyExtent { lo: f64, hi: f64 },
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("conditioning on null event")]
    NullEvent,
    #[error("non-finite symbol value on the support of the density")]
    NonFiniteSymbol,
    #[error("symbol is not differentiable: {0}")]
    Undifferentiable(String),
    #[error("norm drift {drift:.3e} at t = {time} exceeds 1e-4; reduce the step")]
    Instability { drift: f64, time: f64 },
    #[error("step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("grid is not symmetric about the origin")]
    AsymmetricGrid,
    #[error("incompatible grid: {0}")]
    IncompatibleGrid(String),
    #[error("window truncation mass {mass:.3e} at the offset-grid edge exceeds 1e-10")]
    WindowTruncation { mass: f64 },
    #[error("bandwidth overflow: relative tail mass {tail:.3e} near the momentum edge")]
    BandwidthOverflow { tail: f64 },
    #[error("symbol aliasing: second difference {ratio:.3e} of the sampled symbol relative to its range")]
    SymbolAliasing { ratio: f64 },
    #[error("state leaves the projected subspace: relative residual {residual:.3e}")]
    OutOfSubspace { residual: f64 },
    #[error("window profile must be real")]
    NonRealProfile,
    #[error("window is not differentiable: {0}")]
    NonDifferentiableWindow(String),
    #[error("magnetic field must be uniform")]
    NonUniformField,
    #[error("capability: {0}")]
    Capability(String),
    #[error("at least 3 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
