use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel evaluated at the singular point y = 0")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("field `{name}` claims divergence-free but max |div u| = {max_div:e} at {at:?}")]
    NotDivergenceFree { name: String, max_div: f64, at: [f64; 3] },
    #[error("non-finite value from field `{name}` at {at:?}, t = {t}")]
    NonFinite { name: String, at: [f64; 3], t: f64 },
    #[error("support touches the grid boundary (edge/max ratio {ratio:e}); refusing periodic embedding")]
    SupportTouchesBoundary { ratio: f64 },
    #[error("grid window too small: {0}")]
    WindowTooSmall(String),
    #[error("decay class `{0}` gives no tail bound for the far field")]
    NoTailBound(String),
    #[error("classical pressure needs decay or periodicity; `{0}` has neither")]
    NoDecay(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("time {t} outside [{t0}, {t1}]")]
    TimeOutOfRange { t: f64, t0: f64, t1: f64 },
    #[error("drift spec inconsistent: {0}")]
    InconsistentDrift(String),
    #[error("sweep has a nonpositive value at index {0}; log fit undefined")]
    NonPositiveSweep(usize),
    #[error("field file: magic mismatch")]
    BadMagic,
    #[error("field file: truncated payload (expected {expected} bytes, found {found})")]
    Truncated { expected: u64, found: u64 },
    #[error("field file: dimension overflow")]
    DimOverflow,
    #[error("field file: unknown endianness marker {0:#06x}")]
    BadEndianness(u16),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
