use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be at least 1")]
    ZeroDimension { name: &'static str },

    #[error("training length N={n} is not a multiple of K*L={kl}")]
    NonDivisibleTraining { n: usize, kl: usize },

    #[error("training holds {blocks} pilot-block(s); at least 2 are needed to correlate consecutive blocks")]
    TooFewBlocks { blocks: usize },

    #[error("user {user}: |omega*K*L| = {scaled:.6} must be < pi for the estimate to be identifiable")]
    CfoOutOfRange { user: usize, scaled: f64 },

    #[error("CFO vector has {got} entries, expected {expected}")]
    CfoLength { expected: usize, got: usize },

    #[error("{name} must be positive (got {value})")]
    NonPositivePower { name: &'static str, value: f64 },

    #[error("invalid power delay profile: {0}")]
    InvalidPdp(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("user {user}: power delay profile sums to zero")]
    ZeroPdp { user: usize },

    #[error("user {user}: correlation statistic vanished, estimate undefined")]
    UndefinedEstimate { user: usize },

    #[error("pilot matrix Q_b is rank deficient")]
    RankDeficientPilot,

    #[error("Fisher information matrix is singular")]
    SingularInformation,

    #[error("target MSE {target:e} not bracketed: MSE at {lo_db} dB is {lo_mse:e}, at {hi_db} dB is {hi_mse:e}")]
    BracketFailure {
        target: f64,
        lo_db: f64,
        lo_mse: f64,
        hi_db: f64,
        hi_mse: f64,
    },

    #[error("empirical MSE rose with SNR: {lo_mse:e} at {lo_db} dB but {hi_mse:e} at {hi_db} dB")]
    NonMonotoneMse {
        lo_db: f64,
        lo_mse: f64,
        hi_db: f64,
        hi_mse: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spec file: {0}")]
    SpecParse(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by bad input rather than by the numerics of a valid scenario.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ZeroDimension { .. }
                | Error::NonDivisibleTraining { .. }
                | Error::TooFewBlocks { .. }
                | Error::CfoOutOfRange { .. }
                | Error::CfoLength { .. }
                | Error::NonPositivePower { .. }
                | Error::InvalidPdp(_)
                | Error::IndexOutOfRange(_)
                | Error::DimensionMismatch(_)
                | Error::InvalidParameter(_)
                | Error::SpecParse(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
