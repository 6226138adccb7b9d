use thiserror::Error;

/// Errors reported by the evaluation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("word width must be in 1..=16 bits, got {0}")]
    InvalidWordWidth(u32),
    #[error("noise variance must be positive and finite, got {0}")]
    InvalidNoiseVariance(f64),
    #[error("aes-subbytes S-box requires an 8-bit word, got {0} bits")]
    SboxWidthMismatch(u32),
    #[error("seeded-random-bijection S-box requires a seed")]
    MissingSboxSeed,
    #[error("trace-count grid must be non-empty, strictly increasing, with every q >= 1")]
    InvalidGrid,
    #[error("at least two Monte-Carlo draws are needed for a variance estimate, got {0}")]
    TooFewDraws(usize),
    #[error("probability must lie in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("success rate must lie in [2^-ell, 1], got {0}")]
    SuccessRateOutOfDomain(f64),
    #[error("attack needs at least one repetition")]
    NoRepetitions,
    #[error("confusion matrix can only be recorded at a grid point, got q={0}")]
    ConfusionOffGrid(usize),
    #[error("exact oracle is limited to ell <= 3 and q <= 2, got ell={ell}, q={q}")]
    OracleLimit { ell: u32, q: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
