use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("valuation of zero is undefined")]
    UndefinedValuation,
    #[error("unsupported discriminant -{0}: need d > 3 squarefree with d = 3 (mod 4)")]
    UnsupportedDiscriminant(u64),
    #[error("-{0} is not an odd fundamental discriminant")]
    NonFundamental(u64),
    #[error("requested precision of {0} digits cannot be reached")]
    PrecisionUnreachable(u32),
    #[error("basis does not span an integral O_k-ideal: {0}")]
    NotAnIdeal(String),
    #[error("lattice is not an integral ideal lattice: {0}")]
    UnsupportedLattice(String),
    #[error("inconsistent lattice embedding: {0}")]
    InconsistentEmbedding(String),
    #[error("invalid positive-definite lattice: {0}")]
    InvalidGram(String),
    #[error("coefficient c_{eta}({m}) = {c} must be an integer for m <= 0")]
    IntegralityViolation { eta: usize, m: String, c: String },
    #[error("c_{eta}({m}) is nonzero but m + Q(eta) is not an integer")]
    SupportCongruenceViolation { eta: usize, m: String },
    #[error("principal part is not finite: {0}")]
    InfinitePrincipalPart(String),
    #[error("unknown coset label {0}")]
    UnknownLabel(usize),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("discriminants -{0} and -{1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("could not recognise an integer after {0} digits of working precision")]
    RoundingFailure(u32),
    #[error("parse error: {0}")]
    Parse(String),
}
