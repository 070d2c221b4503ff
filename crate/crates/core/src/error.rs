use std::fmt;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two series with different truncation orders were combined.
    OrderMismatch { left: usize, right: usize },
    /// Composition `f∘g` requires `g(0) = 0`.
    NonzeroConstantTerm,
    /// A letter must satisfy `c_0 = 0`, `c_1 = 1`.
    NotALetter,
    /// Requested degree exceeds the truncation order.
    DegreeExceedsOrder { degree: usize, order: usize },
    /// `I^n` membership is only decided for `n ≤ 3`.
    UnsupportedLevel(u32),
    /// Second residues are defined here for odd primes only.
    EvenResiduePrime,
    /// The input does not lie in the required power of the fundamental ideal.
    MembershipFailed { level: u32 },
    /// Classes from different cohomology backends were mixed.
    BackendMismatch,
    /// A fixed dimension was expected.
    DimensionMismatch { expected: usize, got: usize },
    /// The quaternion algebra must be split (model `(1, b)`).
    NotSplit,
    /// An element that must be invertible is not.
    NotInvertible,
    /// Inputs are degenerate for the requested construction.
    Degenerate(String),
    /// A bounded randomized search ran out of candidates.
    SearchExhausted(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OrderMismatch { left, right } => {
                write!(f, "truncation orders differ: {left} vs {right}")
            }
            Error::NonzeroConstantTerm => write!(f, "composition requires g(0) = 0"),
            Error::NotALetter => write!(f, "letter must have c0 = 0 and c1 = 1"),
            Error::DegreeExceedsOrder { degree, order } => {
                write!(f, "degree {degree} exceeds truncation order {order}")
            }
            Error::UnsupportedLevel(n) => write!(f, "I^{n} membership is unsupported"),
            Error::EvenResiduePrime => write!(f, "second residue needs an odd prime"),
            Error::MembershipFailed { level } => {
                write!(f, "form is not in I^{level}")
            }
            Error::BackendMismatch => write!(f, "cohomology backends differ"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "expected dimension {expected}, got {got}")
            }
            Error::NotSplit => write!(f, "quaternion algebra is not split as (1, b)"),
            Error::NotInvertible => write!(f, "element is not invertible"),
            Error::Degenerate(what) => write!(f, "degenerate input: {what}"),
            Error::SearchExhausted(what) => write!(f, "search exhausted: {what}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
