use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration {bits:#b} is not valid for {n_qubits} qubits")]
    InvalidConfiguration { bits: u64, n_qubits: u32 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("partition leaves the {0} subspace empty")]
    EmptySubspace(&'static str),

    #[error("dimension {dim} exceeds the {what} limit {limit}")]
    TooLarge {
        what: &'static str,
        dim: u64,
        limit: u64,
    },

    #[error("inverse temperature must be positive, got {0}")]
    InvalidBeta(f64),

    #[error("hopping element is positive; the path representation has a sign problem")]
    SignProblem,

    #[error("configuration {bits:#b} is not in the {expected} subspace")]
    WrongSide { bits: u64, expected: &'static str },

    #[error("bound violated at configuration {bits:#b}: {detail}")]
    BoundViolation { bits: u64, detail: String },

    #[error("no sign change of the free-energy difference on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("root search did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: i64 },

    #[error("cross-link totals disagree: {from_cond} counted from cond, {from_norm} from norm")]
    LinkMismatch { from_cond: u64, from_norm: u64 },

    #[error("{0}")]
    Parse(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

impl Error {
    /// Module-qualified machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfiguration { .. } => "configspace.invalid_configuration",
            Error::InvalidModel(_) => "models.invalid_model",
            Error::EmptySubspace(_) => "configspace.empty_subspace",
            Error::TooLarge { .. } => "exactthermo.too_large",
            Error::InvalidBeta(_) => "exactthermo.invalid_beta",
            Error::SignProblem => "eprmc.sign_problem",
            Error::WrongSide { .. } => "eprmc.wrong_side",
            Error::BoundViolation { .. } => "verify.bound_violation",
            Error::NoBracket { .. } => "phasediagram.no_bracket",
            Error::NonConvergence(_) => "phasediagram.non_convergence",
            Error::OutOfRange { .. } => "models.out_of_range",
            Error::LinkMismatch { .. } => "configspace.link_mismatch",
            Error::Parse(_) => "models.parse",
            Error::Eigen(_) => "exactthermo.eigensolver",
        }
    }
}
