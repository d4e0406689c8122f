use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Every variant names the module that raised it; [`Error::module`] exposes
/// that name for structured reporting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rootsys: unsupported root system {family}{rank}")]
    Unsupported { family: String, rank: usize },
    #[error("rootsys: non-reduced root system {0} requested (2α would be a root)")]
    NonReduced(String),
    #[error("rootsys: Weyl group order {order} exceeds cap {cap}")]
    WeylCapExceeded { order: usize, cap: usize },
    #[error("rootsys: lattice enumeration of {count} points exceeds cap {cap}")]
    LatticeCapExceeded { count: usize, cap: usize },
    #[error("rootsys: invalid Θ index {index} for rank {rank}")]
    InvalidTheta { index: usize, rank: usize },
    #[error("{module}: dimension mismatch: expected {expected}, got {got}")]
    Dimension {
        module: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("coeffs: invalid multiplicity: {0}")]
    InvalidMultiplicity(String),
    #[error("coeffs: multiplicity is not even (required for {0})")]
    NotEven(&'static str),
    #[error("{module}: pole of {what} at λ (Gamma argument at a nonpositive integer)")]
    Pole {
        module: &'static str,
        what: &'static str,
    },
    #[error("hcseries: non-generic λ: ⟨μ,μ−2λ⟩≈0 at μ={mu:?} (recursion not solvable)")]
    NonGeneric { mu: Vec<i64> },
    #[error("hcseries: truncation order {order} exceeds cap {cap}")]
    OrderCap { order: usize, cap: usize },
    #[error("{module}: point not strictly dominant (α(H) > 0 required for all positive roots)")]
    NotDominant { module: &'static str },
    #[error("{module}: point outside the admissible domain: {detail}")]
    OutsideDomain {
        module: &'static str,
        detail: String,
    },
    #[error("{module}: singular evaluation: {detail}")]
    Singular {
        module: &'static str,
        detail: String,
    },
    #[error("oracles: 2F1 parameter c is a nonpositive integer")]
    HyperC,
    #[error("oracles: 2F1 argument outside the supported domain: {0}")]
    HyperDomain(String),
    #[error("oracles: 2F1 series did not converge")]
    HyperConvergence,
    #[error("thetasph: finite-difference step {h} too large for margin {margin}")]
    StepTooLarge { h: f64, margin: f64 },
    #[error("expcalc: {0}")]
    ExpSum(String),
    #[error("transform: {0}")]
    Transform(String),
    #[error("paleywiener: {0}")]
    PaleyWiener(String),
    #[error("atlas: {0}")]
    Atlas(String),
}

impl Error {
    pub fn module(&self) -> &'static str {
        match self {
            Error::Unsupported { .. }
            | Error::NonReduced(_)
            | Error::WeylCapExceeded { .. }
            | Error::LatticeCapExceeded { .. }
            | Error::InvalidTheta { .. } => "rootsys",
            Error::Dimension { module, .. }
            | Error::Pole { module, .. }
            | Error::NotDominant { module }
            | Error::OutsideDomain { module, .. }
            | Error::Singular { module, .. } => module,
            Error::InvalidMultiplicity(_) | Error::NotEven(_) => "coeffs",
            Error::NonGeneric { .. } | Error::OrderCap { .. } => "hcseries",
            Error::HyperC | Error::HyperDomain(_) | Error::HyperConvergence => "oracles",
            Error::StepTooLarge { .. } => "thetasph",
            Error::ExpSum(_) => "expcalc",
            Error::Transform(_) => "transform",
            Error::PaleyWiener(_) => "paleywiener",
            Error::Atlas(_) => "atlas",
        }
    }

    /// True for failures caused by the numbers rather than by malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Pole { .. }
                | Error::NonGeneric { .. }
                | Error::Singular { .. }
                | Error::HyperConvergence
                | Error::NotDominant { .. }
                | Error::OutsideDomain { .. }
                | Error::Transform(_)
                | Error::PaleyWiener(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
