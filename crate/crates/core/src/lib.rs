//! Exact analysis of the number of comparisons made by randomized
//! Quicksort: the full distribution via its probability generating
//! function, raw/central/factorial moments, closed forms for the moments
//! re-discovered by fitting over harmonic numbers, their limiting scaled
//! constants, and a comparison-counting simulator used as ground truth.

pub mod asymptotics;
pub mod closed_form;
pub mod distribution;
pub mod moments;
pub mod numeric;
pub mod pgf;
pub mod simulator;

pub use rug::{Float, Integer, Rational};

pub use closed_form::{FitReport, FitStatus, HarmonicExpr, Monomial};
pub use numeric::{harmonic, harmonic_asymptotic, Constants, HighReal};
pub use pgf::{pgf, DistPoly};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("moment order {r} exceeds truncation order {order}")]
    TruncationOrder { r: u32, order: u32 },
    #[error("n = {n} exceeds the exhaustive enumeration limit of {max}")]
    OracleTooLarge { n: u64, max: u64 },
    #[error("no verified closed form for moment {r}; largest template tried had degree {degree} ({size} monomials)")]
    GuessExhausted { r: u32, degree: u32, size: usize },
    #[error("limit unstable: {stable} agreeing digits, {required} required")]
    Unstable { stable: u32, required: u32 },
    #[error("expression has no finite scaled limit: {0}")]
    Divergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
