use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature with {nodes} nodes cannot resolve r-degree {degree} (max {max})")]
    Resolution { degree: usize, nodes: usize, max: usize },

    #[error("odd total angular parity {0}: integrand is not a polynomial in r^2")]
    OddParity(u32),

    #[error("angular index {m} outside discretization support |m| <= {max}")]
    UnsupportedMode { m: i32, max: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge ({0})")]
    EigenNonConvergence(String),

    #[error("newton diverged after {iterations} iterations, residual {residual:e}")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("singular linear system in {0}")]
    Singular(String),

    #[error("m_max = {given} insufficient, blocks up to {required} are needed")]
    InsufficientBlocks { given: i32, required: i32 },

    #[error("no near-zero eigenvalue (closest {closest:e})")]
    NoZeroEigenvalue { closest: f64 },

    #[error("no sign change of block m={m} on [{lo}, {hi}]")]
    NoSignChange { m: i32, lo: f64, hi: f64 },

    #[error("resonant crossing at Omega = {omega}: {zeros} eigenvalues vanish")]
    Resonant { omega: f64, zeros: usize },

    #[error("closed form and quadrature disagree for {what}: {closed} vs {quad}")]
    ClosedFormMismatch { what: String, closed: f64, quad: f64 },

    #[error("counts disagree for m0={m0}: {what}")]
    CountMismatch { m0: u32, what: String },

    #[error("no root of z(r) in (0, {rmax})")]
    NoRoot { rmax: f64 },

    #[error("non-simple root at r = {0}")]
    NonSimpleRoot(f64),

    #[error("winding mismatch: {sum} from located zeros, {total} on the reference circle")]
    WindingMismatch { sum: i32, total: i32 },

    #[error("field vanishes on the loop (min |U| = {0:e})")]
    FieldVanishesOnLoop(f64),

    #[error("angular aliasing: {0}")]
    Aliasing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
