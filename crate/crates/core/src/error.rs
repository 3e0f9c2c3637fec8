use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: String, index: usize },
    #[error("{what} out of range: {detail}")]
    OutOfRange { what: String, detail: String },
    #[error("hyperbolicity violated: h = {h}, c_s^2 = {cs2}")]
    Hyperbolicity { h: f64, cs2: f64 },
    #[error("inadmissible state: {0}")]
    Inadmissible(String),
    #[error("singular {what} at grid index {index}")]
    Singular { what: String, index: usize },
    #[error("trajectory too short: need {need} slices, have {have}")]
    TooFewSlices { need: usize, have: usize },
    #[error("slice {n} is too close to the trajectory boundary (len {len})")]
    BoundarySlice { n: usize, len: usize },
    #[error("blow-up at step {step}, t = {time}: {detail}")]
    Blowup { step: usize, time: f64, detail: String },
    #[error("run aborted by observer at step {step}")]
    Aborted { step: usize },
    #[error(
        "elliptic solve did not converge: {iterations} iterations, relative residual {residual:e}, \
         preconditioner symbol min {symbol_min}"
    )]
    SolverCap {
        iterations: usize,
        residual: f64,
        symbol_min: f64,
    },
    #[error("causality violated at foliation sample t = {time}, x' index {index}: discriminant {disc}")]
    Causality { time: f64, index: usize, disc: f64 },
    #[error("degenerate foliation at t = {time}: {detail}")]
    Degenerate { time: f64, detail: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
