//! Error type shared by the solver stack.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A thermodynamic function was evaluated outside its density or
    /// temperature domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Initial data violating 0 < rho < 3 or |chi| <= 1.
    #[error("invalid initial state: {0}")]
    Construction(String),

    /// Density or specific volume left the admissible range during a run.
    #[error("blow-up at t = {time:.6e}, cell {cell}: {what}")]
    BlowUp {
        time: f64,
        cell: usize,
        what: String,
    },

    /// The per-step fixed-point iteration failed to converge, even after the
    /// step was retried with half the time step.
    #[error("fixed-point iteration did not converge at t = {time:.6e} (dt = {dt:.3e})")]
    PicardDiverged { time: f64, dt: f64 },

    /// Configuration file problem, with the offending key and line number.
    #[error("config error at line {line}, key `{key}`: {msg}")]
    Config {
        line: usize,
        key: String,
        msg: String,
    },

    /// Command-line misuse or an operation invoked with unusable input.
    #[error("usage error: {0}")]
    Usage(String),

    /// Requested diagnostic is undefined for this boundary mode.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Linear-solver breakdown or a violated internal assumption.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 1 for usage/config problems,
    /// 2 for runs that blew up. (3 is reserved for failed self-checks.)
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } | Error::PicardDiverged { .. } => 2,
            _ => 1,
        }
    }
}
