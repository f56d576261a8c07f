use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid atom distribution: {0}")]
    InvalidAtom(String),

    #[error("moment order {0} is not supported (closed forms exist up to order 8)")]
    UnsupportedMomentOrder(usize),

    #[error("infeasible moment pair (m3 = {m3}, m4 = {m4}): requires m4 >= m3^2 + 1")]
    InfeasibleMoments { m3: f64, m4: f64 },

    #[error("unknown ensemble descriptor `{0}` (valid: gue, bernoulli, uniform, threepoint:m3=..,m4=.., gaussdiv:base=..,t=..)")]
    UnknownDescriptor(String),

    #[error("energy {0} is outside the bulk")]
    OutsideBulk(f64),

    #[error("eigensolver failed to converge on eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("sample {sample}: {source}")]
    Sample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("test function arity {found} does not match statistic order {expected}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("unknown test function `{0}`")]
    UnknownTestFunction(String),

    #[error("gap ODE radicand {radicand:e} became negative at K = {k}")]
    NegativeRadicand { k: f64, radicand: f64 },

    #[error("no gap-ODE scaling reaches residual below {tolerance} (best {best_residual:e} at s = {best_scale})")]
    Calibration {
        best_scale: f64,
        best_residual: f64,
        tolerance: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("batch format error in field `{field}`: {detail}")]
    Format { field: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
