use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WofError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unphysical moments: v11*v22 - v12^2 = {det} is below 1/4")]
    Unphysical { det: f64 },

    #[error("quadrature did not converge: relative change {residual:e} between refinements")]
    QuadratureNonConvergence { residual: f64 },

    #[error("lattice truncation residual {residual:e} too large at half-width {half_width}")]
    Truncation { residual: f64, half_width: usize },

    #[error("outcome ({dnx}, {dnp}) is improbable (probability {prob:e})")]
    ImprobableOutcome { dnx: i64, dnp: i64, prob: f64 },

    #[error("outcome ({dnx}, {dnp}) lies outside the lattice of half-width {half_width}")]
    OutsideLattice { dnx: i64, dnp: i64, half_width: usize },

    #[error("optimizer did not converge after {evaluations} evaluations; best W = {best_w} at kappa = {best_kappa}, beta = {best_beta}")]
    NonConvergence {
        evaluations: usize,
        best_w: f64,
        best_kappa: f64,
        best_beta: f64,
    },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for WofError {
    fn from(e: std::io::Error) -> Self {
        WofError::Io(e.to_string())
    }
}

impl From<csv::Error> for WofError {
    fn from(e: csv::Error) -> Self {
        WofError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WofError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> WofError {
    WofError::InvalidParameter { name, reason: reason.into() }
}
