use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("invalid generating curve: {0}")]
    InvalidCurve(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation radius {r_out} must exceed 1.5 x max g = {limit}")]
    InvalidTruncation { r_out: f64, limit: f64 },

    #[error("mean curvature is not strictly positive (min H = {min_h}); inequality inapplicable")]
    NonPositiveCurvature { min_h: f64 },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("capacity sequence increases with truncation radius ({prev} -> {next} at r_out = {r_out})")]
    MonotonicityViolation { prev: f64, next: f64, r_out: f64 },

    #[error("far-field shell values vary by {spread:.3} (> 0.10); field too noisy for asymptotic fit")]
    FarFieldTooNoisy { spread: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
