use thiserror::Error;

use crate::nehari::Minimizer;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("computed spectrum too shallow: {0}; request more eigenpairs")]
    InsufficientSpectrum(String),

    #[error("lambda = {lambda} lies outside the spectral window of this split (it belongs to nu = {nu}, window ({lower}, {upper}])")]
    OutsideWindow {
        lambda: f64,
        nu: usize,
        lower: f64,
        upper: f64,
    },

    #[error("degenerate direction: no positive fiber maximum found ({0})")]
    DegenerateDirection(String),

    #[error("sphere descent did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        best: Box<Minimizer>,
    },
}
