use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("audit error: {0}")]
    Audit(String),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("degenerate spectral splitting: {0}")]
    Degenerate(String),
    #[error("contour error: {0}")]
    Contour(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("size error: {0}")]
    Size(String),
}

pub type Result<T> = core::result::Result<T, Error>;
