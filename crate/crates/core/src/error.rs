use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The target DTF lies outside the values reached over the search bracket.
    #[error("target DTF {target} not bracketed: DTF({lo:e}) = {dtf_lo}, DTF({hi:e}) = {dtf_hi}")]
    NotBracketed {
        target: f64,
        lo: f64,
        hi: f64,
        dtf_lo: f64,
        dtf_hi: f64,
    },

    #[error("DTF model is not monotone: DTF({at:e}) = {dtf} outside [{dtf_lo}, {dtf_hi}]")]
    NonMonotone {
        at: f64,
        dtf: f64,
        dtf_lo: f64,
        dtf_hi: f64,
    },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
