//! Refinable functions, their scale matrices and the homogeneous functions
//! spanned by translates.

pub mod linalg;
pub mod poly;
pub mod mask;
pub mod diffeq;
pub mod spectral;
pub mod extension;
pub mod evaluate;
pub mod suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mask(#[from] mask::MaskError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Diffeq(#[from] diffeq::DiffeqError),
    #[error(transparent)]
    Extension(#[from] extension::ExtensionError),
    #[error(transparent)]
    Eval(#[from] evaluate::EvalError),
}

pub use mask::{parse_mask, Mask};
