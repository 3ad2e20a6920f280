use thiserror::Error;

use crate::quant::QuantError;

/// Failures of the per-macroblock operations (codec, detectors).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("macroblock mismatch: input block at {input:?}, reference block at {reference:?}")]
    Mismatch {
        input: (usize, usize),
        reference: (usize, usize),
    },
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error("no slope offset in {offsets:?} keeps QP {qp}+c inside the RD curve")]
    OffsetsOutOfRange { qp: i32, offsets: Vec<i32> },
    #[error("{0}")]
    Config(String),
}
