//! Saturation QP detection for noisy user-generated video.
//!
//! For each GOP a sampled frame is compared against a denoised reference and
//! a QP is found below which an encoder would only spend bits on noise. Two
//! detectors are provided: [`dsd`] works from distortions alone, [`rdsd`]
//! from the slope of a low-complexity codec's RD curve ([`lcc`]). The
//! [`pipeline`] module runs either over a whole sequence.
//!
//! The math modules are generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below name the concrete instantiations.

pub mod denoise;
pub mod dsd;
pub mod error;
pub mod lcc;
pub mod media;
pub mod pipeline;
pub mod quant;
pub mod rdsd;
pub mod scalar;
pub mod synth;
pub mod transform;

pub use error::BlockError;
pub use quant::QpGrid;
pub use scalar::Scalar;

pub type Coeff4x4F32 = transform::Coeff4x4<f32>;
pub type Coeff4x4F64 = transform::Coeff4x4<f64>;
pub type MacroBlockCoeffsF32 = transform::MacroBlockCoeffs<f32>;
pub type MacroBlockCoeffsF64 = transform::MacroBlockCoeffs<f64>;
pub type RdPointF32 = lcc::RdPoint<f32>;
pub type RdPointF64 = lcc::RdPoint<f64>;
pub type SaturationDecisionF32 = dsd::SaturationDecision<f32>;
pub type SaturationDecisionF64 = dsd::SaturationDecision<f64>;
pub type RdsdDecisionF32 = rdsd::RdsdDecision<f32>;
pub type RdsdDecisionF64 = rdsd::RdsdDecision<f64>;
