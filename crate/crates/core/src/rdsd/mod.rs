//! Rate-distortion-based saturation detection: the RD slope just past the DSD
//! point gives a saturation Lagrange multiplier, which is carried over to the
//! target codec through a calibration table and mapped back to a QP.

mod calibration;
mod harness;

pub use calibration::{
    calibrate, corpus_rows, default_table, read_corpus, write_corpus, Calibration, CalibrationError,
    CalibrationTable, CorpusRow, DEFAULT_MIN_SUPPORT, MEASURED_ANCHORS,
};
pub use harness::{synthetic_model_corpus, CORPUS_SIGMAS};

use crate::dsd::{dsd_block_qp, SaturationDecision};
use crate::error::BlockError;
use crate::lcc::{rd_point_unchecked, EntropyModel, RdPoint};
use crate::quant::{QpGrid, DEFAULT_R};
use crate::scalar::Scalar;
use crate::transform::MacroBlockCoeffs;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeSample<T> {
    pub c: i32,
    pub slope: T,
}

/// Slope offsets, the `r` of the QP/lambda mapping and the entropy model of
/// the low-complexity codec.
#[derive(Debug, Clone, PartialEq)]
pub struct RdsdConfig<T> {
    pub c_set: Vec<i32>,
    pub r: T,
    pub model: EntropyModel,
}

impl<T: Scalar> Default for RdsdConfig<T> {
    fn default() -> Self {
        Self {
            c_set: vec![5],
            r: T::lit(DEFAULT_R),
            model: EntropyModel::default(),
        }
    }
}

impl<T: Scalar> RdsdConfig<T> {
    pub fn validate(&self) -> Result<(), BlockError> {
        if self.c_set.is_empty() {
            return Err(BlockError::Config("slope offset set is empty".into()));
        }
        if let Some(c) = self.c_set.iter().find(|&&c| c < 1) {
            return Err(BlockError::Config(format!("slope offset {c} must be at least 1")));
        }
        if self.r <= T::zero() || !self.r.is_finite() {
            return Err(BlockError::Config(format!("r must be positive, got {:?}", self.r)));
        }
        Ok(())
    }
}

fn point_at<T>(points: &[RdPoint<T>], qp: i32) -> Option<&RdPoint<T>> {
    points.iter().find(|p| p.qp == qp)
}

fn slope_between<T: Scalar>(a: &RdPoint<T>, b: &RdPoint<T>) -> Option<T> {
    if a.rate_bits == b.rate_bits {
        return None;
    }
    let dr = b.rate_bits as f64 - a.rate_bits as f64;
    Some(-(b.dist_input - a.dist_input) / T::lit(dr))
}

/// `-(D(qp*+c) - D(qp*)) / (R(qp*+c) - R(qp*))` on input distortion; `None`
/// when both points spend the same number of bits.
pub fn approx_slope<T: Scalar>(
    points: &[RdPoint<T>],
    qp_star: i32,
    c: i32,
) -> Result<Option<SlopeSample<T>>, BlockError> {
    let out_of_range = || BlockError::OffsetsOutOfRange {
        qp: qp_star,
        offsets: vec![c],
    };
    let a = point_at(points, qp_star).ok_or_else(out_of_range)?;
    let b = point_at(points, qp_star + c).ok_or_else(out_of_range)?;
    Ok(slope_between(a, b).map(|slope| SlopeSample { c, slope }))
}

/// Smallest positive slope over `c_set`; offsets leaving the curve are skipped.
pub fn saturation_lambda<T: Scalar>(
    points: &[RdPoint<T>],
    qp_star: i32,
    c_set: &[i32],
) -> Result<Option<T>, BlockError> {
    let mut in_range = false;
    let mut best: Option<T> = None;
    for &c in c_set {
        match approx_slope(points, qp_star, c) {
            Ok(s) => {
                in_range = true;
                if let Some(SlopeSample { slope, .. }) = s {
                    if slope > T::zero() && best.is_none_or(|b| slope < b) {
                        best = Some(slope);
                    }
                }
            }
            Err(BlockError::OffsetsOutOfRange { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if !in_range {
        return Err(BlockError::OffsetsOutOfRange {
            qp: qp_star,
            offsets: c_set.to_vec(),
        });
    }
    Ok(best)
}

pub fn transfer_lambda<T: Scalar>(lambda_s: T, qp_star: i32, table: &CalibrationTable) -> T {
    lambda_s * T::lit(table.lookup(qp_star))
}

/// Per-block outcome of RDSD, keeping the DSD stage for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdsdDecision<T> {
    pub dsd: SaturationDecision<T>,
    pub lambda_s: Option<T>,
    pub lambda_t: Option<T>,
    pub saturation_qp: i32,
    /// The DSD QP was used because no positive slope was available (flat
    /// curve, degenerate block, or every offset beyond the grid).
    pub fallback: bool,
}

pub fn rdsd_block_qp<T: Scalar>(
    u: &MacroBlockCoeffs<T>,
    z: &MacroBlockCoeffs<T>,
    grid: &QpGrid,
    config: &RdsdConfig<T>,
    table: &CalibrationTable,
) -> Result<RdsdDecision<T>, BlockError> {
    config.validate()?;
    let dsd = dsd_block_qp(u, z, grid)?;
    let fallback = RdsdDecision {
        dsd,
        lambda_s: None,
        lambda_t: None,
        saturation_qp: dsd.saturation_qp,
        fallback: true,
    };
    if dsd.degenerate {
        return Ok(fallback);
    }
    let qp_star = dsd.saturation_qp;
    let mut qps: Vec<i32> = config
        .c_set
        .iter()
        .map(|&c| qp_star + c)
        .filter(|&qp| grid.contains(qp))
        .collect();
    if qps.is_empty() {
        return Ok(fallback);
    }
    qps.push(qp_star);
    qps.sort_unstable();
    qps.dedup();
    let points: Vec<RdPoint<T>> = qps.iter().map(|&qp| rd_point_unchecked(u, z, qp, config.model)).collect();
    let Some(lambda_s) = saturation_lambda(&points, qp_star, &config.c_set)? else {
        return Ok(fallback);
    };
    let lambda_t = transfer_lambda(lambda_s, qp_star, table);
    let qp = grid.lambda_to_qp(lambda_t, config.r)?;
    Ok(RdsdDecision {
        dsd,
        lambda_s: Some(lambda_s),
        lambda_t: Some(lambda_t),
        saturation_qp: qp,
        fallback: false,
    })
}
