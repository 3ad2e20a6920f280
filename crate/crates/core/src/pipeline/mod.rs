//! End-to-end detection: sample one frame per GOP, denoise it, run DSD or
//! RDSD on every macroblock, average to a frame QP and clamp against the
//! user's QP.

mod encoder;
mod report;

pub use encoder::{encoder_invocation_plan, run_plan, EncodeJob, EncoderError, PlannedCommand};
pub use report::{
    emit_rd_report, format_g, rd_corpus, read_decisions, write_curves, write_decisions, CurveReportRow,
    CURVES_HEADER, DECISIONS_HEADER,
};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::denoise::{denoise_plane, DenoiseError, DenoiserSpec};
use crate::dsd::dsd_block_qp;
use crate::error::BlockError;
use crate::media::{partition_blocks, GopIndexing, LumaPlane, MediaError, PixelBlock, VideoSequence};
use crate::quant::QpGrid;
use crate::rdsd::{default_table, rdsd_block_qp, CalibrationTable, RdsdConfig};
use crate::transform::{MacroBlockCoeffs, MACROBLOCK};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error("GOP {gop}, block at ({x}, {y}): {source}")]
    Block {
        gop: usize,
        x: usize,
        y: usize,
        #[source]
        source: BlockError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot aggregate an empty list of block decisions")]
    NoBlocks,
    #[error("decisions file line {line}: {reason}")]
    Decisions { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Dsd,
    #[default]
    Rdsd,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dsd => "dsd",
            Self::Rdsd => "rdsd",
        })
    }
}

impl FromStr for Method {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dsd" => Ok(Self::Dsd),
            "rdsd" => Ok(Self::Rdsd),
            _ => Err(PipelineError::Config(format!("unknown method {s:?}, expected dsd or rdsd"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectionConfig {
    pub method: Method,
    pub grid: QpGrid,
    pub gop: GopIndexing,
    pub denoiser: DenoiserSpec,
    pub rdsd: RdsdConfig<f64>,
    pub calibration: CalibrationTable,
    pub user_qp: Option<i32>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            method: Method::default(),
            grid: QpGrid::default(),
            gop: GopIndexing::default(),
            denoiser: DenoiserSpec::Deblock { strength: 2 },
            rdsd: RdsdConfig::default(),
            calibration: default_table(),
            user_qp: None,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if let Some(qp) = self.user_qp {
            if !self.grid.contains(qp) {
                return Err(PipelineError::Config(format!(
                    "user QP {qp} outside grid {}..={}",
                    self.grid.min(),
                    self.grid.max()
                )));
            }
        }
        self.rdsd.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// `max(user_qp, qp_star)`, or `qp_star` without a user QP.
    pub fn effective_qp(&self, qp_star: i32) -> i32 {
        self.user_qp.map_or(qp_star, |u| u.max(qp_star))
    }
}

/// Detection result for one GOP.
#[derive(Debug, Clone, PartialEq)]
pub struct GopDecision {
    pub gop_index: usize,
    pub frame_index: usize,
    pub qp_star: i32,
    pub effective_qp: i32,
    pub block_count: usize,
    pub degenerate_fraction: f64,
    pub qp_mean: f64,
    /// Population standard deviation of the per-block QPs.
    pub qp_std: f64,
}

impl fmt::Display for GopDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gop={} frame={} qp_star={} blocks={} degenerate_fraction={} qp_mean={} qp_std={} effective_qp={}",
            self.gop_index,
            self.frame_index,
            self.qp_star,
            self.block_count,
            format_g(self.degenerate_fraction),
            format_g(self.qp_mean),
            format_g(self.qp_std),
            self.effective_qp
        )
    }
}

/// Mean of the block QPs with ties rounded up, clamped to `grid`. Computed
/// in integers so that `.5` means are exact.
pub fn frame_qp_star(block_qps: &[i32], grid: &QpGrid) -> Result<i32, PipelineError> {
    if block_qps.is_empty() {
        return Err(PipelineError::NoBlocks);
    }
    let n = block_qps.len() as i64;
    let sum: i64 = block_qps.iter().map(|&q| i64::from(q)).sum();
    let mean = (2 * sum + n).div_euclid(2 * n);
    Ok(grid.clamp(mean.clamp(i64::from(i32::MIN), i64::from(i32::MAX)) as i32))
}

/// The input and reference planes of one GOP's sampled frame.
#[derive(Debug, Clone)]
pub struct SampledPair {
    pub gop_index: usize,
    pub frame_index: usize,
    pub u: LumaPlane,
    pub z: LumaPlane,
}

/// Samples every GOP of `u` and builds its reference, from `z` when given
/// (which [`DenoiserSpec::External`] requires) or by applying `denoiser`.
pub fn sampled_pairs(
    u: &VideoSequence,
    z: Option<&VideoSequence>,
    gop: &GopIndexing,
    denoiser: &DenoiserSpec,
) -> Result<Vec<SampledPair>, PipelineError> {
    if let Some(z) = z {
        u.check_matches(z)?;
    }
    let n = u.frame_count();
    (0..gop.gop_count(n))
        .into_par_iter()
        .map(|gop_index| {
            let frame_index = gop.sampled_index(gop_index, n);
            let up = u.luma(frame_index).expect("sampled index is in range");
            let zp = match (z, denoiser) {
                (Some(z), _) => z.luma(frame_index).expect("sequences match").clone(),
                (None, DenoiserSpec::External) => return Err(DenoiseError::MissingExternalFrame.into()),
                (None, spec) => denoise_plane(up, spec, None)?,
            };
            Ok(SampledPair {
                gop_index,
                frame_index,
                u: up.clone(),
                z: zp,
            })
        })
        .collect()
}

fn block_pairs(pair: &SampledPair) -> Vec<(PixelBlock, PixelBlock)> {
    partition_blocks(&pair.u, MACROBLOCK)
        .into_iter()
        .zip(partition_blocks(&pair.z, MACROBLOCK))
        .collect()
}

/// Per-block QP and degeneracy flag for one sampled frame, in raster order.
pub fn block_decisions(pair: &SampledPair, config: &DetectionConfig) -> Result<Vec<(i32, bool)>, PipelineError> {
    block_pairs(pair)
        .par_iter()
        .map(|(bu, bz)| {
            let u = MacroBlockCoeffs::<f64>::from_pixels(bu);
            let z = MacroBlockCoeffs::<f64>::from_pixels(bz);
            let r = match config.method {
                Method::Dsd => dsd_block_qp(&u, &z, &config.grid).map(|d| (d.saturation_qp, d.degenerate)),
                Method::Rdsd => rdsd_block_qp(&u, &z, &config.grid, &config.rdsd, &config.calibration)
                    .map(|d| (d.saturation_qp, d.dsd.degenerate)),
            };
            r.map_err(|source| PipelineError::Block {
                gop: pair.gop_index,
                x: bu.origin.0,
                y: bu.origin.1,
                source,
            })
        })
        .collect()
}

pub fn decide_gop(pair: &SampledPair, config: &DetectionConfig) -> Result<GopDecision, PipelineError> {
    let blocks = block_decisions(pair, config)?;
    let qps: Vec<i32> = blocks.iter().map(|&(qp, _)| qp).collect();
    let qp_star = frame_qp_star(&qps, &config.grid)?;
    let n = qps.len() as f64;
    let qp_mean = qps.iter().map(|&q| f64::from(q)).sum::<f64>() / n;
    let var = qps.iter().map(|&q| (f64::from(q) - qp_mean).powi(2)).sum::<f64>() / n;
    Ok(GopDecision {
        gop_index: pair.gop_index,
        frame_index: pair.frame_index,
        qp_star,
        effective_qp: config.effective_qp(qp_star),
        block_count: qps.len(),
        degenerate_fraction: blocks.iter().filter(|b| b.1).count() as f64 / n,
        qp_mean,
        qp_std: var.sqrt(),
    })
}

/// One decision per GOP, in GOP order.
pub fn detect(
    u: &VideoSequence,
    z: Option<&VideoSequence>,
    config: &DetectionConfig,
) -> Result<Vec<GopDecision>, PipelineError> {
    config.validate()?;
    sampled_pairs(u, z, &config.gop, &config.denoiser)?
        .par_iter()
        .map(|pair| decide_gop(pair, config))
        .collect()
}
