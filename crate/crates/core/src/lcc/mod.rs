//! Low-complexity codec used to generate RD points: 4×4 DCT, flat uniform
//! quantization and a counted (never serialized) entropy code. There is no
//! prediction; every macroblock is coded on its own.

pub mod cavlc;
pub mod expgolomb;

use std::fmt;
use std::str::FromStr;

use crate::error::BlockError;
use crate::quant::{quantize, step_for_qp, QpGrid};
use crate::scalar::Scalar;
use crate::transform::{MacroBlockCoeffs, SUB_BLOCKS_PER_MB};

use expgolomb::{se_len, ue_len};

/// Zigzag scan of a 4×4 block: scan position -> raster index (`row * 4 + col`).
pub const ZIGZAG_4X4: [usize; 16] = [0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15];

pub fn zigzag_scan(levels: &[i32; 16]) -> [i32; 16] {
    let mut out = [0; 16];
    for (o, &r) in out.iter_mut().zip(&ZIGZAG_4X4) {
        *o = levels[r];
    }
    out
}

pub fn inverse_zigzag(scanned: &[i32; 16]) -> [i32; 16] {
    let mut out = [0; 16];
    for (&v, &r) in scanned.iter().zip(&ZIGZAG_4X4) {
        out[r] = v;
    }
    out
}

/// Rate model for quantized 4×4 blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum EntropyModel {
    /// Table-free run-level code: coded-block flag, `ue(nnz - 1)`, then per
    /// nonzero level from the highest frequency down `se(level)` and
    /// `ue(zeros before it)`.
    #[default]
    RunLevelExpGolomb,
    /// H.264 CAVLC 4×4 residual syntax with in-macroblock neighbour context.
    CavlcStyle,
}

impl EntropyModel {
    pub fn id(self) -> &'static str {
        match self {
            EntropyModel::RunLevelExpGolomb => "lcc-eg",
            EntropyModel::CavlcStyle => "lcc-cavlc",
        }
    }
}

impl fmt::Display for EntropyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EntropyModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eg" | "exp-golomb" | "run-level" | "lcc-eg" | "default" => {
                Ok(EntropyModel::RunLevelExpGolomb)
            }
            "cavlc" | "lcc-cavlc" => Ok(EntropyModel::CavlcStyle),
            other => Err(format!(
                "unknown entropy model `{other}` (expected `eg` or `cavlc`)"
            )),
        }
    }
}

/// Run-level exp-Golomb bits of one zigzag-scanned 4×4 block.
pub fn run_level_bits(scanned: &[i32; 16]) -> u32 {
    let nnz = scanned.iter().filter(|&&l| l != 0).count() as u32;
    if nnz == 0 {
        return 1;
    }
    let mut bits = 1 + ue_len(nnz - 1);
    // walk from the highest frequency down, counting zeros below each level
    let mut run = 0u32;
    let mut pending: Option<i32> = None;
    for &l in scanned.iter().rev() {
        if l != 0 {
            if let Some(prev) = pending {
                bits += se_len(prev) + ue_len(run);
            }
            pending = Some(l);
            run = 0;
        } else if pending.is_some() {
            run += 1;
        }
    }
    if let Some(prev) = pending {
        bits += se_len(prev) + ue_len(run);
    }
    bits
}

/// Bits of a single 4×4 level block (raster order) coded without neighbour context.
pub fn block_rate(levels: &[i32; 16], model: EntropyModel) -> u32 {
    let scanned = zigzag_scan(levels);
    match model {
        EntropyModel::RunLevelExpGolomb => run_level_bits(&scanned),
        EntropyModel::CavlcStyle => cavlc::block_bits(&scanned, 0).0,
    }
}

/// Bits of a macroblock given its sixteen sub-blocks' levels (raster order within each).
pub fn macroblock_rate(levels: &[[i32; 16]; SUB_BLOCKS_PER_MB], model: EntropyModel) -> u64 {
    let mut scanned = [[0i32; 16]; SUB_BLOCKS_PER_MB];
    for (s, l) in scanned.iter_mut().zip(levels) {
        *s = zigzag_scan(l);
    }
    match model {
        EntropyModel::RunLevelExpGolomb => scanned.iter().map(|s| u64::from(run_level_bits(s))).sum(),
        EntropyModel::CavlcStyle => cavlc::macroblock_bits(&scanned),
    }
}

/// One operating point of a macroblock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint<T> {
    pub qp: i32,
    pub rate_bits: u64,
    /// Squared error of the reconstruction against the input.
    pub dist_input: T,
    /// Squared error of the reconstruction against the denoised reference.
    pub dist_denoised: T,
}

pub(crate) fn check_pair<T>(u: &MacroBlockCoeffs<T>, z: &MacroBlockCoeffs<T>) -> Result<(), BlockError> {
    if u.origin != z.origin {
        return Err(BlockError::Mismatch {
            input: u.origin,
            reference: z.origin,
        });
    }
    Ok(())
}

/// Codes `u` at `qp` and measures the reconstruction against `u` and `z` in
/// the transform domain (equal to pixel-domain squared error by Parseval).
pub fn rd_point<T: Scalar>(
    u: &MacroBlockCoeffs<T>,
    z: &MacroBlockCoeffs<T>,
    qp: i32,
    grid: &QpGrid,
    model: EntropyModel,
) -> Result<RdPoint<T>, BlockError> {
    check_pair(u, z)?;
    grid.check(qp)?;
    Ok(rd_point_unchecked(u, z, qp, model))
}

pub(crate) fn rd_point_unchecked<T: Scalar>(
    u: &MacroBlockCoeffs<T>,
    z: &MacroBlockCoeffs<T>,
    qp: i32,
    model: EntropyModel,
) -> RdPoint<T> {
    let step: T = step_for_qp(qp);
    let mut levels = [[0i32; 16]; SUB_BLOCKS_PER_MB];
    let mut dist_input = T::zero();
    let mut dist_denoised = T::zero();
    for ((lv, us), zs) in levels.iter_mut().zip(&u.sub_blocks).zip(&z.sub_blocks) {
        let q = quantize(us, step);
        for i in 0..16 {
            let rec = T::from_int(i64::from(q.levels[i])) * step;
            let di = rec - us.0[i];
            let dz = rec - zs.0[i];
            dist_input = dist_input + di * di;
            dist_denoised = dist_denoised + dz * dz;
        }
        *lv = q.levels;
    }
    RdPoint {
        qp,
        rate_bits: macroblock_rate(&levels, model),
        dist_input,
        dist_denoised,
    }
}

/// RD points for every QP of `grid`, ascending.
pub fn rd_curve<T: Scalar>(
    u: &MacroBlockCoeffs<T>,
    z: &MacroBlockCoeffs<T>,
    grid: &QpGrid,
    model: EntropyModel,
) -> Result<Vec<RdPoint<T>>, BlockError> {
    check_pair(u, z)?;
    Ok(grid.qps().map(|qp| rd_point_unchecked(u, z, qp, model)).collect())
}
