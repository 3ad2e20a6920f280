use std::io;

use rayon::prelude::*;

use super::{block_pairs, GopDecision, PipelineError, SampledPair};
use crate::lcc::{rd_curve, EntropyModel};
use crate::quant::QpGrid;
use crate::rdsd::{corpus_rows, CorpusRow};
use crate::transform::{MacroBlockCoeffs, MB_COEFFS};

pub const DECISIONS_HEADER: [&str; 8] = [
    "gop",
    "frame",
    "qp_star",
    "effective_qp",
    "block_count",
    "degenerate_fraction",
    "qp_mean",
    "qp_std",
];

pub const CURVES_HEADER: [&str; 5] = ["qp", "rate_bits", "i_mse", "d_mse", "id_mse"];

/// C `%g` with 6 significant digits.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s.to_owned()
        }
    };
    if (-4..6).contains(&exp) {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

/// Aggregate RD numbers at one QP, normalized per sample of the macroblock
/// tiling (edge padding included).
#[derive(Debug, Clone, PartialEq)]
pub struct CurveReportRow {
    pub qp: i32,
    pub rate_bits: u64,
    pub i_mse: f64,
    pub d_mse: f64,
    pub id_mse: f64,
}

/// Codes every block of every sampled frame at every grid QP.
pub fn emit_rd_report(
    pairs: &[SampledPair],
    grid: &QpGrid,
    model: EntropyModel,
) -> Result<Vec<CurveReportRow>, PipelineError> {
    let blocks: Vec<_> = pairs.iter().flat_map(block_pairs).collect();
    if blocks.is_empty() {
        return Err(PipelineError::NoBlocks);
    }
    let per_block: Vec<(Vec<_>, f64)> = blocks
        .par_iter()
        .map(|(bu, bz)| {
            let u = MacroBlockCoeffs::<f64>::from_pixels(bu);
            let z = MacroBlockCoeffs::<f64>::from_pixels(bz);
            let gap: f64 = bu
                .samples
                .iter()
                .zip(&bz.samples)
                .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
                .sum();
            (rd_curve(&u, &z, grid, model).expect("blocks share origins"), gap)
        })
        .collect();
    let samples = (blocks.len() * MB_COEFFS) as f64;
    let id_mse = per_block.iter().map(|b| b.1).sum::<f64>() / samples;
    Ok((0..grid.len())
        .map(|i| {
            let (mut rate, mut di, mut dz) = (0u64, 0.0, 0.0);
            for (curve, _) in &per_block {
                rate += curve[i].rate_bits;
                di += curve[i].dist_input;
                dz += curve[i].dist_denoised;
            }
            CurveReportRow {
                qp: per_block[0].0[i].qp,
                rate_bits: rate,
                i_mse: di / samples,
                d_mse: dz / samples,
                id_mse,
            }
        })
        .collect())
}

/// Per-block calibration rows for the sampled frames, with block ids
/// `<stem>:<frame>:<x>:<y>`.
pub fn rd_corpus(
    pairs: &[SampledPair],
    grid: &QpGrid,
    model: EntropyModel,
    stem: &str,
) -> Vec<CorpusRow> {
    let blocks: Vec<_> = pairs
        .iter()
        .flat_map(|p| block_pairs(p).into_iter().map(move |b| (p.frame_index, b)))
        .collect();
    blocks
        .par_iter()
        .map(|(frame, (bu, bz))| {
            let u = MacroBlockCoeffs::<f64>::from_pixels(bu);
            let z = MacroBlockCoeffs::<f64>::from_pixels(bz);
            let curve = rd_curve(&u, &z, grid, model).expect("blocks share origins");
            let id = format!("{stem}:{frame}:{}:{}", bu.origin.0, bu.origin.1);
            corpus_rows(&id, model.id(), &curve)
        })
        .flatten()
        .collect()
}

pub fn write_decisions(writer: impl io::Write, decisions: &[GopDecision]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DECISIONS_HEADER)?;
    for d in decisions {
        w.write_record([
            d.gop_index.to_string(),
            d.frame_index.to_string(),
            d.qp_star.to_string(),
            d.effective_qp.to_string(),
            d.block_count.to_string(),
            format_g(d.degenerate_fraction),
            format_g(d.qp_mean),
            format_g(d.qp_std),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_decisions(reader: impl io::Read) -> Result<Vec<GopDecision>, PipelineError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if !header.iter().eq(DECISIONS_HEADER) {
        return Err(PipelineError::Decisions {
            line: 1,
            reason: format!("expected header {}", DECISIONS_HEADER.join(",")),
        });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let line = i + 2;
            let field = |k: usize| -> Result<&str, PipelineError> {
                rec.get(k).ok_or_else(|| PipelineError::Decisions {
                    line,
                    reason: format!("missing column {}", DECISIONS_HEADER[k]),
                })
            };
            fn num<T: std::str::FromStr>(s: &str, line: usize, col: &str) -> Result<T, PipelineError> {
                s.parse().map_err(|_| PipelineError::Decisions {
                    line,
                    reason: format!("bad {col} value {s:?}"),
                })
            }
            let n = DECISIONS_HEADER;
            Ok(GopDecision {
                gop_index: num(field(0)?, line, n[0])?,
                frame_index: num(field(1)?, line, n[1])?,
                qp_star: num(field(2)?, line, n[2])?,
                effective_qp: num(field(3)?, line, n[3])?,
                block_count: num(field(4)?, line, n[4])?,
                degenerate_fraction: num(field(5)?, line, n[5])?,
                qp_mean: num(field(6)?, line, n[6])?,
                qp_std: num(field(7)?, line, n[7])?,
            })
        })
        .collect()
}

pub fn write_curves(writer: impl io::Write, rows: &[CurveReportRow]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CURVES_HEADER)?;
    for r in rows {
        w.write_record([
            r.qp.to_string(),
            r.rate_bits.to_string(),
            format_g(r.i_mse),
            format_g(r.d_mse),
            format_g(r.id_mse),
        ])?;
    }
    w.flush()?;
    Ok(())
}
