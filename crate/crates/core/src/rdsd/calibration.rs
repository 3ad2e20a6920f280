use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lcc::RdPoint;
use crate::scalar::Scalar;

/// Fewest valid blocks behind a table entry.
pub const DEFAULT_MIN_SUPPORT: usize = 30;

const MAGIC: &str = "satcal";
const VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration table has no entries")]
    Empty,
    #[error("calibration ratio at QP {qp} must be positive and finite, got {ratio}")]
    BadRatio { qp: i32, ratio: f64 },
    #[error("duplicate calibration entry for QP {0}")]
    DuplicateQp(i32),
    #[error("invalid codec id {0:?}")]
    BadCodecId(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("corpora are misaligned; unmatched block ids: {}", .0.join(", "))]
    Misaligned(Vec<String>),
    #[error("block {block_id}: {reason}")]
    BadCurve { block_id: String, reason: String },
    #[error("corpus mixes codec ids {0:?}")]
    MixedCodecs(Vec<String>),
    #[error("no QP reached the minimum support of {min_support} valid blocks")]
    NoSupport { min_support: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Per-QP `a_s / a_t` ratios carrying a Lagrange multiplier from codec `s`
/// (the low-complexity codec) to codec `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    codec_s: String,
    codec_t: String,
    entries: BTreeMap<i32, f64>,
}

fn check_codec_id(id: &str) -> Result<(), CalibrationError> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(CalibrationError::BadCodecId(id.to_owned()));
    }
    Ok(())
}

impl CalibrationTable {
    pub fn new(
        codec_s: impl Into<String>,
        codec_t: impl Into<String>,
        entries: BTreeMap<i32, f64>,
    ) -> Result<Self, CalibrationError> {
        let (codec_s, codec_t) = (codec_s.into(), codec_t.into());
        check_codec_id(&codec_s)?;
        check_codec_id(&codec_t)?;
        if entries.is_empty() {
            return Err(CalibrationError::Empty);
        }
        if let Some((&qp, &ratio)) = entries.iter().find(|(_, r)| **r <= 0.0 || !r.is_finite()) {
            return Err(CalibrationError::BadRatio { qp, ratio });
        }
        Ok(Self {
            codec_s,
            codec_t,
            entries,
        })
    }

    /// Unit ratios over `qps`: the same-codec case.
    pub fn identity(codec: &str, qps: impl IntoIterator<Item = i32>) -> Result<Self, CalibrationError> {
        Self::new(codec, codec, qps.into_iter().map(|qp| (qp, 1.0)).collect())
    }

    pub fn codec_s(&self) -> &str {
        &self.codec_s
    }

    pub fn codec_t(&self) -> &str {
        &self.codec_t
    }

    pub fn entries(&self) -> &BTreeMap<i32, f64> {
        &self.entries
    }

    /// Ratio of the nearest QP entry; ties go to the lower QP.
    pub fn lookup(&self, qp: i32) -> f64 {
        let below = self.entries.range(..=qp).next_back();
        let above = self.entries.range(qp..).next();
        match (below, above) {
            (Some((&b, &rb)), Some((&a, &ra))) => {
                if qp - b <= a - qp {
                    rb
                } else {
                    ra
                }
            }
            (Some((_, &r)), None) | (None, Some((_, &r))) => r,
            (None, None) => unreachable!("tables are never empty"),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} {VERSION} {} {}\n", self.codec_s, self.codec_t);
        for (qp, r) in &self.entries {
            writeln!(s, "{qp},{r}").expect("writing to a String");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CalibrationError> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, reason: String| CalibrationError::Parse { line: line + 1, reason };
        let (_, header) = lines.next().ok_or_else(|| parse_err(0, "empty calibration file".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        match fields.as_slice() {
            [MAGIC, VERSION, _, _] => {}
            [MAGIC, v, ..] if *v != VERSION => {
                return Err(parse_err(0, format!("unsupported version {v:?}")))
            }
            _ => return Err(parse_err(0, format!("expected '{MAGIC} {VERSION} <codec_s> <codec_t>'"))),
        }
        let mut entries = BTreeMap::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (qp, ratio) = line
                .split_once(',')
                .ok_or_else(|| parse_err(i, format!("expected 'qp,ratio', got {line:?}")))?;
            let qp: i32 = qp.trim().parse().map_err(|e| parse_err(i, format!("bad QP {qp:?}: {e}")))?;
            let ratio: f64 = ratio
                .trim()
                .parse()
                .map_err(|e| parse_err(i, format!("bad ratio {ratio:?}: {e}")))?;
            if entries.insert(qp, ratio).is_some() {
                return Err(CalibrationError::DuplicateQp(qp));
            }
        }
        Self::new(fields[2], fields[3], entries)
    }
}

/// Median ratios between the run-level exp-Golomb and CAVLC-style entropy
/// models on the synthetic corpus (24 planes of 128×128, 1536 blocks), as
/// printed by `examples/default_table.rs`. Slopes need QP + 5, so the last
/// measurable QP is 46.
pub const MEASURED_ANCHORS: [(i32, f64); 15] = [
    (16, 1.5842),
    (20, 1.6585),
    (24, 1.6609),
    (26, 1.6682),
    (28, 1.4822),
    (29, 1.1037),
    (30, 0.9125),
    (32, 0.8066),
    (34, 0.8752),
    (36, 0.6562),
    (38, 0.4259),
    (40, 0.3415),
    (42, 0.4428),
    (44, 0.4906),
    (46, 0.4848),
];

/// Shipped table over QP 0..=51: 1.0 up to QP 12, linear from there through
/// [`MEASURED_ANCHORS`], flat after the last anchor.
pub fn default_table() -> CalibrationTable {
    let mut knots = vec![(12, 1.0)];
    knots.extend(MEASURED_ANCHORS);
    let last = *knots.last().expect("anchors");
    let entries = (0..=51)
        .map(|qp| {
            if qp <= 12 {
                return (qp, 1.0);
            }
            let Some(k) = knots.windows(2).find(|w| qp <= w[1].0) else {
                return (qp, last.1);
            };
            let ((q0, r0), (q1, r1)) = (k[0], k[1]);
            let t = f64::from(qp - q0) / f64::from(q1 - q0);
            (qp, r0 + t * (r1 - r0))
        })
        .collect();
    CalibrationTable::new("lcc-eg", "lcc-cavlc", entries).expect("static table is valid")
}

/// One RD point of one block in the calibration exchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub block_id: String,
    pub codec_id: String,
    pub qp: i32,
    pub step: f64,
    pub rate_bits: f64,
    pub distortion: f64,
}

/// Rows for one block's curve, with input distortion.
pub fn corpus_rows<T: Scalar>(block_id: &str, codec_id: &str, curve: &[RdPoint<T>]) -> Vec<CorpusRow> {
    curve
        .iter()
        .map(|p| CorpusRow {
            block_id: block_id.to_owned(),
            codec_id: codec_id.to_owned(),
            qp: p.qp,
            step: crate::quant::step_for_qp(p.qp),
            rate_bits: p.rate_bits as f64,
            distortion: p.dist_input.as_f64(),
        })
        .collect()
}

pub fn read_corpus(reader: impl io::Read) -> Result<Vec<CorpusRow>, CalibrationError> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(CalibrationError::from)).collect()
}

pub fn write_corpus(writer: impl io::Write, rows: &[CorpusRow]) -> Result<(), CalibrationError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Calibration outcome with per-QP support counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub table: CalibrationTable,
    /// Valid blocks behind every QP that had at least one.
    pub support: BTreeMap<i32, usize>,
    /// QPs left out of the table for lack of support.
    pub dropped: Vec<i32>,
    /// Set when the corpus holds fewer blocks than the minimum support, in
    /// which case entries are kept regardless of support.
    pub low_confidence: bool,
}

type Curves = BTreeMap<String, BTreeMap<i32, (f64, f64)>>;

fn group(rows: &[CorpusRow]) -> Result<(String, Curves), CalibrationError> {
    let codecs: BTreeSet<&str> = rows.iter().map(|r| r.codec_id.as_str()).collect();
    if codecs.len() > 1 {
        return Err(CalibrationError::MixedCodecs(codecs.into_iter().map(str::to_owned).collect()));
    }
    let codec = codecs.into_iter().next().unwrap_or_default().to_owned();
    let mut curves: Curves = BTreeMap::new();
    for r in rows {
        let curve = curves.entry(r.block_id.clone()).or_default();
        if curve.insert(r.qp, (r.rate_bits, r.distortion)).is_some() {
            return Err(CalibrationError::BadCurve {
                block_id: r.block_id.clone(),
                reason: format!("QP {} appears twice", r.qp),
            });
        }
    }
    Ok((codec, curves))
}

fn slope(curve: &BTreeMap<i32, (f64, f64)>, qp: i32, c: i32) -> Option<f64> {
    let (r0, d0) = curve.get(&qp)?;
    let (r1, d1) = curve.get(&(qp + c))?;
    (r1 != r0).then(|| -(d1 - d0) / (r1 - r0))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median `lambda_t / lambda_s` per QP over blocks where both slopes with
/// offset `c` are positive.
pub fn calibrate(
    source: &[CorpusRow],
    target: &[CorpusRow],
    c: i32,
    min_support: usize,
) -> Result<Calibration, CalibrationError> {
    let (codec_s, src) = group(source)?;
    let (codec_t, tgt) = group(target)?;
    let unmatched: Vec<String> = src
        .keys()
        .filter(|k| !tgt.contains_key(*k))
        .chain(tgt.keys().filter(|k| !src.contains_key(*k)))
        .cloned()
        .collect();
    if !unmatched.is_empty() {
        return Err(CalibrationError::Misaligned(unmatched));
    }
    let mut ratios: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (id, cs) in &src {
        let ct = &tgt[id];
        if !cs.keys().eq(ct.keys()) {
            return Err(CalibrationError::BadCurve {
                block_id: id.clone(),
                reason: "source and target cover different QPs".into(),
            });
        }
        for &qp in cs.keys() {
            if let (Some(ls), Some(lt)) = (slope(cs, qp, c), slope(ct, qp, c)) {
                if ls > 0.0 && lt > 0.0 && (lt / ls).is_finite() {
                    ratios.entry(qp).or_default().push(lt / ls);
                }
            }
        }
    }
    let low_confidence = src.len() < min_support;
    let needed = if low_confidence { 1 } else { min_support };
    let support: BTreeMap<i32, usize> = ratios.iter().map(|(&qp, v)| (qp, v.len())).collect();
    let mut entries = BTreeMap::new();
    let mut dropped = Vec::new();
    for (qp, mut v) in ratios {
        if v.len() >= needed {
            entries.insert(qp, median(&mut v));
        } else {
            dropped.push(qp);
        }
    }
    if entries.is_empty() {
        return Err(CalibrationError::NoSupport { min_support: needed });
    }
    Ok(Calibration {
        table: CalibrationTable::new(codec_s, codec_t, entries)?,
        support,
        dropped,
        low_confidence,
    })
}
