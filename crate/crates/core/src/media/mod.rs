//! Raw video input: Y4M and headerless planar YUV readers, luma planes,
//! per-GOP frame sampling and macroblock tiling.

mod blocks;
mod gop;
mod raw;
mod y4m;

pub use blocks::{partition_blocks, reassemble_plane, PixelBlock};
pub use gop::{sample_gop_frames, GopIndexing, SampleOffset, SampledFrame};
pub use raw::{read_raw_planar, write_raw_planar};
pub use y4m::{parse_y4m, write_y4m};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MediaError {
    #[error("malformed Y4M header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("truncated frame {frame_index}: needed {needed} bytes, {available} available")]
    TruncatedFrame {
        frame_index: usize,
        needed: usize,
        available: usize,
    },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
}

/// Frame rate as a rational number of frames per second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub const fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        Self::new(30, 1)
    }
}

/// Chroma layout of the stream. Only 8-bit 4:2:0 and luma-only input are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChromaFormat {
    Yuv420,
    Mono,
}

impl ChromaFormat {
    /// Bytes of chroma data following a `width`×`height` luma plane.
    pub fn chroma_len(self, width: usize, height: usize) -> usize {
        match self {
            ChromaFormat::Yuv420 => 2 * width.div_ceil(2) * height.div_ceil(2),
            ChromaFormat::Mono => 0,
        }
    }

    pub fn frame_len(self, width: usize, height: usize) -> usize {
        width * height + self.chroma_len(width, height)
    }
}

/// One frame's 8-bit luminance samples in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, MediaError> {
        if width == 0 || height == 0 {
            return Err(MediaError::InvalidGeometry(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(MediaError::InvalidGeometry(format!(
                "{width}x{height} plane needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// Plane with every sample set to `value`.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("non-empty plane")
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples).expect("non-empty plane")
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    /// Sample at `(x, y)` with coordinates clamped into the plane (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn same_geometry(&self, other: &LumaPlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }
}

/// A decoded frame. Chroma is kept only so the sequence can be written back out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub luma: LumaPlane,
    pub chroma: Vec<u8>,
    /// Raw Y4M frame-header parameters following `FRAME` (usually empty).
    pub params: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSequence {
    width: usize,
    height: usize,
    frame_rate: FrameRate,
    chroma: ChromaFormat,
    frames: Vec<Frame>,
    /// Header line exactly as read (without the trailing newline) for Y4M input.
    y4m_header: Option<Vec<u8>>,
}

impl VideoSequence {
    pub fn new(
        width: usize,
        height: usize,
        frame_rate: FrameRate,
        chroma: ChromaFormat,
        frames: Vec<Frame>,
    ) -> Result<Self, MediaError> {
        if width == 0 || height == 0 {
            return Err(MediaError::InvalidGeometry(format!(
                "sequence dimensions must be positive, got {width}x{height}"
            )));
        }
        if frame_rate.num == 0 || frame_rate.den == 0 {
            return Err(MediaError::InvalidGeometry(format!(
                "frame rate {}:{} is not positive",
                frame_rate.num, frame_rate.den
            )));
        }
        let chroma_len = chroma.chroma_len(width, height);
        for (i, f) in frames.iter().enumerate() {
            if f.luma.width() != width || f.luma.height() != height {
                return Err(MediaError::InvalidGeometry(format!(
                    "frame {i} is {}x{}, sequence is {width}x{height}",
                    f.luma.width(),
                    f.luma.height()
                )));
            }
            if f.chroma.len() != chroma_len {
                return Err(MediaError::InvalidGeometry(format!(
                    "frame {i} carries {} chroma bytes, expected {chroma_len}",
                    f.chroma.len()
                )));
            }
        }
        Ok(Self {
            width,
            height,
            frame_rate,
            chroma,
            frames,
            y4m_header: None,
        })
    }

    /// 4:2:0 sequence built from luma planes with neutral (128) chroma.
    pub fn from_luma_planes(
        planes: Vec<LumaPlane>,
        frame_rate: FrameRate,
    ) -> Result<Self, MediaError> {
        let first = planes.first().ok_or_else(|| {
            MediaError::InvalidGeometry("cannot infer geometry from zero planes".into())
        })?;
        let (w, h) = (first.width(), first.height());
        let chroma_len = ChromaFormat::Yuv420.chroma_len(w, h);
        let frames = planes
            .into_iter()
            .map(|luma| Frame {
                luma,
                chroma: vec![128; chroma_len],
                params: Vec::new(),
            })
            .collect();
        Self::new(w, h, frame_rate, ChromaFormat::Yuv420, frames)
    }

    pub(crate) fn with_y4m_header(mut self, header: Vec<u8>) -> Self {
        self.y4m_header = Some(header);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_rate(&self) -> FrameRate {
        self.frame_rate
    }

    pub fn chroma_format(&self) -> ChromaFormat {
        self.chroma
    }

    /// Bits per sample; only 8-bit input is supported.
    pub fn color_depth(&self) -> u8 {
        8
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn luma(&self, index: usize) -> Option<&LumaPlane> {
        self.frames.get(index).map(|f| &f.luma)
    }

    pub fn y4m_header(&self) -> Option<&[u8]> {
        self.y4m_header.as_deref()
    }

    /// Checks that `other` can serve as this sequence's denoised reference.
    pub fn check_matches(&self, other: &VideoSequence) -> Result<(), MediaError> {
        if self.width != other.width || self.height != other.height {
            return Err(MediaError::GeometryMismatch(format!(
                "input is {}x{}, reference is {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        if self.frame_count() != other.frame_count() {
            return Err(MediaError::GeometryMismatch(format!(
                "input has {} frames, reference has {}",
                self.frame_count(),
                other.frame_count()
            )));
        }
        Ok(())
    }
}
