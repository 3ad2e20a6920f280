use super::{LumaPlane, MediaError, VideoSequence};

/// Which frame of each GOP feeds detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleOffset {
    /// `floor(len / 2)` of the GOP's own length, so a short final GOP samples its own middle.
    #[default]
    Middle,
    /// Fixed index within the GOP, clamped to the last frame of a short final GOP.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GopIndexing {
    gop_length: usize,
    offset: SampleOffset,
}

impl GopIndexing {
    pub fn new(gop_length: usize, offset: SampleOffset) -> Result<Self, MediaError> {
        if gop_length == 0 {
            return Err(MediaError::InvalidGeometry("GOP length must be at least 1".into()));
        }
        if let SampleOffset::Fixed(o) = offset {
            if o >= gop_length {
                return Err(MediaError::InvalidGeometry(format!(
                    "sample offset {o} outside GOP of {gop_length} frames"
                )));
            }
        }
        Ok(Self { gop_length, offset })
    }

    pub fn middle(gop_length: usize) -> Result<Self, MediaError> {
        Self::new(gop_length, SampleOffset::Middle)
    }

    pub fn gop_length(&self) -> usize {
        self.gop_length
    }

    pub fn offset(&self) -> SampleOffset {
        self.offset
    }

    pub fn gop_count(&self, frame_count: usize) -> usize {
        frame_count.div_ceil(self.gop_length)
    }

    /// First frame index and length of GOP `gop_index` in a clip of `frame_count` frames.
    pub fn gop_span(&self, gop_index: usize, frame_count: usize) -> (usize, usize) {
        let start = gop_index * self.gop_length;
        (start, self.gop_length.min(frame_count.saturating_sub(start)))
    }

    pub fn sampled_index(&self, gop_index: usize, frame_count: usize) -> usize {
        let (start, len) = self.gop_span(gop_index, frame_count);
        let within = match self.offset {
            SampleOffset::Middle => len / 2,
            SampleOffset::Fixed(o) => o.min(len.saturating_sub(1)),
        };
        start + within
    }
}

impl Default for GopIndexing {
    fn default() -> Self {
        Self {
            gop_length: 30,
            offset: SampleOffset::Middle,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampledFrame<'a> {
    pub gop_index: usize,
    pub frame_index: usize,
    pub plane: &'a LumaPlane,
}

/// One luma plane per GOP, in GOP order.
pub fn sample_gop_frames<'a>(seq: &'a VideoSequence, gi: &GopIndexing) -> Vec<SampledFrame<'a>> {
    let n = seq.frame_count();
    (0..gi.gop_count(n))
        .map(|gop_index| {
            let frame_index = gi.sampled_index(gop_index, n);
            SampledFrame {
                gop_index,
                frame_index,
                plane: &seq.frames()[frame_index].luma,
            }
        })
        .collect()
}
