use super::{ChromaFormat, Frame, FrameRate, LumaPlane, MediaError, VideoSequence};

/// Reads `frame_count` headerless 8-bit 4:2:0 planar frames.
///
/// Bytes beyond the last requested frame are ignored with a warning.
pub fn read_raw_planar(
    data: &[u8],
    width: usize,
    height: usize,
    frame_count: usize,
    frame_rate: FrameRate,
) -> Result<VideoSequence, MediaError> {
    if width == 0 || height == 0 {
        return Err(MediaError::InvalidGeometry(format!(
            "raw geometry must be positive, got {width}x{height}"
        )));
    }
    let chroma = ChromaFormat::Yuv420;
    let luma_len = width * height;
    let frame_len = chroma.frame_len(width, height);
    let mut frames = Vec::with_capacity(frame_count);
    for frame_index in 0..frame_count {
        let start = frame_index * frame_len;
        let available = data.len().saturating_sub(start);
        if available < frame_len {
            return Err(MediaError::TruncatedFrame {
                frame_index,
                needed: frame_len,
                available,
            });
        }
        let body = &data[start..start + frame_len];
        frames.push(Frame {
            luma: LumaPlane::new(width, height, body[..luma_len].to_vec())?,
            chroma: body[luma_len..].to_vec(),
            params: Vec::new(),
        });
    }
    let used = frame_count * frame_len;
    if data.len() > used {
        log::warn!(
            "ignoring {} trailing bytes after {frame_count} raw frames",
            data.len() - used
        );
    }
    VideoSequence::new(width, height, frame_rate, chroma, frames)
}

pub fn write_raw_planar(seq: &VideoSequence) -> Vec<u8> {
    let mut out = Vec::new();
    for f in seq.frames() {
        out.extend_from_slice(f.luma.samples());
        out.extend_from_slice(&f.chroma);
    }
    out
}
