use super::{ChromaFormat, Frame, FrameRate, LumaPlane, MediaError, VideoSequence};

const MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME_MAGIC: &[u8] = b"FRAME";

fn malformed(offset: usize, reason: impl Into<String>) -> MediaError {
    MediaError::MalformedHeader {
        offset,
        reason: reason.into(),
    }
}

fn parse_uint(token: &[u8], offset: usize, what: &str) -> Result<usize, MediaError> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| {
            malformed(
                offset,
                format!("invalid {what} `{}`", String::from_utf8_lossy(token)),
            )
        })
}

fn parse_ratio(token: &[u8], offset: usize, what: &str) -> Result<(u32, u32), MediaError> {
    let text = std::str::from_utf8(token).map_err(|_| malformed(offset, format!("invalid {what}")))?;
    let (n, d) = text
        .split_once(':')
        .ok_or_else(|| malformed(offset, format!("{what} `{text}` is not of the form N:D")))?;
    match (n.parse::<u32>(), d.parse::<u32>()) {
        (Ok(n), Ok(d)) => Ok((n, d)),
        _ => Err(malformed(offset, format!("invalid {what} `{text}`"))),
    }
}

fn parse_colorspace(token: &[u8], offset: usize) -> Result<ChromaFormat, MediaError> {
    match token {
        b"420" | b"420jpeg" | b"420paldv" | b"420mpeg2" => Ok(ChromaFormat::Yuv420),
        b"mono" => Ok(ChromaFormat::Mono),
        other => {
            let name = String::from_utf8_lossy(other);
            if name.starts_with("420") || name.starts_with("422") || name.starts_with("444") || name.starts_with("mono") {
                Err(MediaError::Unsupported(format!(
                    "Y4M colorspace C{name}; only 8-bit 4:2:0 and mono are supported"
                )))
            } else {
                Err(malformed(offset, format!("unknown colorspace `C{name}`")))
            }
        }
    }
}

/// Splits `line` (starting at absolute offset `base`) into space-separated tokens.
fn tokens(line: &[u8], base: usize) -> impl Iterator<Item = (usize, &[u8])> {
    let mut pos = 0;
    line.split(|&b| b == b' ').map(move |tok| {
        let at = base + pos;
        pos += tok.len() + 1;
        (at, tok)
    })
}

/// Parses a complete YUV4MPEG2 stream held in memory.
///
/// Header and frame-header bytes are retained, so [`write_y4m`] reproduces
/// the input exactly.
pub fn parse_y4m(data: &[u8]) -> Result<VideoSequence, MediaError> {
    let header_end = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed(data.len(), "header is not terminated by a newline"))?;
    let header = &data[..header_end];
    if !header.starts_with(MAGIC) {
        return Err(malformed(0, "missing YUV4MPEG2 signature"));
    }
    let rest = &header[MAGIC.len()..];
    if !rest.is_empty() && rest[0] != b' ' {
        return Err(malformed(MAGIC.len(), "expected a space after the signature"));
    }

    let mut width = None;
    let mut height = None;
    let mut frame_rate = FrameRate::default();
    let mut chroma = ChromaFormat::Yuv420;
    for (offset, tok) in tokens(rest, MAGIC.len()).skip(1) {
        let Some((&tag, value)) = tok.split_first() else {
            return Err(malformed(offset, "empty header parameter"));
        };
        match tag {
            b'W' => width = Some(parse_uint(value, offset, "width")?),
            b'H' => height = Some(parse_uint(value, offset, "height")?),
            b'F' => {
                let (n, d) = parse_ratio(value, offset, "frame rate")?;
                if n == 0 || d == 0 {
                    return Err(malformed(offset, "frame rate must be positive"));
                }
                frame_rate = FrameRate::new(n, d);
            }
            b'A' => {
                parse_ratio(value, offset, "pixel aspect")?;
            }
            b'C' => chroma = parse_colorspace(value, offset)?,
            b'I' | b'X' => {}
            _ => {
                return Err(malformed(
                    offset,
                    format!("unknown header parameter `{}`", String::from_utf8_lossy(tok)),
                ))
            }
        }
    }
    let width = width.ok_or_else(|| malformed(header_end, "missing W parameter"))?;
    let height = height.ok_or_else(|| malformed(header_end, "missing H parameter"))?;
    if width == 0 || height == 0 {
        return Err(malformed(0, format!("invalid dimensions {width}x{height}")));
    }

    let luma_len = width * height;
    let frame_len = chroma.frame_len(width, height);
    let mut frames = Vec::new();
    let mut pos = header_end + 1;
    while pos < data.len() {
        let frame_index = frames.len();
        let line_end = data[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| pos + p)
            .ok_or(MediaError::TruncatedFrame {
                frame_index,
                needed: FRAME_MAGIC.len() + 1,
                available: data.len() - pos,
            })?;
        let line = &data[pos..line_end];
        if !line.starts_with(FRAME_MAGIC) {
            return Err(malformed(pos, format!("frame {frame_index} does not start with FRAME")));
        }
        let params = &line[FRAME_MAGIC.len()..];
        if !params.is_empty() && params[0] != b' ' {
            return Err(malformed(pos + FRAME_MAGIC.len(), "expected a space after FRAME"));
        }
        let body = line_end + 1;
        let available = data.len() - body;
        if available < frame_len {
            return Err(MediaError::TruncatedFrame {
                frame_index,
                needed: frame_len,
                available,
            });
        }
        let luma = LumaPlane::new(width, height, data[body..body + luma_len].to_vec())?;
        frames.push(Frame {
            luma,
            chroma: data[body + luma_len..body + frame_len].to_vec(),
            params: params.to_vec(),
        });
        pos = body + frame_len;
    }

    Ok(VideoSequence::new(width, height, frame_rate, chroma, frames)?.with_y4m_header(header.to_vec()))
}

/// Serializes a sequence as YUV4MPEG2.
///
/// Sequences that came from [`parse_y4m`] keep their original header bytes;
/// others get a minimal `W H F Ip A1:1 C` header.
pub fn write_y4m(seq: &VideoSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + seq.frame_count() * (seq.chroma_format().frame_len(seq.width(), seq.height()) + 8));
    match seq.y4m_header() {
        Some(h) => out.extend_from_slice(h),
        None => {
            let fr = seq.frame_rate();
            let cs = match seq.chroma_format() {
                ChromaFormat::Yuv420 => "420jpeg",
                ChromaFormat::Mono => "mono",
            };
            out.extend_from_slice(
                format!(
                    "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C{cs}",
                    seq.width(),
                    seq.height(),
                    fr.num,
                    fr.den
                )
                .as_bytes(),
            );
        }
    }
    out.push(b'\n');
    for f in seq.frames() {
        out.extend_from_slice(FRAME_MAGIC);
        out.extend_from_slice(&f.params);
        out.push(b'\n');
        out.extend_from_slice(f.luma.samples());
        out.extend_from_slice(&f.chroma);
    }
    out
}
