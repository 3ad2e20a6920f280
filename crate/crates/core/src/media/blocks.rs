use super::{LumaPlane, MediaError};

/// A square tile of pixels cut from a luma plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelBlock {
    /// Top-left pixel coordinates `(x, y)` in the source plane.
    pub origin: (usize, usize),
    pub size: usize,
    /// True when the tile extends past the right or bottom edge and was
    /// completed by edge replication.
    pub padded: bool,
    /// `size * size` samples in raster order.
    pub samples: Vec<u8>,
}

impl PixelBlock {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.size + x]
    }
}

/// Raster-order tiling of `plane` into `block_size`² blocks. Partial blocks
/// on the right and bottom borders are padded by replicating the last
/// column / row.
pub fn partition_blocks(plane: &LumaPlane, block_size: usize) -> Vec<PixelBlock> {
    assert!(block_size > 0, "block size must be positive");
    let (w, h) = (plane.width(), plane.height());
    let cols = w.div_ceil(block_size);
    let rows = h.div_ceil(block_size);
    let mut blocks = Vec::with_capacity(cols * rows);
    for by in 0..rows {
        for bx in 0..cols {
            let (x0, y0) = (bx * block_size, by * block_size);
            let padded = x0 + block_size > w || y0 + block_size > h;
            let mut samples = Vec::with_capacity(block_size * block_size);
            for dy in 0..block_size {
                let y = (y0 + dy).min(h - 1);
                for dx in 0..block_size {
                    samples.push(plane.get((x0 + dx).min(w - 1), y));
                }
            }
            blocks.push(PixelBlock {
                origin: (x0, y0),
                size: block_size,
                padded,
                samples,
            });
        }
    }
    blocks
}

/// Inverse of [`partition_blocks`]: writes the in-bounds part of every block back.
pub fn reassemble_plane(
    blocks: &[PixelBlock],
    width: usize,
    height: usize,
) -> Result<LumaPlane, MediaError> {
    let mut samples = vec![0u8; width * height];
    let mut covered = vec![false; width * height];
    for b in blocks {
        let (x0, y0) = b.origin;
        for dy in 0..b.size {
            let y = y0 + dy;
            if y >= height {
                break;
            }
            for dx in 0..b.size {
                let x = x0 + dx;
                if x >= width {
                    break;
                }
                samples[y * width + x] = b.get(dx, dy);
                covered[y * width + x] = true;
            }
        }
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(MediaError::InvalidGeometry(format!(
            "pixel ({}, {}) not covered by any block",
            i % width,
            i / width
        )));
    }
    LumaPlane::new(width, height, samples)
}
