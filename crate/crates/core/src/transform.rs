//! Orthonormal 4×4 DCT-II and the 16×16 macroblock coefficient layout.

use crate::media::PixelBlock;
use crate::scalar::Scalar;

/// Side of the transform.
pub const SUB_BLOCK: usize = 4;
/// Side of a detection macroblock in pixels.
pub const MACROBLOCK: usize = 16;
/// Sub-blocks per macroblock (4×4 grid, raster order).
pub const SUB_BLOCKS_PER_MB: usize = 16;
/// Coefficients per macroblock.
pub const MB_COEFFS: usize = 256;

// sqrt(1/2)·cos(kπ/8) for k = 1, 3
const C1: f64 = 0.653_281_482_438_188_3;
const C3: f64 = 0.270_598_050_073_098_5;

fn basis<T: Scalar>() -> [[T; 4]; 4] {
    let h = T::lit(0.5);
    let (c1, c3) = (T::lit(C1), T::lit(C3));
    [
        [h, h, h, h],
        [c1, c3, -c3, -c1],
        [h, -h, -h, h],
        [c3, -c1, c1, -c3],
    ]
}

/// DCT-domain values of one 4×4 sub-block, indexed `row * 4 + col`
/// (row = vertical frequency).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeff4x4<T>(pub [T; 16]);

impl<T: Scalar> Coeff4x4<T> {
    pub fn zero() -> Self {
        Self([T::zero(); 16])
    }

    pub fn energy(&self) -> T {
        self.0.iter().map(|&c| c * c).sum()
    }
}

impl<T: Scalar> Default for Coeff4x4<T> {
    fn default() -> Self {
        Self::zero()
    }
}

/// Separable orthonormal type-II DCT of a 4×4 block given in raster order.
pub fn forward_dct4<T: Scalar>(block: &[T; 16]) -> Coeff4x4<T> {
    let m = basis::<T>();
    let mut tmp = [T::zero(); 16];
    // rows
    for r in 0..4 {
        for k in 0..4 {
            tmp[r * 4 + k] = (0..4).map(|n| m[k][n] * block[r * 4 + n]).sum();
        }
    }
    let mut out = [T::zero(); 16];
    // columns
    for c in 0..4 {
        for k in 0..4 {
            out[k * 4 + c] = (0..4).map(|n| m[k][n] * tmp[n * 4 + c]).sum();
        }
    }
    Coeff4x4(out)
}

/// Exact adjoint of [`forward_dct4`].
pub fn inverse_dct4<T: Scalar>(coeffs: &Coeff4x4<T>) -> [T; 16] {
    let m = basis::<T>();
    let c = &coeffs.0;
    let mut tmp = [T::zero(); 16];
    for col in 0..4 {
        for n in 0..4 {
            tmp[n * 4 + col] = (0..4).map(|k| m[k][n] * c[k * 4 + col]).sum();
        }
    }
    let mut out = [T::zero(); 16];
    for r in 0..4 {
        for n in 0..4 {
            out[r * 4 + n] = (0..4).map(|k| m[k][n] * tmp[r * 4 + k]).sum();
        }
    }
    out
}

/// A 16×16 block as sixteen 4×4 coefficient sub-blocks in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroBlockCoeffs<T> {
    pub sub_blocks: [Coeff4x4<T>; SUB_BLOCKS_PER_MB],
    /// Top-left pixel `(x, y)` of the block.
    pub origin: (usize, usize),
    pub padded: bool,
}

impl<T: Scalar> MacroBlockCoeffs<T> {
    /// Transforms a 16×16 pixel block.
    ///
    /// # Panics
    /// If the block is not 16×16.
    pub fn from_pixels(block: &PixelBlock) -> Self {
        assert_eq!(block.size, MACROBLOCK, "macroblocks are 16x16");
        let mut sub_blocks = [Coeff4x4::zero(); SUB_BLOCKS_PER_MB];
        for (s, sb) in sub_blocks.iter_mut().enumerate() {
            let (sx, sy) = ((s % 4) * SUB_BLOCK, (s / 4) * SUB_BLOCK);
            let mut px = [T::zero(); 16];
            for y in 0..4 {
                for x in 0..4 {
                    px[y * 4 + x] = T::from_int(i64::from(block.get(sx + x, sy + y)));
                }
            }
            *sb = forward_dct4(&px);
        }
        Self {
            sub_blocks,
            origin: block.origin,
            padded: block.padded,
        }
    }

    /// Coefficient by flat index `sub_block * 16 + position`.
    #[inline]
    pub fn coeff(&self, i: usize) -> T {
        self.sub_blocks[i / 16].0[i % 16]
    }

    pub fn coeffs(&self) -> impl Iterator<Item = T> + '_ {
        self.sub_blocks.iter().flat_map(|sb| sb.0.iter().copied())
    }

    pub fn energy(&self) -> T {
        self.sub_blocks.iter().map(Coeff4x4::energy).sum()
    }

    /// Inverse transform back to 256 pixel values in raster order.
    pub fn to_pixels(&self) -> Vec<T> {
        let mut out = vec![T::zero(); MB_COEFFS];
        for (s, sb) in self.sub_blocks.iter().enumerate() {
            let (sx, sy) = ((s % 4) * SUB_BLOCK, (s / 4) * SUB_BLOCK);
            let px = inverse_dct4(sb);
            for y in 0..4 {
                for x in 0..4 {
                    out[(sy + y) * MACROBLOCK + sx + x] = px[y * 4 + x];
                }
            }
        }
        out
    }
}
