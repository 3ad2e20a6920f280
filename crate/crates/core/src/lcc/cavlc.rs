//! Bit counting for H.264 CAVLC 4×4 residual syntax (`coeff_token`, trailing
//! one signs, level prefix/suffix, `total_zeros`, `run_before`). Nothing is
//! emitted; only codeword lengths are summed.

/// coeff_token lengths, indexed `[nC class][token]` where the token index is
/// 0 for no coefficients, `1 + t1` for one, `3 + t1` for two and
/// `4 * total - 6 + t1` beyond.
const COEFF_TOKEN_LENS: [[u8; 62]; 4] = [
    [
        1, 6, 2, 8, 6, 3, 9, 8, 7, 5, 10, 9, 8, 6, 11, 10, 9, 7, 13, 11, 10, 8, 13, 13, 11, 9, 13,
        13, 13, 10, 14, 14, 13, 11, 14, 14, 14, 13, 15, 15, 14, 14, 15, 15, 15, 14, 16, 15, 15,
        15, 16, 16, 16, 15, 16, 16, 16, 16, 16, 16, 16, 16,
    ],
    [
        2, 6, 2, 6, 5, 3, 7, 6, 6, 4, 8, 6, 6, 4, 8, 7, 7, 5, 9, 8, 8, 6, 11, 9, 9, 6, 11, 11, 11,
        7, 12, 11, 11, 9, 12, 12, 12, 11, 12, 12, 12, 11, 13, 13, 13, 12, 13, 13, 13, 13, 13, 14,
        13, 13, 14, 14, 14, 13, 14, 14, 14, 14,
    ],
    [
        4, 6, 4, 6, 5, 4, 6, 5, 5, 4, 7, 5, 5, 4, 7, 5, 5, 4, 7, 6, 6, 4, 7, 6, 6, 4, 8, 7, 7, 5,
        8, 8, 7, 6, 9, 8, 8, 7, 9, 9, 8, 8, 9, 9, 9, 8, 10, 9, 9, 9, 10, 10, 10, 10, 10, 10, 10,
        10, 10, 10, 10, 10,
    ],
    [6; 62],
];

/// total_zeros lengths for 4×4 blocks, indexed `[total_coeff - 1][total_zeros]`.
const TOTAL_ZEROS_LENS: [[u8; 16]; 15] = [
    [1, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9, 9],
    [3, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 6, 6, 6, 6, 0],
    [4, 3, 3, 3, 4, 4, 3, 3, 4, 5, 5, 6, 5, 6, 0, 0],
    [5, 3, 4, 4, 3, 3, 3, 4, 3, 4, 5, 5, 5, 0, 0, 0],
    [4, 4, 4, 3, 3, 3, 3, 3, 4, 5, 4, 5, 0, 0, 0, 0],
    [6, 5, 3, 3, 3, 3, 3, 3, 4, 3, 6, 0, 0, 0, 0, 0],
    [6, 5, 3, 3, 3, 2, 3, 4, 3, 6, 0, 0, 0, 0, 0, 0],
    [6, 4, 5, 3, 2, 2, 3, 3, 6, 0, 0, 0, 0, 0, 0, 0],
    [6, 6, 4, 2, 2, 3, 2, 5, 0, 0, 0, 0, 0, 0, 0, 0],
    [5, 5, 3, 2, 2, 2, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [4, 4, 3, 3, 1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [4, 4, 2, 1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [3, 3, 1, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
];

/// run_before lengths, indexed `[min(zeros_left, 7) - 1][run_before]`.
const RUN_BEFORE_LENS: [[u8; 15]; 7] = [
    [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, 2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, 2, 2, 3, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, 2, 3, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, 3, 3, 3, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0, 0],
    [3, 3, 3, 3, 3, 3, 3, 4, 5, 6, 7, 8, 9, 10, 11],
];

fn nc_class(nc: u32) -> usize {
    match nc {
        0 | 1 => 0,
        2 | 3 => 1,
        4..=7 => 2,
        _ => 3,
    }
}

fn coeff_token_len(nc: u32, total: usize, trailing_ones: usize) -> u32 {
    let idx = match total {
        0 => 0,
        1 => 1 + trailing_ones,
        2 => 3 + trailing_ones,
        n => 4 * n - 6 + trailing_ones,
    };
    u32::from(COEFF_TOKEN_LENS[nc_class(nc)][idx])
}

/// level_prefix + level_suffix length for `level_code` at the current suffix length.
fn level_len(level_code: u32, suffix_length: u32) -> u32 {
    let escape_base = if suffix_length == 0 {
        if level_code < 14 {
            return level_code + 1;
        }
        if level_code < 30 {
            // prefix 14 with a 4-bit suffix
            return 15 + 4;
        }
        30
    } else {
        let limit = 15 << suffix_length;
        if level_code < limit {
            return (level_code >> suffix_length) + 1 + suffix_length;
        }
        limit
    };
    // Escape: prefix 15 carries 12 suffix bits; prefix p >= 16 carries p - 3
    // bits covering [2^(p-3) - 4096, 2^(p-2) - 4096).
    let rem = u64::from(level_code - escape_base);
    let mut prefix = 15u32;
    while prefix >= 16 && rem >= (1u64 << (prefix - 2)) - 4096 || prefix == 15 && rem >= 4096 {
        prefix += 1;
    }
    (prefix + 1) + (prefix - 3)
}

/// Bits of one 4×4 block in zigzag order with neighbour context `nc`.
///
/// Returns the bit count and the block's `total_coeff`, which feeds the
/// context of later blocks.
pub fn block_bits(scanned: &[i32; 16], nc: u32) -> (u32, u32) {
    // nonzero levels from the highest frequency down, with their scan positions
    let mut levels = [0i32; 16];
    let mut positions = [0usize; 16];
    let mut total = 0usize;
    for pos in (0..16).rev() {
        if scanned[pos] != 0 {
            levels[total] = scanned[pos];
            positions[total] = pos;
            total += 1;
        }
    }
    let trailing_ones = levels[..total]
        .iter()
        .take(3)
        .take_while(|l| l.unsigned_abs() == 1)
        .count();

    let mut bits = coeff_token_len(nc, total, trailing_ones);
    if total == 0 {
        return (bits, 0);
    }
    bits += trailing_ones as u32;

    let mut suffix_length = u32::from(total > 10 && trailing_ones < 3);
    for (i, &level) in levels[..total].iter().enumerate().skip(trailing_ones) {
        let mag = level.unsigned_abs();
        let mut level_code = if level > 0 { 2 * mag - 2 } else { 2 * mag - 1 };
        if i == trailing_ones && trailing_ones < 3 {
            level_code -= 2;
        }
        bits += level_len(level_code, suffix_length);
        if suffix_length == 0 {
            suffix_length = 1;
        }
        if mag > (3 << (suffix_length - 1)) && suffix_length < 6 {
            suffix_length += 1;
        }
    }

    let mut zeros_left = positions[0] + 1 - total;
    if total < 16 {
        bits += u32::from(TOTAL_ZEROS_LENS[total - 1][zeros_left]);
    }
    for i in 0..total - 1 {
        if zeros_left == 0 {
            break;
        }
        let run = positions[i] - positions[i + 1] - 1;
        bits += u32::from(RUN_BEFORE_LENS[zeros_left.min(7) - 1][run]);
        zeros_left -= run;
    }
    (bits, total as u32)
}

/// Bits of a macroblock's sixteen 4×4 blocks (raster order). `nC` for each
/// block comes from the left and upper blocks of the same macroblock: their
/// rounded mean when both exist, the one present otherwise, else 0.
pub fn macroblock_bits(scanned: &[[i32; 16]; 16]) -> u64 {
    let mut totals = [0u32; 16];
    let mut bits = 0u64;
    for (s, blk) in scanned.iter().enumerate() {
        let (col, row) = (s % 4, s / 4);
        let left = (col > 0).then(|| totals[s - 1]);
        let up = (row > 0).then(|| totals[s - 4]);
        let nc = match (left, up) {
            (Some(a), Some(b)) => (a + b + 1) >> 1,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => 0,
        };
        let (b, t) = block_bits(blk, nc);
        bits += u64::from(b);
        totals[s] = t;
    }
    bits
}
