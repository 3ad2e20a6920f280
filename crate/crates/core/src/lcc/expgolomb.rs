//! Exp-Golomb codeword lengths.

/// Length of the unsigned code `ue(v)`: `2 floor(log2(v + 1)) + 1`.
#[inline]
pub fn ue_len(v: u32) -> u32 {
    let x = u64::from(v) + 1;
    2 * (63 - x.leading_zeros()) + 1
}

/// Length of the signed code `se(v)`, which maps `v > 0` to `2v - 1` and `v <= 0` to `-2v`.
#[inline]
pub fn se_len(v: i32) -> u32 {
    let mapped = if v > 0 {
        2 * u64::from(v.unsigned_abs()) - 1
    } else {
        2 * u64::from(v.unsigned_abs())
    };
    let x = mapped + 1;
    2 * (63 - x.leading_zeros()) + 1
}
