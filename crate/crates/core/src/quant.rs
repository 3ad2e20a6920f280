//! QP, quantization step and Lagrange multiplier mappings, and the flat
//! uniform quantizer.
//!
//! `step = 2^((qp - 4) / 6)` and `lambda = r * 2^((qp - 12) / 3)`, the
//! AVC conventions.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::transform::Coeff4x4;

/// Default Lagrange proportionality constant.
pub const DEFAULT_R: f64 = 0.85;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("QP {qp} outside grid {min}..={max}")]
    QpOutOfRange { qp: i32, min: i32, max: i32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Quantization step for `qp`, without range checking.
#[inline]
pub fn step_for_qp<T: Scalar>(qp: i32) -> T {
    T::lit(2.0).powf(T::from_int(i64::from(qp) - 4) / T::lit(6.0))
}

/// Lagrange multiplier for `qp`, without range or parameter checking.
#[inline]
pub fn lambda_for_qp<T: Scalar>(qp: i32, r: T) -> T {
    r * T::lit(2.0).powf(T::from_int(i64::from(qp) - 12) / T::lit(3.0))
}

/// Contiguous, ascending range of integer QPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QpGrid {
    min: i32,
    max: i32,
}

impl Default for QpGrid {
    fn default() -> Self {
        Self { min: 0, max: 51 }
    }
}

impl QpGrid {
    pub fn new(min: i32, max: i32) -> Result<Self, QuantError> {
        if min > max {
            return Err(QuantError::InvalidParameter(format!(
                "empty QP grid {min}..={max}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> i32 {
        self.min
    }

    pub fn max(&self) -> i32 {
        self.max
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, qp: i32) -> bool {
        (self.min..=self.max).contains(&qp)
    }

    pub fn qps(&self) -> std::ops::RangeInclusive<i32> {
        self.min..=self.max
    }

    pub fn clamp(&self, qp: i32) -> i32 {
        qp.clamp(self.min, self.max)
    }

    pub fn check(&self, qp: i32) -> Result<i32, QuantError> {
        if self.contains(qp) {
            Ok(qp)
        } else {
            Err(QuantError::QpOutOfRange {
                qp,
                min: self.min,
                max: self.max,
            })
        }
    }

    pub fn qp_to_step<T: Scalar>(&self, qp: i32) -> Result<T, QuantError> {
        self.check(qp).map(step_for_qp)
    }

    /// Smallest step of the grid; coefficients below half of it never quantize to nonzero.
    pub fn min_step<T: Scalar>(&self) -> T {
        step_for_qp(self.min)
    }

    pub fn qp_to_lambda<T: Scalar>(&self, qp: i32, r: T) -> Result<T, QuantError> {
        check_r(r)?;
        self.check(qp).map(|qp| lambda_for_qp(qp, r))
    }

    /// Inverse of [`QpGrid::qp_to_lambda`]: `round(12 + 3 log2(lambda / r))`
    /// with ties rounded up, clamped into the grid.
    pub fn lambda_to_qp<T: Scalar>(&self, lambda: T, r: T) -> Result<i32, QuantError> {
        check_r(r)?;
        if lambda <= T::zero() || !lambda.is_finite() {
            return Err(QuantError::InvalidParameter(format!(
                "lambda must be positive and finite, got {lambda:?}"
            )));
        }
        let x = T::lit(12.0) + T::lit(3.0) * (lambda / r).log2();
        let q = round_half_up(x);
        Ok(q.clamp(i64::from(self.min), i64::from(self.max)) as i32)
    }
}

pub(crate) fn round_half_up<T: Scalar>(x: T) -> i64 {
    (x + T::lit(0.5)).floor().to_i64().unwrap_or(if x > T::zero() { i64::MAX } else { i64::MIN })
}

fn check_r<T: Scalar>(r: T) -> Result<(), QuantError> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(QuantError::InvalidParameter(format!(
            "r must be positive and finite, got {r:?}"
        )))
    }
}

/// Quantization levels of one 4×4 sub-block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelBlock<T> {
    pub levels: [i32; 16],
    pub step: T,
}

impl<T: Scalar> LevelBlock<T> {
    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&l| l == 0)
    }
}

#[inline]
pub fn quantize_value<T: Scalar>(c: T, step: T) -> i32 {
    // round() is half away from zero
    (c / step).round().to_i32().unwrap_or(if c > T::zero() { i32::MAX } else { i32::MIN })
}

/// Round-to-nearest quantization with a flat step; the dead zone is `[-step/2, step/2)`
/// in magnitude, ties go away from zero.
pub fn quantize<T: Scalar>(coeffs: &Coeff4x4<T>, step: T) -> LevelBlock<T> {
    let mut levels = [0i32; 16];
    for (l, &c) in levels.iter_mut().zip(&coeffs.0) {
        *l = quantize_value(c, step);
    }
    LevelBlock { levels, step }
}

pub fn dequantize<T: Scalar>(block: &LevelBlock<T>) -> Coeff4x4<T> {
    let mut out = [T::zero(); 16];
    for (o, &l) in out.iter_mut().zip(&block.levels) {
        *o = T::from_int(i64::from(l)) * block.step;
    }
    Coeff4x4(out)
}

/// High-rate expected squared quantization error of `n_coeffs` coefficients: `n q² / 12`.
pub fn expected_quant_error<T: Scalar>(step: T, n_coeffs: usize) -> T {
    T::from_int(n_coeffs as i64) * step * step / T::lit(12.0)
}
