//! Denoised references: an externally denoised sequence, or one of two
//! classical stand-ins (Gaussian blur, a 4×4 grid deblocker).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::media::LumaPlane;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenoiseError {
    #[error("invalid denoiser {0}")]
    InvalidSpec(String),
    #[error("planes differ in geometry: {0}x{1} vs {2}x{3}")]
    GeometryMismatch(usize, usize, usize, usize),
    #[error("external denoiser needs the matching denoised frame")]
    MissingExternalFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenoiserSpec {
    /// Frames come from a separately supplied denoised sequence.
    External,
    Gaussian { sigma: f64 },
    Deblock { strength: u8 },
}

impl DenoiserSpec {
    pub fn gaussian(sigma: f64) -> Result<Self, DenoiseError> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self::Gaussian { sigma })
        } else {
            Err(DenoiseError::InvalidSpec(format!("gaussian sigma must be positive, got {sigma}")))
        }
    }

    pub fn deblock(strength: u8) -> Result<Self, DenoiseError> {
        if (1..=5).contains(&strength) {
            Ok(Self::Deblock { strength })
        } else {
            Err(DenoiseError::InvalidSpec(format!("deblock strength must be 1..=5, got {strength}")))
        }
    }
}

impl fmt::Display for DenoiserSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::External => f.write_str("external"),
            Self::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            Self::Deblock { strength } => write!(f, "deblock:{strength}"),
        }
    }
}

/// `external`, `gaussian:<sigma>` or `deblock:<strength>`.
impl FromStr for DenoiserSpec {
    type Err = DenoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DenoiseError::InvalidSpec(format!("{s:?}: expected gaussian:<sigma> or deblock:<1-5>"));
        match s.split_once(':') {
            None if s == "external" => Ok(Self::External),
            Some(("gaussian", v)) => Self::gaussian(v.parse().map_err(|_| bad())?),
            Some(("deblock", v)) => Self::deblock(v.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

fn check_geometry(a: &LumaPlane, b: &LumaPlane) -> Result<(), DenoiseError> {
    if a.same_geometry(b) {
        Ok(())
    } else {
        Err(DenoiseError::GeometryMismatch(a.width(), a.height(), b.width(), b.height()))
    }
}

/// Applies `spec` to `plane`. `matched` is the frame of the external
/// sequence and is only read for [`DenoiserSpec::External`].
pub fn denoise_plane(
    plane: &LumaPlane,
    spec: &DenoiserSpec,
    matched: Option<&LumaPlane>,
) -> Result<LumaPlane, DenoiseError> {
    match *spec {
        DenoiserSpec::External => {
            let z = matched.ok_or(DenoiseError::MissingExternalFrame)?;
            check_geometry(plane, z)?;
            Ok(z.clone())
        }
        DenoiserSpec::Gaussian { sigma } => {
            DenoiserSpec::gaussian(sigma)?;
            let out = gaussian_blur(plane.width(), plane.height(), &to_f64(plane), sigma);
            Ok(from_f64(plane, &out))
        }
        DenoiserSpec::Deblock { strength } => {
            DenoiserSpec::deblock(strength)?;
            Ok(from_f64(plane, &deblock(plane.width(), plane.height(), &to_f64(plane), strength)))
        }
    }
}

fn to_f64(plane: &LumaPlane) -> Vec<f64> {
    plane.samples().iter().map(|&p| f64::from(p)).collect()
}

fn from_f64(like: &LumaPlane, v: &[f64]) -> LumaPlane {
    let samples = v.iter().map(|x| x.round().clamp(0.0, 255.0) as u8).collect();
    LumaPlane::new(like.width(), like.height(), samples).expect("same geometry")
}

/// Normalized 1-D Gaussian of radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|w| w / sum).collect()
}

fn convolve_rows(width: usize, height: usize, src: &[f64], kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[(x as isize + k as isize - r).clamp(0, width as isize - 1) as usize])
                .sum();
        }
    }
    out
}

fn transpose(width: usize, height: usize, src: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = src[y * width + x];
        }
    }
    out
}

/// Separable Gaussian blur with edge replication on a float plane.
pub fn gaussian_blur(width: usize, height: usize, src: &[f64], sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let h = convolve_rows(width, height, src, &k);
    transpose(height, width, &convolve_rows(height, width, &transpose(width, height, &h), &k))
}

/// Smooths across every 4-pixel block edge, first along rows (vertical
/// edges) and then along columns. Strength `s` selects a triangle kernel
/// with `2s + 1` taps; `s = 1` rewrites one pixel on each side of an edge,
/// higher strengths two. Taps read the unfiltered input of the pass, with
/// edge replication.
pub fn deblock(width: usize, height: usize, src: &[f64], strength: u8) -> Vec<f64> {
    let s = isize::from(strength);
    let taps: Vec<f64> = (-s..=s).map(|k| (s + 1 - k.abs()) as f64).collect();
    let norm: f64 = taps.iter().sum();
    let reach: isize = if strength == 1 { 1 } else { 2 };
    let pass = |w: usize, h: usize, src: &[f64]| -> Vec<f64> {
        let mut out = src.to_vec();
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for edge in (4..w).step_by(4) {
                for x in (edge as isize - reach)..(edge as isize + reach) {
                    if x < 0 || x >= w as isize {
                        continue;
                    }
                    let v: f64 = taps
                        .iter()
                        .zip(-s..=s)
                        .map(|(t, k)| t * row[(x + k).clamp(0, w as isize - 1) as usize])
                        .sum();
                    out[y * w + x as usize] = v / norm;
                }
            }
        }
        out
    };
    let h = pass(width, height, src);
    transpose(height, width, &pass(height, width, &transpose(width, height, &h)))
}

/// Mean squared difference between two planes.
pub fn id_mse(u: &LumaPlane, z: &LumaPlane) -> Result<f64, DenoiseError> {
    check_geometry(u, z)?;
    let sum: u64 = u
        .samples()
        .iter()
        .zip(z.samples())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / u.samples().len() as f64)
}
