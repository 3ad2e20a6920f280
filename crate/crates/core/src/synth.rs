//! Seeded synthetic content for tests, calibration harnesses and demos:
//! smooth shading, oriented texture and hard-edged shapes, plus additive
//! Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::media::LumaPlane;

#[derive(Debug, Clone)]
struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: f64,
}

#[derive(Debug, Clone)]
struct Shape {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    level: f64,
    disc: bool,
}

/// A deterministic scene that can be rendered at any pan offset.
#[derive(Debug, Clone)]
pub struct Scene {
    base: f64,
    gx: f64,
    gy: f64,
    waves: Vec<Wave>,
    shapes: Vec<Shape>,
}

impl Scene {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (width as f64, height as f64);
        let waves = (0..6)
            .map(|k| {
                // periods from ~64 px down to ~3 px
                let period = 64.0 / 2f64.powf(k as f64 * 0.7 + rng.random_range(0.0..0.5));
                let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
                let f = std::f64::consts::TAU / period;
                Wave {
                    fx: f * theta.cos(),
                    fy: f * theta.sin(),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    amp: rng.random_range(4.0..14.0) / (1.0 + 0.3 * k as f64),
                }
            })
            .collect();
        let shapes = (0..8)
            .map(|_| Shape {
                cx: rng.random_range(0.0..w),
                cy: rng.random_range(0.0..h),
                rx: rng.random_range(0.05..0.25) * w,
                ry: rng.random_range(0.05..0.25) * h,
                level: rng.random_range(-40.0..40.0),
                disc: rng.random_bool(0.5),
            })
            .collect();
        Self {
            base: rng.random_range(90.0..160.0),
            gx: rng.random_range(-30.0..30.0) / w,
            gy: rng.random_range(-30.0..30.0) / h,
            waves,
            shapes,
        }
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        let mut v = self.base + self.gx * x + self.gy * y;
        for w in &self.waves {
            v += w.amp * (w.fx * x + w.fy * y + w.phase).sin();
        }
        for s in &self.shapes {
            let (dx, dy) = ((x - s.cx) / s.rx, (y - s.cy) / s.ry);
            let inside = if s.disc {
                dx * dx + dy * dy <= 1.0
            } else {
                dx.abs() <= 1.0 && dy.abs() <= 1.0
            };
            if inside {
                v += s.level;
            }
        }
        v
    }

    /// Renders the scene shifted by `(dx, dy)` pixels, clamped to 16..=235.
    pub fn render(&self, width: usize, height: usize, dx: f64, dy: f64) -> LumaPlane {
        LumaPlane::from_fn(width, height, |x, y| {
            self.value(x as f64 + dx, y as f64 + dy).round().clamp(16.0, 235.0) as u8
        })
    }
}

pub fn synthetic_plane(width: usize, height: usize, seed: u64) -> LumaPlane {
    Scene::new(width, height, seed).render(width, height, 0.0, 0.0)
}

/// `frames` planes of one scene panning by one pixel per frame.
pub fn synthetic_clip(width: usize, height: usize, frames: usize, seed: u64) -> Vec<LumaPlane> {
    let scene = Scene::new(width, height, seed);
    (0..frames)
        .map(|t| scene.render(width, height, t as f64, 0.5 * t as f64))
        .collect()
}

/// Adds rounded i.i.d. Gaussian noise, clamping to 0..=255.
pub fn add_gaussian_noise(plane: &LumaPlane, sigma: f64, seed: u64) -> LumaPlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let samples = plane
        .samples()
        .iter()
        .map(|&p| (f64::from(p) + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    LumaPlane::new(plane.width(), plane.height(), samples).expect("same geometry")
}
