//! Distortion-based saturation detection.
//!
//! A block saturates at the coarsest step whose expected quantization error on
//! the significant coefficients still fits inside the noise removed by the
//! denoiser. Coding finer than that spends bits reproducing noise.

use crate::error::BlockError;
use crate::lcc::check_pair;
use crate::quant::{expected_quant_error, step_for_qp, QpGrid};
use crate::scalar::Scalar;
use crate::transform::{MacroBlockCoeffs, MB_COEFFS};

/// Coefficients that quantize to a nonzero level for at least one grid step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignificantSet {
    pub indices: Vec<usize>,
}

impl SignificantSet {
    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Per-block outcome of DSD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationDecision<T> {
    pub block_origin: (usize, usize),
    /// Step of `saturation_qp`.
    pub saturation_step: T,
    pub saturation_qp: i32,
    /// `sqrt(12 * noise / n)`, zero when there are no significant coefficients.
    pub continuous_step: T,
    pub noise_energy: T,
    pub significant_count: usize,
    /// Set when the block imposes no constraint; `saturation_qp` is then the grid minimum.
    pub degenerate: bool,
}

pub fn significant_indices<T: Scalar>(u: &MacroBlockCoeffs<T>, grid: &QpGrid) -> SignificantSet {
    let threshold = grid.min_step::<T>() / T::lit(2.0);
    SignificantSet {
        indices: (0..MB_COEFFS).filter(|&i| u.coeff(i).abs() >= threshold).collect(),
    }
}

pub fn noise_energy<T: Scalar>(
    u: &MacroBlockCoeffs<T>,
    z: &MacroBlockCoeffs<T>,
    s: &SignificantSet,
) -> Result<T, BlockError> {
    check_pair(u, z)?;
    Ok(s.indices
        .iter()
        .map(|&i| {
            let d = u.coeff(i) - z.coeff(i);
            d * d
        })
        .sum())
}

/// `n * step(qp)^2 / 12 <= noise`.
pub fn criterion_holds<T: Scalar>(significant_count: usize, noise: T, qp: i32) -> bool {
    significant_count > 0 && expected_quant_error(step_for_qp::<T>(qp), significant_count) <= noise
}

/// Largest grid QP satisfying the criterion, found from the closed form and
/// then settled against the criterion itself so rounding in `log2` cannot
/// move the boundary. Returns `(step, qp, continuous_step, degenerate)`.
pub fn saturation_step<T: Scalar>(significant_count: usize, noise: T, grid: &QpGrid) -> (T, i32, T, bool) {
    let degenerate = |q_cont: T| (grid.min_step::<T>(), grid.min(), q_cont, true);
    if significant_count == 0 || noise.is_nan() || noise <= T::zero() {
        return degenerate(T::zero());
    }
    let q_cont = (T::lit(12.0) * noise / T::from_int(significant_count as i64)).sqrt();
    if !q_cont.is_finite() {
        return (grid.qp_to_step(grid.max()).unwrap(), grid.max(), q_cont, false);
    }
    let guess = (T::lit(4.0) + T::lit(6.0) * q_cont.log2()).floor().to_i64().unwrap_or(i64::MIN);
    let mut qp = guess.clamp(i64::from(grid.min()) - 1, i64::from(grid.max())) as i32;
    while qp < grid.max() && criterion_holds(significant_count, noise, qp + 1) {
        qp += 1;
    }
    while qp >= grid.min() && !criterion_holds(significant_count, noise, qp) {
        qp -= 1;
    }
    if qp < grid.min() {
        return degenerate(q_cont);
    }
    (step_for_qp(qp), qp, q_cont, false)
}

pub fn dsd_block_qp<T: Scalar>(
    u: &MacroBlockCoeffs<T>,
    z: &MacroBlockCoeffs<T>,
    grid: &QpGrid,
) -> Result<SaturationDecision<T>, BlockError> {
    let s = significant_indices(u, grid);
    let noise = noise_energy(u, z, &s)?;
    let (step, qp, q_cont, degenerate) = saturation_step(s.cardinality(), noise, grid);
    Ok(SaturationDecision {
        block_origin: u.origin,
        saturation_step: step,
        saturation_qp: qp,
        continuous_step: q_cont,
        noise_energy: noise,
        significant_count: s.cardinality(),
        degenerate,
    })
}

pub fn check_criterion<T: Scalar>(
    u: &MacroBlockCoeffs<T>,
    z: &MacroBlockCoeffs<T>,
    qp: i32,
    grid: &QpGrid,
) -> Result<bool, BlockError> {
    grid.check(qp)?;
    let s = significant_indices(u, grid);
    let noise = noise_energy(u, z, &s)?;
    Ok(criterion_holds(s.cardinality(), noise, qp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::PixelBlock;
    use crate::quant::quantize;
    use crate::transform::Coeff4x4;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn mb_from_coeffs(f: impl Fn(usize) -> f64) -> MacroBlockCoeffs<f64> {
        let mut mb = MacroBlockCoeffs::from_pixels(&PixelBlock {
            origin: (0, 0),
            size: 16,
            padded: false,
            samples: vec![0; 256],
        });
        for (b, sb) in mb.sub_blocks.iter_mut().enumerate() {
            *sb = Coeff4x4(std::array::from_fn(|i| f(b * 16 + i)));
        }
        mb
    }

    fn grid_search(n: usize, noise: f64, grid: &QpGrid) -> Option<i32> {
        grid.qps().filter(|&qp| criterion_holds(n, noise, qp)).max()
    }

    #[test]
    fn significant_threshold() {
        let t = 2f64.powf(-2.0 / 3.0) / 2.0;
        assert!((t - 0.31498).abs() < 1e-5);
        let mut c = [0.0; 256];
        c[0] = 10.0;
        c[1] = 0.2;
        c[2] = 0.5;
        let u = mb_from_coeffs(|i| c[i]);
        assert_eq!(significant_indices(&u, &QpGrid::default()).indices, vec![0, 2]);
        assert!(significant_indices(&mb_from_coeffs(|_| 0.0), &QpGrid::default()).is_empty());
        let big = mb_from_coeffs(|i| if i % 2 == 0 { 128.0 } else { -200.0 });
        assert_eq!(significant_indices(&big, &QpGrid::default()).cardinality(), 256);
        // a coarser grid minimum widens the excluded set
        let grid = QpGrid::new(16, 51).unwrap();
        assert_eq!(significant_indices(&u, &grid).indices, vec![0]);
    }

    #[test]
    fn noise_energy_examples() {
        let u = mb_from_coeffs(|i| i as f64);
        let s = significant_indices(&u, &QpGrid::default());
        assert_eq!(noise_energy(&u, &u, &s).unwrap(), 0.0);
        let z = mb_from_coeffs(|i| if (1..=12).contains(&i) { i as f64 - 2.0 } else { i as f64 });
        assert_eq!(noise_energy(&u, &z, &s).unwrap(), 48.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..256).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..256).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (u, z) = (mb_from_coeffs(|i| a[i]), mb_from_coeffs(|i| b[i]));
        let s = significant_indices(&u, &QpGrid::default());
        let thr = 2f64.powf(-2.0 / 3.0) / 2.0;
        let mut full = 0.0;
        let mut excluded = 0.0;
        for i in 0..256 {
            let d = (a[i] - b[i]).powi(2);
            full += d;
            if a[i].abs() < thr {
                excluded += d;
            }
        }
        assert!((noise_energy(&u, &z, &s).unwrap() - (full - excluded)).abs() < 1e-9);
    }

    #[test]
    fn saturation_step_examples() {
        let grid = QpGrid::default();
        let (step, qp, q_cont, degenerate) = saturation_step(16, 48.0, &grid);
        assert_eq!(q_cont, 6.0);
        assert_eq!(qp, 19);
        assert!(!degenerate);
        assert!((step - 2f64.powf(2.5)).abs() < 1e-12);
        assert_eq!(grid_search(16, 48.0, &grid), Some(19));
        assert_eq!(saturation_step(16, 0.0, &grid).1, 0);
        assert!(saturation_step(16, 0.0, &grid).3);
        assert!(saturation_step(0, 5.0, &grid).3);
        // below the finest step
        assert!(saturation_step(256, 1e-3, &grid).3);
        // saturates above the grid: the top QP is returned
        assert_eq!(saturation_step(1, 1e9, &grid), (step_for_qp(51), 51, (12e9f64).sqrt(), false));
    }

    #[test]
    fn inclusive_boundary() {
        // 12 coefficients at step 2^((16-4)/6) = 4: expected error 12 * 16 / 12 = 16
        assert!(criterion_holds(12, 16.0f64, 16));
        assert!(!criterion_holds(12, 16.0f64 - 1e-9, 16));
        assert_eq!(saturation_step(12, 16.0f64, &QpGrid::default()).1, 16);
        assert!(grid_search(5, 0.0, &QpGrid::default()).is_none());
    }

    #[test]
    fn closed_form_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grid = QpGrid::default();
        for _ in 0..10_000 {
            let n = rng.random_range(1..=256usize);
            let noise = 10f64.powf(rng.random_range(-3.0..7.0));
            let (_, qp, _, degenerate) = saturation_step(n, noise, &grid);
            match grid_search(n, noise, &grid) {
                Some(g) => assert_eq!((qp, degenerate), (g, false), "n={n} noise={noise}"),
                None => assert_eq!((qp, degenerate), (0, true)),
            }
        }
        // exact boundaries, where the log2 guess is most fragile
        for qp in grid.qps() {
            for n in [1usize, 7, 16, 100, 256] {
                let noise = expected_quant_error(step_for_qp::<f64>(qp), n);
                assert_eq!(saturation_step(n, noise, &grid).1, grid_search(n, noise, &grid).unwrap());
            }
        }
    }

    #[test]
    fn block_decision_boundary_and_noise_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let grid = QpGrid::default();
        let x: Vec<f64> = (0..256).map(|_| rng.random_range(-60.0..60.0)).collect();
        let e: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = mb_from_coeffs(|i| x[i]);
        let small = dsd_block_qp(&mb_from_coeffs(|i| x[i] + 2.0 * e[i]), &z, &grid).unwrap();
        let large = dsd_block_qp(&mb_from_coeffs(|i| x[i] + 12.0 * e[i]), &z, &grid).unwrap();
        assert!(large.saturation_qp > small.saturation_qp);
        for d in [small, large] {
            assert!(!d.degenerate);
            assert!(criterion_holds(d.significant_count, d.noise_energy, d.saturation_qp));
            assert!(!criterion_holds(d.significant_count, d.noise_energy, d.saturation_qp + 1));
        }
        let clean = dsd_block_qp(&z, &z, &grid).unwrap();
        assert!(clean.degenerate);
        assert_eq!(clean.saturation_qp, 0);
        for qp in grid.qps() {
            assert!(!check_criterion(&z, &z, qp, &grid).unwrap());
        }
    }

    #[test]
    fn scale_covariance() {
        // coefficients far from the significance threshold keep the set fixed;
        // scaling by 2 adds exactly 6 to the QP
        let grid = QpGrid::default();
        let u = mb_from_coeffs(|i| if i % 3 == 0 { 40.0 + i as f64 } else { 0.0 });
        let z = mb_from_coeffs(|i| if i % 3 == 0 { 37.0 + i as f64 } else { 0.0 });
        let d1 = dsd_block_qp(&u, &z, &grid).unwrap();
        let scale = |m: &MacroBlockCoeffs<f64>, s: f64| mb_from_coeffs(|i| m.coeff(i) * s);
        let d2 = dsd_block_qp(&scale(&u, 2.0), &scale(&z, 2.0), &grid).unwrap();
        assert_eq!(d1.significant_count, d2.significant_count);
        assert!((d2.noise_energy - 4.0 * d1.noise_energy).abs() < 1e-9);
        assert!((d2.continuous_step - 2.0 * d1.continuous_step).abs() < 1e-12);
        assert_eq!(d2.saturation_qp, d1.saturation_qp + 6);
    }

    /// At the detected QP, coding the noisy input reproduces it no worse than
    /// it matches the clean reference on the significant coefficients.
    #[test]
    fn input_distortion_bounded_by_denoised_distortion() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let grid = QpGrid::default();
        let (mut total, mut holds) = (0, 0);
        for _ in 0..1000 {
            let sigma: f64 = rng.random_range(1.0..20.0);
            let normal = Normal::new(0.0, sigma).unwrap();
            let x: Vec<f64> = (0..256).map(|i| rng.random_range(-300.0..300.0) / (1.0 + (i % 16) as f64)).collect();
            let z = mb_from_coeffs(|i| x[i]);
            let noisy: Vec<f64> = x.iter().map(|v| v + normal.sample(&mut rng)).collect();
            let u = mb_from_coeffs(|i| noisy[i]);
            let d = dsd_block_qp(&u, &z, &grid).unwrap();
            if d.degenerate {
                continue;
            }
            let s = significant_indices(&u, &grid);
            let step = d.saturation_step;
            let rec: Vec<f64> = u
                .sub_blocks
                .iter()
                .flat_map(|sb| quantize(sb, step).levels.map(|l| f64::from(l) * step))
                .collect();
            let di: f64 = s.indices.iter().map(|&i| (rec[i] - u.coeff(i)).powi(2)).sum();
            let dz: f64 = s.indices.iter().map(|&i| (rec[i] - z.coeff(i)).powi(2)).sum();
            total += 1;
            holds += usize::from(di <= dz);
        }
        assert!(total > 900);
        assert!(holds as f64 >= 0.9 * total as f64, "{holds}/{total}");
    }

    proptest! {
        #[test]
        fn qp_non_decreasing_in_noise(n in 1usize..=256, a in 1e-3f64..1e6, b in 1e-3f64..1e6) {
            let grid = QpGrid::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(saturation_step(n, lo, &grid).1 <= saturation_step(n, hi, &grid).1);
        }

        #[test]
        fn criterion_downward_closed(n in 1usize..=256, noise in 1e-3f64..1e6) {
            let grid = QpGrid::default();
            let (_, qp, _, degenerate) = saturation_step(n, noise, &grid);
            for q in grid.qps() {
                let expect = !degenerate && q <= qp;
                prop_assert_eq!(criterion_holds(n, noise, q), expect);
            }
        }
    }
}
