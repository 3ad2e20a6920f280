use rayon::prelude::*;

use super::{corpus_rows, CorpusRow};
use crate::lcc::{rd_curve, EntropyModel};
use crate::media::partition_blocks;
use crate::quant::QpGrid;
use crate::synth::{add_gaussian_noise, synthetic_plane};
use crate::transform::{MacroBlockCoeffs, MACROBLOCK};

/// Noise levels cycled over the planes of [`synthetic_model_corpus`].
pub const CORPUS_SIGMAS: [f64; 4] = [2.0, 5.0, 10.0, 20.0];

/// Source and target corpora for a pair of entropy models over `planes`
/// seeded synthetic `size`×`size` planes with Gaussian noise.
pub fn synthetic_model_corpus(
    grid: &QpGrid,
    source: EntropyModel,
    target: EntropyModel,
    planes: u64,
    size: usize,
) -> (Vec<CorpusRow>, Vec<CorpusRow>) {
    let (s, t): (Vec<_>, Vec<_>) = (0..planes)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let clean = synthetic_plane(size, size, 1000 + seed);
            let noisy = add_gaussian_noise(&clean, CORPUS_SIGMAS[seed as usize % 4], 2000 + seed);
            partition_blocks(&noisy, MACROBLOCK).into_iter().map(move |b| {
                let u = MacroBlockCoeffs::<f64>::from_pixels(&b);
                let id = format!("synth{seed}:0:{}:{}", b.origin.0, b.origin.1);
                let cs = rd_curve(&u, &u, grid, source).expect("same block");
                let ct = rd_curve(&u, &u, grid, target).expect("same block");
                (corpus_rows(&id, source.id(), &cs), corpus_rows(&id, target.id(), &ct))
            })
        })
        .unzip();
    (s.concat(), t.concat())
}
