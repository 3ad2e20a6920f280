//! Measures the exp-Golomb to CAVLC-style calibration ratios on the seeded
//! synthetic corpus and prints them with their support. The anchors of the
//! shipped default table come from this output.
//!
//! cargo run --release -p satpre-core --example default_table

use satpre::lcc::EntropyModel;
use satpre::quant::QpGrid;
use satpre::rdsd::{calibrate, synthetic_model_corpus, DEFAULT_MIN_SUPPORT};

fn main() {
    let grid = QpGrid::default();
    let (s, t) = synthetic_model_corpus(&grid, EntropyModel::RunLevelExpGolomb, EntropyModel::CavlcStyle, 24, 128);
    let cal = calibrate(&s, &t, 5, DEFAULT_MIN_SUPPORT).expect("corpus is aligned");
    println!("qp,ratio,support");
    for (qp, r) in cal.table.entries() {
        println!("{qp},{r:.4},{}", cal.support[qp]);
    }
    if !cal.dropped.is_empty() {
        println!("dropped: {:?}", cal.dropped);
    }
}
