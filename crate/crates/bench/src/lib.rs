//! Shared inputs for the pipeline benchmarks.

use twstrs_core::{generate_dataset, GroundTruthLabel, Item, SamplerConfig};

pub fn labels(count: usize, seed: u64) -> Vec<GroundTruthLabel> {
    generate_dataset(&SamplerConfig::with_seed(seed, count)).expect("default config is valid")
}

/// Rating units for `item`: each scene rated by `raters` raters, where every
/// third rater is off by one from the stored score.
pub fn rating_units(labels: &[GroundTruthLabel], item: Item, raters: usize) -> Vec<Vec<u8>> {
    let max = item.max_score();
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let truth = l.assessment.score(item);
            (0..raters)
                .map(|r| if (i + r) % 3 == 0 { (truth + 1).min(max) } else { truth })
                .collect()
        })
        .collect()
}
