//! Fixtures shared by the benchmarks.

use sinelab_core::ensembles::{sample_stream, sample_wigner};
use sinelab_core::{AtomDistribution, EnsembleSpec, WignerSample};

/// Sample 0 of a fixed-seed GUE ensemble of size `n`.
pub fn gue_sample(n: usize) -> WignerSample {
    let spec = EnsembleSpec::new(n, AtomDistribution::Gaussian, 0xBE7C).expect("n >= 1");
    sample_wigner(&spec, &mut sample_stream(spec.seed, 0))
}
