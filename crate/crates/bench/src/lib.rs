//! Fixtures shared by the benchmarks in `benches/`.

use multida::simlab::{gen_independent, Scenario, SimSpec};
use multida::Dataset;

/// Independent-feature data with the usual 10% discriminative features.
pub fn fixture(n: usize, p: usize, k: usize, unequal: bool) -> Dataset {
    let scenario = if unequal {
        Scenario::IndUnequalVar
    } else {
        Scenario::IndEqualVar
    };
    gen_independent(&SimSpec::new(scenario, n, p, k, 42))
        .expect("valid fixture spec")
        .0
}
