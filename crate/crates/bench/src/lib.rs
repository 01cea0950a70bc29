//! Shared fixtures for the benchmarks.

use gridcast::synthgen::{generate, SynthConfig};
use gridcast::Corpus;

/// A three-season synthetic corpus with `n_teams` teams.
pub fn corpus(n_teams: usize) -> Corpus {
    let cfg = SynthConfig { seed: 11, n_teams, tweet_signal: 0.5, ..Default::default() };
    generate(&cfg).expect("valid config").corpus().expect("synthetic data ingests")
}
