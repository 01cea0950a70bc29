use std::collections::HashMap;

use crate::corpus::Side;

use super::FeatureVector;

/// Minimum share of the game's weekly tweets a (side, unigram) count must
/// reach to be emitted.
pub const UNIGRAM_SUPPORT: f64 = 0.001;

/// Accumulates token counts of the weekly tweets of both teams in one game.
#[derive(Debug, Default)]
pub struct UnigramCounter<'a> {
    counts: [HashMap<&'a str, u64>; 2],
    tweets: usize,
}

impl<'a> UnigramCounter<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_tweet<I>(&mut self, side: Side, tokens: I)
    where
        I: IntoIterator<Item = &'a str>,
    {
        let counts = &mut self.counts[side as usize];
        for token in tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
        self.tweets += 1;
    }

    /// `uni.<side>.<token> = ln(1 + count)` for every pair whose token count
    /// is at least 0.1% of the number of weekly tweets for the game.
    pub fn finish(&self) -> FeatureVector {
        let mut fv = FeatureVector::new();
        if self.tweets == 0 {
            return fv;
        }
        let threshold = UNIGRAM_SUPPORT * self.tweets as f64;
        for side in Side::BOTH {
            for (token, &count) in &self.counts[side as usize] {
                if count as f64 >= threshold {
                    fv.insert(format!("uni.{}.{}", side.name(), token), (1.0 + count as f64).ln())
                        .expect("unigram keys are unique per side");
                }
            }
        }
        fv
    }
}

/// Unigram features from the tokenized weekly tweets of the home and away
/// teams.
pub fn unigram_features<S: AsRef<str>>(home: &[Vec<S>], away: &[Vec<S>]) -> FeatureVector {
    let mut counter = UnigramCounter::new();
    for (side, tweets) in [(Side::Home, home), (Side::Away, away)] {
        for tweet in tweets {
            counter.add_tweet(side, tweet.iter().map(AsRef::as_ref));
        }
    }
    counter.finish()
}
