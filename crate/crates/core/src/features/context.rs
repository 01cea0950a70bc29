use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Side};

use super::rate::RateParams;
use super::spec::FeatureSetSpec;
use super::stats::game_stat_features;
use super::unigram::UnigramCounter;
use super::{FeatureError, FeatureVector};

/// What was read to compute one game's features.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Schedule indices of the games whose final results were read, sorted.
    pub results: Vec<usize>,
    /// Number of tweets read.
    pub tweets_read: usize,
    /// Latest timestamp among the tweets read.
    pub latest_tweet: Option<i64>,
}

impl Provenance {
    fn read_tweets(&mut self, corpus: &Corpus, ids: &[u32]) {
        self.tweets_read += ids.len();
        let latest = ids.iter().map(|&i| corpus.tweet(i).timestamp).max();
        self.latest_tweet = self.latest_tweet.max(latest);
    }
}

#[derive(Debug, Clone)]
pub struct GameFeatures {
    pub game: usize,
    pub features: FeatureVector,
    pub provenance: Provenance,
}

/// Computes feature vectors for games of a frozen corpus.
///
/// Statistical features are always produced; unigram and rate features only
/// when requested.
#[derive(Debug, Clone)]
pub struct FeatureContext<'a> {
    corpus: &'a Corpus,
    unigrams: bool,
    rates: Vec<RateParams>,
}

impl<'a> FeatureContext<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        Self { corpus, unigrams: false, rates: Vec::new() }
    }

    /// Everything needed to evaluate any of `specs`.
    pub fn for_specs(corpus: &'a Corpus, specs: &[FeatureSetSpec]) -> Self {
        let mut ctx = Self::new(corpus).with_unigrams(specs.iter().any(FeatureSetSpec::uses_unigrams));
        ctx = ctx.with_rates(specs.iter().flat_map(|s| s.rates().collect::<Vec<_>>()));
        ctx
    }

    pub fn with_unigrams(mut self, on: bool) -> Self {
        self.unigrams = on;
        self
    }

    pub fn with_rates(mut self, rates: impl IntoIterator<Item = RateParams>) -> Self {
        for r in rates {
            if !self.rates.contains(&r) {
                self.rates.push(r);
            }
        }
        self
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn rates(&self) -> &[RateParams] {
        &self.rates
    }

    /// Features for the game at schedule index `game`.
    pub fn game(&self, game: usize) -> Result<GameFeatures, FeatureError> {
        let schedule = self.corpus.schedule();
        let record = schedule.game(game);
        let teams = Side::BOTH.map(|side| {
            schedule.team_index(record.team(side)).expect("game teams are scheduled")
        });
        let mut provenance = Provenance::default();

        let mut history: Vec<usize> =
            teams.iter().flat_map(|&t| schedule.prior_games(t, game)).collect();
        history.sort_unstable();
        history.dedup();
        let history_records: Vec<_> = history.iter().map(|&i| schedule.game(i)).collect();
        let mut features = game_stat_features(record, &history_records)?;
        provenance.results = history;

        if self.unigrams {
            let mut counter = UnigramCounter::new();
            for (side, &team) in Side::BOTH.iter().zip(&teams) {
                let ids = self.corpus.weekly_tweets(team, game);
                provenance.read_tweets(self.corpus, ids);
                for &i in ids {
                    counter.add_tweet(*side, self.corpus.tweet(i).tokens.iter().map(|&t| self.corpus.word(t)));
                }
            }
            features.merge(counter.finish())?;
        }

        if !self.rates.is_empty() {
            for (side, &team) in Side::BOTH.iter().zip(&teams) {
                let current = self.corpus.weekly_tweets(team, game);
                provenance.read_tweets(self.corpus, current);
                let mut volumes = Vec::new();
                for prior in schedule.prior_games(team, game) {
                    let ids = self.corpus.weekly_tweets(team, prior);
                    provenance.read_tweets(self.corpus, ids);
                    volumes.push(ids.len() as f64);
                }
                for params in &self.rates {
                    let value = params.evaluate(&volumes, current.len() as f64)?;
                    features.insert(format!("{}.{}", params.feature_prefix(), side.name()), f64::from(value))?;
                }
            }
        }

        Ok(GameFeatures { game, features, provenance })
    }

    /// Features for several games, computed in parallel, in input order.
    pub fn games(&self, games: &[usize]) -> Result<Vec<GameFeatures>, FeatureError> {
        games.par_iter().map(|&g| self.game(g)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{GameRecord, HashtagLexicon, IngestOptions, Schedule, TeamId, TweetRecord};
    use crate::features::VolumeBaseline;

    const DAY: i64 = 86_400;

    fn game(id: &str, week: u8, home: &str, away: &str, score: (u32, u32)) -> GameRecord {
        GameRecord {
            game_id: id.into(),
            season: 2012,
            week,
            home_team: home.into(),
            away_team: away.into(),
            kickoff: i64::from(week) * 7 * DAY,
            home_score: Some(score.0),
            away_score: Some(score.1),
            spread: -2.5,
            ou_line: 40.0,
            home_interceptions_thrown: 0,
            home_fumbles_lost: 0,
            home_times_sacked: 0,
            away_interceptions_thrown: 0,
            away_fumbles_lost: 0,
            away_times_sacked: 0,
        }
    }

    fn corpus() -> Corpus {
        let schedule = Schedule::new(vec![
            game("a1", 1, "A", "B", (20, 10)),
            game("a2", 2, "C", "A", (7, 30)),
            game("a3", 3, "A", "B", (0, 0)),
            game("c3", 3, "C", "D", (3, 0)),
        ])
        .unwrap();
        let lex = HashtagLexicon::new([
            (TeamId::from("A"), vec!["#a"]),
            (TeamId::from("B"), vec!["#b"]),
            (TeamId::from("C"), vec!["#c"]),
        ])
        .unwrap();
        let mut tweets = Vec::new();
        let mut push = |n: usize, t: i64, text: &str| {
            for _ in 0..n {
                let id = tweets.len().to_string();
                tweets.push(TweetRecord { tweet_id: id, timestamp: t, text: text.into() });
            }
        };
        // A: 2 weekly tweets before week 2, 5 before week 3; B: 1 before week 3
        push(2, 13 * DAY, "#a go");
        push(5, 20 * DAY, "#a go go");
        push(1, 20 * DAY, "#b meh");
        // within the one-hour blackout: no window
        push(1, 21 * DAY - 60, "#a late");
        Corpus::build(schedule, tweets, &lex, IngestOptions::default()).unwrap()
    }

    #[test]
    fn stats_unigrams_and_rates() {
        let c = corpus();
        let rate = RateParams::static_width(VolumeBaseline::Prev, 2);
        let ctx = FeatureContext::new(&c).with_unigrams(true).with_rates([rate]);
        let g = c.schedule().index_of("a3").unwrap();
        let out = ctx.game(g).unwrap();
        let fv = &out.features;
        assert_eq!(fv.get("F5.home.avg_points_scored"), Some(25.0));
        assert_eq!(fv.get("uni.home.go"), Some(11f64.ln()));
        assert_eq!(fv.get("uni.home.#a"), Some(6f64.ln()));
        assert_eq!(fv.get("uni.away.meh"), Some(2f64.ln()));
        assert_eq!(fv.get("uni.home.late"), None);
        // A: 5 now vs 2 before its previous game -> +1 with width 2
        assert_eq!(fv.get("rateS.prev.2.home"), Some(1.0));
        // B: no weekly tweets before its week-1 game, 1 now -> 0 (within one bucket)
        assert_eq!(fv.get("rateS.prev.2.away"), Some(0.0));

        let a1 = c.schedule().index_of("a1").unwrap();
        let a2 = c.schedule().index_of("a2").unwrap();
        assert_eq!(out.provenance.results, vec![a1, a2]);
        assert_eq!(out.provenance.latest_tweet, Some(20 * DAY));
        assert!(out.provenance.latest_tweet.unwrap() <= c.schedule().game(g).kickoff - 3600);
    }

    #[test]
    fn first_game_has_zero_rate_and_no_results() {
        let c = corpus();
        let spec: FeatureSetSpec = "rateP(prevavg,0.5)+unigrams".parse().unwrap();
        let ctx = FeatureContext::for_specs(&c, &[spec]);
        let out = ctx.game(c.schedule().index_of("a1").unwrap()).unwrap();
        assert_eq!(out.features.get("rateP.prevavg.0.5.home"), Some(0.0));
        assert!(out.provenance.results.is_empty());
        assert_eq!(out.provenance.tweets_read, 0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let c = corpus();
        let ctx = FeatureContext::new(&c).with_unigrams(true);
        let idx: Vec<usize> = (0..c.schedule().len()).collect();
        let par = ctx.games(&idx).unwrap();
        for (g, out) in idx.iter().zip(&par) {
            assert_eq!(ctx.game(*g).unwrap().features, out.features);
        }
    }
}
