//! Seeded synthetic seasons: schedule, scores, lines, box stats and tweets
//! with a tunable amount of planted signal.
//!
//! Scores are discretized normals around the latent strength difference.
//! The spread absorbs a fraction `market_efficiency` of that difference, so
//! at 1 the side of the spread is pure noise. Weekly tweet volume follows a
//! mean-reverting walk whose step direction matches the team's upcoming
//! cover with probability `tweet_signal` (otherwise a coin flip); postgame
//! tweets draw outcome words from the matching lexicon with probability
//! `(1 + tweet_signal) / 2`.

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    io, BoxStats, Corpus, CorpusError, GameRecord, HashtagLexicon, IngestOptions, Schedule, Side,
    TeamId, TweetRecord, HOUR,
};

const DAY: i64 = 24 * HOUR;
/// 2010-09-09 00:00 UTC, a Thursday.
const FIRST_SEASON_START: i64 = 1_283_990_400;
const MEAN_POINTS: f64 = 24.0;
const SCORE_SD: f64 = 9.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Even; every team plays every week.
    pub n_teams: usize,
    pub n_seasons: u16,
    pub first_season: u16,
    pub n_weeks: u8,
    /// Standard deviation of latent team strength, in points.
    pub strength_sd: f64,
    /// Points added to the home team's expected margin.
    pub home_advantage: f64,
    /// Share of the expected margin the spread absorbs, in `[0, 1]`.
    pub market_efficiency: f64,
    /// Standard deviation of bookmaker error added to spread and total.
    pub market_noise_sd: f64,
    /// Strength of the tweet signal, in `[0, 1]`.
    pub tweet_signal: f64,
    pub win_words: Vec<String>,
    pub loss_words: Vec<String>,
    /// Number of generated neutral words.
    pub filler_words: usize,
    /// Neutral words per weekly tweet.
    pub words_per_tweet: usize,
    /// Mean weekly tweet volume per team; the walk restarts here each season.
    pub volume_base: f64,
    /// Nominal size of a weekly volume change.
    pub volume_step: f64,
    /// Half-width of the uniform noise added to each volume change.
    pub volume_noise: f64,
    /// Postgame tweets per team per game.
    pub postgame_volume: usize,
    /// Outcome words per postgame tweet (each followed by one filler word).
    pub postgame_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_teams: 16,
            n_seasons: 3,
            first_season: 2010,
            n_weeks: 17,
            strength_sd: 4.0,
            home_advantage: 2.5,
            market_efficiency: 1.0,
            market_noise_sd: 1.0,
            tweet_signal: 0.0,
            win_words: ["win", "won", "great"].map(String::from).to_vec(),
            loss_words: ["loss", "refs", "bad"].map(String::from).to_vec(),
            filler_words: 40,
            words_per_tweet: 3,
            volume_base: 60.0,
            volume_step: 12.0,
            volume_noise: 2.0,
            postgame_volume: 20,
            postgame_words: 2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.n_teams < 2 || self.n_teams % 2 != 0 {
            return bad(format!("n_teams must be even and at least 2, got {}", self.n_teams));
        }
        if !(1..=17).contains(&self.n_weeks) {
            return bad(format!("n_weeks must be in 1..=17, got {}", self.n_weeks));
        }
        if self.n_seasons == 0 {
            return bad("n_seasons must be positive".into());
        }
        for (name, v) in [("market_efficiency", self.market_efficiency), ("tweet_signal", self.tweet_signal)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        for (name, v) in [
            ("strength_sd", self.strength_sd),
            ("market_noise_sd", self.market_noise_sd),
            ("volume_base", self.volume_base),
            ("volume_step", self.volume_step),
            ("volume_noise", self.volume_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if !self.home_advantage.is_finite() {
            return bad("home_advantage must be finite".into());
        }
        if self.postgame_volume > 0 && (self.win_words.is_empty() || self.loss_words.is_empty()) {
            return bad("postgame tweets need win and loss words".into());
        }
        if self.win_words.iter().any(|w| self.loss_words.contains(w)) {
            return bad("win and loss words overlap".into());
        }
        if self.filler_words == 0 && (self.words_per_tweet > 0 || self.postgame_volume > 0) {
            return bad("filler_words must be positive".into());
        }
        Ok(())
    }

    pub fn team_id(i: usize) -> TeamId {
        TeamId(format!("T{i:03}"))
    }

    pub fn hashtag(i: usize) -> String {
        format!("#team{i:03}")
    }

    fn filler(&self) -> Vec<String> {
        (0..self.filler_words).map(|i| format!("w{i:02}")).collect()
    }
}

/// Generated games, raw tweets and the team lexicon, in the corpus file
/// formats.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub games: Vec<GameRecord>,
    pub tweets: Vec<TweetRecord>,
    pub lexicon: HashtagLexicon,
    /// Latent strength per team.
    pub strengths: Vec<f64>,
}

impl SynthData {
    /// Ingests the data as the corpus module would from files.
    pub fn corpus(&self) -> Result<Corpus, CorpusError> {
        Corpus::build(Schedule::new(self.games.clone())?, self.tweets.clone(), &self.lexicon, IngestOptions::default())
    }

    /// Writes `games.csv`, `tweets.jsonl` and `lexicon.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<[PathBuf; 3], CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::Io { path: dir.to_path_buf(), source: e })?;
        let paths = [dir.join("games.csv"), dir.join("tweets.jsonl"), dir.join("lexicon.json")];
        io::write_games(&paths[0], &self.games)?;
        io::write_tweets(&paths[1], &self.tweets)?;
        io::write_lexicon(&paths[2], &self.lexicon)?;
        Ok(paths)
    }
}

/// Pairings for one week by the circle method: team 0 stays fixed while
/// the others rotate. Home and away alternate by round and by cycle.
fn pairings(n: usize, week: usize) -> Vec<(usize, usize)> {
    let rounds = n - 1;
    let r = week % rounds;
    let cycle = week / rounds;
    let rotate = |i: usize| if i == 0 { 0 } else { 1 + (i - 1 + r) % rounds };
    (0..n / 2)
        .map(|i| {
            let (a, b) = (rotate(i), rotate(n - 1 - i));
            if (i + r + cycle) % 2 == 0 {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

fn round_half(x: f64) -> f64 {
    (x * 2.0).round() / 2.0
}

fn points(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    let n = Normal::new(mean, SCORE_SD).expect("positive sd");
    n.sample(rng).round().max(0.0) as u32
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    Poisson::new(mean.max(1e-6)).expect("positive mean").sample(rng) as u32
}

fn box_stats(rng: &mut ChaCha8Rng, edge: f64) -> BoxStats {
    // weaker teams turn the ball over and get sacked a little more
    let f = (-0.05 * edge).exp();
    BoxStats {
        interceptions_thrown: poisson(rng, 0.9 * f),
        fumbles_lost: poisson(rng, 0.6 * f),
        times_sacked: poisson(rng, 2.3 * f),
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthData, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_teams;
    let strength_dist = Normal::new(0.0, config.strength_sd.max(1e-12)).expect("valid sd");
    let market_dist = Normal::new(0.0, config.market_noise_sd.max(1e-12)).expect("valid sd");
    let strengths: Vec<f64> = (0..n)
        .map(|_| if config.strength_sd > 0.0 { strength_dist.sample(&mut rng) } else { 0.0 })
        .collect();
    let market_noise = |rng: &mut ChaCha8Rng| if config.market_noise_sd > 0.0 { market_dist.sample(rng) } else { 0.0 };

    let mut games = Vec::new();
    for s in 0..config.n_seasons {
        let season = config.first_season + s;
        let start = FIRST_SEASON_START + i64::from(s) * 364 * DAY;
        for w in 0..usize::from(config.n_weeks) {
            for (i, (home, away)) in pairings(n, w).into_iter().enumerate() {
                let edge = config.home_advantage + strengths[home] - strengths[away];
                let home_score = points(&mut rng, MEAN_POINTS + edge / 2.0);
                let away_score = points(&mut rng, MEAN_POINTS - edge / 2.0);
                let estimate = config.market_efficiency * edge + market_noise(&mut rng);
                let total = 2.0 * MEAN_POINTS + market_noise(&mut rng);
                let mut g = GameRecord {
                    game_id: format!("{season}-{:02}-{i:03}", w + 1),
                    season,
                    week: (w + 1) as u8,
                    home_team: SynthConfig::team_id(home),
                    away_team: SynthConfig::team_id(away),
                    kickoff: start + w as i64 * 7 * DAY + 17 * HOUR + (i % 3) as i64 * 3 * HOUR,
                    home_score: Some(home_score),
                    away_score: Some(away_score),
                    spread: round_half(-estimate) + 0.0,
                    ou_line: round_half(total),
                    home_interceptions_thrown: 0,
                    home_fumbles_lost: 0,
                    home_times_sacked: 0,
                    away_interceptions_thrown: 0,
                    away_fumbles_lost: 0,
                    away_times_sacked: 0,
                };
                g.set_box_stats(Side::Home, box_stats(&mut rng, edge));
                g.set_box_stats(Side::Away, box_stats(&mut rng, -edge));
                games.push(g);
            }
        }
    }

    let lexicon = HashtagLexicon::new((0..n).map(|i| (SynthConfig::team_id(i), vec![SynthConfig::hashtag(i)])))?;
    let tweets = tweets(config, &games, &mut rng);
    Ok(SynthData { games, tweets, lexicon, strengths })
}

fn tweets(config: &SynthConfig, games: &[GameRecord], rng: &mut ChaCha8Rng) -> Vec<TweetRecord> {
    let n = config.n_teams;
    let filler = config.filler();
    let mut schedule: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (gi, g) in games.iter().enumerate() {
        for side in Side::BOTH {
            let t: usize = g.team(side).0[1..].parse().expect("generated team id");
            schedule[t].push(gi);
        }
    }
    let mut out = Vec::new();
    let mut next_id: u64 = 1;
    let mut push = |out: &mut Vec<TweetRecord>, timestamp: i64, text: String| {
        out.push(TweetRecord { tweet_id: format!("{:012}", next_id), timestamp, text });
        next_id += 1;
    };

    for team in 0..n {
        let tag = SynthConfig::hashtag(team);
        let mut volume = config.volume_base;
        let mut prev: Option<&GameRecord> = None;
        for &gi in &schedule[team] {
            let g = &games[gi];
            let side = g.side_of(&SynthConfig::team_id(team)).expect("team plays");
            let new_season = prev.is_none_or(|p| p.season != g.season);
            if new_season {
                volume = config.volume_base;
            } else {
                let cover = g.cover_margin(side).filter(|&m| m != 0.0).map(|m| m > 0.0);
                let up = match cover {
                    Some(c) if rng.random::<f64>() < config.tweet_signal => c,
                    _ => rng.random::<bool>(),
                };
                let toward_base = up == (volume < config.volume_base);
                let magnitude = config.volume_step * if toward_base { 1.35 } else { 0.75 };
                let noise = if config.volume_noise > 0.0 {
                    rng.random_range(-config.volume_noise..=config.volume_noise)
                } else {
                    0.0
                };
                volume = (volume + if up { magnitude } else { -magnitude } + noise).max(0.0);
            }
            let count = volume.round() as usize;
            let (lo, hi) = match prev {
                // after the previous game's postgame window closes
                Some(p) if p.season == g.season => (p.kickoff + 29 * HOUR, g.kickoff - 2 * HOUR),
                _ => (g.kickoff - 6 * DAY, g.kickoff - 2 * HOUR),
            };
            for _ in 0..count {
                let mut text = tag.clone();
                for _ in 0..config.words_per_tweet {
                    text.push(' ');
                    text.push_str(filler.choose(rng).expect("filler words"));
                }
                push(&mut out, rng.random_range(lo..=hi), text);
            }
            prev = Some(g);
        }
    }

    if config.postgame_volume > 0 {
        let p_match = (1.0 + config.tweet_signal) / 2.0;
        for g in games {
            for side in Side::BOTH {
                let team: usize = g.team(side).0[1..].parse().expect("generated team id");
                let tag = SynthConfig::hashtag(team);
                let (Some(pf), Some(pa)) = (g.points_for(side), g.points_against(side)) else { continue };
                if pf == pa {
                    continue;
                }
                let (own, other) = if pf > pa {
                    (&config.win_words, &config.loss_words)
                } else {
                    (&config.loss_words, &config.win_words)
                };
                for _ in 0..config.postgame_volume {
                    let mut text = tag.clone();
                    for _ in 0..config.postgame_words {
                        let words = if rng.random::<f64>() < p_match { own } else { other };
                        text.push(' ');
                        text.push_str(words.choose(rng).expect("outcome words"));
                        text.push(' ');
                        text.push_str(filler.choose(rng).expect("filler words"));
                    }
                    let t = rng.random_range(g.kickoff + 4 * HOUR..g.kickoff + 12 * HOUR);
                    push(&mut out, t, text);
                }
            }
        }
    }
    out.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.tweet_id.cmp(&b.tweet_id)));
    out
}
