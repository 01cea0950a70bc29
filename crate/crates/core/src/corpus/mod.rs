//! Games, tweets and the hashtag lexicon.
//!
//! Tweets are attributed to exactly one team by hashtag and tagged with the
//! weekly, pregame and postgame windows of that team's schedule. The result is
//! a frozen [`Corpus`] that every downstream module reads.

mod game;
pub mod io;
mod lexicon;
mod schedule;
mod tokenize;
mod windows;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use game::{BoxStats, GameRecord, Side, TeamId};
pub use lexicon::{assign_team, HashtagLexicon, TeamMatch};
pub use schedule::Schedule;
pub use tokenize::{filter_cjk, is_cjk_char, tokenize};
pub use windows::{
    tag_windows, Window, WindowSet, BLACKOUT_BEFORE_NEXT, HOUR, POSTGAME_CLOSES_AFTER_PREV,
    POSTGAME_OPENS_AFTER_PREV, PREGAME_OPENS_BEFORE_NEXT, WEEKLY_AFTER_PREV,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("invalid game {game_id}: {reason}")]
    InvalidGame { game_id: String, reason: String },
    #[error("duplicate game_id {0}")]
    DuplicateGame(String),
    #[error("team {team} plays twice in season {season} week {week}")]
    DoubleBooked { team: TeamId, season: u16, week: u8 },
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("duplicate tweet_id {0}")]
    DuplicateTweet(String),
    #[error("unknown game_id {0} (corrupt index?)")]
    UnknownGame(String),
    #[error("unknown team {0}")]
    UnknownTeam(TeamId),
    #[error("team {team} does not play in game {game_id}")]
    TeamNotInGame { team: TeamId, game_id: String },
    #[error("tweet texts unavailable: {missing} of {total} listed tweet ids have no text")]
    TextsUnavailable { missing: usize, total: usize },
    #[error("corpus file: {0}")]
    Format(String),
}

/// A raw tweet as read from the tweets file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub timestamp: i64,
    pub text: String,
}

impl TweetRecord {
    /// Original-case tokens; hashtag matching lowercases separately.
    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.text)
    }
}

/// A kept tweet attributed to one team.
///
/// `next_game` is the upcoming game that the weekly and pregame tags refer
/// to; `prev_game` is the game the postgame tag refers to. Both are indices
/// into the corpus schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignedTweet {
    pub tweet_id: String,
    pub team: u32,
    pub timestamp: i64,
    pub tokens: Vec<u32>,
    pub windows: WindowSet,
    pub prev_game: Option<u32>,
    pub next_game: Option<u32>,
}

/// Interned token strings.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = u32::try_from(self.words.len()).expect("vocabulary exceeds u32");
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl From<Vec<String>> for Vocab {
    fn from(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Vocab { words, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.words
    }
}

/// Where every input tweet went during ingestion.
///
/// `total = cjk_dropped + empty_dropped + duplicates + no_team + multi_team
/// + unscheduled + assigned`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub total: usize,
    pub cjk_dropped: usize,
    pub empty_dropped: usize,
    pub duplicates: usize,
    pub no_team: usize,
    pub multi_team: usize,
    pub unscheduled: usize,
    pub assigned: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub cjk_filter: bool,
    /// Duplicate tweet ids and missing texts become errors instead of skips.
    pub strict: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { cjk_filter: true, strict: false }
    }
}

/// Per-season tweet counts by window, the shape of the yearly-counts table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub pregame: usize,
    pub postgame: usize,
    pub weekly: usize,
}

/// One row of the released per-team/per-game tweet-id lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleasedEntry {
    pub team: TeamId,
    pub game_id: String,
    pub tweet_id: String,
}

enum Triage {
    Cjk,
    Empty,
    NoTeam,
    MultiTeam,
    Unscheduled,
    Keep { team: u32, tokens: Vec<String> },
}

/// The frozen, indexed corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    schedule: Schedule,
    vocab: Vocab,
    tweets: Vec<AssignedTweet>,
    stats: IngestStats,
    weekly: HashMap<(u32, u32), Vec<u32>>,
    postgame: HashMap<(u32, u32), Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    games: Schedule,
    vocab: Vocab,
    stats: IngestStats,
    tweets: Vec<AssignedTweet>,
}

impl Corpus {
    /// Filters, tokenizes, assigns and window-tags `tweets` against the
    /// schedule. Tokenization and assignment run in parallel; interning and
    /// indexing are sequential so the result does not depend on thread count.
    pub fn build(
        schedule: Schedule,
        tweets: Vec<TweetRecord>,
        lexicon: &HashtagLexicon,
        opts: IngestOptions,
    ) -> Result<Self, CorpusError> {
        let triaged: Vec<Triage> = tweets
            .par_iter()
            .map(|tw| {
                if opts.cjk_filter && !filter_cjk(&tw.text) {
                    return Triage::Cjk;
                }
                let tokens = tokenize(&tw.text);
                if tokens.is_empty() {
                    return Triage::Empty;
                }
                match lexicon.match_tokens(&tokens) {
                    TeamMatch::None => Triage::NoTeam,
                    TeamMatch::Many => Triage::MultiTeam,
                    TeamMatch::One(team) => match schedule.team_index(team) {
                        Some(t) => Triage::Keep { team: t as u32, tokens },
                        None => Triage::Unscheduled,
                    },
                }
            })
            .collect();
        let mut builder = Builder::new(schedule, opts, tweets.len());
        for (tw, tri) in tweets.into_iter().zip(triaged) {
            builder.push(tw, tri)?;
        }
        Ok(builder.finish())
    }

    /// Builds a corpus from released tweet-id lists, taking team attribution
    /// from the list and texts from `texts`.
    pub fn from_released(
        schedule: Schedule,
        entries: &[ReleasedEntry],
        texts: Vec<TweetRecord>,
        opts: IngestOptions,
    ) -> Result<Self, CorpusError> {
        let mut by_id: HashMap<String, TweetRecord> =
            texts.into_iter().map(|t| (t.tweet_id.clone(), t)).collect();
        let missing = entries.iter().filter(|e| !by_id.contains_key(&e.tweet_id)).count();
        if !entries.is_empty() && (missing == entries.len() || (opts.strict && missing > 0)) {
            return Err(CorpusError::TextsUnavailable { missing, total: entries.len() });
        }
        let mut builder = Builder::new(schedule, opts, entries.len());
        for entry in entries {
            let Some(tw) = by_id.remove(&entry.tweet_id) else {
                continue;
            };
            let game = builder
                .schedule
                .get(&entry.game_id)
                .ok_or_else(|| CorpusError::UnknownGame(entry.game_id.clone()))?;
            if game.side_of(&entry.team).is_none() {
                return Err(CorpusError::TeamNotInGame {
                    team: entry.team.clone(),
                    game_id: entry.game_id.clone(),
                });
            }
            let tri = if opts.cjk_filter && !filter_cjk(&tw.text) {
                Triage::Cjk
            } else {
                let tokens = tokenize(&tw.text);
                if tokens.is_empty() {
                    Triage::Empty
                } else {
                    let team = builder.schedule.team_index(&entry.team).expect("team in schedule");
                    Triage::Keep { team: team as u32, tokens }
                }
            };
            builder.push(tw, tri)?;
        }
        Ok(builder.finish())
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn tweets(&self) -> &[AssignedTweet] {
        &self.tweets
    }

    pub fn tweet(&self, idx: u32) -> &AssignedTweet {
        &self.tweets[idx as usize]
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    pub fn word(&self, id: u32) -> &str {
        self.vocab.word(id)
    }

    /// Weekly tweets of `team` leading up to `game` (both schedule indices).
    pub fn weekly_tweets(&self, team: usize, game: usize) -> &[u32] {
        self.weekly.get(&(team as u32, game as u32)).map_or(&[], Vec::as_slice)
    }

    /// Postgame tweets of `team` following `game`.
    pub fn postgame_tweets(&self, team: usize, game: usize) -> &[u32] {
        self.postgame.get(&(team as u32, game as u32)).map_or(&[], Vec::as_slice)
    }

    /// Number of weekly tweets assigned to `team` whose upcoming game is
    /// `game_id`.
    pub fn weekly_volume(&self, team: &TeamId, game_id: &str) -> Result<usize, CorpusError> {
        let game = self
            .schedule
            .index_of(game_id)
            .ok_or_else(|| CorpusError::UnknownGame(game_id.to_string()))?;
        let t = self
            .schedule
            .team_index(team)
            .ok_or_else(|| CorpusError::UnknownTeam(team.clone()))?;
        if self.schedule.game(game).side_of(team).is_none() {
            return Err(CorpusError::TeamNotInGame { team: team.clone(), game_id: game_id.to_string() });
        }
        Ok(self.weekly_tweets(t, game).len())
    }

    /// Tweet counts per season and window. Weekly and pregame tweets count
    /// toward the season of their upcoming game, postgame tweets toward the
    /// season of the game they follow.
    pub fn season_counts(&self) -> BTreeMap<u16, WindowCounts> {
        let mut out: BTreeMap<u16, WindowCounts> =
            self.schedule.seasons().into_iter().map(|s| (s, WindowCounts::default())).collect();
        for tw in &self.tweets {
            if let Some(next) = tw.next_game {
                let season = self.schedule.game(next as usize).season;
                let c = out.entry(season).or_default();
                if tw.windows.contains(Window::Weekly) {
                    c.weekly += 1;
                }
                if tw.windows.contains(Window::Pregame) {
                    c.pregame += 1;
                }
            }
            if let (Some(prev), true) = (tw.prev_game, tw.windows.contains(Window::Postgame)) {
                out.entry(self.schedule.game(prev as usize).season).or_default().postgame += 1;
            }
        }
        out
    }

    pub fn to_json_writer<W: std::io::Write>(&self, w: W) -> Result<(), CorpusError> {
        let file = CorpusFile {
            games: self.schedule.clone(),
            vocab: self.vocab.clone(),
            stats: self.stats,
            tweets: self.tweets.clone(),
        };
        serde_json::to_writer(w, &file).map_err(|e| CorpusError::Format(e.to_string()))
    }

    pub fn from_json_reader<R: std::io::Read>(r: R) -> Result<Self, CorpusError> {
        let file: CorpusFile =
            serde_json::from_reader(r).map_err(|e| CorpusError::Format(e.to_string()))?;
        let n_games = file.games.len() as u32;
        let n_teams = file.games.teams().len() as u32;
        let n_words = file.vocab.len() as u32;
        for tw in &file.tweets {
            let bad_game = [tw.prev_game, tw.next_game].into_iter().flatten().any(|g| g >= n_games);
            if tw.team >= n_teams || bad_game || tw.tokens.iter().any(|&t| t >= n_words) {
                return Err(CorpusError::Format(format!("tweet {} has out-of-range indices", tw.tweet_id)));
            }
        }
        let mut corpus = Corpus {
            schedule: file.games,
            vocab: file.vocab,
            tweets: file.tweets,
            stats: file.stats,
            weekly: HashMap::new(),
            postgame: HashMap::new(),
        };
        corpus.reindex();
        Ok(corpus)
    }

    fn reindex(&mut self) {
        self.weekly.clear();
        self.postgame.clear();
        for (i, tw) in self.tweets.iter().enumerate() {
            if let (Some(next), true) = (tw.next_game, tw.windows.contains(Window::Weekly)) {
                self.weekly.entry((tw.team, next)).or_default().push(i as u32);
            }
            if let (Some(prev), true) = (tw.prev_game, tw.windows.contains(Window::Postgame)) {
                self.postgame.entry((tw.team, prev)).or_default().push(i as u32);
            }
        }
    }
}

/// Window tags of a team's tweet at `t`, with the games they refer to.
///
/// Previous and upcoming games are resolved within one season: across a
/// season boundary the old season's last game only contributes a postgame
/// tag and the new season's first game is treated as having no predecessor.
pub fn locate(schedule: &Schedule, team: usize, t: i64) -> (WindowSet, Option<usize>, Option<usize>) {
    let (prev, next) = schedule.surrounding(team, t);
    let kick = |g: Option<usize>| g.map(|i| schedule.game(i).kickoff);
    let tags = match (prev, next) {
        (Some(p), Some(n)) if schedule.game(p).season != schedule.game(n).season => {
            tag_windows(t, kick(prev), None).union(tag_windows(t, None, kick(next)))
        }
        _ => tag_windows(t, kick(prev), kick(next)),
    };
    (tags, prev, next)
}

struct Builder {
    schedule: Schedule,
    opts: IngestOptions,
    vocab: Vocab,
    tweets: Vec<AssignedTweet>,
    stats: IngestStats,
    seen: HashSet<String>,
}

impl Builder {
    fn new(schedule: Schedule, opts: IngestOptions, capacity: usize) -> Self {
        Self {
            schedule,
            opts,
            vocab: Vocab::default(),
            tweets: Vec::with_capacity(capacity),
            stats: IngestStats::default(),
            seen: HashSet::with_capacity(capacity),
        }
    }

    fn push(&mut self, tw: TweetRecord, tri: Triage) -> Result<(), CorpusError> {
        self.stats.total += 1;
        if !self.seen.insert(tw.tweet_id.clone()) {
            if self.opts.strict {
                return Err(CorpusError::DuplicateTweet(tw.tweet_id));
            }
            self.stats.duplicates += 1;
            return Ok(());
        }
        match tri {
            Triage::Cjk => self.stats.cjk_dropped += 1,
            Triage::Empty => self.stats.empty_dropped += 1,
            Triage::NoTeam => self.stats.no_team += 1,
            Triage::MultiTeam => self.stats.multi_team += 1,
            Triage::Unscheduled => self.stats.unscheduled += 1,
            Triage::Keep { team, tokens } => {
                let (windows, prev, next) = locate(&self.schedule, team as usize, tw.timestamp);
                let tokens = tokens.iter().map(|t| self.vocab.intern(t)).collect();
                self.tweets.push(AssignedTweet {
                    tweet_id: tw.tweet_id,
                    team,
                    timestamp: tw.timestamp,
                    tokens,
                    windows,
                    prev_game: prev.map(|g| g as u32),
                    next_game: next.map(|g| g as u32),
                });
                self.stats.assigned += 1;
            }
        }
        Ok(())
    }

    fn finish(self) -> Corpus {
        let mut corpus = Corpus {
            schedule: self.schedule,
            vocab: self.vocab,
            tweets: self.tweets,
            stats: self.stats,
            weekly: HashMap::new(),
            postgame: HashMap::new(),
        };
        corpus.reindex();
        corpus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAY: i64 = 86_400;

    fn game(id: &str, season: u16, week: u8, home: &str, away: &str, kickoff: i64) -> GameRecord {
        GameRecord {
            game_id: id.into(),
            season,
            week,
            home_team: home.into(),
            away_team: away.into(),
            kickoff,
            home_score: Some(21),
            away_score: Some(14),
            spread: -3.5,
            ou_line: 40.5,
            home_interceptions_thrown: 0,
            home_fumbles_lost: 0,
            home_times_sacked: 0,
            away_interceptions_thrown: 0,
            away_fumbles_lost: 0,
            away_times_sacked: 0,
        }
    }

    fn lexicon() -> HashtagLexicon {
        HashtagLexicon::new([
            (TeamId::from("NYG"), vec!["#giants", "#gmen"]),
            (TeamId::from("NYJ"), vec!["#jets"]),
            (TeamId::from("DAL"), vec!["#cowboys"]),
        ])
        .unwrap()
    }

    fn tweet(id: &str, t: i64, text: &str) -> TweetRecord {
        TweetRecord { tweet_id: id.into(), timestamp: t, text: text.into() }
    }

    fn schedule() -> Schedule {
        Schedule::new(vec![
            game("w1", 2012, 1, "NYG", "NYJ", 10 * DAY),
            game("w2", 2012, 2, "DAL", "NYG", 17 * DAY),
        ])
        .unwrap()
    }

    #[test]
    fn build_partitions_tweets() {
        let tweets = vec![
            tweet("1", 9 * DAY, "#gmen ready"),
            tweet("2", 9 * DAY, "#giants #jets rivalry"),
            tweet("3", 9 * DAY, "football sunday"),
            tweet("4", 9 * DAY, "#giants 巨人"),
            tweet("5", 9 * DAY, "!!!"),
            tweet("1", 9 * DAY, "#gmen dup"),
            tweet("6", 16 * DAY, "#jets bye week"),
        ];
        let c = Corpus::build(schedule(), tweets, &lexicon(), IngestOptions::default()).unwrap();
        let s = c.stats();
        assert_eq!(s.total, 7);
        assert_eq!(
            (s.assigned, s.multi_team, s.no_team, s.cjk_dropped, s.empty_dropped, s.duplicates),
            (2, 1, 1, 1, 1, 1)
        );
        assert_eq!(
            s.total,
            s.assigned + s.multi_team + s.no_team + s.cjk_dropped + s.empty_dropped + s.duplicates + s.unscheduled
        );
    }

    #[test]
    fn strict_rejects_duplicate_ids() {
        let tweets = vec![tweet("1", 0, "#gmen"), tweet("1", 0, "#gmen")];
        let opts = IngestOptions { strict: true, ..Default::default() };
        assert!(matches!(
            Corpus::build(schedule(), tweets, &lexicon(), opts),
            Err(CorpusError::DuplicateTweet(_))
        ));
    }

    #[test]
    fn weekly_volume_counts_only_weekly() {
        // three weekly tweets before w2, one postgame-only tweet after w1
        let tweets = vec![
            tweet("a", 10 * DAY + 5 * 3600, "#gmen won"),
            tweet("b", 12 * DAY, "#gmen one"),
            tweet("c", 13 * DAY, "#gmen two"),
            tweet("d", 16 * DAY, "#gmen three"),
            tweet("e", 16 * DAY, "#jets other team"),
        ];
        let c = Corpus::build(schedule(), tweets, &lexicon(), IngestOptions::default()).unwrap();
        let nyg = TeamId::from("NYG");
        assert_eq!(c.weekly_volume(&nyg, "w2").unwrap(), 3);
        assert_eq!(c.weekly_volume(&TeamId::from("DAL"), "w2").unwrap(), 0);
        assert!(matches!(c.weekly_volume(&nyg, "nope"), Err(CorpusError::UnknownGame(_))));
        assert!(matches!(
            c.weekly_volume(&TeamId::from("NYJ"), "w2"),
            Err(CorpusError::TeamNotInGame { .. })
        ));
        let w1 = c.schedule().index_of("w1").unwrap();
        let t = c.schedule().team_index(&nyg).unwrap();
        assert_eq!(c.postgame_tweets(t, w1).len(), 1);
    }

    #[test]
    fn season_boundary_resolution() {
        let s = Schedule::new(vec![
            game("old", 2011, 17, "NYG", "NYJ", 0),
            game("new", 2012, 1, "NYG", "NYJ", 200 * DAY),
        ])
        .unwrap();
        let t = s.team_index(&"NYG".into()).unwrap();
        // five hours after the old season's last game: postgame of "old" and
        // weekly for the new season's opener
        let (tags, prev, next) = locate(&s, t, 5 * 3600);
        assert!(tags.contains(Window::Postgame) && tags.contains(Window::Weekly));
        assert_eq!((prev, next), (Some(0), Some(1)));
    }

    #[test]
    fn released_import() {
        let entries = vec![
            ReleasedEntry { team: "NYG".into(), game_id: "w2".into(), tweet_id: "x".into() },
            ReleasedEntry { team: "NYG".into(), game_id: "w2".into(), tweet_id: "y".into() },
        ];
        let err = Corpus::from_released(schedule(), &entries, vec![], IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::TextsUnavailable { missing: 2, total: 2 }));

        let texts = vec![tweet("x", 15 * DAY, "no hashtag needed")];
        let c = Corpus::from_released(schedule(), &entries, texts.clone(), IngestOptions::default()).unwrap();
        assert_eq!(c.weekly_volume(&"NYG".into(), "w2").unwrap(), 1);
        let strict = IngestOptions { strict: true, ..Default::default() };
        assert!(Corpus::from_released(schedule(), &entries, texts, strict).is_err());
    }

    #[test]
    fn json_round_trip() {
        let tweets = vec![tweet("a", 12 * DAY, "#gmen Go big"), tweet("b", 16 * DAY, "#cowboys")];
        let c = Corpus::build(schedule(), tweets, &lexicon(), IngestOptions::default()).unwrap();
        let mut buf = Vec::new();
        c.to_json_writer(&mut buf).unwrap();
        let back = Corpus::from_json_reader(buf.as_slice()).unwrap();
        assert_eq!(back.tweets(), c.tweets());
        assert_eq!(back.stats(), c.stats());
        assert_eq!(back.weekly_volume(&"NYG".into(), "w2").unwrap(), 1);
        assert_eq!(back.season_counts(), c.season_counts());
    }
}
