//! Forecasting NFL game and betting outcomes from game statistics and
//! team-assigned tweets.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: games, tweets and the hashtag lexicon; team assignment and
//!   weekly/pregame/postgame window tagging.
//! - [`features`]: the statistical feature sets `F1`..`F10`, unigram features
//!   and the tweet-volume rate features, plus the feature-set grammar.
//! - [`cca`]: canonical correlation analysis used to fuse the statistical and
//!   unigram views.
//! - [`glm`]: binary logistic regression with L1/L2 penalties.
//! - [`harness`]: labels, the rolling strict-online backtest, regularization
//!   tuning, feature-set selection and report tables.
//! - [`postgame`]: win/loss classification of postgame tweets and lexicon
//!   induction from the classifier weights.
//! - [`synthgen`]: seeded synthetic seasons with plantable signal.

pub mod cca;
pub mod corpus;
pub mod features;
pub mod glm;
pub mod harness;
pub mod postgame;
pub mod sparse;
pub mod synthgen;

pub use cca::{CcaError, CcaModel};
pub use corpus::{
    assign_team, filter_cjk, tag_windows, tokenize, AssignedTweet, Corpus, CorpusError,
    GameRecord, HashtagLexicon, Schedule, TeamId, TweetRecord, Window, WindowSet,
};
pub use features::{
    rate_p, rate_s, FeatureError, FeatureSetSpec, FeatureVector, RateParams, VolumeBaseline,
};
pub use glm::{GlmError, ModelWeights, Penalty};
pub use harness::{
    label, profitability, run_backtest, Backtest, BacktestOptions, BacktestReport, Commission,
    HarnessError, Protocol, SelectionWindow, SetResult, Task, TaskLabel,
};
pub use postgame::{evaluate_weeks, extract_lexicon, Lexicon, PostgameOptions, PostgameReport};
pub use synthgen::{generate, SynthConfig, SynthData};
