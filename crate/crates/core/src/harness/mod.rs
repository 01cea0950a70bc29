//! Labels, the rolling strict-online backtest, feature-set selection,
//! report tables and betting profitability.

mod backtest;
mod protocol;
mod report;
mod select;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cca::CcaError;
use crate::corpus::{CorpusError, GameRecord};
use crate::features::FeatureError;
use crate::glm::GlmError;

pub use backtest::{
    AccessLog, Backtest, BacktestOptions, FoldResult, Grid, Phase, Prediction, SetResult,
};
pub use protocol::{FoldSpec, Protocol};
pub use report::{run_backtest, BacktestReport, TableRow};
pub use select::{select_feature_set, selection_trajectory, SelectionStep, SelectionWindow, Trajectory};
pub use store::FeatureStore;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Cca(#[from] CcaError),
    #[error("game {0} has no final score")]
    MissingScores(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Winner,
    Wts,
    #[serde(rename = "ou")]
    OverUnder,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Winner, Task::Wts, Task::OverUnder];

    pub fn name(self) -> &'static str {
        match self {
            Task::Winner => "winner",
            Task::Wts => "wts",
            Task::OverUnder => "ou",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "winner" => Ok(Task::Winner),
            "wts" => Ok(Task::Wts),
            "ou" | "over_under" | "overunder" => Ok(Task::OverUnder),
            _ => Err(format!("unknown task {s:?} (expected winner, wts or ou)")),
        }
    }
}

/// Binary outcome of a game for one task. A push has no label and is left
/// out of training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskLabel {
    pub task: Task,
    pub label: u8,
    pub push: bool,
}

impl TaskLabel {
    /// `Some(label == 1)` unless the game is a push.
    pub fn value(self) -> Option<bool> {
        (!self.push).then_some(self.label == 1)
    }
}

/// Label of `game` for `task`: home win, home cover (score plus spread beats
/// the away score) or total over the line. Exact ties are pushes.
pub fn label(game: &GameRecord, task: Task) -> Result<TaskLabel, HarnessError> {
    let (home, away) = game.scores().ok_or_else(|| HarnessError::MissingScores(game.game_id.clone()))?;
    let (home, away) = (f64::from(home), f64::from(away));
    let margin = match task {
        Task::Winner => home - away,
        Task::Wts => home + game.spread - away,
        Task::OverUnder => home + away - game.ou_line,
    };
    Ok(TaskLabel { task, label: u8::from(margin > 0.0), push: margin == 0.0 })
}

/// Stake needed to win a given amount, in hundredths of a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commission {
    pub risk: u32,
    pub win: u32,
}

impl Default for Commission {
    /// Risk 1.10 to win 1.00.
    fn default() -> Self {
        Self { risk: 110, win: 100 }
    }
}

impl Commission {
    /// Accuracy at which expected winnings are zero, `risk / (risk + win)`.
    pub fn breakeven(&self) -> f64 {
        f64::from(self.risk) / f64::from(self.risk + self.win)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profit {
    /// Expected units won over all bets.
    pub units: f64,
    pub profitable: bool,
}

/// Expected units won betting one unit-to-win on each of `n_games` at the
/// given accuracy: `n (a·win − (1 − a)·risk)`.
pub fn profitability(accuracy: f64, n_games: usize, commission: Commission) -> Profit {
    let b = commission.breakeven();
    // written around the breakeven so that a == b gives exactly zero
    let per_bet = (accuracy - b) * f64::from(commission.risk + commission.win) / 100.0;
    Profit { units: n_games as f64 * per_bet, profitable: accuracy > b }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game(home: u32, away: u32, spread: f64, ou: f64) -> GameRecord {
        GameRecord {
            game_id: "g".into(),
            season: 2012,
            week: 5,
            home_team: "NYG".into(),
            away_team: "NYJ".into(),
            kickoff: 0,
            home_score: Some(home),
            away_score: Some(away),
            spread,
            ou_line: ou,
            home_interceptions_thrown: 0,
            home_fumbles_lost: 0,
            home_times_sacked: 0,
            away_interceptions_thrown: 0,
            away_fumbles_lost: 0,
            away_times_sacked: 0,
        }
    }

    #[test]
    fn spread_push_and_cover() {
        let push = label(&game(24, 20, -4.0, 40.0), Task::Wts).unwrap();
        assert!(push.push);
        assert_eq!(push.value(), None);
        let away_covers = label(&game(23, 20, -4.0, 40.0), Task::Wts).unwrap();
        assert_eq!(away_covers.value(), Some(false));
        assert_eq!(label(&game(23, 20, -4.0, 40.0), Task::Winner).unwrap().value(), Some(true));
    }

    #[test]
    fn over_under_strict() {
        assert_eq!(label(&game(21, 20, 0.0, 40.5), Task::OverUnder).unwrap().value(), Some(true));
        assert!(label(&game(20, 20, 0.0, 40.0), Task::OverUnder).unwrap().push);
        assert!(label(&game(20, 20, 0.0, 40.0), Task::Winner).unwrap().push);
        let mut g = game(0, 0, 0.0, 1.0);
        g.home_score = None;
        assert!(matches!(label(&g, Task::Winner), Err(HarnessError::MissingScores(_))));
    }

    #[test]
    fn profitability_arithmetic() {
        let c = Commission::default();
        assert_eq!(c.breakeven(), 11.0 / 21.0);
        let even = profitability(11.0 / 21.0, 1000, c);
        assert_eq!(even.units, 0.0);
        assert!(!even.profitable);
        assert!((profitability(0.5, 200, c).units + 10.0).abs() < 1e-9);
        let p = profitability(0.553, 208, c);
        assert!(p.profitable);
        assert!((p.units - 208.0 * (0.553 - 1.1 * 0.447)).abs() < 1e-9);
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
        assert!("spread".parse::<Task>().is_err());
    }
}
