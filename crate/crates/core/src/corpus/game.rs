use std::fmt;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Team identifier as it appears in the games and lexicon files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TeamId(pub String);

impl TeamId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for TeamId {
    fn from(s: &str) -> Self {
        TeamId(s.to_string())
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Home, Side::Away];

    pub fn name(self) -> &'static str {
        match self {
            Side::Home => "home",
            Side::Away => "away",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Turnover and sack counts for one team in one game.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxStats {
    pub interceptions_thrown: u32,
    pub fumbles_lost: u32,
    pub times_sacked: u32,
}

/// One regular-season game. The field layout is also the column layout of
/// the delimited games file.
///
/// `spread` is the home handicap: it is added to the home score before the
/// scores are compared. Scores are absent for games not yet played.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub season: u16,
    pub week: u8,
    pub home_team: TeamId,
    pub away_team: TeamId,
    pub kickoff: i64,
    pub home_score: Option<u32>,
    pub away_score: Option<u32>,
    pub spread: f64,
    pub ou_line: f64,
    #[serde(default)]
    pub home_interceptions_thrown: u32,
    #[serde(default)]
    pub home_fumbles_lost: u32,
    #[serde(default)]
    pub home_times_sacked: u32,
    #[serde(default)]
    pub away_interceptions_thrown: u32,
    #[serde(default)]
    pub away_fumbles_lost: u32,
    #[serde(default)]
    pub away_times_sacked: u32,
}

impl GameRecord {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |reason: &str| {
            Err(CorpusError::InvalidGame { game_id: self.game_id.clone(), reason: reason.to_string() })
        };
        if self.game_id.is_empty() {
            return bad("empty game_id");
        }
        if !(1..=17).contains(&self.week) {
            return bad("week outside 1..=17");
        }
        if self.home_team == self.away_team {
            return bad("home_team equals away_team");
        }
        if !self.spread.is_finite() {
            return bad("spread is not finite");
        }
        if !(self.ou_line.is_finite() && self.ou_line > 0.0) {
            return bad("ou_line must be positive");
        }
        if self.home_score.is_some() != self.away_score.is_some() {
            return bad("only one score present");
        }
        Ok(())
    }

    pub fn team(&self, side: Side) -> &TeamId {
        match side {
            Side::Home => &self.home_team,
            Side::Away => &self.away_team,
        }
    }

    pub fn side_of(&self, team: &TeamId) -> Option<Side> {
        if &self.home_team == team {
            Some(Side::Home)
        } else if &self.away_team == team {
            Some(Side::Away)
        } else {
            None
        }
    }

    pub fn is_played(&self) -> bool {
        self.home_score.is_some() && self.away_score.is_some()
    }

    /// Final score as `(home, away)`.
    pub fn scores(&self) -> Option<(u32, u32)> {
        Some((self.home_score?, self.away_score?))
    }

    pub fn points_for(&self, side: Side) -> Option<u32> {
        let (h, a) = self.scores()?;
        Some(match side {
            Side::Home => h,
            Side::Away => a,
        })
    }

    pub fn points_against(&self, side: Side) -> Option<u32> {
        self.points_for(side.other())
    }

    pub fn total_points(&self) -> Option<u32> {
        let (h, a) = self.scores()?;
        Some(h + a)
    }

    /// Spread from `side`'s point of view.
    pub fn spread_for(&self, side: Side) -> f64 {
        match side {
            Side::Home => self.spread,
            Side::Away => -self.spread,
        }
    }

    /// `home_score + spread - away_score`, signed for `side`. Positive means
    /// `side` won with the spread.
    pub fn cover_margin(&self, side: Side) -> Option<f64> {
        let (h, a) = self.scores()?;
        let home = f64::from(h) + self.spread - f64::from(a);
        Some(match side {
            Side::Home => home,
            Side::Away => -home,
        })
    }

    pub fn box_stats(&self, side: Side) -> BoxStats {
        match side {
            Side::Home => BoxStats {
                interceptions_thrown: self.home_interceptions_thrown,
                fumbles_lost: self.home_fumbles_lost,
                times_sacked: self.home_times_sacked,
            },
            Side::Away => BoxStats {
                interceptions_thrown: self.away_interceptions_thrown,
                fumbles_lost: self.away_fumbles_lost,
                times_sacked: self.away_times_sacked,
            },
        }
    }

    pub fn set_box_stats(&mut self, side: Side, stats: BoxStats) {
        match side {
            Side::Home => {
                self.home_interceptions_thrown = stats.interceptions_thrown;
                self.home_fumbles_lost = stats.fumbles_lost;
                self.home_times_sacked = stats.times_sacked;
            }
            Side::Away => {
                self.away_interceptions_thrown = stats.interceptions_thrown;
                self.away_fumbles_lost = stats.fumbles_lost;
                self.away_times_sacked = stats.times_sacked;
            }
        }
    }
}
