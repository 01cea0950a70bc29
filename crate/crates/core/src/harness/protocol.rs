use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::corpus::Schedule;

use super::HarnessError;

/// The rolling train/dev/test scheme.
///
/// For test week `k` of the test season: train on weeks `1..=last_week` of
/// every training season plus weeks `1..=k-3` of the test season, tune on
/// weeks `k-2` and `k-1`, test on week `k`. Weeks after `last_week` are
/// never used. Week `history_week` (before the first test week) is run as a
/// fold only to seed feature-set selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub test_season: u16,
    pub train_seasons: Vec<u16>,
    pub test_weeks: RangeInclusive<u8>,
    pub history_week: u8,
    pub last_week: u8,
    pub dev_weeks: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub week: u8,
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

impl Protocol {
    pub const FIRST_TEST_WEEK: u8 = 4;
    pub const LAST_WEEK: u8 = 16;

    /// Tests on the schedule's latest season and trains on all earlier ones.
    pub fn for_schedule(schedule: &Schedule) -> Result<Self, HarnessError> {
        let seasons = schedule.seasons();
        let test_season = *seasons.iter().next_back().ok_or_else(|| HarnessError::Protocol("empty schedule".into()))?;
        Ok(Self {
            test_season,
            train_seasons: seasons.into_iter().filter(|&s| s != test_season).collect(),
            test_weeks: Self::FIRST_TEST_WEEK..=Self::LAST_WEEK,
            history_week: Self::FIRST_TEST_WEEK - 1,
            last_week: Self::LAST_WEEK,
            dev_weeks: 2,
        })
    }

    /// Restricts testing to `weeks`, which must lie within the default range.
    pub fn with_test_weeks(mut self, weeks: RangeInclusive<u8>) -> Result<Self, HarnessError> {
        if weeks.is_empty() || *weeks.start() < Self::FIRST_TEST_WEEK || *weeks.end() > self.last_week {
            return Err(HarnessError::Protocol(format!(
                "test weeks {}..{} outside {}..{}",
                weeks.start(),
                weeks.end(),
                Self::FIRST_TEST_WEEK,
                self.last_week
            )));
        }
        self.test_weeks = weeks;
        Ok(self)
    }

    /// Weeks that get a fold: the history week followed by the test weeks.
    pub fn fold_weeks(&self) -> Vec<u8> {
        std::iter::once(self.history_week).chain(self.test_weeks.clone()).collect()
    }

    pub fn is_test_week(&self, week: u8) -> bool {
        self.test_weeks.contains(&week)
    }

    /// Games that any fold can read.
    pub fn games(&self, schedule: &Schedule) -> Vec<usize> {
        (0..schedule.len())
            .filter(|&i| {
                let g = schedule.game(i);
                g.week <= self.last_week && (g.season == self.test_season || self.train_seasons.contains(&g.season))
            })
            .collect()
    }

    pub fn fold(&self, schedule: &Schedule, week: u8) -> Result<FoldSpec, HarnessError> {
        if week < self.history_week || week > self.last_week {
            return Err(HarnessError::Protocol(format!(
                "week {week} outside {}..{}",
                self.history_week, self.last_week
            )));
        }
        let dev_start = week.saturating_sub(self.dev_weeks).max(1);
        let mut fold = FoldSpec { week, train: Vec::new(), dev: Vec::new(), test: Vec::new() };
        for i in self.games(schedule) {
            let g = schedule.game(i);
            if g.season == self.test_season {
                if g.week == week {
                    fold.test.push(i);
                } else if g.week >= dev_start && g.week < week {
                    fold.dev.push(i);
                } else if g.week < dev_start {
                    fold.train.push(i);
                }
            } else {
                fold.train.push(i);
            }
        }
        Ok(fold)
    }
}
