use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::FeatureSetSpec;

use super::backtest::SetResult;
use super::Task;

/// Which earlier weeks a selection strategy averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionWindow {
    /// Weeks `k-2` and `k-1`.
    Last2,
    /// Weeks `first..=k-1`.
    All,
}

impl SelectionWindow {
    pub fn name(self) -> &'static str {
        match self {
            SelectionWindow::Last2 => "last2",
            SelectionWindow::All => "all",
        }
    }

    /// Weeks averaged when choosing for week `k`, given the first week with
    /// results.
    pub fn weeks(self, k: u8, first: u8) -> Vec<u8> {
        let start = match self {
            SelectionWindow::Last2 => k.saturating_sub(2).max(first),
            SelectionWindow::All => first,
        };
        (start..k).collect()
    }

    /// First week this strategy makes a choice for: the window must be full.
    pub fn first_week(self, first: u8) -> u8 {
        match self {
            SelectionWindow::Last2 => first + 2,
            SelectionWindow::All => first + 1,
        }
    }
}

impl fmt::Display for SelectionWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "last2" => Ok(SelectionWindow::Last2),
            "all" => Ok(SelectionWindow::All),
            _ => Err(format!("unknown selection window {s:?} (expected last2 or all)")),
        }
    }
}

/// Mean weekly accuracy of `result` over `weeks`, skipping weeks with no
/// scored games. `None` if no week counts.
fn mean_accuracy(result: &SetResult, weeks: &[u8]) -> Option<f64> {
    let accs: Vec<f64> = weeks.iter().filter_map(|&w| result.fold(w).and_then(|f| f.accuracy())).collect();
    (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
}

/// The candidate with the highest mean weekly accuracy over the window
/// before week `k`. Ties go to `previous` when it is among the best, then
/// to the lexicographically first spec string. `None` only without
/// candidates.
pub fn select_feature_set(
    k: u8,
    window: SelectionWindow,
    first: u8,
    candidates: &[&SetResult],
    previous: Option<&FeatureSetSpec>,
) -> Option<FeatureSetSpec> {
    let weeks = window.weeks(k, first);
    let scored: Vec<(&SetResult, f64)> =
        candidates.iter().map(|&c| (c, mean_accuracy(c, &weeks).unwrap_or(f64::NEG_INFINITY))).collect();
    let best = scored.iter().map(|&(_, a)| a).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<&SetResult> = scored.iter().filter(|&&(_, a)| a == best).map(|&(c, _)| c).collect();
    if let Some(prev) = previous {
        if tied.iter().any(|c| &c.spec == prev) {
            return Some(prev.clone());
        }
    }
    tied.iter().map(|c| c.spec.to_string()).min().and_then(|s| {
        tied.iter().find(|c| c.spec.to_string() == s).map(|c| c.spec.clone())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub week: u8,
    pub chosen: FeatureSetSpec,
    pub changed: bool,
    pub n_games: usize,
    pub correct: usize,
    /// Mean accuracy of the chosen set over the selection window.
    pub window_accuracy: Option<f64>,
}

/// A strategy's weekly choices and the games it got right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub window: SelectionWindow,
    pub task: Task,
    pub steps: Vec<SelectionStep>,
    /// Best single set over the test weeks, chosen in hindsight.
    pub hindsight: Option<FeatureSetSpec>,
    /// Weekly `(week, n_games, correct)` of the hindsight set over the
    /// strategy's weeks.
    pub hindsight_weeks: Vec<(u8, usize, usize)>,
}

impl Trajectory {
    pub fn n_games(&self) -> usize {
        self.steps.iter().map(|s| s.n_games).sum()
    }

    pub fn correct(&self) -> usize {
        self.steps.iter().map(|s| s.correct).sum()
    }

    pub fn accuracy(&self) -> Option<f64> {
        let n = self.n_games();
        (n > 0).then(|| self.correct() as f64 / n as f64)
    }

    pub fn switches(&self) -> usize {
        self.steps.iter().filter(|s| s.changed).count()
    }

    pub fn hindsight_accuracy(&self) -> Option<f64> {
        let n: usize = self.hindsight_weeks.iter().map(|w| w.1).sum();
        let c: usize = self.hindsight_weeks.iter().map(|w| w.2).sum();
        (n > 0).then(|| c as f64 / n as f64)
    }
}

/// Runs a selection strategy over the weeks `first_week(first)..=last` using
/// the per-week fold results of every candidate for `task`. `first` is the
/// earliest week with fold results (the history week).
pub fn selection_trajectory(
    results: &[SetResult],
    task: Task,
    window: SelectionWindow,
    first: u8,
    last: u8,
) -> Trajectory {
    let candidates: Vec<&SetResult> = results.iter().filter(|r| r.task == task).collect();
    let mut steps: Vec<SelectionStep> = Vec::new();
    let mut previous: Option<FeatureSetSpec> = None;
    for k in window.first_week(first)..=last {
        let Some(chosen) = select_feature_set(k, window, first, &candidates, previous.as_ref()) else { break };
        let result = candidates.iter().find(|c| c.spec == chosen).expect("chosen among candidates");
        let (n_games, correct) = result.fold(k).map_or((0, 0), |f| (f.n_games, f.correct));
        steps.push(SelectionStep {
            week: k,
            changed: previous.as_ref().is_some_and(|p| p != &chosen),
            window_accuracy: mean_accuracy(result, &window.weeks(k, first)),
            chosen: chosen.clone(),
            n_games,
            correct,
        });
        previous = Some(chosen);
    }

    let hindsight = candidates
        .iter()
        .filter_map(|c| c.accuracy().map(|a| (a, c)))
        .fold(None::<(f64, &&SetResult)>, |best, (a, c)| match best {
            Some((b, bc)) if b > a || (b == a && bc.spec.to_string() <= c.spec.to_string()) => Some((b, bc)),
            _ => Some((a, c)),
        })
        .map(|(_, c)| *c);
    let hindsight_weeks = match hindsight {
        Some(h) => steps
            .iter()
            .map(|s| {
                let (n, c) = h.fold(s.week).map_or((0, 0), |f| (f.n_games, f.correct));
                (s.week, n, c)
            })
            .collect(),
        None => Vec::new(),
    };
    Trajectory { window, task, steps, hindsight: hindsight.map(|h| h.spec.clone()), hindsight_weeks }
}
