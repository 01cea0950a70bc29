use std::fmt;

use serde::{Deserialize, Serialize};

pub const HOUR: i64 = 3600;

/// Weekly tweets start this long after the previous kickoff.
pub const WEEKLY_AFTER_PREV: i64 = 12 * HOUR;
/// All pre-game windows close this long before the upcoming kickoff.
pub const BLACKOUT_BEFORE_NEXT: i64 = HOUR;
pub const PREGAME_OPENS_BEFORE_NEXT: i64 = 24 * HOUR;
pub const POSTGAME_OPENS_AFTER_PREV: i64 = 4 * HOUR;
pub const POSTGAME_CLOSES_AFTER_PREV: i64 = 28 * HOUR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Weekly,
    Pregame,
    Postgame,
}

impl Window {
    pub const ALL: [Window; 3] = [Window::Weekly, Window::Pregame, Window::Postgame];

    fn bit(self) -> u8 {
        match self {
            Window::Weekly => 1,
            Window::Pregame => 2,
            Window::Postgame => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Weekly => "weekly",
            Window::Pregame => "pregame",
            Window::Postgame => "postgame",
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of window tags carried by one tweet. Empty means "none".
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WindowSet(u8);

impl WindowSet {
    pub const EMPTY: WindowSet = WindowSet(0);

    pub fn contains(self, w: Window) -> bool {
        self.0 & w.bit() != 0
    }

    pub fn insert(&mut self, w: Window) {
        self.0 |= w.bit();
    }

    pub fn union(self, other: WindowSet) -> WindowSet {
        WindowSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Window> {
        Window::ALL.into_iter().filter(move |w| self.contains(*w))
    }
}

impl FromIterator<Window> for WindowSet {
    fn from_iter<I: IntoIterator<Item = Window>>(iter: I) -> Self {
        let mut set = WindowSet::EMPTY;
        for w in iter {
            set.insert(w);
        }
        set
    }
}

impl fmt::Debug for WindowSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Window tags for a tweet at `t` given its team's previous and upcoming
/// kickoffs (epoch seconds). All interval ends are inclusive.
///
/// - weekly: `prev + 12h <= t` (or no previous game) and `t <= next - 1h`
/// - pregame: `next - 24h <= t <= next - 1h`
/// - postgame: `prev + 4h <= t <= prev + 28h`
pub fn tag_windows(t: i64, prev_kickoff: Option<i64>, next_kickoff: Option<i64>) -> WindowSet {
    let mut tags = WindowSet::EMPTY;
    if let Some(next) = next_kickoff {
        let closes = next - BLACKOUT_BEFORE_NEXT;
        let after_prev = prev_kickoff.map_or(true, |prev| t >= prev + WEEKLY_AFTER_PREV);
        if after_prev && t <= closes {
            tags.insert(Window::Weekly);
        }
        if t >= next - PREGAME_OPENS_BEFORE_NEXT && t <= closes {
            tags.insert(Window::Pregame);
        }
    }
    if let Some(prev) = prev_kickoff {
        if t >= prev + POSTGAME_OPENS_AFTER_PREV && t <= prev + POSTGAME_CLOSES_AFTER_PREV {
            tags.insert(Window::Postgame);
        }
    }
    tags
}
