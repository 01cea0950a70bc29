use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{CorpusError, GameRecord, TeamId};

/// Validated, indexed collection of games.
///
/// Games keep their input order; per-team game lists are sorted by kickoff.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<GameRecord>", into = "Vec<GameRecord>")]
pub struct Schedule {
    games: Vec<GameRecord>,
    by_id: HashMap<String, usize>,
    teams: Vec<TeamId>,
    team_index: HashMap<TeamId, usize>,
    team_games: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn new(games: Vec<GameRecord>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(games.len());
        let mut booked: HashSet<(&TeamId, u16, u8)> = HashSet::new();
        for (i, g) in games.iter().enumerate() {
            g.validate()?;
            if by_id.insert(g.game_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateGame(g.game_id.clone()));
            }
            for team in [&g.home_team, &g.away_team] {
                if !booked.insert((team, g.season, g.week)) {
                    return Err(CorpusError::DoubleBooked {
                        team: team.clone(),
                        season: g.season,
                        week: g.week,
                    });
                }
            }
        }
        let teams: Vec<TeamId> = games
            .iter()
            .flat_map(|g| [g.home_team.clone(), g.away_team.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let team_index: HashMap<TeamId, usize> =
            teams.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut team_games = vec![Vec::new(); teams.len()];
        for (i, g) in games.iter().enumerate() {
            team_games[team_index[&g.home_team]].push(i);
            team_games[team_index[&g.away_team]].push(i);
        }
        for list in &mut team_games {
            list.sort_by_key(|&i| (games[i].kickoff, games[i].season, games[i].week));
        }
        Ok(Self { games, by_id, teams, team_index, team_games })
    }

    pub fn games(&self) -> &[GameRecord] {
        &self.games
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn game(&self, idx: usize) -> &GameRecord {
        &self.games[idx]
    }

    pub fn index_of(&self, game_id: &str) -> Option<usize> {
        self.by_id.get(game_id).copied()
    }

    pub fn get(&self, game_id: &str) -> Option<&GameRecord> {
        self.index_of(game_id).map(|i| &self.games[i])
    }

    pub fn teams(&self) -> &[TeamId] {
        &self.teams
    }

    pub fn team_index(&self, team: &TeamId) -> Option<usize> {
        self.team_index.get(team).copied()
    }

    /// Games of a team ordered by kickoff, across all seasons.
    pub fn team_games(&self, team: usize) -> &[usize] {
        &self.team_games[team]
    }

    pub fn seasons(&self) -> BTreeSet<u16> {
        self.games.iter().map(|g| g.season).collect()
    }

    /// The team's games of the same season played in an earlier week.
    pub fn prior_games(&self, team: usize, game: usize) -> impl Iterator<Item = usize> + '_ {
        let target = &self.games[game];
        self.team_games[team]
            .iter()
            .copied()
            .filter(move |&i| {
                let g = &self.games[i];
                g.season == target.season && g.week < target.week
            })
    }

    /// The team's most recent game of the same season before `game`.
    pub fn previous_game(&self, team: usize, game: usize) -> Option<usize> {
        self.prior_games(team, game).max_by_key(|&i| self.games[i].week)
    }

    /// Latest game with kickoff `<= t` and earliest game with kickoff `> t`
    /// for the team, regardless of season.
    pub fn surrounding(&self, team: usize, t: i64) -> (Option<usize>, Option<usize>) {
        let list = &self.team_games[team];
        let split = list.partition_point(|&i| self.games[i].kickoff <= t);
        let prev = split.checked_sub(1).map(|j| list[j]);
        let next = list.get(split).copied();
        (prev, next)
    }
}

impl TryFrom<Vec<GameRecord>> for Schedule {
    type Error = CorpusError;

    fn try_from(games: Vec<GameRecord>) -> Result<Self, Self::Error> {
        Schedule::new(games)
    }
}

impl From<Schedule> for Vec<GameRecord> {
    fn from(s: Schedule) -> Self {
        s.games
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(id: &str, season: u16, week: u8, home: &str, away: &str) -> GameRecord {
        GameRecord {
            game_id: id.into(),
            season,
            week,
            home_team: home.into(),
            away_team: away.into(),
            kickoff: i64::from(season) * 10_000_000 + i64::from(week) * 604_800,
            home_score: Some(20),
            away_score: Some(17),
            spread: -3.0,
            ou_line: 41.0,
            home_interceptions_thrown: 0,
            home_fumbles_lost: 0,
            home_times_sacked: 0,
            away_interceptions_thrown: 0,
            away_fumbles_lost: 0,
            away_times_sacked: 0,
        }
    }

    #[test]
    fn rejects_double_booking() {
        let err = Schedule::new(vec![g("a", 2012, 1, "A", "B"), g("b", 2012, 1, "C", "A")]).unwrap_err();
        assert!(matches!(err, CorpusError::DoubleBooked { .. }));
    }

    #[test]
    fn rejects_duplicate_id() {
        let err = Schedule::new(vec![g("a", 2012, 1, "A", "B"), g("a", 2012, 2, "A", "B")]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateGame(_)));
    }

    #[test]
    fn previous_and_prior_stay_in_season() {
        let s = Schedule::new(vec![
            g("x", 2011, 16, "A", "B"),
            g("a", 2012, 1, "A", "B"),
            g("b", 2012, 3, "C", "A"), // bye in week 2
            g("c", 2012, 4, "A", "D"),
        ])
        .unwrap();
        let a = s.team_index(&"A".into()).unwrap();
        let c = s.index_of("c").unwrap();
        assert_eq!(s.previous_game(a, c), s.index_of("b"));
        assert_eq!(s.prior_games(a, c).count(), 2);
        assert_eq!(s.previous_game(a, s.index_of("a").unwrap()), None);
    }

    #[test]
    fn surrounding_splits_on_kickoff() {
        let s = Schedule::new(vec![g("a", 2012, 1, "A", "B"), g("b", 2012, 2, "A", "B")]).unwrap();
        let a = s.team_index(&"A".into()).unwrap();
        let k1 = s.game(0).kickoff;
        assert_eq!(s.surrounding(a, k1 - 1), (None, Some(0)));
        assert_eq!(s.surrounding(a, k1), (Some(0), Some(1)));
        assert_eq!(s.surrounding(a, s.game(1).kickoff + 5), (Some(1), None));
    }
}
