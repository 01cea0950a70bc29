use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{CorpusError, TeamId};

/// Team → hashtags map used to attribute tweets to teams.
///
/// Hashtags are stored lowercase, must start with `#`, and may belong to only
/// one team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<TeamId, Vec<String>>", into = "BTreeMap<TeamId, Vec<String>>")]
pub struct HashtagLexicon {
    teams: BTreeMap<TeamId, BTreeSet<String>>,
    owner: HashMap<String, TeamId>,
}

/// Outcome of matching a token list against the lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeamMatch<'a> {
    None,
    One(&'a TeamId),
    Many,
}

impl HashtagLexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (TeamId, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut teams: BTreeMap<TeamId, BTreeSet<String>> = BTreeMap::new();
        let mut owner: HashMap<String, TeamId> = HashMap::new();
        for (team, tags) in entries {
            let set = teams.entry(team.clone()).or_default();
            for tag in tags {
                let tag = tag.as_ref().trim().to_lowercase();
                if !tag.starts_with('#') || tag.len() < 2 {
                    return Err(CorpusError::Lexicon(format!(
                        "hashtag {tag:?} for team {team} must start with '#'"
                    )));
                }
                if let Some(prev) = owner.get(&tag) {
                    if prev != &team {
                        return Err(CorpusError::Lexicon(format!(
                            "hashtag {tag} is listed for both {prev} and {team}"
                        )));
                    }
                }
                owner.insert(tag.clone(), team.clone());
                set.insert(tag);
            }
        }
        Ok(Self { teams, owner })
    }

    pub fn teams(&self) -> impl Iterator<Item = &TeamId> {
        self.teams.keys()
    }

    pub fn hashtags(&self, team: &TeamId) -> Option<&BTreeSet<String>> {
        self.teams.get(team)
    }

    /// Owner of a hashtag; the lookup is case-insensitive.
    pub fn team_for(&self, hashtag: &str) -> Option<&TeamId> {
        if let Some(t) = self.owner.get(hashtag) {
            return Some(t);
        }
        self.owner.get(&hashtag.to_lowercase())
    }

    pub fn match_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> TeamMatch<'_> {
        let mut found: Option<&TeamId> = None;
        for token in tokens {
            let token = token.as_ref();
            if !token.starts_with('#') {
                continue;
            }
            if let Some(team) = self.team_for(token) {
                match found {
                    None => found = Some(team),
                    Some(t) if t == team => {}
                    Some(_) => return TeamMatch::Many,
                }
            }
        }
        found.map_or(TeamMatch::None, TeamMatch::One)
    }
}

impl TryFrom<BTreeMap<TeamId, Vec<String>>> for HashtagLexicon {
    type Error = CorpusError;

    fn try_from(map: BTreeMap<TeamId, Vec<String>>) -> Result<Self, Self::Error> {
        Self::new(map)
    }
}

impl From<HashtagLexicon> for BTreeMap<TeamId, Vec<String>> {
    fn from(lex: HashtagLexicon) -> Self {
        lex.teams
            .into_iter()
            .map(|(team, tags)| (team, tags.into_iter().collect()))
            .collect()
    }
}

/// Team assignment: the single team whose hashtags occur in `tokens`, or
/// `None` when zero or several teams match.
pub fn assign_team<'a, S: AsRef<str>>(tokens: &[S], lexicon: &'a HashtagLexicon) -> Option<&'a TeamId> {
    match lexicon.match_tokens(tokens) {
        TeamMatch::One(team) => Some(team),
        TeamMatch::None | TeamMatch::Many => None,
    }
}
