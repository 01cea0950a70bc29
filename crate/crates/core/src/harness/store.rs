use std::collections::HashMap;

use crate::features::{FeatureContext, FeatureError, FeatureVector, Provenance};
use crate::sparse::CsrMatrix;

/// Precomputed feature rows for a set of scheduled games, with interned
/// column names. Rows are indexed by schedule position.
#[derive(Debug, Clone, Default)]
pub struct FeatureStore {
    names: Vec<String>,
    index: HashMap<String, u32>,
    rows: Vec<Option<Vec<(u32, f64)>>>,
    provenance: Vec<Option<Provenance>>,
}

impl FeatureStore {
    /// Computes features for `games` (schedule indices).
    pub fn build(ctx: &FeatureContext<'_>, games: &[usize]) -> Result<Self, FeatureError> {
        let n = ctx.corpus().schedule().len();
        let mut store = Self { rows: vec![None; n], provenance: vec![None; n], ..Self::default() };
        for gf in ctx.games(games)? {
            store.insert(gf.game, &gf.features, gf.provenance);
        }
        Ok(store)
    }

    /// Adds or replaces the row for schedule index `game`.
    pub fn insert(&mut self, game: usize, features: &FeatureVector, provenance: Provenance) {
        if game >= self.rows.len() {
            self.rows.resize(game + 1, None);
            self.provenance.resize(game + 1, None);
        }
        let mut row = Vec::with_capacity(features.len());
        for (name, v) in features.iter() {
            let id = match self.index.get(name) {
                Some(&id) => id,
                None => {
                    let id = u32::try_from(self.names.len()).expect("column count exceeds u32");
                    self.names.push(name.to_string());
                    self.index.insert(name.to_string(), id);
                    id
                }
            };
            row.push((id, v));
        }
        row.sort_unstable_by_key(|&(c, _)| c);
        self.rows[game] = Some(row);
        self.provenance[game] = Some(provenance);
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has(&self, game: usize) -> bool {
        self.rows.get(game).is_some_and(Option::is_some)
    }

    pub fn provenance(&self, game: usize) -> Option<&Provenance> {
        self.provenance.get(game).and_then(Option::as_ref)
    }

    pub fn features(&self, game: usize) -> Option<FeatureVector> {
        let row = self.rows.get(game)?.as_ref()?;
        let pairs: Vec<(String, f64)> = row.iter().map(|&(c, v)| (self.names[c as usize].clone(), v)).collect();
        Some(FeatureVector::try_from(pairs).expect("stored rows are valid"))
    }

    /// Column ids whose name satisfies `keep`, sorted by name so that
    /// matrices do not depend on the order games were inserted.
    pub fn columns(&self, mut keep: impl FnMut(&str) -> bool) -> Vec<usize> {
        let mut cols: Vec<usize> = (0..self.names.len()).filter(|&c| keep(&self.names[c])).collect();
        cols.sort_by(|&a, &b| self.names[a].cmp(&self.names[b]));
        cols
    }

    /// Rows for `games` restricted to `cols`, renumbered in the order of
    /// `cols`. Games without a row are an error.
    pub fn matrix(&self, games: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut map = vec![u32::MAX; self.names.len()];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new as u32;
        }
        let mut m = CsrMatrix::new(cols.len());
        for &g in games {
            let row = self.rows[g].as_ref().unwrap_or_else(|| panic!("no features stored for game {g}"));
            m.push_row(
                row.iter().filter(|&&(c, _)| map[c as usize] != u32::MAX).map(|&(c, v)| (map[c as usize], v)),
            );
        }
        m
    }
}
