//! Classifies postgame tweets by whether the tweet's team won, and reads a
//! win/loss lexicon off the trained weights.
//!
//! Each postgame tweet is one instance. Its features are the tweet's tokens
//! conjoined with the team's role (`home.<token>`, `away.<token>`), kept only
//! for tokens that appear in at least `min_support` postgame tweets about
//! games of the same week.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, Side, Window};
use crate::glm::{fit_path, GlmError, ModelWeights, Penalty, TrainOptions, LAMBDA_GRID};
use crate::harness::{HarnessError, Protocol};
use crate::sparse::CsrMatrix;

pub const MIN_SUPPORT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostgameInstance {
    pub tweet_id: String,
    /// Schedule index of the game the tweet follows.
    pub game: usize,
    pub season: u16,
    pub week: u8,
    pub timestamp: i64,
    pub side: Side,
    /// The tweet's team won.
    pub label: bool,
    /// `<side>.<token>` identifiers, sorted and unique.
    pub features: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PostgameOptions {
    pub min_support: usize,
    pub lambdas: Vec<f64>,
    pub train: TrainOptions,
    /// Randomly permute labels across all instances with this seed.
    pub shuffle_labels: Option<u64>,
}

impl Default for PostgameOptions {
    fn default() -> Self {
        Self { min_support: MIN_SUPPORT, lambdas: LAMBDA_GRID.to_vec(), train: TrainOptions::default(), shuffle_labels: None }
    }
}

/// Every postgame tweet about a decided game, in corpus order. Ties are
/// skipped.
pub fn collect_instances(corpus: &Corpus, min_support: usize) -> Vec<PostgameInstance> {
    let schedule = corpus.schedule();
    let mut raw: Vec<(usize, Side, bool, &[u32], usize)> = Vec::new();
    for (i, t) in corpus.tweets().iter().enumerate() {
        if !t.windows.contains(Window::Postgame) {
            continue;
        }
        let Some(g) = t.prev_game.map(|g| g as usize) else { continue };
        let game = schedule.game(g);
        let team = &schedule.teams()[t.team as usize];
        let Some(side) = game.side_of(team) else { continue };
        let (Some(pf), Some(pa)) = (game.points_for(side), game.points_against(side)) else { continue };
        if pf == pa {
            continue;
        }
        raw.push((g, side, pf > pa, &t.tokens, i));
    }

    // tweet-presence counts per (season, week)
    let mut support: HashMap<(u16, u8), HashMap<u32, usize>> = HashMap::new();
    for &(g, _, _, tokens, _) in &raw {
        let game = schedule.game(g);
        let counts = support.entry((game.season, game.week)).or_default();
        for tok in tokens.iter().collect::<BTreeSet<_>>() {
            *counts.entry(*tok).or_insert(0) += 1;
        }
    }

    raw.into_iter()
        .map(|(g, side, label, tokens, i)| {
            let game = schedule.game(g);
            let counts = &support[&(game.season, game.week)];
            let features: BTreeSet<String> = tokens
                .iter()
                .filter(|tok| counts[tok] >= min_support)
                .map(|&tok| format!("{}.{}", side.name(), corpus.word(tok)))
                .collect();
            let t = corpus.tweet(i as u32);
            PostgameInstance {
                tweet_id: t.tweet_id.clone(),
                game: g,
                season: game.season,
                week: game.week,
                timestamp: t.timestamp,
                side,
                label,
                features: features.into_iter().collect(),
            }
        })
        .collect()
}

/// Permutes labels across instances.
pub fn shuffle_labels(instances: &mut [PostgameInstance], seed: u64) {
    let mut labels: Vec<bool> = instances.iter().map(|i| i.label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for (inst, l) in instances.iter_mut().zip(labels) {
        inst.label = l;
    }
}

/// Indices of the training and test instances for week `k` of the test
/// season: train is every earlier season plus test-season weeks before `k`,
/// test is week `k`.
pub fn split(instances: &[PostgameInstance], protocol: &Protocol, k: u8) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        if inst.season == protocol.test_season {
            if inst.week < k {
                train.push(i);
            } else if inst.week == k {
                test.push(i);
            }
        } else if protocol.train_seasons.contains(&inst.season) {
            train.push(i);
        }
    }
    (train, test)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostgameWeek {
    pub week: u8,
    pub n_train: usize,
    pub n_test: usize,
    pub correct: usize,
    pub lambda: f64,
    pub dev_accuracy: Option<f64>,
}

impl PostgameWeek {
    pub fn accuracy(&self) -> Option<f64> {
        (self.n_test > 0).then(|| self.correct as f64 / self.n_test as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostgameReport {
    pub weeks: Vec<PostgameWeek>,
    /// The model trained for the last evaluated week.
    pub model: Option<ModelWeights>,
}

impl PostgameReport {
    /// Mean of the weekly accuracies, over weeks with test tweets.
    pub fn mean_accuracy(&self) -> Option<f64> {
        let accs: Vec<f64> = self.weeks.iter().filter_map(PostgameWeek::accuracy).collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn n_test(&self) -> usize {
        self.weeks.iter().map(|w| w.n_test).sum()
    }

    pub fn pooled_accuracy(&self) -> Option<f64> {
        let n = self.n_test();
        (n > 0).then(|| self.weeks.iter().map(|w| w.correct).sum::<usize>() as f64 / n as f64)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "week\tn_train\tn_test\tcorrect\taccuracy\tlambda\tdev_accuracy")?;
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
        for wk in &self.weeks {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                wk.week,
                wk.n_train,
                wk.n_test,
                wk.correct,
                fmt(wk.accuracy()),
                wk.lambda,
                fmt(wk.dev_accuracy)
            )?;
        }
        writeln!(w, "mean\t-\t{}\t-\t{}\t-\t-", self.n_test(), fmt(self.mean_accuracy()))?;
        writeln!(w, "pooled\t-\t{}\t-\t{}\t-\t-", self.n_test(), fmt(self.pooled_accuracy()))
    }
}

struct Design {
    names: Vec<String>,
    x: CsrMatrix,
    y: Vec<bool>,
}

/// Design over `rows`, with columns for the features those rows use.
fn design(instances: &[PostgameInstance], rows: &[usize]) -> Design {
    let names: Vec<String> = rows
        .iter()
        .flat_map(|&i| instances[i].features.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, u32> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i as u32)).collect();
    let x = CsrMatrix::from_rows(
        names.len(),
        rows.iter().map(|&i| instances[i].features.iter().map(|f| (index[f.as_str()], 1.0)).collect::<Vec<_>>()),
    );
    let y = rows.iter().map(|&i| instances[i].label).collect();
    Design { names, x, y }
}

fn accuracy(model: &ModelWeights, instances: &[PostgameInstance], rows: &[usize]) -> (usize, usize) {
    let correct = rows
        .iter()
        .filter(|&&i| {
            let inst = &instances[i];
            let z = model.intercept + inst.features.iter().filter_map(|f| model.weights.get(f)).sum::<f64>();
            (z >= 0.0) == inst.label
        })
        .count();
    (correct, rows.len())
}

/// L2 fits for every λ, in the order given.
fn fit_all(d: &Design, lambdas: &[f64], opts: &TrainOptions) -> Result<Vec<ModelWeights>, GlmError> {
    if let Some(&class) = d.y.first().filter(|_| d.y.iter().all(|&v| v == d.y[0])) {
        return Ok(lambdas
            .iter()
            .map(|&l| {
                let mut m = ModelWeights::zero(d.names.iter().cloned());
                m.intercept = if class { 1.0 } else { -1.0 };
                m.lambda = l;
                m
            })
            .collect());
    }
    fit_path(&d.x, &d.y, Penalty::L2, lambdas, opts)
        .into_iter()
        .map(|r| r.map(|f| ModelWeights::from_fit(&d.names, &f)))
        .collect()
}

/// Trains and tests week `k`. λ is tuned with week `k-1` of the test season
/// as dev (smallest λ among the best), then the model is refit on all
/// training instances including that week.
pub fn evaluate_week(
    instances: &[PostgameInstance],
    protocol: &Protocol,
    k: u8,
    opts: &PostgameOptions,
) -> Result<(PostgameWeek, ModelWeights), HarnessError> {
    let (train, test) = split(instances, protocol, k);
    if train.is_empty() {
        return Err(GlmError::Empty.into());
    }
    let mut lambdas = opts.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.is_empty() {
        return Err(HarnessError::Protocol("empty regularization grid".into()));
    }
    let is_dev = |i: &usize| instances[*i].season == protocol.test_season && instances[*i].week + 1 == k;
    let dev: Vec<usize> = train.iter().copied().filter(is_dev).collect();
    let fit_rows: Vec<usize> = train.iter().copied().filter(|i| !is_dev(i)).collect();

    let (lambda, dev_accuracy) = if dev.is_empty() || fit_rows.is_empty() {
        (lambdas[0], None)
    } else {
        let models = fit_all(&design(instances, &fit_rows), &lambdas, &opts.train)?;
        let mut best = (lambdas[0], -1.0);
        for m in &models {
            let (c, n) = accuracy(m, instances, &dev);
            let acc = c as f64 / n as f64;
            if acc > best.1 {
                best = (m.lambda, acc);
            }
        }
        (best.0, Some(best.1))
    };
    let model = fit_all(&design(instances, &train), &[lambda], &opts.train)?.remove(0);
    let (correct, n_test) = accuracy(&model, instances, &test);
    Ok((PostgameWeek { week: k, n_train: train.len(), n_test, correct, lambda, dev_accuracy }, model))
}

/// Runs `weeks` independently and collects the weekly results.
pub fn evaluate_weeks(
    corpus: &Corpus,
    protocol: &Protocol,
    weeks: &[u8],
    opts: &PostgameOptions,
) -> Result<PostgameReport, HarnessError> {
    let mut instances = collect_instances(corpus, opts.min_support);
    if let Some(seed) = opts.shuffle_labels {
        shuffle_labels(&mut instances, seed);
    }
    let results =
        weeks.par_iter().map(|&k| evaluate_week(&instances, protocol, k, opts)).collect::<Result<Vec<_>, _>>()?;
    let model = results.last().map(|(_, m)| m.clone());
    Ok(PostgameReport { weeks: results.into_iter().map(|(w, _)| w).collect(), model })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconEntry {
    pub side: Side,
    pub token: String,
    pub weight: f64,
}

/// Features that most indicate a home win and an away win.
///
/// A home feature's weight points toward a home win; an away feature's
/// weight toward an away win. Each pane is ordered by strength, ties by
/// feature name.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Lexicon {
    pub home_won: Vec<LexiconEntry>,
    pub away_won: Vec<LexiconEntry>,
}

pub fn extract_lexicon(model: &ModelWeights, n: usize) -> Lexicon {
    let mut scored: Vec<(f64, &str, LexiconEntry)> = Vec::new();
    for (name, &w) in &model.weights {
        let (side, token) = match name.split_once('.') {
            Some(("home", t)) => (Side::Home, t),
            Some(("away", t)) => (Side::Away, t),
            _ => continue,
        };
        let score = if side == Side::Home { w } else { -w };
        scored.push((score, name, LexiconEntry { side, token: token.to_string(), weight: w }));
    }
    let pane = |positive: bool| -> Vec<LexiconEntry> {
        let mut v: Vec<&(f64, &str, LexiconEntry)> =
            scored.iter().filter(|(s, _, _)| if positive { *s > 0.0 } else { *s < 0.0 }).collect();
        v.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()).then_with(|| a.1.cmp(b.1)));
        v.into_iter().take(n).map(|(_, _, e)| e.clone()).collect()
    };
    Lexicon { home_won: pane(true), away_won: pane(false) }
}

impl Lexicon {
    /// Two panes side by side, one row per rank.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rank\thome_won\thome_won_weight\taway_won\taway_won_weight")?;
        let cell = |e: Option<&LexiconEntry>| {
            e.map_or_else(
                || ("-".to_string(), "-".to_string()),
                |e| (format!("{}.{}", e.side.name(), e.token), format!("{:.4}", e.weight)),
            )
        };
        for r in 0..self.home_won.len().max(self.away_won.len()) {
            let (h, hw) = cell(self.home_won.get(r));
            let (a, aw) = cell(self.away_won.get(r));
            writeln!(w, "{}\t{h}\t{hw}\t{a}\t{aw}", r + 1)?;
        }
        Ok(())
    }

    /// Tokens in each pane grouped by side: `(home_won, away_won)`.
    pub fn tokens(&self) -> (BTreeMap<Side, BTreeSet<&str>>, BTreeMap<Side, BTreeSet<&str>>) {
        fn group(pane: &[LexiconEntry]) -> BTreeMap<Side, BTreeSet<&str>> {
            let mut m: BTreeMap<Side, BTreeSet<&str>> = BTreeMap::new();
            for e in pane {
                m.entry(e.side).or_default().insert(&e.token);
            }
            m
        }
        (group(&self.home_won), group(&self.away_won))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, SynthConfig};

    fn corpus(signal: f64) -> Corpus {
        let cfg = SynthConfig {
            n_teams: 8,
            n_weeks: 8,
            tweet_signal: signal,
            volume_base: 2.0,
            volume_step: 1.0,
            postgame_volume: 12,
            ..Default::default()
        };
        generate(&cfg).unwrap().corpus().unwrap()
    }

    #[test]
    fn features_carry_side_and_meet_support() {
        let c = corpus(1.0);
        let inst = collect_instances(&c, MIN_SUPPORT);
        assert!(!inst.is_empty());
        let mut counts: HashMap<(u16, u8, String), usize> = HashMap::new();
        for i in &inst {
            assert!(i.features.iter().all(|f| f.starts_with(&format!("{}.", i.side.name()))));
            let toks: BTreeSet<&str> = i.features.iter().map(|f| f.split_once('.').unwrap().1).collect();
            for t in toks {
                *counts.entry((i.season, i.week, t.to_string())).or_default() += 1;
            }
        }
        assert!(counts.values().all(|&n| n >= MIN_SUPPORT));
        // a support threshold above every weekly count removes everything
        assert!(collect_instances(&c, 100_000).iter().all(|i| i.features.is_empty()));
    }

    #[test]
    fn split_is_temporally_disjoint() {
        let c = corpus(1.0);
        let inst = collect_instances(&c, MIN_SUPPORT);
        let p = Protocol::for_schedule(c.schedule()).unwrap();
        for k in 4..=8 {
            let (train, test) = split(&inst, &p, k);
            assert!(!test.is_empty());
            let last_train = train.iter().map(|&i| inst[i].timestamp).max().unwrap();
            let first_test = test.iter().map(|&i| inst[i].timestamp).min().unwrap();
            assert!(last_train < first_test);
        }
        let first = inst.iter().position(|i| i.season == 2010 && i.week == 1).unwrap();
        for k in 1..=8 {
            assert!(!split(&inst, &p, k).1.contains(&first));
        }
    }

    #[test]
    fn planted_lexicon_lands_in_the_right_panes() {
        let c = corpus(1.0);
        let p = Protocol::for_schedule(c.schedule()).unwrap();
        let report = evaluate_weeks(&c, &p, &[6, 7, 8], &PostgameOptions::default()).unwrap();
        assert!(report.mean_accuracy().unwrap() > 0.95);
        let lex = extract_lexicon(report.model.as_ref().unwrap(), 6);
        let (home_won, away_won) = lex.tokens();
        fn set<'a>(w: &[&'a str]) -> BTreeSet<&'a str> {
            w.iter().copied().collect()
        }
        assert_eq!(home_won[&Side::Home], set(&["great", "win", "won"]));
        assert_eq!(home_won[&Side::Away], set(&["bad", "loss", "refs"]));
        assert_eq!(away_won[&Side::Away], set(&["great", "win", "won"]));
        assert_eq!(away_won[&Side::Home], set(&["bad", "loss", "refs"]));
        assert!(extract_lexicon(report.model.as_ref().unwrap(), 0).home_won.is_empty());
    }

    #[test]
    fn lexicon_orientation_and_ties() {
        let mut m = ModelWeights::zero(Vec::<String>::new());
        for (k, v) in [("home.a", 1.0), ("home.b", 1.0), ("away.c", 2.0), ("away.d", -3.0), ("home.e", -0.5)] {
            m.weights.insert(k.to_string(), v);
        }
        let lex = extract_lexicon(&m, 10);
        let names = |p: &[LexiconEntry]| p.iter().map(|e| format!("{}.{}", e.side.name(), e.token)).collect::<Vec<_>>();
        assert_eq!(names(&lex.home_won), ["away.d", "home.a", "home.b"]);
        assert_eq!(names(&lex.away_won), ["away.c", "home.e"]);
        let mut out = Vec::new();
        lex.write_tsv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().nth(3).unwrap(), "3\thome.b\t1.0000\t-\t-");
    }
}
