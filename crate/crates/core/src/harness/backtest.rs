use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cca::{CcaError, CcaModel, DEFAULT_RIDGE};
use crate::corpus::{Corpus, Schedule, BLACKOUT_BEFORE_NEXT};
use crate::features::{is_stat_feature, is_unigram_feature, FeatureContext, FeatureSetSpec};
use crate::glm::{fit_path, Fit, GlmError, Penalty, TrainOptions, LAMBDA_GRID};
use crate::sparse::CsrMatrix;

use super::protocol::{FoldSpec, Protocol};
use super::store::FeatureStore;
use super::{label, HarnessError, Task};

/// Regularization settings tried on the dev set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub lambdas: Vec<f64>,
    pub penalties: Vec<Penalty>,
}

impl Default for Grid {
    fn default() -> Self {
        Self { lambdas: LAMBDA_GRID.to_vec(), penalties: vec![Penalty::L2, Penalty::L1] }
    }
}

impl Grid {
    /// Candidates in tie-breaking order: smaller λ first, L2 before L1.
    /// At λ = 0 both penalties give the same model, so L1 is dropped there
    /// when L2 is also present.
    pub fn candidates(&self) -> Vec<(Penalty, f64)> {
        let mut lambdas = self.lambdas.clone();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        let mut penalties = self.penalties.clone();
        penalties.sort();
        penalties.dedup();
        let mut out = Vec::new();
        for &l in &lambdas {
            for &p in &penalties {
                if l == 0.0 && p == Penalty::L1 && penalties.contains(&Penalty::L2) {
                    continue;
                }
                out.push((p, l));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BacktestOptions {
    pub grid: Grid,
    pub train: TrainOptions,
    pub cca_ridge: f64,
    /// Record which game results and tweets every fold read.
    pub audit: bool,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        Self { grid: Grid::default(), train: TrainOptions::default(), cca_ridge: DEFAULT_RIDGE, audit: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Phase {
    Train,
    Dev,
    Predict,
    Score,
}

/// Everything a fold read, by phase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessLog {
    /// Games whose final result was read, directly as a label or through a
    /// feature.
    pub results: BTreeMap<Phase, BTreeSet<usize>>,
    /// Games whose features read a tweet later than an hour before kickoff,
    /// with that tweet's timestamp.
    pub late_tweets: Vec<(usize, i64)>,
}

impl AccessLog {
    fn read_features(&mut self, phase: Phase, games: &[usize], store: &FeatureStore, schedule: &Schedule) {
        let set = self.results.entry(phase).or_default();
        for &g in games {
            let Some(p) = store.provenance(g) else { continue };
            set.extend(p.results.iter().copied());
            if let Some(t) = p.latest_tweet {
                if t > schedule.game(g).kickoff - BLACKOUT_BEFORE_NEXT {
                    self.late_tweets.push((g, t));
                }
            }
        }
    }

    fn read_labels(&mut self, phase: Phase, games: &[usize]) {
        self.results.entry(phase).or_default().extend(games.iter().copied());
    }

    pub fn read(&self, phase: Phase) -> impl Iterator<Item = usize> + '_ {
        self.results.get(&phase).into_iter().flatten().copied()
    }

    /// Reads that break the online protocol for the fold testing `week`:
    /// any result from week `week` or later of the test season outside
    /// scoring, any week-17 game used as a label, any scoring read outside
    /// the test week, and any late tweet.
    pub fn violations(&self, schedule: &Schedule, protocol: &Protocol, week: u8) -> Vec<String> {
        let mut out = Vec::new();
        for (&phase, games) in &self.results {
            for &g in games {
                let r = schedule.game(g);
                let future = r.season == protocol.test_season && r.week >= week;
                if phase != Phase::Score && future {
                    out.push(format!("{phase:?} read the result of {} (week {})", r.game_id, r.week));
                }
                if phase == Phase::Score && !(r.season == protocol.test_season && r.week == week) {
                    out.push(format!("scored {} outside test week {week}", r.game_id));
                }
                if r.week > protocol.last_week && matches!(phase, Phase::Train | Phase::Dev) {
                    out.push(format!("{phase:?} used {} from week {}", r.game_id, r.week));
                }
            }
        }
        for &(g, t) in &self.late_tweets {
            out.push(format!("features of {} read a tweet at {t}", schedule.game(g).game_id));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub game_id: String,
    pub probability: f64,
    pub predicted: bool,
    pub actual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub week: u8,
    /// Non-push test games.
    pub n_games: usize,
    pub pushes: usize,
    pub correct: usize,
    pub penalty: Penalty,
    pub lambda: f64,
    /// `None` when the dev set was empty.
    pub dev_accuracy: Option<f64>,
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub predictions: Vec<Prediction>,
    #[serde(skip)]
    pub audit: Option<AccessLog>,
}

impl FoldResult {
    pub fn accuracy(&self) -> Option<f64> {
        (self.n_games > 0).then(|| self.correct as f64 / self.n_games as f64)
    }
}

/// Every fold of one feature set on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetResult {
    pub spec: FeatureSetSpec,
    pub task: Task,
    /// Weeks counted in the aggregate; other folds only feed selection.
    pub test_weeks: Vec<u8>,
    pub folds: Vec<FoldResult>,
}

impl SetResult {
    pub fn fold(&self, week: u8) -> Option<&FoldResult> {
        self.folds.iter().find(|f| f.week == week)
    }

    pub fn tested(&self) -> impl Iterator<Item = &FoldResult> + '_ {
        self.folds.iter().filter(|f| self.test_weeks.contains(&f.week))
    }

    pub fn n_games(&self) -> usize {
        self.tested().map(|f| f.n_games).sum()
    }

    pub fn correct(&self) -> usize {
        self.tested().map(|f| f.correct).sum()
    }

    pub fn pushes(&self) -> usize {
        self.tested().map(|f| f.pushes).sum()
    }

    /// Correct over all non-push games in the test weeks.
    pub fn accuracy(&self) -> Option<f64> {
        let n = self.n_games();
        (n > 0).then(|| self.correct() as f64 / n as f64)
    }
}

/// Features, folds and cached CCA fits for running many feature sets over
/// one corpus under one protocol.
pub struct Backtest<'a> {
    corpus: &'a Corpus,
    protocol: Protocol,
    opts: BacktestOptions,
    store: FeatureStore,
    folds: BTreeMap<u8, FoldSpec>,
    cca_k: usize,
    cca: BTreeMap<u8, OnceLock<Result<CcaModel, CcaError>>>,
}

impl<'a> Backtest<'a> {
    /// Computes the features any of `specs` needs for every game the
    /// protocol can touch.
    pub fn new(
        corpus: &'a Corpus,
        protocol: Protocol,
        specs: &[FeatureSetSpec],
        opts: BacktestOptions,
    ) -> Result<Self, HarnessError> {
        let ctx = FeatureContext::for_specs(corpus, specs);
        let store = FeatureStore::build(&ctx, &protocol.games(corpus.schedule()))?;
        Self::with_store(corpus, protocol, store, specs, opts)
    }

    /// As [`Backtest::new`] with precomputed features.
    pub fn with_store(
        corpus: &'a Corpus,
        protocol: Protocol,
        store: FeatureStore,
        specs: &[FeatureSetSpec],
        opts: BacktestOptions,
    ) -> Result<Self, HarnessError> {
        let mut folds = BTreeMap::new();
        for week in protocol.fold_weeks() {
            folds.insert(week, protocol.fold(corpus.schedule(), week)?);
        }
        let cca_k = specs.iter().filter_map(FeatureSetSpec::cca_components).max().unwrap_or(0);
        let cca = folds.keys().map(|&w| (w, OnceLock::new())).collect();
        Ok(Self { corpus, protocol, opts, store, folds, cca_k, cca })
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn store(&self) -> &FeatureStore {
        &self.store
    }

    pub fn options(&self) -> &BacktestOptions {
        &self.opts
    }

    pub fn fold_spec(&self, week: u8) -> Option<&FoldSpec> {
        self.folds.get(&week)
    }

    /// The CCA fit on the training rows of `week`'s fold with as many
    /// components as any requested set uses.
    fn cca_model(&self, week: u8, fold: &FoldSpec) -> Result<&CcaModel, HarnessError> {
        let cell = &self.cca[&week];
        let res = cell.get_or_init(|| {
            let stat = self.store.columns(is_stat_feature);
            let uni = self.store.columns(is_unigram_feature);
            let v1 = self.store.matrix(&fold.train, &stat);
            let v2 = self.store.matrix(&fold.train, &uni);
            CcaModel::fit(&v1, &v2, self.cca_k.max(1), self.opts.cca_ridge)
        });
        res.as_ref().map_err(|e| HarnessError::Cca(e.clone()))
    }

    fn design(&self, spec: &FeatureSetSpec, week: u8, fold: &FoldSpec, games: &[usize]) -> Result<CsrMatrix, HarnessError> {
        let cols = self.store.columns(|n| spec.selects(n));
        let base = self.store.matrix(games, &cols);
        let Some(k) = spec.cca_components() else { return Ok(base) };
        let model = self.cca_model(week, fold)?;
        if k > model.k() {
            return Err(CcaError::TooManyComponents { k, max: model.k(), reason: format!("fold {week}") }.into());
        }
        let model = model.truncate(k);
        let v1 = self.store.matrix(games, &self.store.columns(is_stat_feature));
        let v2 = self.store.matrix(games, &self.store.columns(is_unigram_feature));
        Ok(base.hstack(&CsrMatrix::from_dense(&model.transform_matrix(&v1, &v2))))
    }

    fn labelled(&self, games: &[usize], task: Task) -> Result<(Vec<usize>, Vec<bool>, usize), HarnessError> {
        let schedule = self.corpus.schedule();
        let mut kept = Vec::with_capacity(games.len());
        let mut y = Vec::with_capacity(games.len());
        let mut pushes = 0;
        for &g in games {
            match label(schedule.game(g), task)?.value() {
                Some(v) => {
                    kept.push(g);
                    y.push(v);
                }
                None => pushes += 1,
            }
        }
        Ok((kept, y, pushes))
    }

    /// Tunes on the dev weeks, then predicts and scores week `week` with the
    /// tuned model trained on the training weeks only.
    pub fn run_fold(&self, spec: &FeatureSetSpec, task: Task, week: u8) -> Result<FoldResult, HarnessError> {
        let fold = self
            .folds
            .get(&week)
            .ok_or_else(|| HarnessError::Protocol(format!("no fold for week {week}")))?;
        let schedule = self.corpus.schedule();
        let mut log = self.opts.audit.then(AccessLog::default);

        let (train, y_train, _) = self.labelled(&fold.train, task)?;
        if let Some(log) = log.as_mut() {
            log.read_labels(Phase::Train, &train);
            log.read_features(Phase::Train, &fold.train, &self.store, schedule);
        }
        if train.is_empty() {
            return Err(HarnessError::Glm(GlmError::Empty));
        }
        let x_train = self.design(spec, week, fold, &train)?;
        let fits = self.fit_grid(&x_train, &y_train)?;

        let (dev, y_dev, _) = self.labelled(&fold.dev, task)?;
        if let Some(log) = log.as_mut() {
            log.read_labels(Phase::Dev, &dev);
            log.read_features(Phase::Dev, &dev, &self.store, schedule);
        }
        let (chosen, dev_accuracy) = if dev.is_empty() {
            warn!("{spec} {task} week {week}: empty dev set, using λ = 0 with L2");
            let i = fits.iter().position(|f| f.penalty == Penalty::L2 && f.lambda == 0.0).unwrap_or(0);
            (i, None)
        } else {
            let x_dev = self.design(spec, week, fold, &dev)?;
            let mut best = (0, -1.0);
            for (i, f) in fits.iter().enumerate() {
                let correct = (0..dev.len()).filter(|&r| f.predict_label(&x_dev, r) == y_dev[r]).count();
                let acc = correct as f64 / dev.len() as f64;
                if acc > best.1 {
                    best = (i, acc);
                }
            }
            (best.0, Some(best.1))
        };
        let model = &fits[chosen];

        if let Some(log) = log.as_mut() {
            log.read_features(Phase::Predict, &fold.test, &self.store, schedule);
        }
        let x_test = self.design(spec, week, fold, &fold.test)?;
        let probs: Vec<f64> = (0..fold.test.len()).map(|r| model.predict_prob(&x_test, r)).collect();
        let predicted: Vec<bool> = (0..fold.test.len()).map(|r| model.predict_label(&x_test, r)).collect();

        if let Some(log) = log.as_mut() {
            log.read_labels(Phase::Score, &fold.test);
        }
        let mut predictions = Vec::new();
        let mut pushes = 0;
        for (r, &g) in fold.test.iter().enumerate() {
            match label(schedule.game(g), task)?.value() {
                None => pushes += 1,
                Some(actual) => predictions.push(Prediction {
                    game_id: schedule.game(g).game_id.clone(),
                    probability: probs[r],
                    predicted: predicted[r],
                    actual,
                }),
            }
        }
        Ok(FoldResult {
            week,
            n_games: predictions.len(),
            pushes,
            correct: predictions.iter().filter(|p| p.predicted == p.actual).count(),
            penalty: model.penalty,
            lambda: model.lambda,
            dev_accuracy,
            intercept: model.intercept,
            weights: model.coef.clone(),
            predictions,
            audit: log,
        })
    }

    /// One fit per grid candidate, in candidate order.
    fn fit_grid(&self, x: &CsrMatrix, y: &[bool]) -> Result<Vec<Fit>, HarnessError> {
        let candidates = self.opts.grid.candidates();
        if candidates.is_empty() {
            return Err(HarnessError::Protocol("empty regularization grid".into()));
        }
        if let Some(&class) = y.first().filter(|_| y.iter().all(|&v| v == y[0])) {
            // the intercept alone separates the data; no finite optimum
            let intercept = if class { 1.0 } else { -1.0 };
            return Ok(candidates
                .iter()
                .map(|&(penalty, lambda)| Fit {
                    intercept,
                    coef: vec![0.0; x.n_cols()],
                    penalty,
                    lambda,
                    objective: f64::NAN,
                    iterations: 0,
                    converged: true,
                    trace: Vec::new(),
                })
                .collect());
        }
        let mut by_penalty: BTreeMap<Penalty, Vec<f64>> = BTreeMap::new();
        for &(p, l) in &candidates {
            by_penalty.entry(p).or_default().push(l);
        }
        let mut fitted: BTreeMap<(Penalty, u64), Fit> = BTreeMap::new();
        for (p, lambdas) in by_penalty {
            for res in fit_path(x, y, p, &lambdas, &self.opts.train) {
                let f = res?;
                if !f.converged {
                    log::debug!("{p} λ={} stopped after {} iterations", f.lambda, f.iterations);
                }
                fitted.insert((p, f.lambda.to_bits()), f);
            }
        }
        Ok(candidates.iter().map(|&(p, l)| fitted.remove(&(p, l.to_bits())).expect("every candidate fitted")).collect())
    }

    /// Every fold (history week included) of one set, in week order.
    pub fn run_set(&self, spec: &FeatureSetSpec, task: Task) -> Result<SetResult, HarnessError> {
        let weeks: Vec<u8> = self.folds.keys().copied().collect();
        let folds = weeks.par_iter().map(|&w| self.run_fold(spec, task, w)).collect::<Result<Vec<_>, _>>()?;
        Ok(SetResult {
            spec: spec.clone(),
            task,
            test_weeks: self.protocol.test_weeks.clone().collect(),
            folds,
        })
    }

    /// `run_set` for every `(spec, task)` pair, ordered by spec then task.
    pub fn run_all(&self, specs: &[FeatureSetSpec], tasks: &[Task]) -> Result<Vec<SetResult>, HarnessError> {
        let pairs: Vec<(&FeatureSetSpec, Task)> =
            specs.iter().flat_map(|s| tasks.iter().map(move |&t| (s, t))).collect();
        pairs.par_iter().map(|&(s, t)| self.run_set(s, t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_and_l1_zero_dropped() {
        let g = Grid { lambdas: vec![5.0, 0.0, 1.0], penalties: vec![Penalty::L1, Penalty::L2] };
        assert_eq!(
            g.candidates(),
            vec![(Penalty::L2, 0.0), (Penalty::L2, 1.0), (Penalty::L1, 1.0), (Penalty::L2, 5.0), (Penalty::L1, 5.0)]
        );
        let l1 = Grid { lambdas: vec![0.0], penalties: vec![Penalty::L1] };
        assert_eq!(l1.candidates(), vec![(Penalty::L1, 0.0)]);
        assert_eq!(Grid::default().candidates().len(), 19);
    }
}
