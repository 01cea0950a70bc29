use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::features::FeatureSetSpec;

use super::backtest::{Backtest, BacktestOptions, SetResult};
use super::protocol::Protocol;
use super::select::{selection_trajectory, SelectionWindow, Trajectory};
use super::{HarnessError, Task};

/// One row of the accuracy table: a feature set and its aggregate result on
/// each task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub spec: FeatureSetSpec,
    /// `(accuracy, non-push games, pushes)` per task.
    pub cells: BTreeMap<Task, (Option<f64>, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub protocol: Protocol,
    pub results: Vec<SetResult>,
    pub trajectories: Vec<Trajectory>,
}

/// Runs every spec on every task, then every selection strategy per task.
pub fn run_backtest(
    corpus: &Corpus,
    protocol: Protocol,
    specs: &[FeatureSetSpec],
    tasks: &[Task],
    windows: &[SelectionWindow],
    opts: BacktestOptions,
) -> Result<BacktestReport, HarnessError> {
    let backtest = Backtest::new(corpus, protocol, specs, opts)?;
    let results = backtest.run_all(specs, tasks)?;
    Ok(BacktestReport::new(backtest.protocol().clone(), results, windows))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"))
}

impl BacktestReport {
    pub fn new(protocol: Protocol, results: Vec<SetResult>, windows: &[SelectionWindow]) -> Self {
        let mut tasks: Vec<Task> = results.iter().map(|r| r.task).collect();
        tasks.sort();
        tasks.dedup();
        let trajectories = windows
            .iter()
            .flat_map(|&w| tasks.iter().map(move |&t| (w, t)))
            .map(|(w, t)| selection_trajectory(&results, t, w, protocol.history_week, *protocol.test_weeks.end()))
            .collect();
        Self { protocol, results, trajectories }
    }

    pub fn tasks(&self) -> Vec<Task> {
        let mut tasks: Vec<Task> = self.results.iter().map(|r| r.task).collect();
        tasks.sort();
        tasks.dedup();
        tasks
    }

    pub fn result(&self, spec: &FeatureSetSpec, task: Task) -> Option<&SetResult> {
        self.results.iter().find(|r| &r.spec == spec && r.task == task)
    }

    /// Rows in the order specs first appear in the results.
    pub fn table(&self) -> Vec<TableRow> {
        let mut rows: Vec<TableRow> = Vec::new();
        for r in &self.results {
            let i = match rows.iter().position(|row| row.spec == r.spec) {
                Some(i) => i,
                None => {
                    rows.push(TableRow { spec: r.spec.clone(), cells: BTreeMap::new() });
                    rows.len() - 1
                }
            };
            rows[i].cells.insert(r.task, (r.accuracy(), r.n_games(), r.pushes()));
        }
        rows
    }

    /// Feature sets by tasks: accuracy and scored games per task.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let tasks = self.tasks();
        let mut header = vec!["features".to_string()];
        for t in &tasks {
            header.push(t.name().to_string());
            header.push(format!("{}_n", t.name()));
        }
        writeln!(w, "{}", header.join("\t"))?;
        for row in self.table() {
            let mut cells = vec![row.spec.to_string()];
            for t in &tasks {
                let (acc, n, _) = row.cells.get(t).copied().unwrap_or((None, 0, 0));
                cells.push(fmt_opt(acc));
                cells.push(n.to_string());
            }
            writeln!(w, "{}", cells.join("\t"))?;
        }
        Ok(())
    }

    /// One line per fold, including the history week (marked untested).
    pub fn write_weekly<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "features\ttask\tweek\ttested\tn_games\tpushes\tcorrect\taccuracy\tpenalty\tlambda\tdev_accuracy"
        )?;
        for r in &self.results {
            for f in &r.folds {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.spec,
                    r.task,
                    f.week,
                    r.test_weeks.contains(&f.week),
                    f.n_games,
                    f.pushes,
                    f.correct,
                    fmt_opt(f.accuracy()),
                    f.penalty,
                    f.lambda,
                    fmt_opt(f.dev_accuracy),
                )?;
            }
        }
        Ok(())
    }

    /// Weekly choices of each selection strategy next to the hindsight set.
    pub fn write_trajectory<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "strategy\ttask\tweek\tchosen\tchanged\tn_games\tcorrect\taccuracy\thindsight\thindsight_accuracy"
        )?;
        for t in &self.trajectories {
            let hindsight = t.hindsight.as_ref().map_or_else(|| "-".to_string(), |h| h.to_string());
            for (s, h) in t.steps.iter().zip(t.hindsight_weeks.iter().map(Some).chain(std::iter::repeat(None))) {
                let acc = (s.n_games > 0).then(|| s.correct as f64 / s.n_games as f64);
                let h_acc = h.and_then(|&(_, n, c)| (n > 0).then(|| c as f64 / n as f64));
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    t.window,
                    t.task,
                    s.week,
                    s.chosen,
                    s.changed,
                    s.n_games,
                    s.correct,
                    fmt_opt(acc),
                    hindsight,
                    fmt_opt(h_acc),
                )?;
            }
            writeln!(
                w,
                "{}\t{}\ttotal\t-\t{}\t{}\t{}\t{}\t{}\t{}",
                t.window,
                t.task,
                t.switches(),
                t.n_games(),
                t.correct(),
                fmt_opt(t.accuracy()),
                hindsight,
                fmt_opt(t.hindsight_accuracy()),
            )?;
        }
        Ok(())
    }

    /// Every scored test-week prediction.
    pub fn write_predictions<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "features\ttask\tweek\tgame_id\tprobability\tpredicted\tactual")?;
        for r in &self.results {
            for f in r.tested() {
                for p in &f.predictions {
                    writeln!(
                        w,
                        "{}\t{}\t{}\t{}\t{:.6}\t{}\t{}",
                        r.spec,
                        r.task,
                        f.week,
                        p.game_id,
                        p.probability,
                        u8::from(p.predicted),
                        u8::from(p.actual)
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, self)
    }
}
