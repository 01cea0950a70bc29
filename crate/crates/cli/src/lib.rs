//! The `gridcast` command line.
//!
//! Every command writes into `--out`; each tabular output starts with a
//! `# gridcast <version> fingerprint <hex>` line and the directory gets a
//! `manifest.json` recording the configuration and input hashes. The
//! fingerprint covers the command, its flags and the contents of its inputs,
//! so reruns with the same inputs produce byte-identical outputs.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use gridcast::corpus::io::{self, LineIssue, Parsed};
use gridcast::corpus::{IngestOptions, Schedule};
use gridcast::features::{
    enumerate_feature_sets, statistical_feature_sets, twitter_feature_sets, FeatureContext,
};
use gridcast::glm::{Penalty, LAMBDA_GRID};
use gridcast::harness::{run_backtest, BacktestOptions, BacktestReport, Commission, Grid, SelectionWindow};
use gridcast::postgame::{evaluate_weeks, extract_lexicon, PostgameOptions, MIN_SUPPORT};
use gridcast::synthgen::{generate, SynthConfig};
use gridcast::{profitability, Corpus, CorpusError, FeatureSetSpec, HarnessError, Protocol, Task};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io(e) => CliError::Internal(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Internal(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "gridcast", version, about = "NFL outcome forecasting from game statistics and tweets")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assign tweets to teams, tag windows and freeze the corpus.
    Ingest(IngestArgs),
    /// Compute a feature set for every game.
    Featurize(FeaturizeArgs),
    /// Rolling online backtest of feature sets on the betting tasks.
    Backtest(BacktestArgs),
    /// Backtest with week-by-week feature-set selection.
    Select(BacktestArgs),
    /// Postgame win/loss classification and lexicon induction.
    Postgame(PostgameArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Re-render the tables of a saved backtest report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Corpus written by `ingest`; replaces the raw inputs.
    #[arg(long, conflicts_with_all = ["games", "tweets", "lexicon", "released"])]
    pub corpus: Option<PathBuf>,
    /// Games file (.csv, .tsv or .jsonl).
    #[arg(long)]
    pub games: Option<PathBuf>,
    /// Tweets as JSON lines.
    #[arg(long)]
    pub tweets: Option<PathBuf>,
    /// Team hashtag lexicon (JSON).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Released team/game/tweet-id lists; team attribution comes from here.
    #[arg(long, conflicts_with = "lexicon")]
    pub released: Option<PathBuf>,
    /// Fail on the first malformed line, duplicate id or missing text.
    #[arg(long)]
    pub strict: bool,
    /// Keep tweets the CJK filter would drop.
    #[arg(long)]
    pub keep_cjk: bool,
}

impl InputArgs {
    fn files(&self) -> Vec<&Path> {
        [&self.corpus, &self.games, &self.tweets, &self.lexicon, &self.released]
            .into_iter()
            .filter_map(|p| p.as_deref())
            .collect()
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Feature-set spec, e.g. `F3+F10+rateP(prev,0.1)`.
    #[arg(long)]
    pub features: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum TaskArg {
    Winner,
    Wts,
    Ou,
    All,
}

impl TaskArg {
    fn tasks(self) -> Vec<Task> {
        match self {
            TaskArg::Winner => vec![Task::Winner],
            TaskArg::Wts => vec![Task::Wts],
            TaskArg::Ou => vec![Task::OverUnder],
            TaskArg::All => Task::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SelectArg {
    None,
    Last2,
    All,
    Both,
}

impl SelectArg {
    fn windows(self) -> Vec<SelectionWindow> {
        match self {
            SelectArg::None => Vec::new(),
            SelectArg::Last2 => vec![SelectionWindow::Last2],
            SelectArg::All => vec![SelectionWindow::All],
            SelectArg::Both => vec![SelectionWindow::Last2, SelectionWindow::All],
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub task: TaskArg,
    /// Feature-set spec; repeatable. `all55` is the statistical sets,
    /// `twitter` the tweet-based sets, `all` both.
    #[arg(long = "features", default_value = "all")]
    pub features: Vec<String>,
    /// Feature-set selection strategy (`select` defaults to last2).
    #[arg(long, value_enum)]
    pub select: Option<SelectArg>,
    /// Test weeks as `A..B`, within 4..16.
    #[arg(long)]
    pub weeks: Option<String>,
    /// Comma-separated regularization grid.
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Penalties to tune over.
    #[arg(long, value_delimiter = ',', default_value = "l1,l2")]
    pub penalties: Vec<PenaltyArg>,
    /// Ridge added to the CCA covariance blocks.
    #[arg(long, default_value_t = gridcast::cca::DEFAULT_RIDGE)]
    pub cca_ridge: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum PenaltyArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PostgameArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Test weeks as `A..B`, within 4..16.
    #[arg(long)]
    pub weeks: Option<String>,
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Minimum tweets per week containing a token for it to be a feature.
    #[arg(long, default_value_t = MIN_SUPPORT)]
    pub min_support: usize,
    /// Permute labels with this seed (a null-model check).
    #[arg(long)]
    pub shuffle: Option<u64>,
    /// Entries per lexicon pane.
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// JSON generator config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub teams: Option<usize>,
    #[arg(long)]
    pub seasons: Option<u16>,
    /// Tweet signal strength in [0, 1].
    #[arg(long)]
    pub signal: Option<f64>,
    /// Market efficiency in [0, 1].
    #[arg(long)]
    pub efficiency: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// `report.json` written by `backtest`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `A..B` (or `A..=B`).
pub fn parse_weeks(s: &str) -> Result<RangeInclusive<u8>, CliError> {
    let bad = || CliError::Usage(format!("--weeks expects A..B, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: u8 = a.trim().parse().map_err(|_| bad())?;
    let b: u8 = b.trim().parse().map_err(|_| bad())?;
    Ok(a..=b)
}

pub fn parse_lambdas(s: &str) -> Result<Vec<f64>, CliError> {
    let out: Vec<f64> = s
        .split(',')
        .map(|v| match v.trim().parse::<f64>() {
            Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
            _ => Err(CliError::Usage(format!("bad λ {v:?} in --lambdas"))),
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(CliError::Usage("--lambdas is empty".into()));
    }
    Ok(out)
}

/// Expands the `--features` values into specs, keeping first occurrences.
pub fn parse_specs(values: &[String]) -> Result<Vec<FeatureSetSpec>, CliError> {
    let mut out: Vec<FeatureSetSpec> = Vec::new();
    for v in values {
        let batch = match v.as_str() {
            "all55" => statistical_feature_sets(),
            "twitter" => twitter_feature_sets(),
            "all" => enumerate_feature_sets(),
            s => vec![s.parse::<FeatureSetSpec>().map_err(|e| CliError::Usage(format!("--features {s:?}: {e}")))?],
        };
        for spec in batch {
            if !out.contains(&spec) {
                out.push(spec);
            }
        }
    }
    Ok(out)
}

fn report_issues<T>(path: &Path, parsed: Parsed<T>, strict: bool) -> Result<Vec<T>, CliError> {
    if strict {
        return Ok(parsed.strict(path)?);
    }
    for LineIssue { line, message } in &parsed.issues {
        warn!("{}:{line}: {message} (skipped)", path.display());
    }
    Ok(parsed.records)
}

/// Loads a saved corpus or builds one from the raw inputs.
pub fn load_input(input: &InputArgs) -> Result<Corpus, CliError> {
    if let Some(path) = &input.corpus {
        return Ok(io::load_corpus(path)?);
    }
    let games_path = input.games.as_ref().ok_or_else(|| CliError::Usage("need --corpus or --games".into()))?;
    let games = report_issues(games_path, io::read_games(games_path)?, input.strict)?;
    let schedule = Schedule::new(games)?;
    let tweets = match &input.tweets {
        Some(p) => report_issues(p, io::read_tweets(p)?, input.strict)?,
        None => Vec::new(),
    };
    let opts = IngestOptions { cjk_filter: !input.keep_cjk, strict: input.strict };
    if let Some(released) = &input.released {
        let entries = report_issues(released, io::read_released(released)?, input.strict)?;
        return Ok(Corpus::from_released(schedule, &entries, tweets, opts)?);
    }
    let lexicon = match &input.lexicon {
        Some(p) => io::read_lexicon(p)?,
        None if tweets.is_empty() => gridcast::HashtagLexicon::new(std::iter::empty::<(gridcast::TeamId, Vec<String>)>())?,
        None => return Err(CliError::Usage("--tweets needs --lexicon or --released".into())),
    };
    Ok(Corpus::build(schedule, tweets, &lexicon, opts)?)
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Output directory tagged with a configuration fingerprint.
pub struct Output {
    dir: PathBuf,
    fingerprint: String,
    manifest: serde_json::Value,
    written: Vec<String>,
}

impl Output {
    /// The fingerprint hashes `command`, the serialized flags (output
    /// directory excluded) and every input file's contents.
    pub fn new<C: Serialize>(command: &str, config: &C, inputs: &[&Path], dir: &Path) -> Result<Self, CliError> {
        let mut config = serde_json::to_value(config).map_err(|e| CliError::Internal(e.to_string()))?;
        if let Some(obj) = config.as_object_mut() {
            obj.remove("out");
        }
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\n");
        h.update(config.to_string().as_bytes());
        let mut hashes = Vec::new();
        for p in inputs {
            let d = sha256_file(p)?;
            h.update(b"\n");
            h.update(d.as_bytes());
            hashes.push(serde_json::json!({ "path": p.display().to_string(), "sha256": d }));
        }
        let fingerprint = hex::encode(&h.finalize()[..8]);
        std::fs::create_dir_all(dir).map_err(write_err(dir))?;
        let manifest = serde_json::json!({
            "tool": "gridcast",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "fingerprint": fingerprint,
            "config": config,
            "inputs": hashes,
        });
        Ok(Self { dir: dir.to_path_buf(), fingerprint, manifest, written: Vec::new() })
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    fn header(&self) -> String {
        format!("# gridcast {} fingerprint {}\n", env!("CARGO_PKG_VERSION"), self.fingerprint)
    }

    /// Writes a table behind the fingerprint line.
    pub fn table(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).map_err(write_err(&path))?);
        w.write_all(self.header().as_bytes()).map_err(write_err(&path))?;
        body(&mut w).map_err(write_err(&path))?;
        w.flush().map_err(write_err(&path))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes a JSON document carrying the fingerprint in a wrapper object.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let doc = serde_json::json!({ "fingerprint": self.fingerprint, "data": value });
        let mut w = BufWriter::new(File::create(&path).map_err(write_err(&path))?);
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::Internal(e.to_string()))?;
        writeln!(w).map_err(write_err(&path))?;
        w.flush().map_err(write_err(&path))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Records a file written by other means.
    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.manifest["outputs"] = serde_json::json!(self.written);
        let path = self.dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(&path, body + "\n").map_err(write_err(&path))?;
        Ok(self.dir)
    }
}

fn protocol_for(corpus: &Corpus, weeks: Option<&str>) -> Result<Protocol, CliError> {
    let protocol = Protocol::for_schedule(corpus.schedule())?;
    match weeks {
        Some(w) => protocol.with_test_weeks(parse_weeks(w)?).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(protocol),
    }
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<PathBuf, CliError> {
    let corpus = load_input(&args.input)?;
    let mut out = Output::new("ingest", args, &args.input.files(), &args.out)?;
    let path = args.out.join("corpus.json");
    io::save_corpus(&path, &corpus)?;
    out.record("corpus.json");
    let stats = corpus.stats();
    out.table("ingest.tsv", |w| {
        writeln!(w, "stage\ttweets")?;
        for (k, v) in [
            ("total", stats.total),
            ("cjk_dropped", stats.cjk_dropped),
            ("empty_dropped", stats.empty_dropped),
            ("duplicates", stats.duplicates),
            ("no_team", stats.no_team),
            ("multi_team", stats.multi_team),
            ("unscheduled", stats.unscheduled),
            ("assigned", stats.assigned),
        ] {
            writeln!(w, "{k}\t{v}")?;
        }
        Ok(())
    })?;
    let counts = corpus.season_counts();
    out.table("windows.tsv", |w| {
        writeln!(w, "season\tpregame\tpostgame\tweekly")?;
        for (season, c) in &counts {
            writeln!(w, "{season}\t{}\t{}\t{}", c.pregame, c.postgame, c.weekly)?;
        }
        Ok(())
    })?;
    info!("{} games, {} of {} tweets assigned", corpus.schedule().len(), stats.assigned, stats.total);
    out.finish()
}

pub fn cmd_featurize(args: &FeaturizeArgs) -> Result<PathBuf, CliError> {
    let spec: FeatureSetSpec =
        args.features.parse().map_err(|e| CliError::Usage(format!("--features {:?}: {e}", args.features)))?;
    let corpus = load_input(&args.input)?;
    if spec.cca_components().is_some() {
        warn!("CCA variates are fitted per backtest fold; writing the statistical and unigram inputs only");
    }
    let ctx = FeatureContext::for_specs(&corpus, std::slice::from_ref(&spec));
    let games: Vec<usize> = (0..corpus.schedule().len()).collect();
    let rows = ctx.games(&games).map_err(|e| CliError::Data(e.to_string()))?;
    let keep = |name: &str| {
        spec.selects(name)
            || (spec.cca_components().is_some()
                && (gridcast::features::is_stat_feature(name) || gridcast::features::is_unigram_feature(name)))
    };
    let mut out = Output::new("featurize", args, &args.input.files(), &args.out)?;
    let schedule = corpus.schedule();
    out.table("features.tsv", |w| {
        writeln!(w, "game_id\tseason\tweek\tfeature\tvalue")?;
        for gf in &rows {
            let g = schedule.game(gf.game);
            for (name, value) in gf.features.iter().filter(|(n, _)| keep(n)) {
                writeln!(w, "{}\t{}\t{}\t{name}\t{value}", g.game_id, g.season, g.week)?;
            }
        }
        Ok(())
    })?;
    out.finish()
}

fn write_report_tables(out: &mut Output, report: &BacktestReport) -> Result<(), CliError> {
    out.table("table.tsv", |w| report.write_table(w))?;
    out.table("weekly.tsv", |w| report.write_weekly(w))?;
    out.table("predictions.tsv", |w| report.write_predictions(w))?;
    if !report.trajectories.is_empty() {
        out.table("trajectory.tsv", |w| report.write_trajectory(w))?;
    }
    let commission = Commission::default();
    out.table("profitability.tsv", |w| {
        writeln!(w, "features\ttask\taccuracy\tn_games\tunits\tprofitable")?;
        for r in &report.results {
            if let Some(a) = r.accuracy() {
                let p = profitability(a, r.n_games(), commission);
                writeln!(w, "{}\t{}\t{a:.4}\t{}\t{:.2}\t{}", r.spec, r.task, r.n_games(), p.units, p.profitable)?;
            }
        }
        for t in &report.trajectories {
            if let Some(a) = t.accuracy() {
                let p = profitability(a, t.n_games(), commission);
                writeln!(w, "select:{}\t{}\t{a:.4}\t{}\t{:.2}\t{}", t.window, t.task, t.n_games(), p.units, p.profitable)?;
            }
        }
        Ok(())
    })?;
    Ok(())
}

pub fn cmd_backtest(args: &BacktestArgs, command: &str) -> Result<PathBuf, CliError> {
    let specs = parse_specs(&args.features)?;
    let select = args.select.unwrap_or(if command == "select" { SelectArg::Last2 } else { SelectArg::None });
    if command == "select" && select == SelectArg::None {
        return Err(CliError::Usage("select needs --select last2, all or both".into()));
    }
    let lambdas = match &args.lambdas {
        Some(s) => parse_lambdas(s)?,
        None => LAMBDA_GRID.to_vec(),
    };
    if args.penalties.is_empty() {
        return Err(CliError::Usage("--penalties is empty".into()));
    }
    let penalties =
        args.penalties.iter().map(|p| if *p == PenaltyArg::L1 { Penalty::L1 } else { Penalty::L2 }).collect();
    if !(args.cca_ridge.is_finite() && args.cca_ridge >= 0.0) {
        return Err(CliError::Usage(format!("--cca-ridge must be nonnegative, got {}", args.cca_ridge)));
    }
    let corpus = load_input(&args.input)?;
    let protocol = protocol_for(&corpus, args.weeks.as_deref())?;
    let opts = BacktestOptions {
        grid: Grid { lambdas, penalties },
        cca_ridge: args.cca_ridge,
        ..Default::default()
    };
    info!("{} feature sets, tasks {:?}, test season {}", specs.len(), args.task, protocol.test_season);
    let report = run_backtest(&corpus, protocol, &specs, &args.task.tasks(), &select.windows(), opts)?;
    let mut out = Output::new(command, args, &args.input.files(), &args.out)?;
    write_report_tables(&mut out, &report)?;
    out.json("report.json", &report)?;
    out.finish()
}

pub fn cmd_postgame(args: &PostgameArgs) -> Result<PathBuf, CliError> {
    let lambdas = match &args.lambdas {
        Some(s) => parse_lambdas(s)?,
        None => LAMBDA_GRID.to_vec(),
    };
    let corpus = load_input(&args.input)?;
    let protocol = protocol_for(&corpus, args.weeks.as_deref())?;
    let opts = PostgameOptions { min_support: args.min_support, lambdas, shuffle_labels: args.shuffle, ..Default::default() };
    let weeks: Vec<u8> = protocol.test_weeks.clone().collect();
    let report = evaluate_weeks(&corpus, &protocol, &weeks, &opts)?;
    if report.n_test() == 0 {
        return Err(CliError::Data("no postgame tweets in the test weeks".into()));
    }
    let mut out = Output::new("postgame", args, &args.input.files(), &args.out)?;
    out.table("postgame.tsv", |w| report.write_tsv(w))?;
    if let Some(model) = &report.model {
        let lexicon = extract_lexicon(model, args.top);
        out.table("lexicon.tsv", |w| lexicon.write_tsv(w))?;
        out.table("weights.tsv", |w| model.write_tsv(w))?;
    }
    out.json("postgame.json", &report.weeks)?;
    info!(
        "postgame accuracy {:.4} (mean of weeks) over {} tweets",
        report.mean_accuracy().unwrap_or(f64::NAN),
        report.n_test()
    );
    out.finish()
}

pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf, CliError> {
    let mut cfg = match &args.config {
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            serde_json::from_reader(f).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.teams {
        cfg.n_teams = v;
    }
    if let Some(v) = args.seasons {
        cfg.n_seasons = v;
    }
    if let Some(v) = args.signal {
        cfg.tweet_signal = v;
    }
    if let Some(v) = args.efficiency {
        cfg.market_efficiency = v;
    }
    let data = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let inputs: Vec<&Path> = args.config.iter().map(PathBuf::as_path).collect();
    let mut out = Output::new("synth", &cfg, &inputs, &args.out)?;
    data.write(&args.out)?;
    for name in ["games.csv", "tweets.jsonl", "lexicon.json"] {
        out.record(name);
    }
    out.json("synth_config.json", &cfg)?;
    out.finish()
}

pub fn cmd_report(args: &ReportArgs) -> Result<PathBuf, CliError> {
    let f = File::open(&args.input).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let doc: serde_json::Value =
        serde_json::from_reader(f).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let data = doc.get("data").cloned().unwrap_or(doc);
    let report: BacktestReport =
        serde_json::from_value(data).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let mut out = Output::new("report", args, &[args.input.as_path()], &args.out)?;
    write_report_tables(&mut out, &report)?;
    out.finish()
}

pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Backtest(a) => cmd_backtest(a, "backtest"),
        Command::Select(a) => cmd_backtest(a, "select"),
        Command::Postgame(a) => cmd_postgame(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
