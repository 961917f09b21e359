//! Command-line front end. Exit codes: 0 success, 1 runtime error, 2 invalid
//! flags or configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::acceptance::{run_criterion, Fault, SuiteOptions, CRITERIA};
use crate::bounds::{family_report, Family};
use crate::error::{Error, Result};
use crate::instances::{derive_seed, load_instance, ClusteringGenerator, GeneratorSpec, Instance};
use crate::linkage::PruneObjective;
use crate::logreg::{approx_path_with, max_path_error, KnotAnchoring, PathOptions, Penalty, DEFAULT_DELTA_DROP};
use crate::numerics::{linspace, ols_slope};
use crate::online::{
    clustering_stream_discontinuities, estimate_dispersion, hedge_run, online_logreg_run, OnlineLogRegConfig,
    OnlineRun, ScanConfig,
};
use crate::output::{fmt_f64, json_string, write_csv, write_json, write_text, Header};
use crate::tune::{build_grid, convergence_report, erm_tune, holdout_value, GridSpec, LogRegSettings, Task, TuneConfig};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "DDTUNE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ddtune", version, about = "Data-driven hyperparameter tuning experiments")]
pub struct Cli {
    /// Master seed; overrides any seed in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files (default: $DDTUNE_OUT_DIR or the working directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic instances as JSON files.
    Gen(GenArgs),
    /// Grid or adaptive ERM over a batch of instances.
    TuneBatch(ConfigArgs),
    /// Exponentially weighted forecaster over an instance stream.
    TuneOnline(ConfigArgs),
    /// Pseudo-dimension bound for a cataloged family.
    Bounds(BoundsArgs),
    /// Window counts of utility discontinuities over a clustering stream.
    Dispersion(DispersionArgs),
    /// Approximate regularization path error against the exact solver.
    PathStudy(PathStudyArgs),
    /// Sup-gap between training and fresh means as the sample grows.
    Convergence(ConvergenceArgs),
    /// Run the acceptance criteria and write acceptance.csv.
    Acceptance(AcceptanceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GenTask {
    Clustering,
    Ssl,
    Logreg,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub task: GenTask,
    /// Points per clustering instance.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of metrics (clustering, ssl).
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Target clusters (clustering).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Distance cap.
    #[arg(long = "R", default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, value_enum, default_value = "uniform-smooth")]
    pub generator: ClusteringGenerator,
    #[arg(long)]
    pub n_labeled: Option<usize>,
    #[arg(long)]
    pub n_unlabeled: Option<usize>,
    /// Training rows (logreg).
    #[arg(long)]
    pub m: Option<usize>,
    /// Features (logreg).
    #[arg(long)]
    pub p: Option<usize>,
    /// Validation rows (logreg).
    #[arg(long)]
    pub m_val: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    /// Instances to write; file `i` uses seed `derive(seed, i)`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Main CSV output (default: a fixed name inside the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add one column per instance to the tune-batch table.
    #[arg(long)]
    pub per_instance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub family: Family,
    #[arg(long)]
    pub n: u64,
    #[arg(long = "L")]
    pub l: u64,
    /// Unlabeled points (family G; default n/2).
    #[arg(long)]
    pub unlabeled: Option<u64>,
    #[serde(skip)]
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct StreamShape {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long = "L", default_value_t = 1)]
    pub l: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long = "R", default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, value_enum, default_value = "uniform-smooth")]
    pub generator: ClusteringGenerator,
}

impl StreamShape {
    fn spec(&self) -> GeneratorSpec {
        GeneratorSpec::Clustering { n: self.n, l: self.l, k: self.k, r: self.r, generator: self.generator }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub shape: StreamShape,
    /// Rounds.
    #[arg(long, default_value_t = 500)]
    pub t: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.02, 0.04])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub lo: f64,
    #[arg(long, default_value_t = 4.0)]
    pub hi: f64,
    /// Scan points per round before bisection.
    #[arg(long, default_value_t = 2000)]
    pub resolution: usize,
    #[arg(long, value_enum, default_value = "hamming")]
    pub objective: PruneObjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyChoice {
    L1,
    L2,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct PathStudyArgs {
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 50)]
    pub m_val: usize,
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub penalty: PenaltyChoice,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.1, 0.05])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1.1)]
    pub lambda_max: f64,
    /// Dense evaluation grid size.
    #[arg(long, default_value_t = 1001)]
    pub grid_points: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA_DROP)]
    pub delta_drop: f64,
    /// Deliberate defect, for checking that the study detects it.
    #[arg(long, value_enum)]
    pub fault: Option<Fault>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub shape: StreamShape,
    #[arg(long, value_enum, default_value = "clustering-M1")]
    pub task: Task,
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 200, 800])]
    pub n_list: Vec<usize>,
    /// Fresh instances estimating the population mean.
    #[arg(long, default_value_t = 1000)]
    pub fresh: usize,
    /// Exponent magnitudes per sign (log-spaced on [0.05, 20]).
    #[arg(long, default_value_t = 50)]
    pub points_per_sign: usize,
    #[arg(long, value_enum, default_value = "hamming")]
    pub objective: PruneObjective,
}

#[derive(Debug, Args, Serialize)]
pub struct AcceptanceArgs {
    /// Criterion ids to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub criterion: Vec<usize>,
    #[arg(long, value_enum)]
    pub fault: Option<Fault>,
}

/// Where batch instances come from: a seeded generator or files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub files: Option<Vec<PathBuf>>,
}

impl DataSource {
    fn load(&self, field: &str, base: &Path, seed: u64) -> Result<Vec<Instance>> {
        match (&self.generator, &self.files) {
            (Some(g), None) => {
                let count = self.count.ok_or_else(|| Error::invalid(format!("{field}.count"), "required with a generator"))?;
                if count == 0 {
                    return Err(Error::invalid(format!("{field}.count"), "must be at least 1"));
                }
                g.sample(seed, count)
            }
            (None, Some(files)) => {
                if self.count.is_some() {
                    return Err(Error::invalid(format!("{field}.count"), "only valid with a generator"));
                }
                if files.is_empty() {
                    return Err(Error::invalid(format!("{field}.files"), "empty list"));
                }
                files.iter().map(|f| load_instance(base.join(f))).collect()
            }
            _ => Err(Error::invalid(field, "give exactly one of `generator` or `files`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneBatchConfig {
    pub tune: TuneConfig,
    pub train: DataSource,
    #[serde(default)]
    pub holdout: Option<DataSource>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneOnlineConfig {
    pub task: Task,
    pub generator: GeneratorSpec,
    /// Rounds.
    pub t: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub objective: PruneObjective,
    /// Settings for task `logreg` (its `t` and `eta` are taken from above).
    #[serde(default)]
    pub logreg: OnlineLogRegConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() { 2 } else { 1 }
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::invalid("--threads", "must be at least 1"));
        }
        // a second call in the same process keeps the first pool, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let seed = cli.seed;
    match cli.command {
        Command::Gen(a) => gen(&a, seed.unwrap_or(0), &out_dir),
        Command::TuneBatch(a) => tune_batch(&a, seed, &out_dir),
        Command::TuneOnline(a) => tune_online(&a, seed, &out_dir),
        Command::Bounds(a) => bounds(&a, seed.unwrap_or(0)),
        Command::Dispersion(a) => dispersion(&a, seed.unwrap_or(0), &out_dir),
        Command::PathStudy(a) => path_study(&a, seed.unwrap_or(0), &out_dir),
        Command::Convergence(a) => convergence(&a, seed.unwrap_or(0), &out_dir),
        Command::Acceptance(a) => acceptance(&a, seed.unwrap_or(0), &out_dir),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn required<T: Copy>(v: Option<T>, flag: &str, task: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(flag, format!("required for task {task}")))
}

fn gen_spec(a: &GenArgs) -> Result<GeneratorSpec> {
    Ok(match a.task {
        GenTask::Clustering => GeneratorSpec::Clustering {
            n: required(a.n, "--n", "clustering")?,
            l: required(a.l, "--L", "clustering")?,
            k: a.k,
            r: a.r,
            generator: a.generator,
        },
        GenTask::Ssl => GeneratorSpec::Ssl {
            n_labeled: required(a.n_labeled, "--n-labeled", "ssl")?,
            n_unlabeled: required(a.n_unlabeled, "--n-unlabeled", "ssl")?,
            l: required(a.l, "--L", "ssl")?,
            r: a.r,
        },
        GenTask::Logreg => GeneratorSpec::Logreg {
            m: required(a.m, "--m", "logreg")?,
            p: required(a.p, "--p", "logreg")?,
            m_val: required(a.m_val, "--m-val", "logreg")?,
            signal: a.signal,
        },
    })
}

fn gen(a: &GenArgs, seed: u64, out_dir: &Path) -> Result<i32> {
    let spec = gen_spec(a)?;
    if a.count == 0 {
        return Err(Error::invalid("--count", "must be at least 1"));
    }
    let header = Header::new(seed, &json!({ "command": "gen", "generator": spec, "count": a.count }))?;
    ensure_dir(out_dir)?;
    for i in 0..a.count {
        let inst = spec.generate(derive_seed(seed, i as u64))?;
        let mut doc = inst.to_json();
        doc["header"] = header.to_json();
        let path = out_dir.join(format!("instance_{i:04}.json"));
        write_text(&path, &(serde_json::to_string(&doc)? + "\n"))?;
        info!("wrote {}", path.display());
    }
    println!("{}", header.line());
    println!("wrote {} instance(s) to {}", a.count, out_dir.display());
    Ok(0)
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid("--config", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(format!("config {}", path.display()), e.to_string()))
}

#[derive(Serialize)]
struct BatchSummary<'a> {
    task: Task,
    mode: &'a str,
    best_param: &'a crate::param::ParamPoint,
    train_utility: f64,
    holdout_utility: Option<f64>,
    n_instances: usize,
    bound_report: &'a Option<crate::bounds::BoundReport>,
    notes: &'a [String],
}

fn tune_batch(a: &ConfigArgs, seed: Option<u64>, out_dir: &Path) -> Result<i32> {
    let mut cfg: TuneBatchConfig = read_config(&a.config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.tune.seed = cfg.seed;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let train = cfg.train.load("train", base, derive_seed(cfg.seed, 0))?;
    let holdout = match &cfg.holdout {
        Some(h) => Some(h.load("holdout", base, derive_seed(cfg.seed, 1))?),
        None => None,
    };
    let header = Header::new(cfg.seed, &cfg)?;
    let mut result = erm_tune(&train, &cfg.tune)?;
    if let Some(h) = &holdout {
        result.holdout_utility = Some(holdout_value(h, &cfg.tune, &result.best_param)?);
    }
    let first = &result.utility_table[0].param;
    let mut columns = first.coord_names();
    columns.push("mean_utility".into());
    columns.push("n_instances".into());
    if a.per_instance {
        columns.extend((0..train.len()).map(|i| format!("instance_{i}")));
    }
    let rows: Vec<Vec<String>> = result
        .utility_table
        .iter()
        .map(|r| {
            let mut row: Vec<String> = r.param.coords().into_iter().map(fmt_f64).collect();
            row.push(fmt_f64(r.mean));
            row.push(train.len().to_string());
            if a.per_instance {
                row.extend(r.per_instance.iter().map(|&v| fmt_f64(v)));
            }
            row
        })
        .collect();
    ensure_dir(out_dir)?;
    let csv_path = a.out.clone().unwrap_or_else(|| out_dir.join("tune_batch.csv"));
    write_csv(&csv_path, &header, &columns, &rows)?;
    let summary = BatchSummary {
        task: result.task,
        mode: &result.mode,
        best_param: &result.best_param,
        train_utility: result.train_utility,
        holdout_utility: result.holdout_utility,
        n_instances: result.n_instances,
        bound_report: &result.bound_report,
        notes: &result.notes,
    };
    write_json(&out_dir.join("tune_batch.json"), &header, &summary)?;
    print!("{}", json_string(&header, &summary)?);
    Ok(0)
}

fn trace_rows(run: &OnlineRun) -> Vec<Vec<String>> {
    (0..run.t)
        .map(|i| {
            vec![
                (i + 1).to_string(),
                fmt_f64(run.cum_utility[i]),
                fmt_f64(run.cum_best[i]),
                fmt_f64(run.regret[i]),
            ]
        })
        .collect()
}

fn tune_online(a: &ConfigArgs, seed: Option<u64>, out_dir: &Path) -> Result<i32> {
    let mut cfg: TuneOnlineConfig = read_config(&a.config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if cfg.t == 0 {
        return Err(Error::invalid("t", "must be at least 1"));
    }
    let header = Header::new(cfg.seed, &cfg)?;
    let (stream_seed, play_seed) = (derive_seed(cfg.seed, 0), derive_seed(cfg.seed, 1));
    let (run, summary) = if cfg.task == Task::Logreg {
        let mut lc = cfg.logreg.clone();
        lc.t = cfg.t;
        lc.eta = cfg.eta;
        let r = online_logreg_run(&cfg.generator, &lc, stream_seed, play_seed)?;
        let summary = json!({
            "task": cfg.task,
            "t": cfg.t,
            "eta": r.run.eta,
            "eps": r.eps,
            "r": r.r,
            "grid_size": r.grid.len(),
            "regret": r.run.final_regret(),
            "surrogate_regret": r.surrogate_regret,
            "best_lambda": r.grid[r.run.best_in_hindsight()],
            "audit_rounds": r.audit_rounds.len(),
            "audit_surrogate_regret": r.audit_surrogate_regret,
            "audit_true_regret": r.audit_true_regret,
            "max_audit_gap": r.max_gap(),
            "clipped": r.run.clipped,
        });
        (r.run, summary)
    } else {
        let l = match cfg.generator {
            GeneratorSpec::Clustering { l, .. } | GeneratorSpec::Ssl { l, .. } => l,
            GeneratorSpec::Logreg { .. } => {
                return Err(Error::invalid("generator.task", format!("task {} needs a clustering or ssl generator", cfg.task.label())))
            }
        };
        let mut tc = TuneConfig::new(cfg.task);
        tc.grid = cfg.grid.clone();
        tc.objective = cfg.objective;
        tc.seed = cfg.seed;
        let grid = build_grid(cfg.task, &cfg.grid, l, &LogRegSettings::default())?;
        let run = hedge_run(&cfg.generator, &tc, &grid, cfg.t, cfg.eta, stream_seed, play_seed)?;
        let summary = json!({
            "task": cfg.task,
            "t": cfg.t,
            "eta": run.eta,
            "grid_size": grid.len(),
            "regret": run.final_regret(),
            "regret_per_round": run.final_regret() / cfg.t as f64,
            "best_param": grid[run.best_in_hindsight()],
            "clipped": run.clipped,
        });
        (run, summary)
    };
    ensure_dir(out_dir)?;
    let columns: Vec<String> = ["t", "cum_utility", "cum_best", "regret"].map(String::from).to_vec();
    let csv_path = a.out.clone().unwrap_or_else(|| out_dir.join("regret_trace.csv"));
    write_csv(&csv_path, &header, &columns, &trace_rows(&run))?;
    write_json(&out_dir.join("tune_online.json"), &header, &summary)?;
    print!("{}", json_string(&header, &summary)?);
    Ok(0)
}

fn bounds(a: &BoundsArgs, seed: u64) -> Result<i32> {
    let report = family_report(a.family, a.n, a.l, a.unlabeled)?;
    let header = Header::new(seed, &json!({ "command": "bounds", "args": a }))?;
    match a.format {
        Format::Json => print!("{}", json_string(&header, &report)?),
        Format::Csv => {
            let tuple = report.inputs["tuple"].clone();
            let cols = ["family", "n", "L", "d", "q", "M", "Delta", "k_F", "k_G", "pdim_bound", "formula"];
            let t = |i: usize| tuple[i].as_str().unwrap_or_default().to_string();
            let row = vec![
                serde_json::to_value(a.family)?.as_str().unwrap_or_default().to_string(),
                a.n.to_string(),
                a.l.to_string(),
                t(5),
                t(3),
                t(2),
                t(4),
                t(0),
                t(1),
                fmt_f64(report.pdim_bound),
                report.formula_name.clone(),
            ];
            print!(
                "{}",
                crate::output::csv_string(&header, &cols.map(String::from), &[row])?
            );
        }
    }
    Ok(0)
}

fn dispersion(a: &DispersionArgs, seed: u64, out_dir: &Path) -> Result<i32> {
    if a.t == 0 {
        return Err(Error::invalid("--t", "must be at least 1"));
    }
    if a.resolution < 2 {
        return Err(Error::invalid("--resolution", "must be at least 2"));
    }
    let header = Header::new(seed, &json!({ "command": "dispersion", "args": a }))?;
    let scan = ScanConfig { lo: a.lo, hi: a.hi, resolution: a.resolution, objective: a.objective };
    let locations = clustering_stream_discontinuities(&a.shape.spec(), a.t, seed, &scan)?;
    let report = estimate_dispersion(locations, &a.eps, a.lo, a.hi)?;
    let rows: Vec<Vec<String>> = (0..report.eps_list.len())
        .map(|i| {
            vec![
                fmt_f64(report.eps_list[i]),
                report.max_counts[i].to_string(),
                fmt_f64(report.ratios[i]),
            ]
        })
        .collect();
    ensure_dir(out_dir)?;
    let columns = ["eps", "max_count", "ratio"].map(String::from).to_vec();
    write_csv(&out_dir.join("dispersion.csv"), &header, &columns, &rows)?;
    let summary = json!({
        "t": report.t,
        "lo": report.lo,
        "hi": report.hi,
        "eps": report.eps_list,
        "max_counts": report.max_counts,
        "ratios": report.ratios,
        "jumps": report.locations.iter().map(Vec::len).sum::<usize>(),
    });
    print!("{}", json_string(&header, &summary)?);
    Ok(0)
}

fn path_study(a: &PathStudyArgs, seed: u64, out_dir: &Path) -> Result<i32> {
    if a.grid_points < 2 {
        return Err(Error::invalid("--grid-points", "must be at least 2"));
    }
    if a.eps.is_empty() {
        return Err(Error::invalid("--eps", "need at least one value"));
    }
    let header = Header::new(seed, &json!({ "command": "path-study", "args": a }))?;
    let inst = crate::instances::gen_logreg(seed, a.m, a.p, a.m_val, a.signal)?;
    let grid = linspace(a.lambda_min, a.lambda_max, a.grid_points);
    let anchoring = match a.fault {
        Some(Fault::MisanchoredPath) => KnotAnchoring::Doubled,
        None => KnotAnchoring::Exact,
    };
    let penalties = match a.penalty {
        PenaltyChoice::L1 => vec![Penalty::L1],
        PenaltyChoice::L2 => vec![Penalty::L2],
        PenaltyChoice::Both => vec![Penalty::L2, Penalty::L1],
    };
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for pen in penalties {
        let errs = a
            .eps
            .iter()
            .map(|&eps| {
                let opts = PathOptions { delta_drop: a.delta_drop, anchoring };
                let path = approx_path_with(&inst, eps, a.lambda_min, a.lambda_max, pen, opts)?;
                max_path_error(&path, &inst, &grid)
            })
            .collect::<Result<Vec<f64>>>()?;
        for (&eps, &e) in a.eps.iter().zip(&errs) {
            rows.push(vec![pen.label().to_string(), fmt_f64(eps), fmt_f64(e)]);
        }
        let slope = (a.eps.len() >= 2 && errs.iter().all(|&e| e > 0.0)).then(|| {
            let lx: Vec<f64> = a.eps.iter().map(|e| e.ln()).collect();
            let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
            ols_slope(&lx, &ly)
        });
        fits.push(json!({ "penalty": pen, "max_errors": errs, "loglog_slope": slope }));
    }
    ensure_dir(out_dir)?;
    let columns = ["penalty", "eps", "max_error"].map(String::from).to_vec();
    write_csv(&out_dir.join("path_study.csv"), &header, &columns, &rows)?;
    print!("{}", json_string(&header, &json!({ "eps": a.eps, "fits": fits }))?);
    Ok(0)
}

fn convergence(a: &ConvergenceArgs, seed: u64, out_dir: &Path) -> Result<i32> {
    if !matches!(a.task, Task::ClusteringM1 | Task::ClusteringM2 | Task::ClusteringM3) {
        return Err(Error::invalid("--task", "convergence studies use a clustering task"));
    }
    if a.points_per_sign == 0 {
        return Err(Error::invalid("--points-per-sign", "must be at least 1"));
    }
    let header = Header::new(seed, &json!({ "command": "convergence", "args": a }))?;
    let mut tc = TuneConfig::new(a.task);
    tc.objective = a.objective;
    tc.grid.infinite_alpha = false;
    tc.grid.alpha = Some(crate::tune::Axis { lo: 0.05, hi: 20.0, points: a.points_per_sign, log: true });
    tc.seed = seed;
    let grid = build_grid(a.task, &tc.grid, a.shape.l, &tc.logreg)?;
    let report = convergence_report(&a.shape.spec(), &tc, &a.n_list, a.fresh, &grid, seed)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), fmt_f64(r.sup_gap), r.theory_gap.map(fmt_f64).unwrap_or_default()])
        .collect();
    ensure_dir(out_dir)?;
    let columns = ["n", "sup_gap", "theory_gap"].map(String::from).to_vec();
    write_csv(&out_dir.join("convergence.csv"), &header, &columns, &rows)?;
    print!("{}", json_string(&header, &report)?);
    Ok(0)
}

fn acceptance(a: &AcceptanceArgs, seed: u64, out_dir: &Path) -> Result<i32> {
    let ids: Vec<usize> = if a.criterion.is_empty() { (1..=CRITERIA.len()).collect() } else { a.criterion.clone() };
    if let Some(&bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA.len()) {
        return Err(Error::invalid("--criterion", format!("no criterion {bad}; ids run 1..={}", CRITERIA.len())));
    }
    let header = Header::new(seed, &json!({ "command": "acceptance", "args": a }))?;
    let opts = SuiteOptions { seed, fault: a.fault };
    println!("{}", header.line());
    let mut rows = Vec::new();
    let mut all = true;
    for id in ids {
        let r = run_criterion(id, opts)?;
        println!(
            "{} {:>2} {} | {} | {} | {:.2} s",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.measured,
            r.threshold,
            r.wall_time_s
        );
        all &= r.pass;
        rows.push(vec![
            r.id.to_string(),
            r.name,
            r.measured,
            r.threshold,
            r.pass.to_string(),
            format!("{:.3}", r.wall_time_s),
        ]);
    }
    ensure_dir(out_dir)?;
    let columns = ["id", "name", "measured", "threshold", "pass", "wall_time_s"].map(String::from).to_vec();
    write_csv(&out_dir.join("acceptance.csv"), &header, &columns, &rows)?;
    Ok(if all { 0 } else { 1 })
}
