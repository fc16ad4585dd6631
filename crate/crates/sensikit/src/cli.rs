//! Command-line front end: resolve a run config from flags, a JSON config
//! file and the `SENSIKIT_SEED` environment variable, execute it, and emit
//! CSV artifacts plus a JSON run manifest.
//!
//! Precedence: flags override config-file values; the seed falls back from
//! `--seed` to the file to `SENSIKIT_SEED` to 0. The fully resolved config
//! is echoed into the manifest, so any run can be repeated from its
//! manifest alone. CSV floats are printed with 17 significant digits
//! (round-trip precision), making outputs byte-identical across reruns and
//! thread counts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::core::{ExperimentConfig, FactorGroup, IndexKind, StrategyChoice};
use crate::error::{Error, Result};
use crate::harness::{
    self, empirical_stats, run_replicates, shift_experiment, variance_comparison, ReplicateTable,
};
use crate::sampling::{build_design, SampleMatrix, SamplerKind};
use crate::testfuncs::ModelSpec;

#[derive(Parser, Debug)]
#[command(
    name = "sensikit",
    version,
    about = "Variance-based (Sobol') sensitivity indices via pick-freeze Monte Carlo"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One estimation run: per-group first/total indices with plug-in variances.
    Estimate(EstimateArgs),
    /// Replicated estimation: per-replicate rows plus mean/variance summary.
    Replicate(ReplicateArgs),
    /// Budget-matched variance comparison of the two strategies.
    VarianceCompare(VarianceCompareArgs),
    /// Closed-form reference indices for a registered model.
    Analytic(AnalyticArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON config file mirroring these flags; flags override file values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Model name: ishigami | gfunction | additive.
    #[arg(long)]
    pub model: Option<String>,
    /// Model parameters, e.g. "f0=100" or "coeffs=1,0" or "a=-1.13,-1.24".
    #[arg(long)]
    pub params: Option<String>,
    /// Master seed. Falls back to the config file, then $SENSIKIT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampler: mc | lhs (default lhs).
    #[arg(long)]
    pub sampler: Option<String>,
    /// Output directory, created if missing (default ".").
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Cap worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Strategy: current | ia | both (default both).
    #[arg(long)]
    pub strategy: Option<String>,
    /// Base sample size N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Semicolon-separated groups of comma-separated 0-based factor
    /// indices, e.g. "0;1;2" or "0,2;1". Default: one singleton per factor.
    #[arg(long)]
    pub groups: Option<String>,
    /// Clamp reported estimates into [0,1].
    #[arg(long)]
    pub clamp: bool,
    /// Also write the base sample matrices to design.csv.
    #[arg(long)]
    pub dump_design: bool,
}

#[derive(Args, Debug)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Strategy: current | ia | both (default both).
    #[arg(long)]
    pub strategy: Option<String>,
    /// Base sample size N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Semicolon-separated groups of comma-separated 0-based factor indices.
    #[arg(long)]
    pub groups: Option<String>,
    /// Clamp reported estimates into [0,1].
    #[arg(long)]
    pub clamp: bool,
    /// Number of independent replicates (default 100).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Run the current strategy at 2N so both strategies spend comparable
    /// model-call budgets.
    #[arg(long)]
    pub budget_matched: bool,
    /// Constant offset for the ishigami model (shorthand for params f0).
    #[arg(long)]
    pub f0: Option<f64>,
    /// Comma-separated offsets: run the shift experiment against the first
    /// offset and write shift.csv.
    #[arg(long, value_delimiter = ',')]
    pub f0_offsets: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct VarianceCompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Base sample size N (default 16384).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of independent replicates (default 100).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Run the current strategy at 2N for a fair comparison.
    #[arg(long)]
    pub budget_matched: bool,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Everything a run needs, after merging flags, file and environment.
/// Serialized as-is into the manifest; feeding it back through `--config`
/// reproduces the run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub params: Option<BTreeMap<String, ParamValue>>,
    pub strategy: Option<String>,
    pub sampler: Option<String>,
    pub n: Option<usize>,
    /// Groups as lists of 0-based factor indices.
    pub groups: Option<Vec<Vec<usize>>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub budget_matched: Option<bool>,
    pub clamp: Option<bool>,
    pub f0: Option<f64>,
    pub f0_offsets: Option<Vec<f64>>,
    pub threads: Option<usize>,
}

/// A model parameter: scalar or list of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

impl ParamValue {
    fn values(&self) -> Vec<f64> {
        match self {
            ParamValue::Scalar(x) => vec![*x],
            ParamValue::List(xs) => xs.clone(),
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Replicate(args) => cmd_replicate(args),
        Command::VarianceCompare(args) => cmd_variance_compare(args),
        Command::Analytic(args) => cmd_analytic(args),
    }
}

// ---------------------------------------------------------------------------
// Config resolution
// ---------------------------------------------------------------------------

struct Resolved {
    experiment: ExperimentConfig,
    out_dir: PathBuf,
    threads: Option<usize>,
    f0_offsets: Option<Vec<f64>>,
    echo: FileConfig,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(FileConfig::default()),
    }
}

fn parse_flag_params(s: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut map: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for token in s.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let parse = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("cannot parse '{v}' as a number")))
        };
        if let Some((key, value)) = token.split_once('=') {
            let key = key.trim().to_string();
            map.insert(key.clone(), vec![parse(value)?]);
            current = Some(key);
        } else if let Some(key) = &current {
            map.get_mut(key).expect("current key exists").push(parse(token)?);
        } else {
            return Err(Error::InvalidConfig(format!(
                "parameter token '{token}' has no key; expected key=value"
            )));
        }
    }
    Ok(map)
}

fn parse_groups(s: &str) -> Result<Vec<FactorGroup>> {
    s.split(';')
        .map(|part| {
            let members = part
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidConfig(format!("cannot parse group index '{tok}'"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            FactorGroup::new(members)
        })
        .collect()
}

fn model_spec_from(name: &str, params: &BTreeMap<String, Vec<f64>>) -> Result<ModelSpec> {
    let scalar = |key: &str, default: f64| -> Result<f64> {
        match params.get(key) {
            None => Ok(default),
            Some(values) if values.len() == 1 => Ok(values[0]),
            Some(values) => Err(Error::InvalidConfig(format!(
                "parameter '{key}' expects one value, got {}",
                values.len()
            ))),
        }
    };
    let reject_unknown = |known: &[&str]| -> Result<()> {
        for key in params.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "unknown parameter '{key}' for model '{name}'"
                )));
            }
        }
        Ok(())
    };
    match name {
        "ishigami" => {
            reject_unknown(&["f0", "a", "b"])?;
            Ok(ModelSpec::Ishigami {
                f0: scalar("f0", 0.0)?,
                a: scalar("a", 7.0)?,
                b: scalar("b", 0.1)?,
            })
        }
        "gfunction" => {
            reject_unknown(&["a"])?;
            Ok(match params.get("a") {
                Some(a) => ModelSpec::GFunction { a: a.clone() },
                None => ModelSpec::default_gfunction(),
            })
        }
        "additive" => {
            reject_unknown(&["coeffs"])?;
            let coeffs = params
                .get("coeffs")
                .ok_or_else(|| {
                    Error::InvalidConfig("additive model requires params coeffs=...".into())
                })?
                .clone();
            Ok(ModelSpec::Additive { coeffs })
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown model '{other}' (expected ishigami, gfunction or additive)"
        ))),
    }
}

fn model_params_echo(spec: &ModelSpec) -> BTreeMap<String, ParamValue> {
    let mut map = BTreeMap::new();
    match spec {
        ModelSpec::Ishigami { f0, a, b } => {
            map.insert("f0".into(), ParamValue::Scalar(*f0));
            map.insert("a".into(), ParamValue::Scalar(*a));
            map.insert("b".into(), ParamValue::Scalar(*b));
        }
        ModelSpec::GFunction { a } => {
            map.insert("a".into(), ParamValue::List(a.clone()));
        }
        ModelSpec::Additive { coeffs } => {
            map.insert("coeffs".into(), ParamValue::List(coeffs.clone()));
        }
    }
    map
}

struct CommandOverrides<'a> {
    strategy: Option<&'a str>,
    n: Option<usize>,
    groups: Option<&'a str>,
    clamp: bool,
    replicates: Option<usize>,
    budget_matched: bool,
    f0: Option<f64>,
    f0_offsets: Option<Vec<f64>>,
    default_strategy: StrategyChoice,
    default_n: usize,
    default_replicates: usize,
    default_model: Option<&'a str>,
}

impl Default for CommandOverrides<'_> {
    fn default() -> Self {
        Self {
            strategy: None,
            n: None,
            groups: None,
            clamp: false,
            replicates: None,
            budget_matched: false,
            f0: None,
            f0_offsets: None,
            default_strategy: StrategyChoice::Both,
            default_n: 1024,
            default_replicates: 100,
            default_model: None,
        }
    }
}

fn resolve(common: &CommonArgs, cmd: CommandOverrides) -> Result<Resolved> {
    let file = load_file_config(common.config.as_deref())?;

    // Model name and parameters (per-key merge, flags win).
    let model_name = common
        .model
        .clone()
        .or(file.model.clone())
        .or_else(|| cmd.default_model.map(str::to_string))
        .ok_or_else(|| Error::InvalidConfig("missing --model (or config model)".into()))?;
    let mut params: BTreeMap<String, Vec<f64>> = file
        .params
        .clone()
        .unwrap_or_default()
        .into_iter()
        .map(|(k, v)| (k, v.values()))
        .collect();
    if let Some(flag_params) = &common.params {
        for (key, values) in parse_flag_params(flag_params)? {
            params.insert(key, values);
        }
    }
    if let Some(f0) = cmd.f0.or(file.f0) {
        if model_name != "ishigami" {
            return Err(Error::InvalidConfig(format!(
                "--f0 applies to the ishigami model, not '{model_name}'"
            )));
        }
        params.insert("f0".into(), vec![f0]);
    }
    let model = model_spec_from(&model_name, &params)?;

    let strategy: StrategyChoice = match cmd.strategy.map(str::to_string).or(file.strategy.clone())
    {
        Some(s) => s.parse()?,
        None => cmd.default_strategy,
    };
    let sampler: SamplerKind = match common.sampler.clone().or(file.sampler.clone()) {
        Some(s) => s.parse()?,
        None => SamplerKind::Lhs,
    };
    let n = cmd.n.or(file.n).unwrap_or(cmd.default_n);
    let replicates = cmd
        .replicates
        .or(file.replicates)
        .unwrap_or(cmd.default_replicates);
    let groups = match cmd.groups {
        Some(s) => Some(parse_groups(s)?),
        None => file
            .groups
            .clone()
            .map(|gs| gs.into_iter().map(FactorGroup::new).collect::<Result<Vec<_>>>())
            .transpose()?,
    };
    let master_seed = common
        .seed
        .or(file.seed)
        .or_else(seed_from_env)
        .unwrap_or(0);
    let budget_matched = cmd.budget_matched || file.budget_matched.unwrap_or(false);
    let clamp = cmd.clamp || file.clamp.unwrap_or(false);
    let f0_offsets = cmd.f0_offsets.or(file.f0_offsets.clone());
    let threads = common.threads.or(file.threads);

    let experiment = ExperimentConfig {
        model,
        strategy,
        sampler,
        n,
        groups,
        replicates,
        master_seed,
        budget_matched,
        clamp,
    };
    experiment.validate()?;
    if let Some(offsets) = &f0_offsets {
        if offsets.is_empty() {
            return Err(Error::InvalidConfig("--f0-offsets needs at least one offset".into()));
        }
    }

    let echo = FileConfig {
        model: Some(model_name),
        params: Some(model_params_echo(&experiment.model)),
        strategy: Some(
            match experiment.strategy {
                StrategyChoice::Current => "current",
                StrategyChoice::Ia => "ia",
                StrategyChoice::Both => "both",
            }
            .to_string(),
        ),
        sampler: Some(experiment.sampler.label().to_string()),
        n: Some(n),
        groups: experiment
            .groups
            .as_ref()
            .map(|gs| gs.iter().map(|g| g.members().to_vec()).collect()),
        replicates: Some(replicates),
        seed: Some(master_seed),
        budget_matched: Some(budget_matched),
        clamp: Some(clamp),
        f0: None,
        f0_offsets: f0_offsets.clone(),
        threads,
    };

    Ok(Resolved {
        experiment,
        out_dir: common.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        threads,
        f0_offsets,
        echo,
    })
}

fn seed_from_env() -> Option<u64> {
    std::env::var("SENSIKIT_SEED").ok()?.trim().parse().ok()
}

/// Run `f` under a rayon pool capped at `threads`, or the default pool.
fn with_thread_cap<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
            pool.install(f)
        }
        None => f(),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let resolved = resolve(
        &args.common,
        CommandOverrides {
            strategy: args.strategy.as_deref(),
            n: args.n,
            groups: args.groups.as_deref(),
            clamp: args.clamp,
            replicates: Some(1),
            default_replicates: 1,
            ..Default::default()
        },
    )?;
    let started = Instant::now();
    let estimates = with_thread_cap(resolved.threads, || {
        harness::single_estimates(&resolved.experiment)
    })?;
    let run_seconds = started.elapsed().as_secs_f64();

    let mut writer = ManifestWriter::new("estimate", &resolved)?;
    writer.write_csv("estimates.csv", ESTIMATES_HEADER, |w| {
        for e in &estimates {
            w.write_record(&[
                e.group.label(),
                e.estimator.index_kind().label().to_string(),
                e.estimator.family().to_string(),
                fmt_f64(e.value),
                fmt_opt(e.asym_variance),
                e.n.to_string(),
                e.model_calls.to_string(),
            ])?;
        }
        Ok(())
    })?;
    if args.dump_design {
        writer.write_design_dump(&resolved.experiment)?;
    }
    writer.finish(run_seconds)
}

const ESTIMATES_HEADER: &[&str] = &[
    "group",
    "kind",
    "strategy",
    "estimate",
    "asym_variance",
    "n",
    "model_calls",
];

fn cmd_replicate(args: ReplicateArgs) -> Result<()> {
    let resolved = resolve(
        &args.common,
        CommandOverrides {
            strategy: args.strategy.as_deref(),
            n: args.n,
            groups: args.groups.as_deref(),
            clamp: args.clamp,
            replicates: args.replicates,
            budget_matched: args.budget_matched,
            f0: args.f0,
            f0_offsets: args.f0_offsets.clone(),
            ..Default::default()
        },
    )?;

    let started = Instant::now();
    let (table, shift) = with_thread_cap(resolved.threads, || {
        match &resolved.f0_offsets {
            Some(offsets) => {
                let shift = shift_experiment(&resolved.experiment, offsets)?;
                Ok((shift.tables[0].clone(), Some(shift)))
            }
            None => Ok((run_replicates(&resolved.experiment)?, None)),
        }
    })?;
    let run_seconds = started.elapsed().as_secs_f64();

    let mut writer = ManifestWriter::new("replicate", &resolved)?;
    write_replicates_csv(&mut writer, &table)?;
    write_summary_csv(&mut writer, &table)?;
    if let Some(shift) = shift {
        writer.write_csv(
            "shift.csv",
            &[
                "offset",
                "replicate",
                "group",
                "kind",
                "strategy",
                "estimate",
                "baseline",
                "delta",
            ],
            |w| {
                for d in &shift.deltas {
                    w.write_record(&[
                        fmt_f64(d.offset),
                        d.replicate.to_string(),
                        d.group.label(),
                        d.estimator.index_kind().label().to_string(),
                        d.estimator.family().to_string(),
                        fmt_opt(d.estimate),
                        fmt_opt(d.baseline),
                        fmt_opt(d.delta),
                    ])?;
                }
                Ok(())
            },
        )?;
    }
    writer.finish(run_seconds)
}

fn write_replicates_csv(writer: &mut ManifestWriter, table: &ReplicateTable) -> Result<()> {
    writer.write_csv(
        "replicates.csv",
        &[
            "replicate",
            "group",
            "kind",
            "strategy",
            "estimate",
            "asym_variance",
            "n",
            "model_calls",
            "skipped",
        ],
        |w| {
            for r in &table.rows {
                w.write_record(&[
                    r.replicate.to_string(),
                    r.group.label(),
                    r.estimator.index_kind().label().to_string(),
                    r.estimator.family().to_string(),
                    fmt_opt(r.estimate),
                    fmt_opt(r.asym_variance),
                    r.n.to_string(),
                    r.model_calls.to_string(),
                    r.skipped.to_string(),
                ])?;
            }
            Ok(())
        },
    )
}

fn write_summary_csv(writer: &mut ManifestWriter, table: &ReplicateTable) -> Result<()> {
    let stats = empirical_stats(table);
    writer.write_csv(
        "summary.csv",
        &[
            "group",
            "kind",
            "strategy",
            "mean",
            "empirical_variance",
            "mean_plugin_variance",
            "replicates_used",
            "skipped",
        ],
        |w| {
            for c in &stats {
                w.write_record(&[
                    c.group.label(),
                    c.estimator.index_kind().label().to_string(),
                    c.estimator.family().to_string(),
                    fmt_opt(c.mean),
                    fmt_opt(c.variance),
                    fmt_opt(c.mean_plugin_variance),
                    c.used.to_string(),
                    c.skipped.to_string(),
                ])?;
            }
            Ok(())
        },
    )
}

fn cmd_variance_compare(args: VarianceCompareArgs) -> Result<()> {
    let resolved = resolve(
        &args.common,
        CommandOverrides {
            n: args.n,
            replicates: args.replicates,
            budget_matched: args.budget_matched,
            default_n: 16384,
            default_model: Some("gfunction"),
            ..Default::default()
        },
    )?;

    let current_config = ExperimentConfig {
        strategy: StrategyChoice::Current,
        ..resolved.experiment.clone()
    };
    let ia_config = ExperimentConfig {
        strategy: StrategyChoice::Ia,
        ..resolved.experiment.clone()
    };

    let started = Instant::now();
    let comparison = with_thread_cap(resolved.threads, || {
        let table_current = run_replicates(&current_config)?;
        let table_ia = run_replicates(&ia_config)?;
        variance_comparison(&table_current, &table_ia)
    })?;
    let run_seconds = started.elapsed().as_secs_f64();

    let mut writer = ManifestWriter::new("variance-compare", &resolved)?;
    writer.write_csv(
        "variance_scatter.csv",
        &[
            "group",
            "ST_analytic",
            "tau2_sj_plugin",
            "tau2_ia_plugin",
            "replicate",
        ],
        |w| {
            for cell in &comparison.cells {
                if cell.kind != IndexKind::Total {
                    continue;
                }
                for rep in 0..comparison.replicates {
                    w.write_record(&[
                        cell.group.label(),
                        fmt_opt(cell.analytic),
                        fmt_opt(cell.plugins_a[rep]),
                        fmt_opt(cell.plugins_b[rep]),
                        rep.to_string(),
                    ])?;
                }
            }
            Ok(())
        },
    )?;
    writer.write_csv(
        "variance_summary.csv",
        &[
            "group",
            "kind",
            "strategy",
            "empirical_variance",
            "mean_plugin_variance",
            "replicates_used",
        ],
        |w| {
            for cell in &comparison.cells {
                let sides = [
                    (comparison.strategy_a, cell.empirical_a, cell.plugin_mean_a, &cell.plugins_a),
                    (comparison.strategy_b, cell.empirical_b, cell.plugin_mean_b, &cell.plugins_b),
                ];
                for (strategy, empirical, plugin_mean, plugins) in sides {
                    let family =
                        crate::estimators::EstimatorKind::for_strategy(strategy)
                            [matches!(cell.kind, IndexKind::Total) as usize]
                            .family();
                    w.write_record(&[
                        cell.group.label(),
                        cell.kind.label().to_string(),
                        family.to_string(),
                        fmt_opt(empirical),
                        fmt_opt(plugin_mean),
                        plugins.iter().filter(|p| p.is_some()).count().to_string(),
                    ])?;
                }
            }
            Ok(())
        },
    )?;
    writer.finish(run_seconds)
}

fn cmd_analytic(args: AnalyticArgs) -> Result<()> {
    let resolved = resolve(
        &args.common,
        CommandOverrides {
            replicates: Some(1),
            default_replicates: 1,
            ..Default::default()
        },
    )?;
    let started = Instant::now();
    let indices = resolved.experiment.model.analytic()?;
    let run_seconds = started.elapsed().as_secs_f64();

    let mut writer = ManifestWriter::new("analytic", &resolved)?;
    writer.write_csv("analytic.csv", &["group", "S", "ST", "V"], |w| {
        for i in 0..indices.s.len() {
            w.write_record(&[
                FactorGroup::singleton(i).label(),
                fmt_f64(indices.s[i]),
                fmt_f64(indices.st[i]),
                fmt_f64(indices.variance),
            ])?;
        }
        Ok(())
    })?;
    writer.finish(run_seconds)
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// Canonical float formatting: 17 significant digits, enough to round-trip
/// any f64, so equal values always print as equal bytes.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

struct OutputRecord {
    file: String,
    sha256: String,
}

struct ManifestWriter {
    command: &'static str,
    out_dir: PathBuf,
    echo: FileConfig,
    master_seed: u64,
    outputs: Vec<OutputRecord>,
    write_seconds: f64,
}

impl ManifestWriter {
    fn new(command: &'static str, resolved: &Resolved) -> Result<Self> {
        std::fs::create_dir_all(&resolved.out_dir)?;
        Ok(Self {
            command,
            out_dir: resolved.out_dir.clone(),
            echo: resolved.echo.clone(),
            master_seed: resolved.experiment.master_seed,
            outputs: Vec::new(),
            write_seconds: 0.0,
        })
    }

    /// Write one CSV with a fixed header, RFC-4180 quoting and `\n` line
    /// endings, and record its digest.
    fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        body: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
    ) -> Result<()> {
        let started = Instant::now();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header)?;
        body(&mut w)?;
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidConfig(format!("csv flush failed: {e}")))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, &bytes)?;
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            sha256: sha256_hex(&bytes),
        });
        self.write_seconds += started.elapsed().as_secs_f64();
        Ok(())
    }

    /// Audit dump of the base matrices of every design the experiment uses.
    fn write_design_dump(&mut self, config: &ExperimentConfig) -> Result<()> {
        let d = config.model.d();
        let groups = config.resolved_groups(d)?;
        let mut dumps: Vec<(String, SampleMatrix)> = Vec::new();
        for strategy in config.strategy.strategies() {
            let design = build_design(
                strategy,
                config.sampler,
                config.resolved_n(strategy),
                d,
                groups.clone(),
                config.master_seed,
                0,
            )?;
            dumps.push((format!("{}:A", strategy.label()), design.a().clone()));
            dumps.push((format!("{}:B", strategy.label()), design.b().clone()));
        }
        self.write_csv("design.csv", &["matrix", "row", "col", "value"], |w| {
            for (label, matrix) in &dumps {
                for row in 0..matrix.n() {
                    for col in 0..matrix.d() {
                        w.write_record(&[
                            label.clone(),
                            row.to_string(),
                            col.to_string(),
                            fmt_f64(matrix.get(row, col)),
                        ])?;
                    }
                }
            }
            Ok(())
        })
    }

    fn finish(self, run_seconds: f64) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            tool: &'static str,
            version: &'static str,
            command: &'static str,
            master_seed: u64,
            config: &'a FileConfig,
            timings: BTreeMap<&'static str, f64>,
            outputs: Vec<ManifestOutput<'a>>,
        }
        #[derive(Serialize)]
        struct ManifestOutput<'a> {
            file: &'a str,
            sha256: &'a str,
        }

        let manifest = Manifest {
            tool: "sensikit",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            master_seed: self.master_seed,
            config: &self.echo,
            timings: BTreeMap::from([
                ("run_seconds", run_seconds),
                ("write_seconds", self.write_seconds),
            ]),
            outputs: self
                .outputs
                .iter()
                .map(|o| ManifestOutput {
                    file: &o.file,
                    sha256: &o.sha256,
                })
                .collect(),
        };
        let mut file = std::fs::File::create(self.out_dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(&mut file, &manifest)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
