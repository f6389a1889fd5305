//! `chaingraph` command-line front end.
//!
//! Exit codes: 0 on success, 1 when the analysis fails, 2 for bad input or
//! arguments. Errors print as one line, `E_CODE: message`, on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use chaingraph::pipeline::{self, PipelineConfig};
use chaingraph::synth::{Archetype, SynthSpec};
use chaingraph::{Amount, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "chaingraph", version, about = "Monthly transaction-graph analytics for blockchain traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw chain records into normalized traces.
    Ingest(Common),
    /// Build monthly graphs and write metrics, outliers and spam verdicts.
    Analyze(Common),
    /// Split the metrics into plot-ready series, one file per figure family.
    Report(Common),
    /// Generate a synthetic corpus with planted ground truth.
    Synth(SynthArgs),
    /// Run the spam detector only.
    SpamScan(Common),
    /// Run outlier detection and attribution only.
    Outliers(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    chain: Option<String>,
    /// Input file; repeatable.
    #[arg(long = "input", short = 'i')]
    inputs: Vec<PathBuf>,
    /// DApp registry CSV (`name,category,chain,identifier`).
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Outlier label CSV (`chain,identifier,category,subcategory`).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// First month, `yyyy-MM`.
    #[arg(long)]
    from: Option<String>,
    /// Last month, `yyyy-MM`.
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    z_threshold: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    spam_x: Option<String>,
    #[arg(long)]
    spam_y: Option<String>,
    #[arg(long)]
    spam_z: Option<String>,
    /// Do not require a shared memo to flag a spammer.
    #[arg(long)]
    spam_no_memo: bool,
    /// Fail on the first malformed record (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Skip malformed records and count them.
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    seed: Option<String>,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig, Error> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let opt = |k: &str, v: &Option<String>, c: &mut PipelineConfig| match v {
            Some(v) => c.set(k, v),
            None => Ok(()),
        };
        opt("chain", &self.chain, &mut c)?;
        opt("from", &self.from, &mut c)?;
        opt("to", &self.to, &mut c)?;
        opt("z_threshold", &self.z_threshold, &mut c)?;
        opt("max_iter", &self.max_iter, &mut c)?;
        opt("spam_x", &self.spam_x, &mut c)?;
        opt("spam_y", &self.spam_y, &mut c)?;
        opt("spam_z", &self.spam_z, &mut c)?;
        opt("seed", &self.seed, &mut c)?;
        if !self.inputs.is_empty() {
            c.inputs = self.inputs.clone();
        }
        if let Some(p) = &self.registry {
            c.registry = Some(p.clone());
        }
        if let Some(p) = &self.labels {
            c.labels = Some(p.clone());
        }
        if let Some(p) = &self.out {
            c.out_dir = p.clone();
        }
        if self.spam_no_memo {
            c.spam.require_memo = false;
        }
        if self.lenient {
            c.lenient = true;
        }
        if self.strict {
            c.lenient = false;
        }
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchetypeName {
    PowerLaw,
    EidosLoop,
    SpamCampaign,
    SupernodeSpike,
    Utxo,
    CreationForest,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    archetype: ArchetypeName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Node count (power-law).
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Degree exponent (power-law).
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    users: usize,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 5)]
    spammers: usize,
    #[arg(long, default_value_t = 600)]
    recipients: usize,
    #[arg(long, default_value = "0.0001")]
    amount: String,
    #[arg(long, default_value = "WIN BIG url")]
    memo: String,
    /// Benign accounts mixed into a spam corpus.
    #[arg(long, default_value_t = 0)]
    benign: usize,
    #[arg(long, default_value_t = 12)]
    months: usize,
    #[arg(long, default_value_t = 6)]
    spike_index: usize,
    /// Background transfers per month (supernode-spike).
    #[arg(long, default_value_t = 500)]
    baseline: usize,
    /// Spokes per planted hub, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    stars: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    txs: usize,
    #[arg(long, default_value_t = 1000)]
    accounts: usize,
    #[arg(long, default_value_t = 3)]
    roots: usize,
}

impl SynthArgs {
    fn spec(&self) -> Result<SynthSpec, Error> {
        let archetype = match self.archetype {
            ArchetypeName::PowerLaw => Archetype::PowerLaw {
                n: self.n,
                alpha: self.alpha,
            },
            ArchetypeName::EidosLoop => Archetype::EidosLoop {
                users: self.users,
                rounds: self.rounds,
            },
            ArchetypeName::SpamCampaign => Archetype::SpamCampaign {
                spammers: self.spammers,
                recipients_per: self.recipients,
                amount: self
                    .amount
                    .parse::<Amount>()
                    .map_err(|_| Error::Parameter(format!("invalid amount `{}`", self.amount)))?,
                memo: self.memo.clone(),
                benign: self.benign,
            },
            ArchetypeName::SupernodeSpike => Archetype::SupernodeSpike {
                months: self.months,
                spike_index: self.spike_index,
                baseline: self.baseline,
                stars: self.stars.clone(),
            },
            ArchetypeName::Utxo => Archetype::Utxo {
                txs: self.txs,
                months: self.months,
            },
            ArchetypeName::CreationForest => Archetype::CreationForest {
                accounts: self.accounts,
                roots: self.roots,
            },
        };
        Ok(SynthSpec {
            seed: self.seed,
            archetype,
        })
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest(c) => print_json(&pipeline::cmd_ingest(&c.config()?)?),
        Command::Analyze(c) => print_json(&pipeline::cmd_analyze(&c.config()?)?),
        Command::Report(c) => print_json(&pipeline::cmd_report(&c.config()?)?),
        Command::Synth(s) => print_json(&pipeline::cmd_synth(&s.spec()?, &s.out)?),
        Command::SpamScan(c) => {
            let verdicts = pipeline::cmd_spam_scan(&c.config()?)?;
            print_json(&serde_json::json!({ "flagged": verdicts.len() }))
        }
        Command::Outliers(c) => {
            let records = pipeline::cmd_outliers(&c.config()?)?;
            let resolved = records.iter().filter(|r| r.resolved).count();
            print_json(&serde_json::json!({ "outliers": records.len(), "resolved": resolved }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("E_USAGE: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("{}: {msg}", e.code());
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
