//! End-to-end commands: ingest raw records, analyze normalized traces, and
//! turn the analysis into plot-ready series.
//!
//! Every output is sorted and formatted deterministically, so identical
//! inputs and configuration give byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_graph, dapp_share_report, GraphKind, MonthlyGraph};
use crate::ingest::{self, DAppRegistry, IngestOptions, IngestSummary};
use crate::metrics::{assemble_series, trace_stats, Metric};
use crate::model::{month_range, Chain, InitiatorRole, MonthKey, Trace};
use crate::outlier::{self, OutlierLabels, OutlierRecord, DEFAULT_MAX_ITER, DEFAULT_THRESHOLD};
use crate::spam::{self, SpamParams, SpamVerdict};
use crate::synth::{self, RawCorpus, SynthSpec};

pub const TRACES_FILE: &str = "traces.jsonl";
pub const INGEST_SUMMARY_FILE: &str = "ingest_summary.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const OUTLIERS_FILE: &str = "outliers.json";
pub const SPAM_FILE: &str = "spam.json";
pub const FAMILY_TREE_FILE: &str = "family_tree.csv";
pub const REPORT_DIR: &str = "report";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Required for ingest; for analysis, restricts to one chain.
    pub chain: Option<Chain>,
    pub inputs: Vec<PathBuf>,
    pub registry: Option<PathBuf>,
    /// `chain,identifier,category,subcategory` labels joined onto outliers.
    pub labels: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub from: Option<MonthKey>,
    pub to: Option<MonthKey>,
    pub z_threshold: f64,
    pub max_iter: usize,
    pub spam: SpamParams,
    pub lenient: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            chain: None,
            inputs: Vec::new(),
            registry: None,
            labels: None,
            out_dir: PathBuf::from("out"),
            from: None,
            to: None,
            z_threshold: DEFAULT_THRESHOLD,
            max_iter: DEFAULT_MAX_ITER,
            spam: SpamParams::default(),
            lenient: false,
            seed: 0,
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parameter(format!("`{key}` expects true or false, got `{value}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parameter(format!("`{key}` has invalid value `{value}`")))
}

impl PipelineConfig {
    /// Sets one key. Keys match the long command-line flags with `_` in
    /// place of `-`; `input` appends and accepts a comma-separated list.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "chain" => self.chain = Some(value.parse()?),
            "input" | "inputs" => self
                .inputs
                .extend(value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from)),
            "registry" => self.registry = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "out" => self.out_dir = PathBuf::from(value),
            "from" => self.from = Some(value.parse()?),
            "to" => self.to = Some(value.parse()?),
            "z_threshold" => self.z_threshold = parse_num("z_threshold", value)?,
            "max_iter" => self.max_iter = parse_num("max_iter", value)?,
            "spam_x" => self.spam.x = parse_num::<Decimal>("spam_x", value)?,
            "spam_y" => self.spam.y = parse_num("spam_y", value)?,
            "spam_z" => self.spam.z = parse_num("spam_z", value)?,
            "spam_require_memo" => self.spam.require_memo = parse_bool("spam_require_memo", value)?,
            "lenient" => self.lenient = parse_bool("lenient", value)?,
            "strict" => self.lenient = !parse_bool("strict", value)?,
            "seed" => self.seed = parse_num("seed", value)?,
            other => return Err(Error::Parameter(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn from_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        config.merge_reader(reader, source_name)?;
        Ok(config)
    }

    pub fn merge_reader<R: Read>(&mut self, reader: R, source_name: &str) -> Result<()> {
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let (key, value) = text.split_once('=').ok_or_else(|| Error::MalformedLine {
                source_name: source_name.to_string(),
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(key, value).map_err(|e| Error::MalformedLine {
                source_name: source_name.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(a), Some(b)) = (self.from, self.to) {
            if a > b {
                return Err(Error::MonthRange { first: a, last: b });
            }
        }
        if !(self.z_threshold > 0.0) || !self.z_threshold.is_finite() {
            return Err(Error::Parameter(format!("z threshold must be positive, got {}", self.z_threshold)));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max_iter must be at least 1".into()));
        }
        self.spam.validate()?;
        for p in self.inputs.iter().chain(&self.registry).chain(&self.labels) {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        Ok(())
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses raw chain records into `traces.jsonl` and `ingest_summary.json`.
pub fn cmd_ingest(config: &PipelineConfig) -> Result<IngestSummary> {
    config.validate()?;
    let chain = config
        .chain
        .ok_or_else(|| Error::Parameter("ingest needs a chain".into()))?;
    let options = IngestOptions {
        lenient: config.lenient,
        ..IngestOptions::default()
    };
    let out = ingest::ingest_files(chain, &config.inputs, &options)?;
    let path = config.out_path(TRACES_FILE);
    let mut w = create_file(&path)?;
    ingest::write_traces(&mut w, &out.traces)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&config.out_path(INGEST_SUMMARY_FILE), &out.summary)?;
    Ok(out.summary)
}

/// One chain's traces bucketed by month with every applicable graph built.
pub struct ChainAnalysis {
    pub chain: Chain,
    pub months: Vec<MonthKey>,
    pub traces: BTreeMap<MonthKey, Vec<Trace>>,
    pub graphs: BTreeMap<(GraphKind, MonthKey), MonthlyGraph>,
}

impl ChainAnalysis {
    pub fn build(chain: Chain, traces: Vec<Trace>, from: Option<MonthKey>, to: Option<MonthKey>) -> Result<Self> {
        let mut by_month: BTreeMap<MonthKey, Vec<Trace>> = BTreeMap::new();
        for t in traces {
            by_month.entry(t.month()).or_default().push(t);
        }
        let first = from.or_else(|| by_month.keys().next().copied());
        let last = to.or_else(|| by_month.keys().next_back().copied());
        let months = match (first, last) {
            (Some(a), Some(b)) => month_range(a, b)?,
            _ => Vec::new(),
        };
        let dropped: usize = by_month
            .iter()
            .filter(|(m, _)| first.is_some_and(|f| **m < f) || last.is_some_and(|l| **m > l))
            .map(|(_, ts)| ts.len())
            .sum();
        if dropped > 0 {
            log::info!("{chain}: {dropped} traces outside the month range ignored");
        }
        by_month.retain(|m, _| months.binary_search(m).is_ok());

        let mut graphs = BTreeMap::new();
        for &month in &months {
            let ts = by_month.get(&month).map(Vec::as_slice).unwrap_or_default();
            if ts.is_empty() {
                log::warn!("{chain}: no traces in {month}; its metric values are absent");
            }
            for &kind in GraphKind::applicable(chain) {
                let want = kind.trace_kind();
                let g = build_graph(chain, kind, month, ts.iter().filter(|t| t.kind == want))?;
                graphs.insert((kind, month), g);
            }
        }
        Ok(ChainAnalysis {
            chain,
            months,
            traces: by_month,
            graphs,
        })
    }

    fn has_traces(&self, month: MonthKey) -> bool {
        self.traces.get(&month).is_some_and(|ts| !ts.is_empty())
    }

    fn graph(&self, kind: GraphKind, month: MonthKey) -> &MonthlyGraph {
        &self.graphs[&(kind, month)]
    }
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub chain: Chain,
    /// Graph kind, or `ALL` for rows over every trace of the month.
    pub graph_kind: String,
    pub metric: String,
    pub month: MonthKey,
    pub value: Option<f64>,
}

const ALL_KINDS: &str = "ALL";

fn role_metric(role: InitiatorRole) -> String {
    format!("role_share_{}", role.as_str())
}

/// Metric values, trace ratios, role splits and, with a registry, DApp
/// shares for every month of the analysis.
pub fn metric_rows(a: &ChainAnalysis, registry: Option<&DAppRegistry>) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    let mut push = |kind: &str, metric: String, month: MonthKey, value: Option<f64>| {
        rows.push(MetricRow {
            chain: a.chain,
            graph_kind: kind.to_string(),
            metric,
            month,
            value,
        })
    };
    for &month in &a.months {
        let present = a.has_traces(month);
        let stats = trace_stats(a.traces.get(&month).into_iter().flatten());
        for &kind in GraphKind::applicable(a.chain) {
            let g = a.graph(kind, month);
            for metric in Metric::ALL {
                if !metric.applies_to(a.chain, kind) {
                    continue;
                }
                let v = if present { metric.evaluate(g)? } else { None };
                push(kind.as_str(), metric.to_string(), month, v);
            }
            let tk = kind.trace_kind();
            let ratio = present.then(|| stats.ratios.get(&tk).copied().unwrap_or(0.0));
            push(kind.as_str(), "trace_ratio".into(), month, ratio);
            for role in InitiatorRole::ALL {
                let share = stats.role_split.get(&tk).map(|s| s[&role]);
                push(kind.as_str(), role_metric(role), month, share);
            }
        }
        if let Some(reg) = registry {
            let graphs: Vec<&MonthlyGraph> = GraphKind::applicable(a.chain)
                .iter()
                .map(|&k| a.graph(k, month))
                .collect();
            let report = dapp_share_report(&graphs, reg);
            for cat in crate::model::DAppCategory::ALL {
                let v = report.as_ref().map(|r| r.categories.get(&cat).copied().unwrap_or(0.0));
                push(ALL_KINDS, format!("dapp_share:{cat}"), month, v);
            }
            push(ALL_KINDS, "non_dapp_share".into(), month, report.map(|r| r.non_dapp_share));
        }
    }
    Ok(rows)
}

/// Flags outlier months in every metric series and attributes each.
pub fn find_outliers(a: &ChainAnalysis, config: &PipelineConfig, labels: Option<&OutlierLabels>) -> Result<Vec<OutlierRecord>> {
    let span = a.months.first().copied().zip(a.months.last().copied());
    let mut records = Vec::new();
    for &kind in GraphKind::applicable(a.chain) {
        for metric in Metric::ALL {
            if !metric.applies_to(a.chain, kind) {
                continue;
            }
            let mut values = Vec::with_capacity(a.months.len());
            for &m in &a.months {
                let v = if a.has_traces(m) {
                    metric.evaluate(a.graph(kind, m))?
                } else {
                    None
                };
                values.push((m, v));
            }
            let series = assemble_series(a.chain, kind, metric.as_str(), values, span)?;
            for d in outlier::detect(&series, config.z_threshold)? {
                let g = a.graph(kind, d.month);
                match outlier::attribute(g, metric, &series, config.z_threshold, config.max_iter) {
                    Ok(rec) => records.push(match labels {
                        Some(l) => outlier::classify(rec, l),
                        None => rec,
                    }),
                    Err(Error::Attribution(msg)) => log::warn!("{} {kind} {metric} {}: {msg}", a.chain, d.month),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(records)
}

/// Spam verdicts for every month plus the creation forest over the whole
/// span, when the chain has account creations.
pub fn find_spam(a: &ChainAnalysis, params: &SpamParams) -> Result<(Vec<SpamVerdict>, Option<spam::FamilyTree>)> {
    let mut verdicts = Vec::new();
    for &month in &a.months {
        let mtg = a.graph(GraphKind::Mtg, month);
        let empty;
        let cig = match a.graphs.get(&(GraphKind::Cig, month)) {
            Some(g) => g,
            None => {
                empty = MonthlyGraph::empty(a.chain, GraphKind::Cig, month);
                &empty
            }
        };
        let ts = a.traces.get(&month).map(Vec::as_slice).unwrap_or_default();
        verdicts.extend(spam::scan_spammers(mtg, cig, ts, params)?);
    }
    if !GraphKind::applicable(a.chain).contains(&GraphKind::Acg) {
        return Ok((verdicts, None));
    }
    let flagged: BTreeSet<_> = verdicts.iter().map(|v| v.account.clone()).collect();
    let acgs = a.months.iter().map(|&m| a.graph(GraphKind::Acg, m));
    let tree = spam::build_family_tree(acgs, &flagged)?;
    Ok((verdicts, Some(tree)))
}

fn spam_rows(a: &ChainAnalysis, verdicts: &[SpamVerdict]) -> Vec<MetricRow> {
    let timeline = spam::spam_timeline(verdicts);
    let mut per_month: BTreeMap<MonthKey, usize> = BTreeMap::new();
    for v in verdicts {
        *per_month.entry(v.month).or_default() += 1;
    }
    let mut rows = Vec::new();
    for &m in &a.months {
        for (metric, map) in [("spam_flagged", &per_month), ("spam_first_seen", &timeline)] {
            rows.push(MetricRow {
                chain: a.chain,
                graph_kind: GraphKind::Mtg.as_str().to_string(),
                metric: metric.into(),
                month: m,
                value: Some(map.get(&m).copied().unwrap_or(0) as f64),
            });
        }
    }
    rows
}

/// Normalized traces named by the config, or `traces.jsonl` in the output
/// directory when none are given.
pub fn load_traces(config: &PipelineConfig) -> Result<Vec<Trace>> {
    let default = [config.out_path(TRACES_FILE)];
    let paths: &[PathBuf] = if config.inputs.is_empty() {
        &default
    } else {
        &config.inputs
    };
    let mut all = Vec::new();
    for p in paths {
        let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
        all.extend(ingest::read_traces(f, &p.display().to_string())?);
    }
    if let Some(c) = config.chain {
        all.retain(|t| t.chain == c);
    }
    ingest::sort_traces(&mut all);
    Ok(all)
}

fn analyses(config: &PipelineConfig) -> Result<Vec<ChainAnalysis>> {
    config.validate()?;
    let traces = load_traces(config)?;
    let mut by_chain: BTreeMap<Chain, Vec<Trace>> = BTreeMap::new();
    for t in traces {
        by_chain.entry(t.chain).or_default().push(t);
    }
    if let Some(c) = config.chain {
        by_chain.entry(c).or_default();
    }
    by_chain
        .into_iter()
        .map(|(chain, ts)| ChainAnalysis::build(chain, ts, config.from, config.to))
        .collect()
}

fn load_labels(config: &PipelineConfig) -> Result<Option<OutlierLabels>> {
    config.labels.as_ref().map(OutlierLabels::load).transpose()
}

fn format_value(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_metric_rows<W: Write>(w: W, rows: &[MetricRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["chain", "graph_kind", "metric", "month", "value"])?;
    for r in rows {
        out.write_record([
            r.chain.as_str(),
            &r.graph_kind,
            &r.metric,
            &r.month.to_string(),
            &format_value(r.value),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<metrics>", e))
}

fn write_family_tree(path: &Path, trees: &[spam::FamilyTree]) -> Result<()> {
    let mut w = create_file(path)?;
    if trees.is_empty() {
        w.write_all(b"parent,child,flagged\n").map_err(|e| Error::io(path, e))?;
    }
    for (i, t) in trees.iter().enumerate() {
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        // one header for the whole file
        let body = if i == 0 { &buf[..] } else { &buf[buf.iter().position(|&b| b == b'\n').map_or(0, |p| p + 1)..] };
        w.write_all(body).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnalyzeSummary {
    pub chains: Vec<Chain>,
    pub months: usize,
    pub metric_rows: usize,
    pub outliers: usize,
    pub spam_accounts: usize,
}

/// Builds every graph, writes `metrics.csv`, `outliers.json`, `spam.json`
/// and `family_tree.csv`.
pub fn cmd_analyze(config: &PipelineConfig) -> Result<AnalyzeSummary> {
    let chains = analyses(config)?;
    let registry = config.registry.as_ref().map(ingest::load_dapp_registry).transpose()?;
    let labels = load_labels(config)?;
    let mut summary = AnalyzeSummary::default();
    let mut rows = Vec::new();
    let mut outliers = Vec::new();
    let mut verdicts = Vec::new();
    let mut trees = Vec::new();
    for a in &chains {
        summary.chains.push(a.chain);
        summary.months += a.months.len();
        rows.extend(metric_rows(a, registry.as_ref())?);
        outliers.extend(find_outliers(a, config, labels.as_ref())?);
        let (v, tree) = find_spam(a, &config.spam)?;
        rows.extend(spam_rows(a, &v));
        verdicts.extend(v);
        trees.extend(tree);
    }
    rows.sort_by(|a, b| (a.chain, &a.graph_kind, &a.metric, a.month).cmp(&(b.chain, &b.graph_kind, &b.metric, b.month)));
    summary.metric_rows = rows.len();
    summary.outliers = outliers.len();
    summary.spam_accounts = verdicts.iter().map(|v| &v.account).collect::<BTreeSet<_>>().len();

    let path = config.out_path(METRICS_FILE);
    let mut w = create_file(&path)?;
    write_metric_rows(&mut w, &rows)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&config.out_path(OUTLIERS_FILE), &outliers)?;
    write_json(&config.out_path(SPAM_FILE), &verdicts)?;
    write_family_tree(&config.out_path(FAMILY_TREE_FILE), &trees)?;
    Ok(summary)
}

/// Spam scan only: writes `spam.json` and `family_tree.csv`.
pub fn cmd_spam_scan(config: &PipelineConfig) -> Result<Vec<SpamVerdict>> {
    let mut verdicts = Vec::new();
    let mut trees = Vec::new();
    for a in analyses(config)? {
        let (v, tree) = find_spam(&a, &config.spam)?;
        verdicts.extend(v);
        trees.extend(tree);
    }
    write_json(&config.out_path(SPAM_FILE), &verdicts)?;
    write_family_tree(&config.out_path(FAMILY_TREE_FILE), &trees)?;
    Ok(verdicts)
}

/// Outlier detection and attribution only: writes `outliers.json`.
pub fn cmd_outliers(config: &PipelineConfig) -> Result<Vec<OutlierRecord>> {
    let labels = load_labels(config)?;
    let mut records = Vec::new();
    for a in analyses(config)? {
        records.extend(find_outliers(&a, config, labels.as_ref())?);
    }
    write_json(&config.out_path(OUTLIERS_FILE), &records)?;
    Ok(records)
}

pub const RAW_FILE: &str = "raw.jsonl";
pub const SYNTH_SPEC_FILE: &str = "synth_spec.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub chain: Chain,
    pub traces: usize,
    pub raw_records: usize,
}

/// Writes a generated corpus: normalized `traces.jsonl`, the raw records in
/// the chain's ingest format as `raw.jsonl` when the generator has one, and
/// the spec itself.
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<SynthSummary> {
    let corpus = synth::generate(spec)?;
    let path = out_dir.join(TRACES_FILE);
    let mut w = create_file(&path)?;
    ingest::write_traces(&mut w, &corpus.traces)?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<usize> {
        let mut w = create_file(path)?;
        for item in items {
            serde_json::to_writer(&mut w, item)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(items.len())
    }
    let raw_path = out_dir.join(RAW_FILE);
    let raw_records = match &corpus.raw {
        RawCorpus::Eosio(actions) => write_lines(&raw_path, actions)?,
        RawCorpus::Bitcoin(txs) => write_lines(&raw_path, txs)?,
        RawCorpus::None => 0,
    };
    write_json(&out_dir.join(SYNTH_SPEC_FILE), spec)?;
    Ok(SynthSummary {
        chain: corpus.chain,
        traces: corpus.traces.len(),
        raw_records,
    })
}

/// Report files, each with columns `series,month,value`.
pub const REPORT_FAMILIES: [&str; 8] = [
    "trace_counts",
    "trace_ratios",
    "role_splits",
    "alpha",
    "pearson",
    "components",
    "dapp_shares",
    "spam",
];

fn report_family(metric: &str) -> Option<(&'static str, String)> {
    Some(match metric {
        "trace_count" => ("trace_counts", String::new()),
        "trace_ratio" => ("trace_ratios", String::new()),
        "pearson_r" => ("pearson", String::new()),
        "wcc" | "scc" => ("components", metric.to_string()),
        "non_dapp_share" => ("dapp_shares", "non_dapp".into()),
        "spam_flagged" | "spam_first_seen" => ("spam", metric.to_string()),
        m => {
            if let Some(role) = m.strip_prefix("role_share_") {
                ("role_splits", role.to_string())
            } else if let Some(mode) = m.strip_prefix("alpha_") {
                ("alpha", mode.to_string())
            } else {
                ("dapp_shares", m.strip_prefix("dapp_share:")?.to_string())
            }
        }
    })
}

#[derive(serde::Deserialize)]
struct RawMetricRow {
    chain: String,
    graph_kind: String,
    metric: String,
    month: MonthKey,
    value: Option<f64>,
}

type FamilyRows = Vec<(String, MonthKey, Option<f64>)>;

/// Share sums within this distance of 1 pass the accounting check.
pub const SHARE_TOLERANCE: f64 = 1e-9;

/// Splits `metrics.csv` into one long-format file per figure family under
/// `report/`. The DApp share file ends with one accounting row per chain
/// and month: the category shares plus the non-DApp share, which must reach
/// at least 1.
pub fn cmd_report(config: &PipelineConfig) -> Result<BTreeMap<&'static str, usize>> {
    let path = config.out_path(METRICS_FILE);
    let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut rdr = csv::Reader::from_reader(f);
    let mut families: BTreeMap<&'static str, FamilyRows> =
        REPORT_FAMILIES.iter().map(|&f| (f, Vec::new())).collect();
    let mut accounting: BTreeMap<(String, MonthKey), f64> = BTreeMap::new();
    for row in rdr.deserialize::<RawMetricRow>() {
        let row = row?;
        let Some((family, suffix)) = report_family(&row.metric) else {
            continue;
        };
        let mut series = row.chain.clone();
        if row.graph_kind != ALL_KINDS {
            series = format!("{series}/{}", row.graph_kind);
        }
        if !suffix.is_empty() {
            series = format!("{series}/{suffix}");
        }
        if family == "dapp_shares" {
            if let Some(v) = row.value {
                *accounting.entry((row.chain.clone(), row.month)).or_default() += v;
            }
        }
        families.get_mut(family).expect("known family").push((series, row.month, row.value));
    }

    let dir = config.out_path(REPORT_DIR);
    let mut counts = BTreeMap::new();
    for (family, mut rows) in families {
        rows.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        let path = dir.join(format!("{family}.csv"));
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(create_file(&path)?);
        out.write_record(["series", "month", "value"])?;
        for (series, month, value) in &rows {
            out.write_record([series.as_str(), &month.to_string(), &format_value(*value)])?;
        }
        if family == "dapp_shares" {
            for ((chain, month), sum) in &accounting {
                if *sum < 1.0 - SHARE_TOLERANCE {
                    return Err(Error::Data(format!(
                        "{chain} {month}: DApp and non-DApp shares sum to {sum}, below 1"
                    )));
                }
                out.write_record([format!("{chain}/accounting"), month.to_string(), sum.to_string()])?;
            }
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        counts.insert(family, rows.len());
    }
    Ok(counts)
}
