//! Chain adapters turning raw `*.jsonl` records into normalized traces.

mod bitcoin;
mod eosio;
mod ethereum;
mod registry;

pub use bitcoin::{parse_bitcoin_tx, RawBitcoinTx, RawUtxoEntry};
pub use eosio::{parse_eosio_action, RawEosioAction, SystemAccounts};
pub use ethereum::{parse_ethereum_trace, EthTraceType, EthereumAdapter, RawEthereumTrace};
pub use registry::{label_traces, load_dapp_registry, DAppRegistry, LabeledTrace};

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rust_decimal::Decimal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chain, InitiatorRole, NodeClass, NodeId, Trace, TraceKind};

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Skip malformed lines instead of failing.
    pub lenient: bool,
    pub system_accounts: SystemAccounts,
    /// Addresses known to hold code before the first record.
    pub seed_contracts: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub records_read: usize,
    pub records_skipped: usize,
    /// Well-formed records that map to no trace (notification receipts,
    /// empty transactions).
    pub records_dropped: usize,
    pub traces: usize,
    pub money_transfer: usize,
    pub account_creation: usize,
    pub contract_invocation: usize,
}

impl IngestSummary {
    fn count(&mut self, trace: &Trace) {
        self.traces += 1;
        match trace.kind {
            TraceKind::MoneyTransfer => self.money_transfer += 1,
            TraceKind::AccountCreation => self.account_creation += 1,
            TraceKind::ContractInvocation => self.contract_invocation += 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutput {
    /// Sorted by `(timestamp, tx_id, ordinal)`.
    pub traces: Vec<Trace>,
    pub summary: IngestSummary,
}

struct Line<T> {
    source_name: String,
    line: usize,
    record: T,
}

fn malformed(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::MalformedLine {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

/// Reads one JSON record per line; blank lines are ignored.
fn read_jsonl<T: DeserializeOwned, R: Read>(
    reader: R,
    source_name: &str,
    lenient: bool,
    summary: &mut IngestSummary,
    out: &mut Vec<Line<T>>,
) -> Result<()> {
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::io(source_name, e))?;
        if text.trim().is_empty() {
            continue;
        }
        summary.records_read += 1;
        match serde_json::from_str::<T>(&text) {
            Ok(record) => out.push(Line {
                source_name: source_name.to_string(),
                line: line_no,
                record,
            }),
            Err(e) => {
                let err = malformed(source_name, line_no, e.to_string());
                if !lenient {
                    return Err(err);
                }
                log::warn!("skipping {err}");
                summary.records_skipped += 1;
            }
        }
    }
    Ok(())
}

/// Parses raw records for `chain` from `(name, reader)` sources.
///
/// Records are classified in `(timestamp, tx_id, ordinal)` order, which the
/// Ethereum contract tracker relies on. Duplicate `(tx_id, ordinal)` keys are
/// malformed input.
pub fn ingest_readers<R: Read>(
    chain: Chain,
    sources: impl IntoIterator<Item = (String, R)>,
    options: &IngestOptions,
) -> Result<IngestOutput> {
    let mut summary = IngestSummary::default();
    let mut traces = Vec::new();
    let mut seen = HashSet::new();

    // Dedup keys are checked per raw record, then the record is handed to
    // `emit`. A failing record is fatal unless lenient.
    let mut handle = |summary: &mut IngestSummary,
                      traces: &mut Vec<Trace>,
                      src: &str,
                      line: usize,
                      key: (String, u32),
                      parsed: Result<Vec<Trace>>|
     -> Result<()> {
        let result = if !seen.insert(key.clone()) {
            Err(Error::Parse(format!("duplicate record key {}#{}", key.0, key.1)))
        } else {
            parsed
        };
        match result {
            Ok(ts) if ts.is_empty() => summary.records_dropped += 1,
            Ok(ts) => {
                for t in ts {
                    summary.count(&t);
                    traces.push(t);
                }
            }
            Err(e) => {
                let err = malformed(src, line, e.to_string());
                if !options.lenient {
                    return Err(err);
                }
                log::warn!("skipping {err}");
                summary.records_skipped += 1;
            }
        }
        Ok(())
    };

    match chain {
        Chain::Bitcoin => {
            let mut lines: Vec<Line<RawBitcoinTx>> = Vec::new();
            for (name, r) in sources {
                read_jsonl(r, &name, options.lenient, &mut summary, &mut lines)?;
            }
            for l in lines {
                let key = (l.record.tx_id.clone(), 0);
                let parsed = parse_bitcoin_tx(&l.record);
                handle(&mut summary, &mut traces, &l.source_name, l.line, key, parsed)?;
            }
        }
        Chain::Ethereum => {
            let mut lines: Vec<Line<RawEthereumTrace>> = Vec::new();
            for (name, r) in sources {
                read_jsonl(r, &name, options.lenient, &mut summary, &mut lines)?;
            }
            lines.sort_by(|a, b| {
                (a.record.timestamp, &a.record.tx_id, a.record.ordinal).cmp(&(
                    b.record.timestamp,
                    &b.record.tx_id,
                    b.record.ordinal,
                ))
            });
            let mut adapter = EthereumAdapter::with_seed_contracts(&options.seed_contracts);
            for l in lines {
                let key = (l.record.tx_id.clone(), l.record.ordinal);
                let parsed = adapter.parse(&l.record).map(|t| t.into_iter().collect());
                handle(&mut summary, &mut traces, &l.source_name, l.line, key, parsed)?;
            }
        }
        Chain::Eosio => {
            let mut lines: Vec<Line<RawEosioAction>> = Vec::new();
            for (name, r) in sources {
                read_jsonl(r, &name, options.lenient, &mut summary, &mut lines)?;
            }
            for l in lines {
                let key = (l.record.tx_id.clone(), l.record.ordinal);
                let parsed = parse_eosio_action(&l.record, &options.system_accounts)
                    .map(|t| t.into_iter().collect());
                handle(&mut summary, &mut traces, &l.source_name, l.line, key, parsed)?;
            }
        }
    }

    sort_traces(&mut traces);
    Ok(IngestOutput { traces, summary })
}

pub fn ingest_files(chain: Chain, paths: &[impl AsRef<Path>], options: &IngestOptions) -> Result<IngestOutput> {
    let mut sources = Vec::with_capacity(paths.len());
    for p in paths {
        let p = p.as_ref();
        let f = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
        sources.push((p.display().to_string(), f));
    }
    ingest_readers(chain, sources, options)
}

pub fn sort_traces(traces: &mut [Trace]) {
    traces.sort_by(|a, b| (a.timestamp, &a.tx_id, a.ordinal).cmp(&(b.timestamp, &b.tx_id, b.ordinal)));
}

/// Groups traces by calendar month.
pub fn partition_by_month(traces: &[Trace]) -> BTreeMap<crate::model::MonthKey, Vec<Trace>> {
    let mut out: BTreeMap<_, Vec<Trace>> = BTreeMap::new();
    for t in traces {
        out.entry(t.month()).or_default().push(t.clone());
    }
    out
}

/// Line format of the normalized `traces.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub chain: String,
    pub kind: TraceKind,
    pub source: String,
    pub source_class: NodeClass,
    pub target: String,
    pub target_class: NodeClass,
    pub weight: Decimal,
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memo: Option<String>,
    pub initiator_role: InitiatorRole,
    pub tx_id: String,
    pub ordinal: u32,
}

impl From<&Trace> for TraceRecord {
    fn from(t: &Trace) -> Self {
        TraceRecord {
            chain: t.chain.to_string(),
            kind: t.kind,
            source: t.source.identifier().to_string(),
            source_class: t.source.class(),
            target: t.target.identifier().to_string(),
            target_class: t.target.class(),
            weight: t.weight.normalize(),
            timestamp: t.timestamp,
            memo: t.memo.clone(),
            initiator_role: t.initiator_role,
            tx_id: t.tx_id.clone(),
            ordinal: t.ordinal,
        }
    }
}

impl TryFrom<TraceRecord> for Trace {
    type Error = Error;

    fn try_from(r: TraceRecord) -> Result<Trace> {
        let chain: Chain = r.chain.parse()?;
        let trace = Trace {
            chain,
            kind: r.kind,
            source: NodeId::new(chain, r.source, r.source_class)?,
            target: NodeId::new(chain, r.target, r.target_class)?,
            weight: r.weight,
            timestamp: r.timestamp,
            memo: r.memo,
            initiator_role: r.initiator_role,
            tx_id: r.tx_id,
            ordinal: r.ordinal,
        };
        trace.validate()?;
        Ok(trace)
    }
}

pub fn write_traces<W: Write>(mut w: W, traces: &[Trace]) -> Result<()> {
    for t in traces {
        serde_json::to_writer(&mut w, &TraceRecord::from(t))?;
        w.write_all(b"\n").map_err(|e| Error::io("<traces>", e))?;
    }
    Ok(())
}

pub fn read_traces<R: Read>(reader: R, source_name: &str) -> Result<Vec<Trace>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let text = line.map_err(|e| Error::io(source_name, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let record: TraceRecord =
            serde_json::from_str(&text).map_err(|e| malformed(source_name, i + 1, e.to_string()))?;
        out.push(Trace::try_from(record).map_err(|e| malformed(source_name, i + 1, e.to_string()))?);
    }
    Ok(out)
}
