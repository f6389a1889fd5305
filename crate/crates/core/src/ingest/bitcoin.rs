use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chain, InitiatorRole, NodeClass, NodeId, Trace, TraceKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawUtxoEntry {
    pub pubkey: String,
    pub amount: Decimal,
}

/// One UTXO transaction as read from a `*.jsonl` line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBitcoinTx {
    pub tx_id: String,
    pub timestamp: u64,
    #[serde(default)]
    pub inputs: Vec<RawUtxoEntry>,
    #[serde(default)]
    pub outputs: Vec<RawUtxoEntry>,
}

/// Expands a UTXO transaction into money transfers routed through a txid
/// surrogate node: every input becomes `pubkey -> tx`, every output
/// `tx -> pubkey`. Ordinals run over inputs first, then outputs.
pub fn parse_bitcoin_tx(raw: &RawBitcoinTx) -> Result<Vec<Trace>> {
    let chain = Chain::Bitcoin;
    let surrogate = NodeId::new(chain, raw.tx_id.clone(), NodeClass::TxidSurrogate)?;

    let mut traces = Vec::with_capacity(raw.inputs.len() + raw.outputs.len());
    let entries = raw
        .inputs
        .iter()
        .map(|e| (e, true))
        .chain(raw.outputs.iter().map(|e| (e, false)));
    for (ordinal, (entry, is_input)) in entries.enumerate() {
        if entry.amount.is_sign_negative() && !entry.amount.is_zero() {
            return Err(Error::Parse(format!(
                "tx {}: negative amount {} for {}",
                raw.tx_id, entry.amount, entry.pubkey
            )));
        }
        let key = NodeId::regular(chain, entry.pubkey.clone())?;
        let (source, target) = if is_input {
            (key, surrogate.clone())
        } else {
            (surrogate.clone(), key)
        };
        let trace = Trace {
            chain,
            kind: TraceKind::MoneyTransfer,
            source,
            target,
            weight: entry.amount,
            timestamp: raw.timestamp,
            memo: None,
            initiator_role: InitiatorRole::User,
            tx_id: raw.tx_id.clone(),
            ordinal: ordinal as u32,
        };
        trace.validate()?;
        traces.push(trace);
    }
    Ok(traces)
}
