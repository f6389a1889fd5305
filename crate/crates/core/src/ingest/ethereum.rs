use std::collections::HashSet;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chain, InitiatorRole, NodeClass, NodeId, Trace, TraceKind};

/// Wei per Ether, as a decimal scale.
const WEI_SCALE: u32 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EthTraceType {
    External,
    InternalCall,
    InternalCreate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEthereumTrace {
    pub tx_id: String,
    pub ordinal: u32,
    pub timestamp: u64,
    pub from: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    /// Transferred value in wei.
    pub value: Decimal,
    /// Length of the call data in bytes.
    pub input_data: u64,
    pub trace_type: EthTraceType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_is_contract: Option<bool>,
}

/// Classifies Ethereum-style traces.
///
/// Keeps a running set of known contract addresses so records that lack a
/// `to_is_contract` flag can still be classified. Feed records in timestamp
/// order.
#[derive(Debug, Default, Clone)]
pub struct EthereumAdapter {
    contracts: HashSet<String>,
}

impl EthereumAdapter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_seed_contracts<I, S>(seed: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        EthereumAdapter {
            contracts: seed.into_iter().map(|s| normalize_address(s.as_ref())).collect(),
        }
    }

    pub fn is_known_contract(&self, address: &str) -> bool {
        self.contracts.contains(&normalize_address(address))
    }

    pub fn parse(&mut self, raw: &RawEthereumTrace) -> Result<Option<Trace>> {
        let chain = Chain::Ethereum;
        let to = raw
            .to
            .as_deref()
            .map(normalize_address)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Parse(format!("tx {}#{}: missing `to`", raw.tx_id, raw.ordinal)))?;
        let from = normalize_address(&raw.from);
        if raw.value.is_sign_negative() && !raw.value.is_zero() {
            return Err(Error::Parse(format!("tx {}: negative value", raw.tx_id)));
        }
        if !raw.value.fract().is_zero() {
            return Err(Error::Parse(format!("tx {}: fractional wei value {}", raw.tx_id, raw.value)));
        }

        let internal = raw.trace_type != EthTraceType::External;
        let role = if internal {
            InitiatorRole::Contract
        } else {
            InitiatorRole::User
        };
        let source_class = if internal || self.contracts.contains(&from) {
            NodeClass::Contract
        } else {
            NodeClass::Regular
        };
        if internal {
            self.contracts.insert(from.clone());
        }

        let (kind, weight, target_class) = if raw.trace_type == EthTraceType::InternalCreate {
            self.contracts.insert(to.clone());
            (TraceKind::AccountCreation, Decimal::ONE, NodeClass::Contract)
        } else {
            let target_is_contract = match raw.to_is_contract {
                Some(flag) => {
                    if flag {
                        self.contracts.insert(to.clone());
                    }
                    flag
                }
                None => self.contracts.contains(&to),
            };
            if raw.value > Decimal::ZERO && raw.input_data == 0 && !target_is_contract {
                (TraceKind::MoneyTransfer, to_ether(raw.value)?, NodeClass::Regular)
            } else if target_is_contract || raw.input_data > 0 {
                let class = if target_is_contract {
                    NodeClass::Contract
                } else {
                    NodeClass::Regular
                };
                (TraceKind::ContractInvocation, Decimal::ONE, class)
            } else {
                return Ok(None);
            }
        };

        let trace = Trace {
            chain,
            kind,
            source: NodeId::new(chain, from, source_class)?,
            target: NodeId::new(chain, to, target_class)?,
            weight,
            timestamp: raw.timestamp,
            memo: None,
            initiator_role: role,
            tx_id: raw.tx_id.clone(),
            ordinal: raw.ordinal,
        };
        trace.validate()?;
        Ok(Some(trace))
    }
}

/// Classifies a single record with no contract history beyond its own flag.
pub fn parse_ethereum_trace(raw: &RawEthereumTrace) -> Result<Option<Trace>> {
    EthereumAdapter::new().parse(raw)
}

pub(crate) fn normalize_address(s: &str) -> String {
    s.trim().to_ascii_lowercase()
}

fn to_ether(wei: Decimal) -> Result<Decimal> {
    let mut v = wei.trunc();
    v.rescale(0);
    let scale = v.scale() + WEI_SCALE;
    v.set_scale(scale)
        .map_err(|e| Error::Parse(format!("value {wei} out of range: {e}")))?;
    Ok(v.normalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(value: &str, input: u64, ty: EthTraceType, to_is_contract: Option<bool>) -> RawEthereumTrace {
        RawEthereumTrace {
            tx_id: "0xt".into(),
            ordinal: 0,
            timestamp: 1_500_000_000,
            from: "0xA".into(),
            to: Some("0xB".into()),
            value: value.parse().unwrap(),
            input_data: input,
            trace_type: ty,
            to_is_contract,
        }
    }

    #[test]
    fn plain_ether_transfer() {
        let t = parse_ethereum_trace(&raw("1000000000000000000", 0, EthTraceType::External, Some(false)))
            .unwrap()
            .unwrap();
        assert_eq!(t.kind, TraceKind::MoneyTransfer);
        assert_eq!(t.initiator_role, InitiatorRole::User);
        assert_eq!(t.weight, Decimal::ONE);
        assert_eq!(t.source.identifier(), "0xa");
    }

    #[test]
    fn internal_create_is_account_creation() {
        let t = parse_ethereum_trace(&raw("0", 0, EthTraceType::InternalCreate, None))
            .unwrap()
            .unwrap();
        assert_eq!(t.kind, TraceKind::AccountCreation);
        assert_eq!(t.initiator_role, InitiatorRole::Contract);
        assert_eq!(t.weight, Decimal::ONE);
    }

    #[test]
    fn call_into_contract() {
        let t = parse_ethereum_trace(&raw("0", 68, EthTraceType::External, Some(true)))
            .unwrap()
            .unwrap();
        assert_eq!(t.kind, TraceKind::ContractInvocation);
        assert_eq!(t.target.class(), NodeClass::Contract);
    }

    #[test]
    fn value_to_contract_is_invocation() {
        let t = parse_ethereum_trace(&raw("5", 0, EthTraceType::External, Some(true)))
            .unwrap()
            .unwrap();
        assert_eq!(t.kind, TraceKind::ContractInvocation);
    }

    #[test]
    fn empty_transaction_dropped() {
        assert!(parse_ethereum_trace(&raw("0", 0, EthTraceType::External, Some(false)))
            .unwrap()
            .is_none());
    }

    #[test]
    fn missing_to_is_error() {
        let mut r = raw("1", 0, EthTraceType::External, None);
        r.to = None;
        assert!(matches!(parse_ethereum_trace(&r), Err(Error::Parse(_))));
    }

    #[test]
    fn running_contract_set_learns_from_creations() {
        let mut adapter = EthereumAdapter::new();
        let mut create = raw("0", 0, EthTraceType::InternalCreate, None);
        create.to = Some("0xC".into());
        adapter.parse(&create).unwrap();
        let mut pay = raw("10", 0, EthTraceType::External, None);
        pay.to = Some("0xc".into());
        let t = adapter.parse(&pay).unwrap().unwrap();
        assert_eq!(t.kind, TraceKind::ContractInvocation);

        let seeded = EthereumAdapter::with_seed_contracts(["0xB"]);
        assert!(seeded.is_known_contract("0xb"));
    }

    #[test]
    fn wei_scaling_is_exact() {
        assert_eq!(to_ether("1".parse().unwrap()).unwrap().to_string(), "0.000000000000000001");
        assert_eq!(
            to_ether("123456789000000000000000000".parse().unwrap()).unwrap().to_string(),
            "123456789"
        );
    }
}
