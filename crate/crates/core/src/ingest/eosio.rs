use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chain, InitiatorRole, NodeClass, NodeId, Trace, TraceKind};

/// One action receipt. A transfer produces one receipt on the token contract
/// and one notification receipt for each of payer and payee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEosioAction {
    pub tx_id: String,
    pub ordinal: u32,
    pub timestamp: u64,
    pub contract: String,
    pub action_name: String,
    pub receiver: String,
    /// Transfer payer, or the creator for `newaccount`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payer: Option<String>,
    /// Transfer payee, or the created account for `newaccount`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payee: Option<String>,
    /// Amount, optionally followed by a symbol (`"1.0000 EOS"`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memo: Option<String>,
    pub initiator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initiator_is_contract: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemAccounts {
    pub token_contract: String,
    pub system_account: String,
}

impl Default for SystemAccounts {
    fn default() -> Self {
        SystemAccounts {
            token_contract: "eosio.token".into(),
            system_account: "eosio".into(),
        }
    }
}

pub fn parse_eosio_action(raw: &RawEosioAction, system: &SystemAccounts) -> Result<Option<Trace>> {
    let chain = Chain::Eosio;
    if raw.action_name.is_empty() {
        return Err(Error::Parse(format!("tx {}#{}: empty action name", raw.tx_id, raw.ordinal)));
    }
    // Notification receipts replay an action already counted on its contract.
    if raw.receiver != raw.contract {
        return Ok(None);
    }
    let role = match raw.initiator_is_contract {
        Some(true) => InitiatorRole::Contract,
        Some(false) => InitiatorRole::User,
        None => InitiatorRole::Unknown,
    };
    let missing = |field: &str| {
        Error::Parse(format!(
            "tx {}#{}: `{}` action without {field}",
            raw.tx_id, raw.ordinal, raw.action_name
        ))
    };

    let (kind, source, target, weight, memo) =
        if raw.contract == system.token_contract && raw.action_name == "transfer" {
            let payer = raw.payer.as_deref().ok_or_else(|| missing("payer"))?;
            let payee = raw.payee.as_deref().ok_or_else(|| missing("payee"))?;
            let quantity = raw.quantity.as_deref().ok_or_else(|| missing("quantity"))?;
            (
                TraceKind::MoneyTransfer,
                NodeId::regular(chain, payer)?,
                NodeId::regular(chain, payee)?,
                parse_quantity(quantity)?,
                raw.memo.clone(),
            )
        } else if raw.contract == system.system_account && raw.action_name == "newaccount" {
            let creator = raw.payer.as_deref().unwrap_or(&raw.initiator);
            let created = raw.payee.as_deref().ok_or_else(|| missing("payee (new account)"))?;
            (
                TraceKind::AccountCreation,
                NodeId::regular(chain, creator)?,
                NodeId::regular(chain, created)?,
                Decimal::ONE,
                None,
            )
        } else {
            (
                TraceKind::ContractInvocation,
                NodeId::regular(chain, raw.initiator.as_str())?,
                NodeId::new(chain, raw.contract.as_str(), NodeClass::Contract)?,
                Decimal::ONE,
                None,
            )
        };

    let trace = Trace {
        chain,
        kind,
        source,
        target,
        weight,
        timestamp: raw.timestamp,
        memo,
        initiator_role: role,
        tx_id: raw.tx_id.clone(),
        ordinal: raw.ordinal,
    };
    trace.validate()?;
    Ok(Some(trace))
}

fn parse_quantity(s: &str) -> Result<Decimal> {
    let amount = s.split_whitespace().next().unwrap_or("");
    let value: Decimal = amount
        .parse()
        .map_err(|_| Error::Parse(format!("bad quantity `{s}`")))?;
    if value.is_sign_negative() && !value.is_zero() {
        return Err(Error::Parse(format!("negative quantity `{s}`")));
    }
    Ok(value)
}
