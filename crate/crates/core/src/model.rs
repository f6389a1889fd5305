//! Shared vocabulary: chains, trace kinds, month keys, node identities and
//! DApp labels.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate};
use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Native token amount. Exact decimal, never binary floating point.
pub type Amount = Decimal;

/// Largest accepted timestamp (9999-12-31T23:59:59Z).
pub const MAX_TIMESTAMP: u64 = 253_402_300_799;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chain {
    /// UTXO model.
    Bitcoin,
    /// Account model with external and internal transactions.
    Ethereum,
    /// Account model with actions and notifications.
    Eosio,
}

impl Chain {
    pub const ALL: [Chain; 3] = [Chain::Bitcoin, Chain::Ethereum, Chain::Eosio];

    pub fn as_str(self) -> &'static str {
        match self {
            Chain::Bitcoin => "btc",
            Chain::Ethereum => "eth",
            Chain::Eosio => "eos",
        }
    }

    /// Month of the chain's genesis block.
    pub fn launch_month(self) -> MonthKey {
        match self {
            Chain::Bitcoin => MonthKey::new(2009, 1),
            Chain::Ethereum => MonthKey::new(2015, 7),
            Chain::Eosio => MonthKey::new(2018, 6),
        }
        .expect("static month")
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Chain {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl FromStr for Chain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "btc" | "bitcoin" => Ok(Chain::Bitcoin),
            "eth" | "ethereum" => Ok(Chain::Ethereum),
            "eos" | "eosio" => Ok(Chain::Eosio),
            other => Err(Error::Parse(format!("unknown chain `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    MoneyTransfer,
    AccountCreation,
    ContractInvocation,
}

impl TraceKind {
    pub const ALL: [TraceKind; 3] = [
        TraceKind::MoneyTransfer,
        TraceKind::AccountCreation,
        TraceKind::ContractInvocation,
    ];

    /// Short notation used in report series names.
    pub fn short(self) -> &'static str {
        match self {
            TraceKind::MoneyTransfer => "tm",
            TraceKind::AccountCreation => "ta",
            TraceKind::ContractInvocation => "tc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitiatorRole {
    User,
    Contract,
    Unknown,
}

impl InitiatorRole {
    pub const ALL: [InitiatorRole; 3] =
        [InitiatorRole::User, InitiatorRole::Contract, InitiatorRole::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            InitiatorRole::User => "user",
            InitiatorRole::Contract => "contract",
            InitiatorRole::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Regular,
    Contract,
    /// Per-transaction node joining the inputs and outputs of a UTXO
    /// transaction.
    TxidSurrogate,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Regular => "regular",
            NodeClass::Contract => "contract",
            NodeClass::TxidSurrogate => "txid",
        }
    }
}

/// Identity of a graph node.
///
/// Equality, hashing and ordering use the chain, the identifier and whether
/// the node is a txid surrogate. `Regular` vs `Contract` is an attribute: the
/// same address observed before and after it is known to hold code is still
/// one node.
#[derive(Debug, Clone)]
pub struct NodeId {
    chain: Chain,
    identifier: String,
    class: NodeClass,
}

impl NodeId {
    pub fn new(chain: Chain, identifier: impl Into<String>, class: NodeClass) -> Result<Self> {
        let identifier = identifier.into();
        if identifier.is_empty() {
            return Err(Error::InvalidTrace("empty node identifier".into()));
        }
        if class == NodeClass::TxidSurrogate && chain != Chain::Bitcoin {
            return Err(Error::InvalidTrace(format!(
                "txid surrogate `{identifier}` on {chain} chain"
            )));
        }
        Ok(NodeId {
            chain,
            identifier,
            class,
        })
    }

    pub fn regular(chain: Chain, identifier: impl Into<String>) -> Result<Self> {
        Self::new(chain, identifier, NodeClass::Regular)
    }

    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    pub fn class(&self) -> NodeClass {
        self.class
    }

    pub fn is_surrogate(&self) -> bool {
        self.class == NodeClass::TxidSurrogate
    }

    pub(crate) fn with_class(mut self, class: NodeClass) -> Self {
        if !self.is_surrogate() && class != NodeClass::TxidSurrogate {
            self.class = class;
        }
        self
    }

    fn key(&self) -> (Chain, &str, bool) {
        (self.chain, &self.identifier, self.is_surrogate())
    }
}

impl PartialEq for NodeId {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for NodeId {}

impl Hash for NodeId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_surrogate() {
            write!(f, "tx:{}", self.identifier)
        } else {
            f.write_str(&self.identifier)
        }
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Calendar month, rendered `yyyy-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey {
    year: i32,
    month: u8,
}

impl MonthKey {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) || !(0..=9999).contains(&year) {
            return Err(Error::MonthKey(format!("{year}-{month}")));
        }
        Ok(MonthKey { year, month })
    }

    /// `const` counterpart of [`MonthKey::new`].
    pub const fn const_new(year: i32, month: u8) -> Option<Self> {
        if month < 1 || month > 12 || year < 0 || year > 9999 {
            return None;
        }
        Some(MonthKey { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    pub fn succ(self) -> MonthKey {
        if self.month == 12 {
            MonthKey {
                year: self.year + 1,
                month: 1,
            }
        } else {
            MonthKey {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// First second of the month as a Unix timestamp, or `None` before 1970.
    pub fn first_timestamp(self) -> Option<u64> {
        let date = NaiveDate::from_ymd_opt(self.year, self.month as u32, 1)?;
        u64::try_from(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp()).ok()
    }

    /// Number of months from `self` to `later` (negative when `later` is
    /// earlier).
    pub fn months_until(self, later: MonthKey) -> i64 {
        (later.year as i64 - self.year as i64) * 12 + (later.month as i64 - self.month as i64)
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MonthKey(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        MonthKey::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for MonthKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// UTC calendar month containing `timestamp`.
///
/// Panics if `timestamp` exceeds [`MAX_TIMESTAMP`]; traces are validated
/// against that bound on construction.
pub fn month_of(timestamp: u64) -> MonthKey {
    assert!(timestamp <= MAX_TIMESTAMP, "timestamp {timestamp} out of range");
    let dt = DateTime::from_timestamp(timestamp as i64, 0).expect("bounded timestamp");
    MonthKey {
        year: dt.year(),
        month: dt.month() as u8,
    }
}

/// Inclusive, ascending list of months from `first` to `last`.
pub fn month_range(first: MonthKey, last: MonthKey) -> Result<Vec<MonthKey>> {
    if first > last {
        return Err(Error::MonthRange { first, last });
    }
    let mut out = Vec::with_capacity(first.months_until(last) as usize + 1);
    let mut m = first;
    while m <= last {
        out.push(m);
        m = m.succ();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DAppCategory {
    DeFi,
    Exchange,
    Finance,
    Gambling,
    Game,
    HighRisk,
    Platform,
    Social,
    Token,
    Tool,
    Eidos,
}

impl DAppCategory {
    pub const ALL: [DAppCategory; 11] = [
        DAppCategory::DeFi,
        DAppCategory::Exchange,
        DAppCategory::Finance,
        DAppCategory::Gambling,
        DAppCategory::Game,
        DAppCategory::HighRisk,
        DAppCategory::Platform,
        DAppCategory::Social,
        DAppCategory::Token,
        DAppCategory::Tool,
        DAppCategory::Eidos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DAppCategory::DeFi => "DeFi",
            DAppCategory::Exchange => "Exchange",
            DAppCategory::Finance => "Finance",
            DAppCategory::Gambling => "Gambling",
            DAppCategory::Game => "Game",
            DAppCategory::HighRisk => "High-Risk",
            DAppCategory::Platform => "Platform",
            DAppCategory::Social => "Social",
            DAppCategory::Token => "Token",
            DAppCategory::Tool => "Tool",
            DAppCategory::Eidos => "EIDOS",
        }
    }
}

impl fmt::Display for DAppCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DAppCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        DAppCategory::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownCategory(t.to_string()))
    }
}

impl Serialize for DAppCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DAppLabel {
    pub name: String,
    pub category: DAppCategory,
}

/// One normalized interaction between two nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub chain: Chain,
    pub kind: TraceKind,
    pub source: NodeId,
    pub target: NodeId,
    pub weight: Amount,
    pub timestamp: u64,
    pub memo: Option<String>,
    pub initiator_role: InitiatorRole,
    pub tx_id: String,
    pub ordinal: u32,
}

impl Trace {
    pub fn month(&self) -> MonthKey {
        month_of(self.timestamp)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidTrace(format!("{}#{}: {msg}", self.tx_id, self.ordinal)));
        if self.source.chain() != self.chain || self.target.chain() != self.chain {
            return fail("endpoint chain differs from trace chain".into());
        }
        if self.weight.is_sign_negative() && !self.weight.is_zero() {
            return fail(format!("negative weight {}", self.weight));
        }
        if self.kind == TraceKind::AccountCreation && self.weight != Decimal::ONE {
            return fail(format!("account creation weight {} != 1", self.weight));
        }
        if self.timestamp > MAX_TIMESTAMP {
            return fail(format!("timestamp {} out of range", self.timestamp));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mk(s: &str) -> MonthKey {
        s.parse().unwrap()
    }

    #[test]
    fn month_of_examples() {
        assert_eq!(month_of(0).to_string(), "1970-01");
        assert_eq!(month_of(1_583_020_800).to_string(), "2020-03");
        assert_eq!(month_of(1_583_020_799).to_string(), "2020-02");
    }

    #[test]
    fn month_range_examples() {
        assert_eq!(month_range(mk("2020-01"), mk("2020-01")).unwrap(), vec![mk("2020-01")]);
        let r = month_range(mk("2019-11"), mk("2020-02")).unwrap();
        assert_eq!(
            r.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            ["2019-11", "2019-12", "2020-01", "2020-02"]
        );
        assert_eq!(month_range(mk("2018-06"), mk("2020-03")).unwrap().len(), 22);
        assert!(matches!(
            month_range(mk("2020-02"), mk("2020-01")),
            Err(Error::MonthRange { .. })
        ));
    }

    #[test]
    fn chain_launch_to_2020_03() {
        let end = mk("2020-03");
        let counts: Vec<usize> = Chain::ALL
            .iter()
            .map(|c| month_range(c.launch_month(), end).unwrap().len())
            .collect();
        assert_eq!(counts, [135, 57, 22]);
    }

    #[test]
    fn first_timestamp_round_trips() {
        assert_eq!(mk("1970-01").first_timestamp(), Some(0));
        assert_eq!(mk("1969-12").first_timestamp(), None);
        let m = mk("2019-03");
        let ts = m.first_timestamp().unwrap();
        assert_eq!(month_of(ts), m);
        assert_eq!(month_of(ts - 1), mk("2019-02"));
    }

    #[test]
    fn month_key_rejects_garbage() {
        for s in ["2020-13", "2020-00", "20-01", "2020/01", "2020-1", "abcd-ef"] {
            assert!(s.parse::<MonthKey>().is_err(), "{s}");
        }
    }

    #[test]
    fn node_identity_ignores_contract_flag() {
        let a = NodeId::new(Chain::Ethereum, "0xaa", NodeClass::Regular).unwrap();
        let b = NodeId::new(Chain::Ethereum, "0xaa", NodeClass::Contract).unwrap();
        assert_eq!(a, b);
        let s = NodeId::new(Chain::Bitcoin, "aa", NodeClass::TxidSurrogate).unwrap();
        let k = NodeId::new(Chain::Bitcoin, "aa", NodeClass::Regular).unwrap();
        assert_ne!(s, k);
    }

    #[test]
    fn surrogate_only_on_bitcoin() {
        assert!(NodeId::new(Chain::Eosio, "abc", NodeClass::TxidSurrogate).is_err());
        assert!(NodeId::new(Chain::Bitcoin, "", NodeClass::Regular).is_err());
    }

    #[test]
    fn category_closed_set() {
        assert_eq!("high-risk".parse::<DAppCategory>().unwrap(), DAppCategory::HighRisk);
        assert_eq!("EIDOS".parse::<DAppCategory>().unwrap(), DAppCategory::Eidos);
        assert!(matches!("Gaming".parse::<DAppCategory>(), Err(Error::UnknownCategory(_))));
    }

    proptest! {
        #[test]
        fn month_rendering_round_trips(year in 0i32..=9999, month in 1u8..=12) {
            let m = MonthKey::new(year, month).unwrap();
            prop_assert_eq!(m.to_string().parse::<MonthKey>().unwrap(), m);
        }

        #[test]
        fn month_order_follows_time(a in 0u64..=4_102_444_800, b in 0u64..=4_102_444_800) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(month_of(lo) <= month_of(hi));
        }
    }
}
