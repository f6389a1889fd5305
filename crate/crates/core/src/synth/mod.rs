//! Seeded generators with planted ground truth, and brute-force reference
//! implementations to check the production algorithms against.
//!
//! Every generator is a pure function of its arguments: the same seed gives
//! the same output, byte for byte once serialized.

pub mod oracle;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::GraphKind;
use crate::ingest::{RawBitcoinTx, RawEosioAction, RawUtxoEntry, SystemAccounts};
use crate::metrics::{DegreeHistogram, DegreeMode, MetricSeries};
use crate::model::{Chain, InitiatorRole, MonthKey, NodeClass, NodeId, Trace, TraceKind};

/// Month used by single-month generators.
pub const DEFAULT_MONTH: MonthKey = match MonthKey::const_new(2019, 1) {
    Some(m) => m,
    None => panic!("bad default month"),
};

/// Spread generated timestamps over the first 27 days so every month holds
/// them.
const MONTH_SPREAD_SECS: u64 = 27 * 24 * 3600;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn month_start(month: MonthKey) -> Result<u64> {
    month
        .first_timestamp()
        .ok_or_else(|| Error::Parameter(format!("generator month {month} precedes 1970")))
}

fn eos(name: &str) -> NodeId {
    NodeId::regular(Chain::Eosio, name).expect("generated names are nonempty")
}

fn eos_contract(name: &str) -> NodeId {
    NodeId::new(Chain::Eosio, name, NodeClass::Contract).expect("generated names are nonempty")
}

#[allow(clippy::too_many_arguments)]
fn trace(
    kind: TraceKind,
    source: NodeId,
    target: NodeId,
    weight: Decimal,
    timestamp: u64,
    memo: Option<String>,
    initiator_role: InitiatorRole,
    tx_id: String,
) -> Trace {
    Trace {
        chain: source.chain(),
        kind,
        source,
        target,
        weight,
        timestamp,
        memo,
        initiator_role,
        tx_id,
        ordinal: 0,
    }
}

/// Truncated discrete power law `p(d) ∝ d^alpha` as a cumulative table over
/// degrees `1..=len`.
///
/// Support ends at the largest degree expected at least once among `n`
/// draws. Degrees beyond that would appear at most once each, and their
/// singleton counts flatten the tail of an empirical histogram.
fn power_law_cdf(n: usize, alpha: f64) -> Vec<f64> {
    let max = (n - 1).max(1);
    let weights: Vec<f64> = (1..=max).map(|d| (d as f64).powf(alpha)).collect();
    let z: f64 = weights.iter().sum();
    let support = weights
        .iter()
        .rposition(|w| n as f64 * w / z >= 1.0)
        .map_or(1, |i| i + 1);
    let total: f64 = weights[..support].iter().sum();
    let mut acc = 0.0;
    weights[..support]
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

/// Money transfers whose out-degree sequence follows a power law with
/// exponent `alpha_target`; targets are distinct and uniform over the other
/// nodes. All traces fall in [`DEFAULT_MONTH`].
pub fn gen_power_law_graph(n: usize, alpha_target: f64, seed: u64) -> Result<Vec<Trace>> {
    if n < 100 {
        return Err(Error::Parameter(format!("power-law graph needs n >= 100, got {n}")));
    }
    if !(alpha_target < -1.0) || !alpha_target.is_finite() {
        return Err(Error::Parameter(format!(
            "power-law exponent must be below -1, got {alpha_target}"
        )));
    }
    let cdf = power_law_cdf(n, alpha_target);
    let mut rng = rng(seed);
    let start = month_start(DEFAULT_MONTH)?;
    let name = |i: usize| eos(&format!("pl{i:06}"));
    let mut traces = Vec::new();
    for i in 0..n {
        let u: f64 = rng.gen();
        let degree = cdf.partition_point(|&c| c < u).min(cdf.len() - 1) + 1;
        for (k, j) in index::sample(&mut rng, n - 1, degree).into_iter().enumerate() {
            let j = if j >= i { j + 1 } else { j };
            traces.push(trace(
                TraceKind::MoneyTransfer,
                name(i),
                name(j),
                Decimal::ONE,
                start + rng.gen_range(0..MONTH_SPREAD_SECS),
                None,
                InitiatorRole::User,
                format!("pl{i}.{k}"),
            ));
        }
    }
    Ok(traces)
}

/// Histogram whose proportions are exactly `c * d^alpha` for `d` in
/// `1..=max_degree`.
pub fn exact_power_law_histogram(alpha: f64, max_degree: u64) -> DegreeHistogram {
    let z: f64 = (1..=max_degree).map(|d| (d as f64).powf(alpha)).sum();
    DegreeHistogram {
        mode: DegreeMode::Out,
        points: (1..=max_degree).map(|d| (d, (d as f64).powf(alpha) / z)).collect(),
        node_count: 0,
    }
}

pub const EIDOS_CONTRACT: &str = "eidosonecoin";
pub const TOKEN_CONTRACT: &str = "eosio.token";

/// The deposit-and-refund loop of a token contract that pays back every
/// deposit and issues tokens on each one. Per user per round: a deposit
/// transfer, a refund transfer and one invocation of the token contract.
pub fn gen_eidos_loop(users: usize, rounds: usize, seed: u64) -> Result<Vec<Trace>> {
    if users == 0 || rounds == 0 {
        return Err(Error::Parameter("EIDOS loop needs at least one user and one round".into()));
    }
    let mut rng = rng(seed);
    let start = month_start(DEFAULT_MONTH)?;
    let deposit = Decimal::new(1, 4);
    let contract = eos(EIDOS_CONTRACT);
    let mut traces = Vec::with_capacity(3 * users * rounds);
    for r in 0..rounds {
        for u in 0..users {
            let user = eos(&format!("miner{u:05}"));
            let ts = start + rng.gen_range(0..MONTH_SPREAD_SECS);
            let tx = format!("eidos{r}.{u}");
            traces.push(trace(
                TraceKind::MoneyTransfer,
                user.clone(),
                contract.clone(),
                deposit,
                ts,
                None,
                InitiatorRole::User,
                format!("{tx}.dep"),
            ));
            traces.push(trace(
                TraceKind::MoneyTransfer,
                contract.clone(),
                user,
                deposit,
                ts,
                None,
                InitiatorRole::Contract,
                format!("{tx}.ref"),
            ));
            traces.push(trace(
                TraceKind::ContractInvocation,
                contract.clone(),
                eos_contract(TOKEN_CONTRACT),
                Decimal::ONE,
                ts,
                None,
                InitiatorRole::Contract,
                format!("{tx}.iss"),
            ));
        }
    }
    Ok(traces)
}

/// Each spammer sends one transfer of `amount` carrying `memo` to each of
/// `recipients_per` fresh accounts. Nobody replies.
pub fn gen_spam_campaign(
    spammers: usize,
    recipients_per: usize,
    amount: Decimal,
    memo: &str,
    seed: u64,
) -> Result<Vec<Trace>> {
    gen_spam_campaign_named("spammer", spammers, recipients_per, amount, memo, seed)
}

/// [`gen_spam_campaign`] with a custom account prefix, so several campaigns
/// can share a corpus.
pub fn gen_spam_campaign_named(
    prefix: &str,
    spammers: usize,
    recipients_per: usize,
    amount: Decimal,
    memo: &str,
    seed: u64,
) -> Result<Vec<Trace>> {
    if recipients_per == 0 {
        return Err(Error::Parameter("spam campaign needs at least one recipient".into()));
    }
    let mut rng = rng(seed);
    let start = month_start(DEFAULT_MONTH)?;
    let mut traces = Vec::with_capacity(spammers * recipients_per);
    for s in 0..spammers {
        let spammer = format!("{prefix}{s:03}");
        for r in 0..recipients_per {
            traces.push(trace(
                TraceKind::MoneyTransfer,
                eos(&spammer),
                eos(&format!("{spammer}.r{r:04}")),
                amount,
                start + rng.gen_range(0..MONTH_SPREAD_SECS),
                Some(memo.to_string()),
                InitiatorRole::User,
                format!("{spammer}.{r}"),
            ));
        }
    }
    Ok(traces)
}

/// Ordinary activity among `accounts` users, none of which meets all spam
/// rules: each user pays 1 to 20 others, about a third of payments are
/// answered, and one user in a hundred runs a payout bot that sends 1.0 to
/// 600 users (too much per recipient to be dust).
pub fn gen_benign_activity(accounts: usize, seed: u64) -> Result<Vec<Trace>> {
    if accounts < 2 {
        return Err(Error::Parameter("benign activity needs at least two accounts".into()));
    }
    const MEMOS: [&str; 4] = ["", "rent", "thanks", "invoice 42"];
    let mut rng = rng(seed);
    let start = month_start(DEFAULT_MONTH)?;
    let name = |i: usize| eos(&format!("user{i:06}"));
    let mut traces = Vec::new();
    let push = |traces: &mut Vec<Trace>, rng: &mut ChaCha8Rng, a: usize, b: usize, amount: Decimal, memo: &str| {
        let n = traces.len();
        traces.push(trace(
            TraceKind::MoneyTransfer,
            name(a),
            name(b),
            amount,
            start + rng.gen_range(0..MONTH_SPREAD_SECS),
            (!memo.is_empty()).then(|| memo.to_string()),
            InitiatorRole::User,
            format!("b{n}"),
        ));
    };
    for a in 0..accounts {
        let bot = a % 100 == 99 && accounts > 600;
        let count = if bot { 600 } else { rng.gen_range(1..=20usize.min(accounts - 1)) };
        for j in index::sample(&mut rng, accounts - 1, count) {
            let b = if j >= a { j + 1 } else { j };
            if bot {
                push(&mut traces, &mut rng, a, b, Decimal::ONE, "payout");
                continue;
            }
            let amount = Decimal::new(rng.gen_range(1..=500_000), 4);
            let memo = MEMOS[rng.gen_range(0..MEMOS.len())];
            push(&mut traces, &mut rng, a, b, amount, memo);
            if rng.gen_bool(1.0 / 3.0) {
                push(&mut traces, &mut rng, b, a, amount, "");
            }
        }
    }
    Ok(traces)
}

/// A constant series with one value shifted by `magnitude`. The seed is
/// accepted for a uniform generator interface; the output does not depend on
/// it.
pub fn gen_metric_spike(
    baseline: f64,
    length: usize,
    spike_index: usize,
    magnitude: f64,
    _seed: u64,
) -> Result<MetricSeries> {
    if length < 7 || spike_index < 3 || spike_index + 4 > length {
        return Err(Error::Parameter(format!(
            "spike index {spike_index} needs three months on each side in a series of {length}"
        )));
    }
    let mut month = DEFAULT_MONTH;
    let mut points = Vec::with_capacity(length);
    for i in 0..length {
        let v = if i == spike_index { baseline + magnitude } else { baseline };
        points.push((month, Some(v)));
        month = month.succ();
    }
    Ok(MetricSeries {
        chain: Chain::Eosio,
        kind: GraphKind::Mtg,
        metric: "synthetic".into(),
        points,
    })
}

/// Planted-outlier corpus: every month holds exactly `baseline` transfers
/// among a pool of ordinary accounts, and month `spike_month` also holds one
/// star per entry of `stars`, whose hub pays that many fresh accounts once
/// each.
#[derive(Debug, Clone)]
pub struct SpikeCorpus {
    pub traces: Vec<Trace>,
    pub first_month: MonthKey,
    pub last_month: MonthKey,
    pub spike_month: MonthKey,
    /// Hubs in lexicographic order.
    pub hubs: Vec<NodeId>,
}

pub fn gen_supernode_spike(
    months: usize,
    spike_index: usize,
    baseline: usize,
    stars: &[usize],
    seed: u64,
) -> Result<SpikeCorpus> {
    if months < 7 || spike_index < 3 || spike_index + 4 > months {
        return Err(Error::Parameter(format!(
            "spike month {spike_index} needs three months on each side in a span of {months}"
        )));
    }
    if baseline == 0 {
        return Err(Error::Parameter("spike corpus needs a nonzero baseline".into()));
    }
    let mut rng = rng(seed);
    let pool = (baseline / 4).max(8);
    let first_month = DEFAULT_MONTH;
    let mut month = first_month;
    let mut traces = Vec::new();
    let mut hubs = Vec::new();
    let mut spike_month = first_month;
    for m in 0..months {
        let start = month_start(month)?;
        for k in 0..baseline {
            let a = rng.gen_range(0..pool);
            let b = (a + rng.gen_range(1..pool)) % pool;
            traces.push(trace(
                TraceKind::MoneyTransfer,
                eos(&format!("acct{a:05}")),
                eos(&format!("acct{b:05}")),
                Decimal::new(rng.gen_range(1..100_000), 4),
                start + rng.gen_range(0..MONTH_SPREAD_SECS),
                None,
                InitiatorRole::User,
                format!("bg{m}.{k}"),
            ));
        }
        if m == spike_index {
            spike_month = month;
            for (s, &spokes) in stars.iter().enumerate() {
                let hub = eos(&format!("hub{s:02}"));
                for k in 0..spokes {
                    traces.push(trace(
                        TraceKind::MoneyTransfer,
                        hub.clone(),
                        eos(&format!("hub{s:02}.f{k:05}")),
                        Decimal::new(1, 4),
                        start + rng.gen_range(0..MONTH_SPREAD_SECS),
                        None,
                        InitiatorRole::User,
                        format!("star{s}.{k}"),
                    ));
                }
                hubs.push(hub);
            }
        }
        if m + 1 < months {
            month = month.succ();
        }
    }
    hubs.sort();
    Ok(SpikeCorpus {
        traces,
        first_month,
        last_month: month,
        spike_month,
        hubs,
    })
}

/// Random UTXO transactions over a pool of public keys, spread across
/// `months` months from [`DEFAULT_MONTH`]. Each has one to three inputs and
/// outputs; change back to an input key is common.
pub fn gen_utxo_corpus(txs: usize, months: usize, seed: u64) -> Result<Vec<RawBitcoinTx>> {
    if months == 0 {
        return Err(Error::Parameter("UTXO corpus needs at least one month".into()));
    }
    let mut rng = rng(seed);
    let pool = 50 + txs / 4;
    let key = |i: usize| format!("pk{i:05}");
    let mut month_starts = Vec::with_capacity(months);
    let mut m = DEFAULT_MONTH;
    for _ in 0..months {
        month_starts.push(month_start(m)?);
        m = m.succ();
    }
    let mut out = Vec::with_capacity(txs);
    for t in 0..txs {
        let inputs: Vec<RawUtxoEntry> = (0..rng.gen_range(1..=3))
            .map(|_| RawUtxoEntry {
                pubkey: key(rng.gen_range(0..pool)),
                amount: Decimal::new(rng.gen_range(1..=1_000_000_000), 8),
            })
            .collect();
        let mut outputs: Vec<RawUtxoEntry> = (0..rng.gen_range(1..=2))
            .map(|_| RawUtxoEntry {
                pubkey: key(rng.gen_range(0..pool)),
                amount: Decimal::new(rng.gen_range(1..=1_000_000_000), 8),
            })
            .collect();
        if rng.gen_bool(0.5) {
            outputs.push(RawUtxoEntry {
                pubkey: inputs[0].pubkey.clone(),
                amount: Decimal::new(rng.gen_range(1..=100_000_000), 8),
            });
        }
        out.push(RawBitcoinTx {
            tx_id: format!("{:016x}", rng.gen::<u64>() ^ t as u64),
            timestamp: month_starts[t % months] + rng.gen_range(0..MONTH_SPREAD_SECS),
            inputs,
            outputs,
        });
    }
    Ok(out)
}

/// Accounts created by a few root creators, with a random forest below them
/// whose shape depends on the seed. Every account is created exactly once.
pub fn gen_creation_forest(accounts: usize, roots: usize, seed: u64) -> Result<Vec<Trace>> {
    if roots == 0 {
        return Err(Error::Parameter("creation forest needs at least one root".into()));
    }
    let mut rng = rng(seed);
    let start = month_start(DEFAULT_MONTH)?;
    let name = |i: usize| eos(&format!("acc{i:06}"));
    let mut traces = Vec::with_capacity(accounts);
    for i in roots..roots + accounts {
        let creator = rng.gen_range(0..i);
        traces.push(trace(
            TraceKind::AccountCreation,
            name(creator),
            name(i),
            Decimal::ONE,
            start + rng.gen_range(0..MONTH_SPREAD_SECS),
            None,
            InitiatorRole::User,
            format!("new{i}"),
        ));
    }
    Ok(traces)
}

fn format_quantity(amount: Decimal) -> String {
    format!("{:.4} EOS", amount.round_dp(4))
}

/// Raw action receipts that ingest back into `traces`: the receipt on the
/// acting contract plus a notification receipt for every other party, each
/// on its own ordinal. Non-EOSIO traces are rejected.
pub fn to_eosio_actions(traces: &[Trace], system: &SystemAccounts) -> Result<Vec<RawEosioAction>> {
    let mut out = Vec::with_capacity(traces.len() * 3);
    for t in traces {
        if t.chain != Chain::Eosio {
            return Err(Error::Parameter(format!("cannot render a {} trace as EOSIO actions", t.chain)));
        }
        let source = t.source.identifier().to_string();
        let target = t.target.identifier().to_string();
        let initiator_is_contract = match t.initiator_role {
            InitiatorRole::Contract => Some(true),
            InitiatorRole::User => Some(false),
            InitiatorRole::Unknown => None,
        };
        let (contract, action_name, payer, payee, quantity, memo, receivers) = match t.kind {
            TraceKind::MoneyTransfer => (
                system.token_contract.clone(),
                "transfer",
                Some(source.clone()),
                Some(target.clone()),
                Some(format_quantity(t.weight)),
                t.memo.clone(),
                vec![source.clone(), target.clone()],
            ),
            TraceKind::AccountCreation => (
                system.system_account.clone(),
                "newaccount",
                Some(source.clone()),
                Some(target.clone()),
                None,
                None,
                vec![target.clone()],
            ),
            TraceKind::ContractInvocation => (
                target.clone(),
                "invoke",
                None,
                None,
                None,
                None,
                vec![source.clone()],
            ),
        };
        let mut parties = vec![contract.clone()];
        for r in receivers {
            if !parties.contains(&r) {
                parties.push(r);
            }
        }
        for (ordinal, receiver) in parties.into_iter().enumerate() {
            out.push(RawEosioAction {
                tx_id: t.tx_id.clone(),
                ordinal: ordinal as u32,
                timestamp: t.timestamp,
                contract: contract.clone(),
                action_name: action_name.to_string(),
                receiver,
                payer: payer.clone(),
                payee: payee.clone(),
                quantity: quantity.clone(),
                memo: memo.clone(),
                initiator: source.clone(),
                initiator_is_contract,
            });
        }
    }
    Ok(out)
}

/// Named generator configurations, for the command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "archetype", rename_all = "snake_case")]
pub enum Archetype {
    PowerLaw { n: usize, alpha: f64 },
    EidosLoop { users: usize, rounds: usize },
    SpamCampaign { spammers: usize, recipients_per: usize, amount: Decimal, memo: String, benign: usize },
    SupernodeSpike { months: usize, spike_index: usize, baseline: usize, stars: Vec<usize> },
    Utxo { txs: usize, months: usize },
    CreationForest { accounts: usize, roots: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub seed: u64,
    #[serde(flatten)]
    pub archetype: Archetype,
}

/// Generated corpus. Traces are sorted; `raw` holds the same data in the
/// chain's raw ingest format when one exists.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub chain: Chain,
    pub traces: Vec<Trace>,
    pub raw: RawCorpus,
}

#[derive(Debug, Clone)]
pub enum RawCorpus {
    None,
    Eosio(Vec<RawEosioAction>),
    Bitcoin(Vec<RawBitcoinTx>),
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    let seed = spec.seed;
    let (chain, mut traces, raw_btc) = match &spec.archetype {
        Archetype::PowerLaw { n, alpha } => (Chain::Eosio, gen_power_law_graph(*n, *alpha, seed)?, None),
        Archetype::EidosLoop { users, rounds } => (Chain::Eosio, gen_eidos_loop(*users, *rounds, seed)?, None),
        Archetype::SpamCampaign {
            spammers,
            recipients_per,
            amount,
            memo,
            benign,
        } => {
            let mut t = gen_spam_campaign(*spammers, *recipients_per, *amount, memo, seed)?;
            if *benign > 0 {
                t.extend(gen_benign_activity(*benign, seed.wrapping_add(1))?);
            }
            (Chain::Eosio, t, None)
        }
        Archetype::SupernodeSpike {
            months,
            spike_index,
            baseline,
            stars,
        } => (
            Chain::Eosio,
            gen_supernode_spike(*months, *spike_index, *baseline, stars, seed)?.traces,
            None,
        ),
        Archetype::Utxo { txs, months } => {
            let raw = gen_utxo_corpus(*txs, *months, seed)?;
            let mut t = Vec::new();
            for tx in &raw {
                t.extend(crate::ingest::parse_bitcoin_tx(tx)?);
            }
            (Chain::Bitcoin, t, Some(raw))
        }
        Archetype::CreationForest { accounts, roots } => {
            (Chain::Eosio, gen_creation_forest(*accounts, *roots, seed)?, None)
        }
    };
    crate::ingest::sort_traces(&mut traces);
    let raw = match (chain, raw_btc) {
        (_, Some(raw)) => RawCorpus::Bitcoin(raw),
        (Chain::Eosio, None) => RawCorpus::Eosio(to_eosio_actions(&traces, &SystemAccounts::default())?),
        _ => RawCorpus::None,
    };
    Ok(SynthCorpus { chain, traces, raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::ingest::{ingest_readers, IngestOptions};
    use crate::metrics::{degree_histogram, fit_alpha, trace_stats};

    #[test]
    fn power_law_preconditions() {
        assert!(matches!(gen_power_law_graph(50, -2.0, 1), Err(Error::Parameter(_))));
        assert!(matches!(gen_power_law_graph(1000, -1.0, 1), Err(Error::Parameter(_))));
        assert!(matches!(gen_power_law_graph(1000, f64::NAN, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn power_law_cdf_is_truncated() {
        let cdf = power_law_cdf(10_000, -2.0);
        assert!((cdf.last().unwrap() - 1.0).abs() < 1e-12);
        // n * p(d) >= 1 ends near sqrt(n / zeta(2))
        assert!((70..=80).contains(&cdf.len()), "{}", cdf.len());
    }

    #[test]
    fn power_law_deterministic_and_recovers() {
        let a = gen_power_law_graph(2000, -2.5, 9).unwrap();
        assert_eq!(a, gen_power_law_graph(2000, -2.5, 9).unwrap());
        assert_ne!(a, gen_power_law_graph(2000, -2.5, 10).unwrap());
        let g = build_graph(Chain::Eosio, GraphKind::Mtg, DEFAULT_MONTH, &a).unwrap();
        assert_eq!(g.node_count(), 2000);
        let fit = fit_alpha(&degree_histogram(&g, DegreeMode::Out)).unwrap();
        assert!((fit.alpha + 2.5).abs() < 0.3, "{}", fit.alpha);
    }

    #[test]
    fn exact_histogram_fit() {
        let fit = fit_alpha(&exact_power_law_histogram(-2.25, 50)).unwrap();
        assert!((fit.alpha + 2.25).abs() < 1e-12);
    }

    #[test]
    fn eidos_counts() {
        let ts = gen_eidos_loop(10, 100, 3).unwrap();
        let stats = trace_stats(&ts);
        assert_eq!(stats.counts[&TraceKind::MoneyTransfer], 2000);
        assert_eq!(stats.counts[&TraceKind::ContractInvocation], 1000);
        assert_eq!(gen_eidos_loop(1, 1, 0).unwrap().len(), 3);
        assert!(gen_eidos_loop(0, 1, 0).is_err());
    }

    #[test]
    fn spike_series() {
        let s = gen_metric_spike(1.0, 7, 3, 7.0, 0).unwrap();
        let values: Vec<f64> = s.points.iter().map(|p| p.1.unwrap()).collect();
        assert_eq!(values, [1.0, 1.0, 1.0, 8.0, 1.0, 1.0, 1.0]);
        assert!(gen_metric_spike(1.0, 7, 2, 1.0, 0).is_err());
        assert!(gen_metric_spike(1.0, 7, 4, 1.0, 0).is_err());
    }

    #[test]
    fn supernode_corpus_shape() {
        let c = gen_supernode_spike(9, 4, 200, &[1000], 5).unwrap();
        assert_eq!(c.traces.len(), 9 * 200 + 1000);
        assert_eq!(c.spike_month, "2019-05".parse().unwrap());
        assert_eq!(c.last_month, "2019-09".parse().unwrap());
        assert_eq!(c.hubs, [eos("hub00")]);
    }

    #[test]
    fn eosio_actions_round_trip() {
        let mut ts = gen_eidos_loop(2, 2, 1).unwrap();
        ts.extend(gen_spam_campaign(1, 3, Decimal::new(1, 4), "ad", 1).unwrap());
        ts.extend(gen_creation_forest(5, 1, 1).unwrap());
        crate::ingest::sort_traces(&mut ts);
        let actions = to_eosio_actions(&ts, &SystemAccounts::default()).unwrap();
        assert!(actions.len() > ts.len());
        let jsonl: String = actions
            .iter()
            .map(|a| serde_json::to_string(a).unwrap() + "\n")
            .collect();
        let out = ingest_readers(Chain::Eosio, [("raw".to_string(), jsonl.as_bytes())], &IngestOptions::default())
            .unwrap();
        assert_eq!(out.traces.len(), ts.len());
        let key = |t: &Trace| (t.kind, t.source.clone(), t.target.clone(), t.weight, t.memo.clone());
        let mut want: Vec<_> = ts.iter().map(key).collect();
        let mut got: Vec<_> = out.traces.iter().map(key).collect();
        want.sort();
        got.sort();
        assert_eq!(want, got);
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = SynthSpec {
            seed: 4,
            archetype: Archetype::Utxo { txs: 50, months: 2 },
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.traces, b.traces);
        assert!(matches!(a.raw, RawCorpus::Bitcoin(ref r) if r.len() == 50));
    }
}
