use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Chain, DAppCategory, DAppLabel, NodeId, Trace};

/// Maps `(chain, identifier)` to a DApp label. Stands in for a crawled DApp
/// directory.
#[derive(Debug, Clone, Default)]
pub struct DAppRegistry {
    entries: HashMap<(Chain, String), DAppLabel>,
}

#[derive(Deserialize)]
struct RegistryRow {
    name: String,
    category: String,
    chain: String,
    identifier: String,
}

impl DAppRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, chain: Chain, identifier: &str, label: DAppLabel) -> Option<DAppLabel> {
        self.entries.insert((chain, normalize(chain, identifier)), label)
    }

    pub fn lookup(&self, chain: Chain, identifier: &str) -> Option<&DAppLabel> {
        self.entries.get(&(chain, normalize(chain, identifier)))
    }

    pub fn label_of(&self, node: &NodeId) -> Option<&DAppLabel> {
        if node.is_surrogate() {
            return None;
        }
        self.lookup(node.chain(), node.identifier())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads `name,category,chain,identifier` rows. Later rows override
    /// earlier ones for the same key.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut registry = DAppRegistry::new();
        for (i, row) in rdr.deserialize::<RegistryRow>().enumerate() {
            let row = row?;
            let category: DAppCategory = row.category.parse()?;
            let chain: Chain = row.chain.parse()?;
            if row.identifier.is_empty() {
                return Err(Error::Parse(format!("registry row {}: empty identifier", i + 2)));
            }
            let label = DAppLabel {
                name: row.name,
                category,
            };
            if let Some(prev) = registry.insert(chain, &row.identifier, label) {
                log::warn!(
                    "registry row {}: {}:{} already labeled `{}`, last row wins",
                    i + 2,
                    chain,
                    row.identifier,
                    prev.name
                );
            }
        }
        Ok(registry)
    }
}

pub fn load_dapp_registry(path: impl AsRef<Path>) -> Result<DAppRegistry> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    DAppRegistry::from_reader(file)
}

fn normalize(chain: Chain, identifier: &str) -> String {
    match chain {
        Chain::Ethereum => super::ethereum::normalize_address(identifier),
        _ => identifier.trim().to_string(),
    }
}

/// A trace with the registry labels of its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub trace: Trace,
    pub source_label: Option<DAppLabel>,
    pub target_label: Option<DAppLabel>,
}

impl LabeledTrace {
    pub fn is_dapp_related(&self) -> bool {
        self.source_label.is_some() || self.target_label.is_some()
    }

    /// Categories of both endpoints; a trace between two DApps of different
    /// categories belongs to both.
    pub fn categories(&self) -> BTreeSet<DAppCategory> {
        self.source_label
            .iter()
            .chain(self.target_label.iter())
            .map(|l| l.category)
            .collect()
    }
}

pub fn label_traces(traces: impl IntoIterator<Item = Trace>, registry: &DAppRegistry) -> Vec<LabeledTrace> {
    traces
        .into_iter()
        .map(|trace| LabeledTrace {
            source_label: registry.label_of(&trace.source).cloned(),
            target_label: registry.label_of(&trace.target).cloned(),
            trace,
        })
        .collect()
}
