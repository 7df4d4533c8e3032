use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Lists, StoreDraft};
use crate::cohort::{CohortKey, CompensationType, Dimension, Insight};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Immutable key to insights map plus precomputed lists.
///
/// On disk: newline-delimited JSON, a header record followed by insight,
/// facet, top and related records, each group sorted by canonical key. The
/// build id is the SHA-256 of everything after the header line.
#[derive(Debug, Clone, PartialEq)]
pub struct InsightStore {
    pub format_version: u32,
    pub build_id: String,
    pub insights: BTreeMap<CohortKey, Vec<Insight>>,
    pub lists: Lists,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
enum Record {
    Header {
        format_version: u32,
        build_id: String,
    },
    Insights {
        key: CohortKey,
        insights: Vec<Insight>,
    },
    Facets {
        key: CohortKey,
        facets: BTreeMap<Dimension, Vec<String>>,
    },
    Top {
        key: CohortKey,
        top: BTreeMap<Dimension, Vec<CohortKey>>,
    },
    Related {
        key: CohortKey,
        related: Vec<CohortKey>,
    },
}

fn body(insights: &BTreeMap<CohortKey, Vec<Insight>>, lists: &Lists) -> String {
    let mut out = String::new();
    let mut push = |r: Record| {
        out.push_str(&serde_json::to_string(&r).expect("serializable"));
        out.push('\n');
    };
    for (key, insights) in insights {
        push(Record::Insights {
            key: key.clone(),
            insights: insights.clone(),
        });
    }
    for (key, facets) in &lists.facets {
        push(Record::Facets {
            key: key.clone(),
            facets: facets.clone(),
        });
    }
    for (key, top) in &lists.top {
        push(Record::Top {
            key: key.clone(),
            top: top.clone(),
        });
    }
    for (key, related) in &lists.related {
        push(Record::Related {
            key: key.clone(),
            related: related.clone(),
        });
    }
    out
}

fn digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

impl InsightStore {
    pub fn new(draft: StoreDraft, lists: Lists) -> Self {
        let insights: BTreeMap<CohortKey, Vec<Insight>> = draft
            .into_iter()
            .map(|(k, types)| (k, types.into_values().collect()))
            .collect();
        let build_id = digest(&body(&insights, &lists));
        InsightStore {
            format_version: FORMAT_VERSION,
            build_id,
            insights,
            lists,
        }
    }

    pub fn empty() -> Self {
        Self::new(StoreDraft::new(), Lists::default())
    }

    pub fn len(&self) -> usize {
        self.insights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insights.is_empty()
    }

    pub fn get(&self, key: &CohortKey) -> Option<&[Insight]> {
        self.insights.get(key).map(Vec::as_slice)
    }

    pub fn get_type(&self, key: &CohortKey, comp_type: CompensationType) -> Option<&Insight> {
        self.get(key)?.iter().find(|i| i.comp_type == comp_type)
    }

    pub fn to_ndjson(&self) -> String {
        let body = body(&self.insights, &self.lists);
        let header = serde_json::to_string(&Record::Header {
            format_version: self.format_version,
            build_id: self.build_id.clone(),
        })
        .expect("serializable");
        format!("{header}\n{body}")
    }

    /// Parses and verifies a store. The body must hash to the header's build
    /// id when re-serialized, so a store that reads cleanly also writes back
    /// byte-identically.
    pub fn from_ndjson(text: &str) -> Result<Self> {
        let bad = |m: String| Error::input("store", m);
        let mut lines = text.lines().enumerate();
        let (format_version, build_id) = match lines.next() {
            Some((_, l)) => match serde_json::from_str(l)? {
                Record::Header {
                    format_version,
                    build_id,
                } => (format_version, build_id),
                _ => return Err(bad("first record must be the header".into())),
            },
            None => return Err(bad("empty store".into())),
        };
        if format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {format_version}")));
        }
        let mut insights = BTreeMap::new();
        let mut lists = Lists::default();
        for (i, line) in lines {
            let record: Record = serde_json::from_str(line).map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
            let dup = match record {
                Record::Header { .. } => return Err(bad(format!("line {}: second header", i + 1))),
                Record::Insights { key, insights: v } => {
                    for ins in &v {
                        ins.validate().map_err(bad)?;
                        if ins.key != key {
                            return Err(bad(format!("line {}: insight key differs from record key", i + 1)));
                        }
                    }
                    insights.insert(key, v).is_some()
                }
                Record::Facets { key, facets } => lists.facets.insert(key, facets).is_some(),
                Record::Top { key, top } => lists.top.insert(key, top).is_some(),
                Record::Related { key, related } => lists.related.insert(key, related).is_some(),
            };
            if dup {
                return Err(bad(format!("line {}: duplicate key", i + 1)));
            }
        }
        let recomputed = digest(&body(&insights, &lists));
        if recomputed != build_id {
            return Err(bad(format!(
                "build id mismatch (header {build_id}, content {recomputed}); store is corrupt or not canonical"
            )));
        }
        Ok(InsightStore {
            format_version,
            build_id,
            insights,
            lists,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_ndjson())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_ndjson(&text).map_err(|e| match e {
            Error::Input { message, .. } => Error::input(path.display().to_string(), message),
            other => other,
        })
    }
}
