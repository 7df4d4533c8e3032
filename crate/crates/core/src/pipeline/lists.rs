use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StoreDraft;
use crate::cohort::{CohortKey, CompensationType, Dimension};
use crate::error::{Error, Result};

pub const TOP_LIST_LEN: usize = 10;
pub const RELATED_LIST_LEN: usize = 10;

/// Ranked neighbour ids: title id to similar title ids, region id to nearby
/// region ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelatedMaps {
    #[serde(default)]
    pub titles: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub regions: BTreeMap<String, Vec<String>>,
}

impl RelatedMaps {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::input(path.display().to_string(), e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lists {
    /// Root key to the values of each dimension that have a stored
    /// single-refinement insight.
    pub facets: BTreeMap<CohortKey, BTreeMap<Dimension, Vec<String>>>,
    /// Root key to single-refinement keys per dimension, by median base
    /// salary, highest first.
    pub top: BTreeMap<CohortKey, BTreeMap<Dimension, Vec<CohortKey>>>,
    /// Root key to related root keys.
    pub related: BTreeMap<CohortKey, Vec<CohortKey>>,
}

fn base_median(draft: &StoreDraft, key: &CohortKey) -> Option<f64> {
    draft.get(key)?.get(&CompensationType::BaseSalary).map(|i| i.median)
}

/// Builds facets, top lists and related lists. Without related maps, related
/// roots are the same-country roots closest in log median base salary.
pub fn make_lists(draft: &StoreDraft, related: Option<&RelatedMaps>) -> Lists {
    let mut lists = Lists::default();
    let mut ranked: BTreeMap<CohortKey, BTreeMap<Dimension, Vec<(CohortKey, f64)>>> = BTreeMap::new();
    for key in draft.keys() {
        lists.facets.entry(key.to_root()).or_default();
    }

    for key in draft.keys().filter(|k| k.level() == 1) {
        let (dim, value) = key.refinements.iter().next().expect("level 1");
        let root = key.to_root();
        lists
            .facets
            .get_mut(&root)
            .expect("inserted above")
            .entry(*dim)
            .or_default()
            .push(value.clone());
        if let Some(m) = base_median(draft, key) {
            ranked
                .entry(root)
                .or_default()
                .entry(*dim)
                .or_default()
                .push((key.clone(), m));
        }
    }
    lists.top = ranked
        .into_iter()
        .map(|(root, dims)| {
            let dims = dims
                .into_iter()
                .map(|(dim, mut keyed)| {
                    keyed.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                    keyed.truncate(TOP_LIST_LEN);
                    (dim, keyed.into_iter().map(|(k, _)| k).collect())
                })
                .collect();
            (root, dims)
        })
        .collect();

    let stored_roots: Vec<&CohortKey> = draft.keys().filter(|k| k.is_root()).collect();
    for root in &stored_roots {
        let list = match related {
            Some(maps) => from_maps(root, maps, draft),
            None => nearest_by_median(root, &stored_roots, draft),
        };
        lists.related.insert((*root).clone(), list);
    }
    lists
}

fn from_maps(root: &CohortKey, maps: &RelatedMaps, draft: &StoreDraft) -> Vec<CohortKey> {
    let by_title = maps
        .titles
        .get(&root.title)
        .into_iter()
        .flatten()
        .map(|t| CohortKey::root(t, &root.country, &root.region));
    let by_region = maps
        .regions
        .get(&root.region)
        .into_iter()
        .flatten()
        .map(|r| CohortKey::root(&root.title, &root.country, r));
    let mut seen = BTreeSet::new();
    by_title
        .chain(by_region)
        .filter(|k| k != root && draft.contains_key(k) && seen.insert(k.clone()))
        .collect()
}

fn nearest_by_median(root: &CohortKey, roots: &[&CohortKey], draft: &StoreDraft) -> Vec<CohortKey> {
    let Some(m) = base_median(draft, root) else {
        return Vec::new();
    };
    let mut scored: Vec<(f64, &CohortKey)> = roots
        .iter()
        .filter(|k| **k != root && k.country == root.country)
        .filter_map(|k| base_median(draft, k).map(|o| ((o.ln() - m.ln()).abs(), *k)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    scored
        .into_iter()
        .take(RELATED_LIST_LEN)
        .map(|(_, k)| k.clone())
        .collect()
}
