//! Read-only queries over an [`InsightStore`]: exact lookup with
//! generalization probing, facets, related cohorts and top lists.
//!
//! Every answer is a pure function of the store and the query; the HTTP
//! layer in [`http`] only moves JSON.

pub mod http;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortKey, CompensationType, Dimension, Insight};
use crate::pipeline::InsightStore;

/// Default order in which refinements are dropped while generalizing.
pub const DEFAULT_DROP_ORDER: [Dimension; 5] = [
    Dimension::Company,
    Dimension::Industry,
    Dimension::Experience,
    Dimension::Degree,
    Dimension::CompanySize,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Found,
    Generalized,
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyedInsights {
    pub key: CohortKey,
    pub insights: Vec<Insight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Insights(Vec<Insight>),
    Facets(std::collections::BTreeMap<Dimension, Vec<String>>),
    Related(Vec<KeyedInsights>),
    Top(Vec<KeyedInsights>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightResponse {
    pub status: Status,
    #[serde(rename = "served-key")]
    pub served_key: Option<CohortKey>,
    #[serde(rename = "generalization-steps")]
    pub generalization_steps: Vec<Dimension>,
    pub payload: Option<Payload>,
}

impl InsightResponse {
    fn not_found() -> Self {
        InsightResponse {
            status: Status::NotFound,
            served_key: None,
            generalization_steps: Vec::new(),
            payload: None,
        }
    }

    fn found(key: &CohortKey, payload: Payload) -> Self {
        InsightResponse {
            status: Status::Found,
            served_key: Some(key.clone()),
            generalization_steps: Vec::new(),
            payload: Some(payload),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaQuery {
    pub key: CohortKey,
    #[serde(default = "default_true")]
    pub allow_generalization: bool,
    /// Restrict the payload to one compensation type.
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub comp_type: Option<CompensationType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootQuery {
    pub key: CohortKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopQuery {
    pub key: CohortKey,
    pub dimension: Dimension,
}

/// A query for any finder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "finder", rename_all = "camelCase")]
pub enum InsightQuery {
    Criteria(CriteriaQuery),
    Facets(RootQuery),
    RelatedInsights(RootQuery),
    TopInsights(TopQuery),
}

/// The probe sequence for `key`: the key itself, then one refinement dropped
/// at a time in `drop_order` (refinements not named there go last, in
/// dimension order), ending at the root. Each probe carries the dimensions
/// dropped so far.
pub fn generalization_chain(key: &CohortKey, drop_order: &[Dimension]) -> Vec<(CohortKey, Vec<Dimension>)> {
    let mut order: Vec<Dimension> = drop_order.iter().copied().filter(|d| key.has(*d)).collect();
    order.dedup();
    for d in key.refinements.keys() {
        if !order.contains(d) {
            order.push(*d);
        }
    }
    let mut chain = vec![(key.clone(), Vec::new())];
    let mut current = key.clone();
    let mut steps = Vec::new();
    for d in order {
        current = current.without(d);
        steps.push(d);
        chain.push((current.clone(), steps.clone()));
    }
    chain
}

fn filter_type(insights: &[Insight], comp_type: Option<CompensationType>) -> Vec<Insight> {
    insights
        .iter()
        .filter(|i| comp_type.is_none_or(|t| i.comp_type == t))
        .cloned()
        .collect()
}

pub fn find_criteria(store: &InsightStore, query: &CriteriaQuery, drop_order: &[Dimension]) -> InsightResponse {
    let chain = generalization_chain(&query.key, drop_order);
    let probes = if query.allow_generalization { chain.len() } else { 1 };
    for (key, steps) in chain.into_iter().take(probes) {
        let Some(insights) = store.get(&key) else { continue };
        let insights = filter_type(insights, query.comp_type);
        if insights.is_empty() {
            continue;
        }
        return InsightResponse {
            status: if steps.is_empty() {
                Status::Found
            } else {
                Status::Generalized
            },
            served_key: Some(key),
            generalization_steps: steps,
            payload: Some(Payload::Insights(insights)),
        };
    }
    InsightResponse::not_found()
}

pub fn find_facets(store: &InsightStore, query: &RootQuery) -> InsightResponse {
    match store.lists.facets.get(&query.key) {
        Some(f) => InsightResponse::found(&query.key, Payload::Facets(f.clone())),
        None => InsightResponse::not_found(),
    }
}

fn keyed(store: &InsightStore, keys: &[CohortKey]) -> Vec<KeyedInsights> {
    keys.iter()
        .filter_map(|k| {
            store.get(k).map(|i| KeyedInsights {
                key: k.clone(),
                insights: i.to_vec(),
            })
        })
        .collect()
}

pub fn find_related(store: &InsightStore, query: &RootQuery) -> InsightResponse {
    if !store.lists.facets.contains_key(&query.key) {
        return InsightResponse::not_found();
    }
    let keys = store.lists.related.get(&query.key).map(Vec::as_slice).unwrap_or(&[]);
    InsightResponse::found(&query.key, Payload::Related(keyed(store, keys)))
}

pub fn find_top(store: &InsightStore, query: &TopQuery) -> InsightResponse {
    if !store.lists.facets.contains_key(&query.key) {
        return InsightResponse::not_found();
    }
    let keys = store
        .lists
        .top
        .get(&query.key)
        .and_then(|t| t.get(&query.dimension))
        .map(Vec::as_slice)
        .unwrap_or(&[]);
    InsightResponse::found(&query.key, Payload::Top(keyed(store, keys)))
}

pub fn execute(store: &InsightStore, query: &InsightQuery, drop_order: &[Dimension]) -> InsightResponse {
    match query {
        InsightQuery::Criteria(q) => find_criteria(store, q, drop_order),
        InsightQuery::Facets(q) => find_facets(store, q),
        InsightQuery::RelatedInsights(q) => find_related(store, q),
        InsightQuery::TopInsights(q) => find_top(store, q),
    }
}
