use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cohort::CohortKey;
use crate::error::{Error, Result};

/// Layout of root-cohort feature vectors:
/// `[1, title one-hot, region one-hot, country one-hot?, wage index?]`.
///
/// The country block is only present when the model spans more than one
/// country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDictionary {
    pub titles: Vec<String>,
    pub regions: Vec<String>,
    pub countries: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_wage_index: Option<BTreeMap<String, f64>>,
}

impl FeatureDictionary {
    pub fn intercept_only() -> Self {
        FeatureDictionary {
            titles: Vec::new(),
            regions: Vec::new(),
            countries: Vec::new(),
            region_wage_index: None,
        }
    }

    pub fn from_roots<'a>(
        roots: impl IntoIterator<Item = &'a CohortKey>,
        region_wage_index: Option<BTreeMap<String, f64>>,
    ) -> Self {
        let mut titles = BTreeSet::new();
        let mut regions = BTreeSet::new();
        let mut countries = BTreeSet::new();
        for k in roots {
            titles.insert(k.title.clone());
            regions.insert(k.region.clone());
            countries.insert(k.country.clone());
        }
        FeatureDictionary {
            titles: titles.into_iter().collect(),
            regions: regions.into_iter().collect(),
            countries: if countries.len() > 1 {
                countries.into_iter().collect()
            } else {
                Vec::new()
            },
            region_wage_index,
        }
    }

    fn is_intercept_only(&self) -> bool {
        self.titles.is_empty()
            && self.regions.is_empty()
            && self.countries.is_empty()
            && self.region_wage_index.is_none()
    }

    pub fn dim(&self) -> usize {
        1 + self.titles.len()
            + self.regions.len()
            + self.countries.len()
            + usize::from(self.region_wage_index.is_some())
    }

    pub fn encode(&self, key: &CohortKey) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.dim()];
        x[0] = 1.0;
        if self.is_intercept_only() {
            return Ok(x);
        }
        let unseen = |what: &str, v: &str| Error::UnseenFeatureLevel(format!("{what} {v:?}"));
        let mut offset = 1;
        let t = self
            .titles
            .binary_search(&key.title)
            .map_err(|_| unseen("title", &key.title))?;
        x[offset + t] = 1.0;
        offset += self.titles.len();
        let r = self
            .regions
            .binary_search(&key.region)
            .map_err(|_| unseen("region", &key.region))?;
        x[offset + r] = 1.0;
        offset += self.regions.len();
        if !self.countries.is_empty() {
            let c = self
                .countries
                .binary_search(&key.country)
                .map_err(|_| unseen("country", &key.country))?;
            x[offset + c] = 1.0;
            offset += self.countries.len();
        }
        if let Some(index) = &self.region_wage_index {
            x[offset] = *index
                .get(&key.region)
                .ok_or_else(|| unseen("region wage index for", &key.region))?;
        }
        Ok(x)
    }
}
