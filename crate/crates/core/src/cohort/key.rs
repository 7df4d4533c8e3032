use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Dimension;
use crate::error::Error;

/// A node of the generalization lattice: the root triple plus any refinements.
///
/// Canonical form is `title/country/region` followed by `;dimension=value`
/// pairs in dimension order. Reserved characters inside ids are
/// percent-escaped so that the canonical string is unique per key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CohortKey {
    pub title: String,
    pub country: String,
    pub region: String,
    pub refinements: BTreeMap<Dimension, String>,
}

impl CohortKey {
    pub fn root(title: impl Into<String>, country: impl Into<String>, region: impl Into<String>) -> Self {
        CohortKey {
            title: title.into(),
            country: country.into(),
            region: region.into(),
            refinements: BTreeMap::new(),
        }
    }

    pub fn with(mut self, dimension: Dimension, value: impl Into<String>) -> Self {
        self.refinements.insert(dimension, value.into());
        self
    }

    pub fn without(&self, dimension: Dimension) -> Self {
        let mut key = self.clone();
        key.refinements.remove(&dimension);
        key
    }

    pub fn is_root(&self) -> bool {
        self.refinements.is_empty()
    }

    pub fn level(&self) -> usize {
        self.refinements.len()
    }

    pub fn to_root(&self) -> CohortKey {
        CohortKey::root(&self.title, &self.country, &self.region)
    }

    pub fn has(&self, dimension: Dimension) -> bool {
        self.refinements.contains_key(&dimension)
    }

    /// Proper generalizations: every key obtained by removing a non-empty
    /// subset of refinements. Ordered by descending refinement count, then
    /// by key order.
    pub fn ancestors(&self) -> Vec<CohortKey> {
        let dims: Vec<(&Dimension, &String)> = self.refinements.iter().collect();
        let k = dims.len();
        let mut out = Vec::with_capacity((1usize << k).saturating_sub(1));
        // Each mask selects the refinements that are kept; the full mask is self.
        for mask in 0..(1usize << k) - 1 {
            let refinements = dims
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, (d, v))| (**d, (*v).clone()))
                .collect();
            out.push(CohortKey {
                title: self.title.clone(),
                country: self.country.clone(),
                region: self.region.clone(),
                refinements,
            });
        }
        out.sort_by(|a, b| b.level().cmp(&a.level()).then_with(|| a.cmp(b)));
        out
    }

    /// True when `self` is a proper generalization of `other`.
    pub fn is_ancestor_of(&self, other: &CohortKey) -> bool {
        self.title == other.title
            && self.country == other.country
            && self.region == other.region
            && self.refinements.len() < other.refinements.len()
            && self
                .refinements
                .iter()
                .all(|(d, v)| other.refinements.get(d) == Some(v))
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

fn escape(raw: &str, out: &mut String) {
    for c in raw.chars() {
        match c {
            '%' => out.push_str("%25"),
            '/' => out.push_str("%2F"),
            ';' => out.push_str("%3B"),
            '=' => out.push_str("%3D"),
            _ => out.push(c),
        }
    }
}

fn unescape(raw: &str, whole: &str) -> Result<String, Error> {
    let bad = |why: &str| Error::BadKey(whole.to_string(), why.to_string());
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        let code: String = chars.by_ref().take(2).collect();
        match code.as_str() {
            "25" => out.push('%'),
            "2F" => out.push('/'),
            "3B" => out.push(';'),
            "3D" => out.push('='),
            _ => return Err(bad("bad escape")),
        }
    }
    if out.is_empty() {
        return Err(bad("empty id"));
    }
    Ok(out)
}

impl fmt::Display for CohortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        escape(&self.title, &mut s);
        s.push('/');
        escape(&self.country, &mut s);
        s.push('/');
        escape(&self.region, &mut s);
        for (dim, value) in &self.refinements {
            s.push(';');
            s.push_str(dim.as_str());
            s.push('=');
            escape(value, &mut s);
        }
        f.write_str(&s)
    }
}

impl FromStr for CohortKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| Error::BadKey(s.to_string(), why.to_string());
        let mut parts = s.split(';');
        let root = parts.next().unwrap_or_default();
        let triple: Vec<&str> = root.split('/').collect();
        if triple.len() != 3 {
            return Err(bad("expected title/country/region"));
        }
        let mut key = CohortKey::root(
            unescape(triple[0], s)?,
            unescape(triple[1], s)?,
            unescape(triple[2], s)?,
        );
        for part in parts {
            let (dim, value) = part.split_once('=').ok_or_else(|| bad("refinement without '='"))?;
            let dim: Dimension = dim.parse().map_err(|_| bad("unknown dimension"))?;
            if key.refinements.insert(dim, unescape(value, s)?).is_some() {
                return Err(bad("duplicate dimension"));
            }
        }
        Ok(key)
    }
}

impl Serialize for CohortKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CohortKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(refs: &[(Dimension, &str)]) -> CohortKey {
        refs.iter()
            .fold(CohortKey::root("T", "US", "R"), |k, (d, v)| k.with(*d, *v))
    }

    #[test]
    fn root_has_no_ancestors() {
        assert!(key(&[]).ancestors().is_empty());
    }

    #[test]
    fn two_refinements_give_powerset_minus_self() {
        let k = key(&[(Dimension::Company, "acme"), (Dimension::Industry, "internet")]);
        let got = k.ancestors();
        assert_eq!(
            got,
            vec![
                key(&[(Dimension::Company, "acme")]),
                key(&[(Dimension::Industry, "internet")]),
                key(&[]),
            ]
        );
    }

    #[test]
    fn single_refinement_generalizes_to_root() {
        let k = key(&[(Dimension::Experience, "10+")]);
        assert_eq!(k.ancestors(), vec![key(&[])]);
    }

    #[test]
    fn canonical_escapes_reserved_characters() {
        let k = CohortKey::root("a/b", "US", "x;y=z%").with(Dimension::Company, "c=d");
        let s = k.canonical();
        assert_eq!(s, "a%2Fb/US/x%3By%3Dz%25;company=c%3Dd");
        assert_eq!(s.parse::<CohortKey>().unwrap(), k);
    }

    #[test]
    fn rejects_malformed_keys() {
        assert!("a/b".parse::<CohortKey>().is_err());
        assert!("a/b/c;planet=mars".parse::<CohortKey>().is_err());
        assert!("a/b/c;company=x;company=y".parse::<CohortKey>().is_err());
        assert!("a//c".parse::<CohortKey>().is_err());
    }

    fn arb_key() -> impl Strategy<Value = CohortKey> {
        let id = "[a-zA-Z0-9 /;=%+_-]{1,8}";
        (
            id,
            "[A-Z]{2}",
            id,
            proptest::collection::btree_map(proptest::sample::select(Dimension::ALL.to_vec()), id, 0..=5),
        )
            .prop_map(|(title, country, region, refinements)| CohortKey {
                title,
                country,
                region,
                refinements,
            })
    }

    proptest! {
        #[test]
        fn canonical_round_trips(k in arb_key()) {
            prop_assert_eq!(k.canonical().parse::<CohortKey>().unwrap(), k);
        }

        #[test]
        fn ancestor_count_and_antisymmetry(k in arb_key()) {
            let ancestors = k.ancestors();
            prop_assert_eq!(ancestors.len(), (1usize << k.level()) - 1);
            for a in &ancestors {
                prop_assert!(a.is_ancestor_of(&k));
                prop_assert!(!a.ancestors().contains(&k));
            }
        }
    }
}
