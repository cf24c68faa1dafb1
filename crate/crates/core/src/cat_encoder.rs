//! Categorical feature encoders.
//!
//! Categories are mapped to dense ids by an exact dictionary and turned into
//! numbers in three ways: ordered target statistics computed along a
//! permutation, occurrence counts, and one-hot indicators for low-cardinality
//! features. Feature combinations are grown greedily from the parts already
//! present in the tree under construction.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use crate::booster::Loss;
use crate::data::Permutation;
use crate::error::{Error, Result};

/// Id returned for tokens that were not seen when the dictionary was fitted.
pub const UNSEEN: u32 = u32::MAX;

/// Exact token -> dense id map; ids are assigned in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryDictionary {
    ids: HashMap<String, u32>,
    tokens: Vec<String>,
}

impl CategoryDictionary {
    pub fn fit<S: AsRef<str>>(column: &[S]) -> Self {
        let mut dict = CategoryDictionary::default();
        for token in column {
            dict.insert(token.as_ref());
        }
        dict
    }

    fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.ids.insert(token.to_string(), id);
        self.tokens.push(token.to_string());
        id
    }

    /// Rebuilds a dictionary from tokens listed in id order.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut dict = CategoryDictionary::default();
        for t in &tokens {
            if dict.ids.contains_key(t) {
                return Err(Error::Malformed(format!("duplicate category token {t:?}")));
            }
            dict.insert(t);
        }
        Ok(dict)
    }

    pub fn lookup(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNSEEN)
    }

    pub fn encode<S: AsRef<str>>(&self, column: &[S]) -> Vec<u32> {
        column.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    pub fn cardinality(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Priors `P` and prior weight `a` used to smooth target statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TsConfig {
    pub priors: Vec<f64>,
    pub prior_weight: f64,
}

impl TsConfig {
    pub fn new(priors: Vec<f64>, prior_weight: f64) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::Config("at least one prior is required".into()));
        }
        if !(prior_weight > 0.0) || !prior_weight.is_finite() {
            return Err(Error::Config(format!("prior weight must be > 0, got {prior_weight}")));
        }
        Ok(TsConfig {
            priors,
            prior_weight,
        })
    }

    /// `{0, 0.5, 1}` for Logloss; the mean label for RMSE. Weight 1 in both cases.
    pub fn default_for(loss: Loss, labels: &[f64]) -> Self {
        let priors = match loss {
            Loss::Logloss => vec![0.0, 0.5, 1.0],
            Loss::Rmse => {
                let mean = if labels.is_empty() {
                    0.0
                } else {
                    labels.iter().sum::<f64>() / labels.len() as f64
                };
                vec![mean]
            }
        };
        TsConfig {
            priors,
            prior_weight: 1.0,
        }
    }

    #[inline]
    pub fn smooth(&self, label_sum: f64, count: f64, prior_index: usize) -> f64 {
        let a = self.prior_weight;
        (label_sum + a * self.priors[prior_index]) / (count + a)
    }
}

fn cardinality_of(ids: &[u32]) -> usize {
    ids.iter()
        .filter(|&&id| id != UNSEEN)
        .map(|&id| id as usize + 1)
        .max()
        .unwrap_or(0)
}

/// Ordered target statistic of every example, indexed by row.
///
/// The example at permutation position `p` gets
/// `(sum of labels of same-id examples at positions < p + a*P) / (their count + a)`,
/// computed in one forward pass with running per-id sums.
pub fn ordered_target_statistic(
    ids: &[u32],
    labels: &[f64],
    perm: &Permutation,
    config: &TsConfig,
    prior_index: usize,
) -> Result<Vec<f64>> {
    if ids.len() != labels.len() || ids.len() != perm.len() {
        return Err(Error::LengthMismatch(format!(
            "ids {}, labels {}, permutation {}",
            ids.len(),
            labels.len(),
            perm.len()
        )));
    }
    if prior_index >= config.priors.len() {
        return Err(Error::Config(format!("prior index {prior_index} out of range")));
    }
    let mut out = vec![0.0; ids.len()];
    ordered_target_statistic_into(ids, labels, perm, config, prior_index, &mut out);
    Ok(out)
}

pub(crate) fn ordered_target_statistic_into(
    ids: &[u32],
    labels: &[f64],
    perm: &Permutation,
    config: &TsConfig,
    prior_index: usize,
    out: &mut [f64],
) {
    let mut running = vec![(0.0f64, 0u32); cardinality_of(ids)];
    for &row in perm.order() {
        let (sum, count) = &mut running[ids[row] as usize];
        out[row] = config.smooth(*sum, *count as f64, prior_index);
        *sum += labels[row];
        *count += 1;
    }
}

/// Number of occurrences of each example's id over the whole column.
pub fn count_statistic(ids: &[u32]) -> Vec<f64> {
    let mut counts = vec![0u32; cardinality_of(ids)];
    for &id in ids {
        counts[id as usize] += 1;
    }
    ids.iter().map(|&id| counts[id as usize] as f64).collect()
}

/// One indicator column per category when `cardinality <= threshold`.
pub fn one_hot_expand(ids: &[u32], cardinality: usize, threshold: usize) -> Option<Vec<Vec<u8>>> {
    if cardinality > threshold {
        return None;
    }
    let mut columns = vec![vec![0u8; ids.len()]; cardinality];
    for (row, &id) in ids.iter().enumerate() {
        if let Some(col) = columns.get_mut(id as usize) {
            col[row] = 1;
        }
    }
    Some(columns)
}

/// Total-ordered wrapper for border values used inside hashed/ordered keys.
#[derive(Debug, Clone, Copy)]
pub struct Border(pub f64);

impl PartialEq for Border {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Border {}

impl PartialOrd for Border {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Border {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Border {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// A tree split that takes part in a combination as a two-valued category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitPart {
    /// `[numeric feature >= border]`
    Float { feature: usize, border: Border },
    /// `[categorical feature == category id]`
    OneHot { feature: usize, value: u32 },
}

/// Canonical description of a categorical feature or a feature combination.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CombinationDescriptor {
    cat_parts: Vec<usize>,
    split_parts: Vec<SplitPart>,
}

impl CombinationDescriptor {
    pub fn new(mut cat_parts: Vec<usize>, mut split_parts: Vec<SplitPart>) -> Result<Self> {
        cat_parts.sort_unstable();
        cat_parts.dedup();
        split_parts.sort_unstable();
        split_parts.dedup();
        if cat_parts.is_empty() && split_parts.is_empty() {
            return Err(Error::Config("a combination needs at least one part".into()));
        }
        Ok(CombinationDescriptor {
            cat_parts,
            split_parts,
        })
    }

    pub fn single(cat_feature: usize) -> Self {
        CombinationDescriptor {
            cat_parts: vec![cat_feature],
            split_parts: Vec::new(),
        }
    }

    pub fn split(part: SplitPart) -> Self {
        CombinationDescriptor {
            cat_parts: Vec::new(),
            split_parts: vec![part],
        }
    }

    pub fn cat_parts(&self) -> &[usize] {
        &self.cat_parts
    }

    pub fn split_parts(&self) -> &[SplitPart] {
        &self.split_parts
    }

    pub fn part_count(&self) -> usize {
        self.cat_parts.len() + self.split_parts.len()
    }

    fn with_cat(&self, cat: usize) -> Option<Self> {
        if self.cat_parts.contains(&cat) {
            return None;
        }
        let mut cat_parts = self.cat_parts.clone();
        cat_parts.push(cat);
        cat_parts.sort_unstable();
        Some(CombinationDescriptor {
            cat_parts,
            split_parts: self.split_parts.clone(),
        })
    }
}

/// Candidate combinations for the next split of a tree.
///
/// Every part already present in the tree (categorical features, combinations
/// and two-valued splits) is extended by one categorical feature of the
/// dataset. An empty tree yields no candidates.
pub fn enumerate_combinations(
    present: &[CombinationDescriptor],
    all_cat_features: &[usize],
    max_complexity: usize,
) -> Vec<CombinationDescriptor> {
    let mut out = BTreeSet::new();
    for part in present {
        for &cat in all_cat_features {
            if let Some(ext) = part.with_cat(cat) {
                if ext.part_count() <= max_complexity {
                    out.insert(ext);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Dense ids of the value tuples formed by `parts`, numbered in
/// first-occurrence order over rows.
pub fn combination_ids(parts: &[&[u32]]) -> Vec<u32> {
    let Some((first, rest)) = parts.split_first() else {
        return Vec::new();
    };
    let n = first.len();
    let mut ids = renumber(first.iter().map(|&v| v as u64));
    for part in rest {
        debug_assert_eq!(part.len(), n);
        ids = renumber(ids.iter().zip(part.iter()).map(|(&a, &b)| ((a as u64) << 32) | b as u64));
    }
    ids
}

fn renumber(keys: impl Iterator<Item = u64>) -> Vec<u32> {
    let mut map: HashMap<u64, u32> = HashMap::new();
    keys.map(|k| {
        let next = map.len() as u32;
        *map.entry(k).or_insert(next)
    })
    .collect()
}

/// Per-id label sums and counts over the full training set, for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct FullDataStats {
    pub label_sum: Vec<f64>,
    pub count: Vec<u32>,
    pub total: u64,
}

impl FullDataStats {
    pub fn fit(ids: &[u32], labels: &[f64], cardinality: usize) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::LengthMismatch(format!(
                "ids {} vs labels {}",
                ids.len(),
                labels.len()
            )));
        }
        let cardinality = cardinality.max(cardinality_of(ids));
        let mut label_sum = vec![0.0; cardinality];
        let mut count = vec![0u32; cardinality];
        for (&id, &y) in ids.iter().zip(labels) {
            if id != UNSEEN {
                label_sum[id as usize] += y;
                count[id as usize] += 1;
            }
        }
        let total = count.iter().map(|&c| c as u64).sum();
        Ok(FullDataStats {
            label_sum,
            count,
            total,
        })
    }

    /// Smoothed mean label of `id`; `P` for unseen ids.
    pub fn value(&self, id: u32, config: &TsConfig, prior_index: usize) -> f64 {
        match self.label_sum.get(id as usize) {
            Some(&sum) => config.smooth(sum, self.count[id as usize] as f64, prior_index),
            None => config.priors[prior_index],
        }
    }

    pub fn count_of(&self, id: u32) -> f64 {
        self.count.get(id as usize).map_or(0.0, |&c| c as f64)
    }
}

/// Fits full-data statistics and returns them with the smoothed value of
/// every id in `0..cardinality`.
pub fn full_data_statistic(
    ids: &[u32],
    labels: &[f64],
    config: &TsConfig,
    prior_index: usize,
) -> Result<(FullDataStats, Vec<f64>)> {
    let stats = FullDataStats::fit(ids, labels, 0)?;
    let values = (0..stats.count.len() as u32)
        .map(|id| stats.value(id, config, prior_index))
        .collect();
    Ok((stats, values))
}
