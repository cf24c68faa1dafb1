//! Trained ensembles and their evaluation.
//!
//! Inputs are binarized once per block of rows into a feature-major table,
//! then every tree reads its leaf index from that table bit by bit.

mod io;

use std::collections::HashMap;

use rayon::prelude::*;

pub use io::{from_bytes, load_model, save_model, to_bytes, FORMAT_VERSION, MAGIC};

use crate::booster::{Loss, TrainSplit};
use crate::cat_encoder::{CategoryDictionary, CombinationDescriptor, FullDataStats, SplitPart, TsConfig, UNSEEN};
use crate::data::{ColumnLayout, Dataset};
use crate::error::{Error, Result};
use crate::metrics::sigmoid;
use crate::quantization::{BinaryFeatureTable, BorderSet};
use crate::tree::ObliviousTree;

pub const DEFAULT_BLOCK_SIZE: usize = 2048;

/// Which statistic of a categorical feature or combination a split reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CtrStat {
    Count,
    /// Target statistic with the prior at this index.
    Ts(u8),
}

/// One binary feature of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSplit {
    /// `numeric[feature] >= border`; missing values are 0.
    Float { feature: usize, border: f64 },
    /// `categorical[feature] == value` (dictionary id).
    OneHot { feature: usize, value: u32 },
    /// `statistic(ctrs[ctr]) >= border`.
    Ctr { ctr: usize, stat: CtrStat, border: f64 },
}

/// Full-data statistics of a categorical feature or combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCtr {
    pub descriptor: CombinationDescriptor,
    /// Part values of every known tuple, indexed by tuple id.
    pub tuples: Vec<Box<[u32]>>,
    pub stats: FullDataStats,
    index: HashMap<Box<[u32]>, u32>,
}

impl ModelCtr {
    pub fn new(descriptor: CombinationDescriptor, tuples: Vec<Box<[u32]>>, stats: FullDataStats) -> Result<Self> {
        if stats.count.len() != tuples.len() || stats.label_sum.len() != tuples.len() {
            return Err(Error::Malformed("ctr statistics do not match tuple count".into()));
        }
        let mut index = HashMap::with_capacity(tuples.len());
        for (id, t) in tuples.iter().enumerate() {
            if t.len() != descriptor.part_count() {
                return Err(Error::Malformed("ctr tuple width does not match descriptor".into()));
            }
            if index.insert(t.clone(), id as u32).is_some() {
                return Err(Error::Malformed("duplicate ctr tuple".into()));
            }
        }
        Ok(ModelCtr {
            descriptor,
            tuples,
            stats,
            index,
        })
    }

    /// Tuple id, or [`UNSEEN`].
    pub fn lookup(&self, tuple: &[u32]) -> u32 {
        self.index.get(tuple).copied().unwrap_or(UNSEEN)
    }
}

/// Training configuration echoed into the model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub iterations: usize,
    pub learning_rate: f64,
    pub depth: usize,
    pub permutations: usize,
    pub seed: u64,
    pub one_hot_max_size: usize,
    pub max_ctr_complexity: usize,
    pub border_count: usize,
    pub ctr_border_count: usize,
    pub plain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub layout: ColumnLayout,
    pub loss: Loss,
    pub ts_config: TsConfig,
    pub float_borders: Vec<BorderSet>,
    pub dictionaries: Vec<CategoryDictionary>,
    pub ctrs: Vec<ModelCtr>,
    pub splits: Vec<ModelSplit>,
    pub trees: Vec<ObliviousTree>,
    pub meta: ModelMeta,
}

/// Part values of `desc` for one row.
fn fill_tuple(
    desc: &CombinationDescriptor,
    cat_id: impl Fn(usize) -> u32,
    numeric: impl Fn(usize) -> f64,
    out: &mut Vec<u32>,
) {
    out.clear();
    out.extend(desc.cat_parts().iter().map(|&c| cat_id(c)));
    out.extend(desc.split_parts().iter().map(|p| match *p {
        SplitPart::Float { feature, border } => (numeric(feature) >= border.0) as u32,
        SplitPart::OneHot { feature, value } => (cat_id(feature) == value) as u32,
    }));
}

impl Ensemble {
    pub fn n_numeric(&self) -> usize {
        self.layout.numeric_columns().len()
    }

    pub fn n_categorical(&self) -> usize {
        self.layout.categorical_columns().len()
    }

    /// Checks that every reference inside the model resolves.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Malformed(msg));
        if self.float_borders.len() != self.n_numeric() {
            return bad("border sets do not match numeric columns".into());
        }
        if self.dictionaries.len() != self.n_categorical() {
            return bad("dictionaries do not match categorical columns".into());
        }
        for ctr in &self.ctrs {
            let d = &ctr.descriptor;
            if d.cat_parts().iter().any(|&c| c >= self.n_categorical()) {
                return bad("ctr references a missing categorical column".into());
            }
            for p in d.split_parts() {
                let ok = match *p {
                    SplitPart::Float { feature, .. } => feature < self.n_numeric(),
                    SplitPart::OneHot { feature, .. } => feature < self.n_categorical(),
                };
                if !ok {
                    return bad("ctr split part references a missing column".into());
                }
            }
        }
        for s in &self.splits {
            let ok = match *s {
                ModelSplit::Float { feature, .. } => feature < self.n_numeric(),
                ModelSplit::OneHot { feature, .. } => feature < self.n_categorical(),
                ModelSplit::Ctr { ctr, stat, .. } => {
                    ctr < self.ctrs.len()
                        && match stat {
                            CtrStat::Count => true,
                            CtrStat::Ts(p) => (p as usize) < self.ts_config.priors.len(),
                        }
                }
            };
            if !ok {
                return bad(format!("split {s:?} references a missing feature"));
            }
        }
        for t in &self.trees {
            if t.level_features.iter().any(|&f| f as usize >= self.splits.len()) {
                return bad("tree references a missing binary feature".into());
            }
        }
        Ok(())
    }

    fn check_schema(&self, data: &Dataset) -> Result<()> {
        let (n, c) = (data.numeric_columns().len(), data.categorical_columns().len());
        if n != self.n_numeric() || c != self.n_categorical() {
            return Err(Error::Schema(format!(
                "model expects {} numeric and {} categorical columns, input has {n} and {c}",
                self.n_numeric(),
                self.n_categorical()
            )));
        }
        Ok(())
    }

    /// Binary feature table for all rows of `data`.
    pub fn binarize_input(&self, data: &Dataset) -> Result<BinaryFeatureTable> {
        self.check_schema(data)?;
        Ok(self.binarize_rows(data, 0, data.n_rows()))
    }

    /// Binary feature table for rows `lo..hi`; example `i` of the table is row `lo + i`.
    pub fn binarize_rows(&self, data: &Dataset, lo: usize, hi: usize) -> BinaryFeatureTable {
        let m = hi - lo;
        let numeric = data.numeric_columns();
        let cat_ids: Vec<Vec<u32>> = data
            .categorical_columns()
            .iter()
            .zip(&self.dictionaries)
            .map(|(col, dict)| col[lo..hi].iter().map(|t| dict.lookup(t)).collect())
            .collect();
        let mut ctr_ids: Vec<Option<Vec<u32>>> = vec![None; self.ctrs.len()];
        let mut table = BinaryFeatureTable::zeros(self.splits.len(), m);
        let mut tuple = Vec::new();
        for (f, split) in self.splits.iter().enumerate() {
            match *split {
                ModelSplit::Float { feature, border } => {
                    let col = &numeric[feature][lo..hi];
                    for (bit, &v) in table.feature_mut(f).iter_mut().zip(col) {
                        *bit = (v >= border) as u8;
                    }
                }
                ModelSplit::OneHot { feature, value } => {
                    for (bit, &id) in table.feature_mut(f).iter_mut().zip(&cat_ids[feature]) {
                        *bit = (id == value) as u8;
                    }
                }
                ModelSplit::Ctr { ctr, stat, border } => {
                    let model_ctr = &self.ctrs[ctr];
                    let ids = ctr_ids[ctr].get_or_insert_with(|| {
                        (0..m)
                            .map(|i| {
                                fill_tuple(
                                    &model_ctr.descriptor,
                                    |c| cat_ids[c][i],
                                    |j| numeric[j][lo + i],
                                    &mut tuple,
                                );
                                model_ctr.lookup(&tuple)
                            })
                            .collect()
                    });
                    for (bit, &id) in table.feature_mut(f).iter_mut().zip(ids.iter()) {
                        let value = match stat {
                            CtrStat::Count => model_ctr.stats.count_of(id),
                            CtrStat::Ts(p) => model_ctr.stats.value(id, &self.ts_config, p as usize),
                        };
                        *bit = (value >= border) as u8;
                    }
                }
            }
        }
        table
    }

    /// Sum of leaf values over all trees for example `example` of `table`.
    #[inline]
    pub fn score_binarized(&self, table: &BinaryFeatureTable, example: usize) -> f64 {
        let mut score = 0.0;
        for tree in &self.trees {
            score += tree.leaf_values[tree.leaf_index(table, example)];
        }
        score
    }

    /// Raw scores of all rows, evaluated in parallel blocks.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.predict_with_block_size(data, DEFAULT_BLOCK_SIZE)
    }

    /// Same as [`Ensemble::predict`]; `block_size` has no effect on the output.
    pub fn predict_with_block_size(&self, data: &Dataset, block_size: usize) -> Result<Vec<f64>> {
        self.check_schema(data)?;
        let n = data.n_rows();
        let block_size = block_size.max(1);
        let blocks: Vec<Vec<f64>> = (0..n.div_ceil(block_size))
            .into_par_iter()
            .map(|b| {
                let lo = b * block_size;
                let hi = (lo + block_size).min(n);
                let table = self.binarize_rows(data, lo, hi);
                (0..hi - lo).map(|i| self.score_binarized(&table, i)).collect()
            })
            .collect();
        Ok(blocks.concat())
    }

    /// Raw score of a single row.
    pub fn predict_row(&self, data: &Dataset, row: usize) -> Result<f64> {
        self.check_schema(data)?;
        if row >= data.n_rows() {
            return Err(Error::LengthMismatch(format!("row {row} of {}", data.n_rows())));
        }
        let table = self.binarize_rows(data, row, row + 1);
        Ok(self.score_binarized(&table, 0))
    }

    /// `sigmoid(score)` for every row.
    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(self.predict(data)?.into_iter().map(sigmoid).collect())
    }
}

/// Assembles an [`Ensemble`] from training-time splits, deduplicating
/// binary features and building full-data statistics for every ctr.
pub(crate) struct EnsembleBuilder {
    ensemble: Ensemble,
    split_index: HashMap<SplitKey, u32>,
    ctr_index: HashMap<CombinationDescriptor, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum SplitKey {
    Float(usize, u64),
    OneHot(usize, u32),
    Ctr(usize, CtrStat, u64),
}

impl EnsembleBuilder {
    pub(crate) fn new(
        layout: ColumnLayout,
        loss: Loss,
        ts_config: TsConfig,
        float_borders: Vec<BorderSet>,
        dictionaries: Vec<CategoryDictionary>,
        meta: ModelMeta,
    ) -> Self {
        EnsembleBuilder {
            ensemble: Ensemble {
                layout,
                loss,
                ts_config,
                float_borders,
                dictionaries,
                ctrs: Vec::new(),
                splits: Vec::new(),
                trees: Vec::new(),
                meta,
            },
            split_index: HashMap::new(),
            ctr_index: HashMap::new(),
        }
    }

    fn ctr_id(&mut self, desc: &CombinationDescriptor, cat_ids: &[Vec<u32>], data: &Dataset) -> Result<usize> {
        if let Some(&id) = self.ctr_index.get(desc) {
            return Ok(id);
        }
        let numeric = data.numeric_columns();
        let mut index: HashMap<Box<[u32]>, u32> = HashMap::new();
        let mut tuples: Vec<Box<[u32]>> = Vec::new();
        let mut tuple = Vec::new();
        let ids: Vec<u32> = (0..data.n_rows())
            .map(|row| {
                fill_tuple(desc, |c| cat_ids[c][row], |j| numeric[j][row], &mut tuple);
                if let Some(&id) = index.get(tuple.as_slice()) {
                    return id;
                }
                let id = tuples.len() as u32;
                let key: Box<[u32]> = tuple.as_slice().into();
                index.insert(key.clone(), id);
                tuples.push(key);
                id
            })
            .collect();
        let stats = FullDataStats::fit(&ids, data.labels(), tuples.len())?;
        let id = self.ensemble.ctrs.len();
        self.ensemble.ctrs.push(ModelCtr::new(desc.clone(), tuples, stats)?);
        self.ctr_index.insert(desc.clone(), id);
        Ok(id)
    }

    pub(crate) fn split_id(&mut self, split: &TrainSplit, cat_ids: &[Vec<u32>], data: &Dataset) -> Result<u32> {
        let (key, model_split) = match split {
            TrainSplit::Float { feature, border, .. } => (
                SplitKey::Float(*feature, border.to_bits()),
                ModelSplit::Float {
                    feature: *feature,
                    border: *border,
                },
            ),
            TrainSplit::OneHot { feature, value } => (
                SplitKey::OneHot(*feature, *value),
                ModelSplit::OneHot {
                    feature: *feature,
                    value: *value,
                },
            ),
            TrainSplit::Ctr { source, stat, border } => {
                let ctr = self.ctr_id(source, cat_ids, data)?;
                (
                    SplitKey::Ctr(ctr, *stat, border.to_bits()),
                    ModelSplit::Ctr {
                        ctr,
                        stat: *stat,
                        border: *border,
                    },
                )
            }
        };
        if let Some(&id) = self.split_index.get(&key) {
            return Ok(id);
        }
        let id = self.ensemble.splits.len() as u32;
        self.ensemble.splits.push(model_split);
        self.split_index.insert(key, id);
        Ok(id)
    }

    pub(crate) fn push_tree(&mut self, level_features: Vec<u32>, leaf_values: Vec<f64>) -> Result<()> {
        self.ensemble.trees.push(ObliviousTree::new(level_features, leaf_values)?);
        Ok(())
    }

    pub(crate) fn finish(self) -> Ensemble {
        self.ensemble
    }
}
