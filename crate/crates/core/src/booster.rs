//! The boosting loop.
//!
//! Each iteration samples one of the `s` permutations, estimates gradients
//! from prefix models that never saw the example being scored, picks an
//! oblivious tree structure from those gradients, then sets the leaf values
//! of the final model from plain full-model gradients.
//!
//! Prefix models are kept in logarithmic form: for every permutation, level
//! `i` holds the predictions of a model fitted on the examples at positions
//! `< 2^i - 1` (0-based), for all positions `< 2^(i+1) - 1`. The example at
//! 0-based position `p` reads its gradient from level `floor(log2(p + 1))`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cat_encoder::{
    combination_ids, count_statistic, enumerate_combinations, ordered_target_statistic_into, Border,
    CategoryDictionary, CombinationDescriptor, SplitPart, TsConfig,
};
use crate::data::{generate_permutations, Dataset, Permutation, PermutationSet};
use crate::error::{Error, Result};
use crate::metrics;
use crate::quantization::{
    compute_borders, pack_bins, quantize, BorderSet, ColumnBins, QuantizedMatrix, DEFAULT_CTR_BINS,
    DEFAULT_NUMERIC_BINS, MAX_BINS,
};
use crate::scorer::{CtrStat, Ensemble, EnsembleBuilder, ModelMeta};
use crate::tree::{
    fit_leaf_values, search_structure, CandidateColumn, CandidateSource, SelectedSplit, SplitKind,
    MAX_DEPTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    Logloss,
    Rmse,
}

impl Loss {
    /// Negative derivative of the loss with respect to the raw score `a`.
    #[inline]
    pub fn gradient(self, y: f64, a: f64) -> f64 {
        match self {
            Loss::Logloss => y - metrics::sigmoid(a),
            Loss::Rmse => y - a,
        }
    }

    /// Pointwise loss: binary cross-entropy on `sigmoid(a)`, or half squared error.
    pub fn loss(self, y: f64, a: f64) -> f64 {
        match self {
            // ln(1 + e^a) - y*a, evaluated without overflow
            Loss::Logloss => a.max(0.0) + (-a.abs()).exp().ln_1p() - y * a,
            Loss::Rmse => 0.5 * (y - a) * (y - a),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Loss::Logloss => "Logloss",
            Loss::Rmse => "RMSE",
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Logloss" | "logloss" => Ok(Loss::Logloss),
            "RMSE" | "rmse" => Ok(Loss::Rmse),
            other => Err(Error::Config(format!("unknown loss {other:?}"))),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// See [`Loss::gradient`].
#[inline]
pub fn gradient(loss: Loss, y: f64, a: f64) -> f64 {
    loss.gradient(y, a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub depth: usize,
    pub permutations: usize,
    pub seed: u64,
    pub loss: Loss,
    pub one_hot_max_size: usize,
    pub max_ctr_complexity: usize,
    /// Bins for numeric features.
    pub border_count: usize,
    /// Bins for target-statistic and count features.
    pub ctr_border_count: usize,
    /// Classic boosting: structure gradients come from the full model.
    pub plain: bool,
    /// Store numeric bins bit-packed. Has no effect on results.
    pub packed: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 1000,
            learning_rate: 0.03,
            depth: 6,
            permutations: 4,
            seed: 0,
            loss: Loss::Logloss,
            one_hot_max_size: 2,
            max_ctr_complexity: 4,
            border_count: DEFAULT_NUMERIC_BINS,
            ctr_border_count: DEFAULT_CTR_BINS,
            plain: false,
            packed: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return fail(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if self.depth > MAX_DEPTH {
            return fail(format!("depth must be at most {MAX_DEPTH}, got {}", self.depth));
        }
        if self.permutations == 0 {
            return fail("number of permutations must be at least 1".into());
        }
        if self.one_hot_max_size > MAX_BINS {
            return fail(format!("one-hot max size must be at most {MAX_BINS}"));
        }
        if self.max_ctr_complexity == 0 {
            return fail("max ctr complexity must be at least 1".into());
        }
        for (name, bins) in [("border count", self.border_count), ("ctr border count", self.ctr_border_count)] {
            if !(2..=MAX_BINS).contains(&bins) {
                return fail(format!("{name} must lie in [2, {MAX_BINS}], got {bins}"));
            }
        }
        Ok(())
    }
}

/// Prefix-model predictions of one permutation, stored by permutation position.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedApproximations {
    n: usize,
    levels: Vec<Vec<f64>>,
}

impl OrderedApproximations {
    /// All predictions start at the zero baseline.
    pub fn new(n: usize) -> Self {
        let n_levels = if n == 0 { 0 } else { Self::level_of_position(n - 1) + 1 };
        let levels = (0..n_levels).map(|i| vec![0.0; Self::stored_len_for(i, n)]).collect();
        OrderedApproximations { n, levels }
    }

    /// `floor(log2(p + 1))` for 0-based position `p`.
    #[inline]
    pub fn level_of_position(p: usize) -> usize {
        (usize::BITS - 1 - (p + 1).leading_zeros()) as usize
    }

    fn stored_len_for(level: usize, n: usize) -> usize {
        ((1usize << (level + 1)) - 1).min(n)
    }

    /// Number of leading positions whose gradients fit level `level`.
    pub fn training_len(&self, level: usize) -> usize {
        ((1usize << level) - 1).min(self.n)
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// Total number of stored predictions; always below `4n`.
    pub fn stored_values(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Gradient of every example, indexed by row, taken at the prediction of
    /// the prefix model assigned to its permutation position.
    pub fn ordered_gradients(&self, perm: &Permutation, labels: &[f64], loss: Loss) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (p, &row) in perm.order().iter().enumerate() {
            let level = Self::level_of_position(p);
            out[row] = loss.gradient(labels[row], self.levels[level][p]);
        }
        out
    }

    /// Adds one tree with fixed structure to every prefix model. Level `i`
    /// sets each leaf to `learning_rate * mean gradient` over the examples at
    /// positions `< 2^i - 1` in that leaf (0 for empty leaves).
    pub fn update(
        &mut self,
        leaf_of_row: &[u32],
        n_leaves: usize,
        perm: &Permutation,
        labels: &[f64],
        loss: Loss,
        learning_rate: f64,
    ) {
        let order = perm.order();
        let mut sums = vec![0.0f64; n_leaves];
        let mut counts = vec![0u32; n_leaves];
        let mut values = vec![0.0f64; n_leaves];
        for level in 0..self.levels.len() {
            let train_len = self.training_len(level);
            let predictions = &mut self.levels[level];
            sums.fill(0.0);
            counts.fill(0);
            for p in 0..train_len {
                let row = order[p];
                let leaf = leaf_of_row[row] as usize;
                sums[leaf] += loss.gradient(labels[row], predictions[p]);
                counts[leaf] += 1;
            }
            for leaf in 0..n_leaves {
                values[leaf] = if counts[leaf] == 0 {
                    0.0
                } else {
                    learning_rate * (sums[leaf] / counts[leaf] as f64)
                };
            }
            for (p, prediction) in predictions.iter_mut().enumerate() {
                *prediction += values[leaf_of_row[order[p]] as usize];
            }
        }
    }
}

/// Per-iteration record of a traced training run.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub permutation: usize,
    pub depth: usize,
    /// Gradients used for the structure search, by row.
    pub structure_gradients: Vec<f64>,
    /// Leaf of every row under each permutation's encodings.
    pub leaves: Vec<Vec<u32>>,
    /// Prefix models after the update, one per permutation.
    pub approximations: Vec<OrderedApproximations>,
    pub stored_values: Vec<usize>,
    pub train_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub permutations: PermutationSet,
    pub iterations: Vec<IterationTrace>,
}

/// Where a candidate column came from.
#[derive(Debug, Clone, PartialEq)]
enum Origin {
    Float(usize),
    OneHot(usize),
    Ctr {
        source: Arc<CombinationDescriptor>,
        stat: CtrStat,
        borders: Arc<[f64]>,
    },
}

/// A split as stored in the boosting state.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TrainSplit {
    Float { feature: usize, bin: u8, border: f64 },
    OneHot { feature: usize, value: u32 },
    Ctr { source: Arc<CombinationDescriptor>, stat: CtrStat, border: f64 },
}

struct PermTs {
    /// (borders, bins) per prior.
    per_prior: Vec<(Arc<[f64]>, ColumnBins)>,
}

/// Dense ids of a categorical feature or combination plus its quantized
/// statistics. Target statistics are built lazily per permutation.
struct CtrEntry {
    ids: Vec<u32>,
    count_values: Vec<f64>,
    count_borders: Arc<[f64]>,
    count_bins: ColumnBins,
    ts: Vec<OnceLock<PermTs>>,
}

impl CtrEntry {
    fn build(ids: Vec<u32>, ctx: &Context) -> Self {
        let count_values = count_statistic(&ids);
        let borders = compute_borders(&count_values, ctx.config.ctr_border_count);
        let count_bins = ColumnBins::Plain(quantize(&count_values, &borders).into());
        CtrEntry {
            ids,
            count_values,
            count_borders: borders.borders.into(),
            count_bins,
            ts: (0..ctx.perms.len()).map(|_| OnceLock::new()).collect(),
        }
    }

    fn ts_values(&self, ctx: &Context, perm: usize, prior: usize) -> Vec<f64> {
        let mut values = vec![0.0; self.ids.len()];
        ordered_target_statistic_into(&self.ids, ctx.labels, ctx.perms.get(perm), &ctx.ts, prior, &mut values);
        values
    }

    fn ts_for(&self, ctx: &Context, perm: usize) -> &PermTs {
        self.ts[perm].get_or_init(|| PermTs {
            per_prior: (0..ctx.ts.priors.len())
                .map(|prior| {
                    let values = self.ts_values(ctx, perm, prior);
                    let borders = compute_borders(&values, ctx.config.ctr_border_count);
                    let bins = ColumnBins::Plain(quantize(&values, &borders).into());
                    (Arc::from(borders.borders), bins)
                })
                .collect(),
        })
    }

    fn push_columns(&self, ctx: &Context, source: &Arc<CombinationDescriptor>, perm: usize, out: &mut Vec<CandidateColumn<Origin>>) {
        out.push(CandidateColumn {
            origin: Origin::Ctr {
                source: source.clone(),
                stat: CtrStat::Count,
                borders: self.count_borders.clone(),
            },
            bins: self.count_bins.clone(),
            n_bins: self.count_borders.len() + 1,
            kind: SplitKind::Threshold,
        });
        for (prior, (borders, bins)) in self.ts_for(ctx, perm).per_prior.iter().enumerate() {
            out.push(CandidateColumn {
                origin: Origin::Ctr {
                    source: source.clone(),
                    stat: CtrStat::Ts(prior as u8),
                    borders: borders.clone(),
                },
                bins: bins.clone(),
                n_bins: borders.len() + 1,
                kind: SplitKind::Threshold,
            });
        }
    }
}

/// Immutable training inputs shared by every iteration.
struct Context<'a> {
    config: &'a TrainConfig,
    dataset: &'a Dataset,
    labels: &'a [f64],
    n: usize,
    perms: PermutationSet,
    ts: TsConfig,
    float_borders: Vec<BorderSet>,
    float_bins: Vec<ColumnBins>,
    dictionaries: Vec<CategoryDictionary>,
    cat_ids: Vec<Vec<u32>>,
    one_hot_bins: Vec<(usize, ColumnBins, usize)>,
    ctr_features: Vec<usize>,
}

impl<'a> Context<'a> {
    fn new(dataset: &'a Dataset, config: &'a TrainConfig) -> Result<Self> {
        let n = dataset.n_rows();
        let labels = dataset.labels();
        let perms = generate_permutations(n, config.permutations, config.seed)?;
        let ts = TsConfig::default_for(config.loss, labels);

        let numeric = dataset.numeric_columns();
        let float_borders: Vec<BorderSet> = numeric
            .par_iter()
            .map(|col| compute_borders(col, config.border_count))
            .collect();
        let quantized = QuantizedMatrix::from_raw(numeric, &float_borders);
        let float_bins = if config.packed {
            let packed = pack_bins(&quantized);
            (0..quantized.n_features()).map(|j| packed.column(j)).collect()
        } else {
            (0..quantized.n_features())
                .map(|j| ColumnBins::Plain(quantized.column(j).into()))
                .collect()
        };

        let dictionaries: Vec<CategoryDictionary> = dataset
            .categorical_columns()
            .iter()
            .map(|c| CategoryDictionary::fit(c))
            .collect();
        let cat_ids: Vec<Vec<u32>> = dataset
            .categorical_columns()
            .iter()
            .zip(&dictionaries)
            .map(|(c, d)| d.encode(c))
            .collect();
        let mut one_hot_bins = Vec::new();
        let mut ctr_features = Vec::new();
        for (c, dict) in dictionaries.iter().enumerate() {
            if dict.cardinality() <= config.one_hot_max_size {
                let bins: Vec<u8> = cat_ids[c].iter().map(|&id| id as u8).collect();
                one_hot_bins.push((c, ColumnBins::Plain(bins.into()), dict.cardinality()));
            } else {
                ctr_features.push(c);
            }
        }
        Ok(Context {
            config,
            dataset,
            labels,
            n,
            perms,
            ts,
            float_borders,
            float_bins,
            dictionaries,
            cat_ids,
            one_hot_bins,
            ctr_features,
        })
    }

    fn split_part_values(&self, part: &SplitPart) -> Vec<u32> {
        match *part {
            SplitPart::Float { feature, border } => self.dataset.numeric_columns()[feature]
                .iter()
                .map(|&v| (v >= border.0) as u32)
                .collect(),
            SplitPart::OneHot { feature, value } => {
                self.cat_ids[feature].iter().map(|&id| (id == value) as u32).collect()
            }
        }
    }

    fn combination_ids(&self, desc: &CombinationDescriptor) -> Vec<u32> {
        if desc.part_count() == 1 && desc.cat_parts().len() == 1 {
            return self.cat_ids[desc.cat_parts()[0]].clone();
        }
        let split_values: Vec<Vec<u32>> = desc.split_parts().iter().map(|p| self.split_part_values(p)).collect();
        let mut parts: Vec<&[u32]> = desc.cat_parts().iter().map(|&c| self.cat_ids[c].as_slice()).collect();
        parts.extend(split_values.iter().map(Vec::as_slice));
        combination_ids(&parts)
    }

    fn to_split_part(&self, split: &TrainSplit) -> Option<CombinationDescriptor> {
        match split {
            TrainSplit::Float { feature, border, .. } => Some(CombinationDescriptor::split(SplitPart::Float {
                feature: *feature,
                border: Border(*border),
            })),
            // one-hot features stay out of combinations
            TrainSplit::OneHot { .. } => None,
            TrainSplit::Ctr { source, .. } => Some((**source).clone()),
        }
    }

    fn train_split(&self, selected: &SelectedSplit<Origin>) -> TrainSplit {
        match &selected.origin {
            Origin::Float(feature) => TrainSplit::Float {
                feature: *feature,
                bin: selected.bin,
                border: self.float_borders[*feature].borders[selected.bin as usize],
            },
            Origin::OneHot(feature) => TrainSplit::OneHot {
                feature: *feature,
                value: selected.bin as u32,
            },
            Origin::Ctr { source, stat, borders } => TrainSplit::Ctr {
                source: source.clone(),
                stat: *stat,
                border: borders[selected.bin as usize],
            },
        }
    }
}

/// Bounded cache of combination entries; base categorical features are pinned.
struct CtrCache {
    base: HashMap<CombinationDescriptor, Arc<CtrEntry>>,
    combos: HashMap<CombinationDescriptor, Arc<CtrEntry>>,
    order: VecDeque<CombinationDescriptor>,
    capacity: usize,
}

const CTR_CACHE_BYTES: usize = 512 << 20;

impl CtrCache {
    fn new(ctx: &Context) -> Self {
        let base = ctx
            .ctr_features
            .par_iter()
            .map(|&c| {
                let desc = CombinationDescriptor::single(c);
                let entry = CtrEntry::build(ctx.cat_ids[c].clone(), ctx);
                (desc, Arc::new(entry))
            })
            .collect();
        let per_entry = ctx.n.max(1) * (4 + 8 + 1 + ctx.perms.len() * ctx.ts.priors.len());
        CtrCache {
            base,
            combos: HashMap::new(),
            order: VecDeque::new(),
            capacity: (CTR_CACHE_BYTES / per_entry).max(16),
        }
    }

    fn get(&self, desc: &CombinationDescriptor) -> Option<Arc<CtrEntry>> {
        self.base.get(desc).or_else(|| self.combos.get(desc)).cloned()
    }

    fn get_many(&mut self, ctx: &Context, descs: &[CombinationDescriptor]) -> Vec<Arc<CtrEntry>> {
        let missing: Vec<&CombinationDescriptor> = descs.iter().filter(|d| self.get(d).is_none()).collect();
        let built: Vec<(CombinationDescriptor, Arc<CtrEntry>)> = missing
            .par_iter()
            .map(|d| ((*d).clone(), Arc::new(CtrEntry::build(ctx.combination_ids(d), ctx))))
            .collect();
        let found: HashMap<CombinationDescriptor, Arc<CtrEntry>> = built.iter().cloned().collect();
        for (desc, entry) in built {
            self.order.push_back(desc.clone());
            self.combos.insert(desc, entry);
        }
        let out = descs
            .iter()
            .map(|d| self.get(d).or_else(|| found.get(d).cloned()).expect("entry just built"))
            .collect();
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.combos.remove(&old);
            }
        }
        out
    }

    fn get_or_build(&mut self, ctx: &Context, desc: &CombinationDescriptor) -> Arc<CtrEntry> {
        self.get_many(ctx, std::slice::from_ref(desc)).remove(0)
    }
}

struct IterationSource<'c, 'a> {
    ctx: &'c Context<'a>,
    cache: &'c mut CtrCache,
    perm: usize,
    base: Vec<CandidateColumn<Origin>>,
}

impl<'c, 'a> IterationSource<'c, 'a> {
    fn new(ctx: &'c Context<'a>, cache: &'c mut CtrCache, perm: usize) -> Self {
        let mut base = Vec::new();
        for (f, bins) in ctx.float_bins.iter().enumerate() {
            base.push(CandidateColumn {
                origin: Origin::Float(f),
                bins: bins.clone(),
                n_bins: ctx.float_borders[f].n_bins(),
                kind: SplitKind::Threshold,
            });
        }
        for (c, bins, cardinality) in &ctx.one_hot_bins {
            base.push(CandidateColumn {
                origin: Origin::OneHot(*c),
                bins: bins.clone(),
                n_bins: *cardinality,
                kind: SplitKind::OneHot,
            });
        }
        let base_entries: Vec<(Arc<CombinationDescriptor>, Arc<CtrEntry>)> = ctx
            .ctr_features
            .iter()
            .map(|&c| {
                let desc = CombinationDescriptor::single(c);
                let entry = cache.get(&desc).expect("base features are pinned");
                (Arc::new(desc), entry)
            })
            .collect();
        base_entries.par_iter().for_each(|(_, e)| {
            e.ts_for(ctx, perm);
        });
        for (desc, entry) in &base_entries {
            entry.push_columns(ctx, desc, perm, &mut base);
        }
        IterationSource { ctx, cache, perm, base }
    }
}

impl CandidateSource<Origin> for IterationSource<'_, '_> {
    fn columns(&mut self, level: usize, selected: &[SelectedSplit<Origin>]) -> Vec<CandidateColumn<Origin>> {
        let mut columns = self.base.clone();
        if level == 0 || self.ctx.ctr_features.is_empty() {
            return columns;
        }
        let mut present: Vec<CombinationDescriptor> = Vec::new();
        for s in selected {
            if let Some(part) = self.ctx.to_split_part(&self.ctx.train_split(s)) {
                if !present.contains(&part) {
                    present.push(part);
                }
            }
        }
        let combos = enumerate_combinations(&present, &self.ctx.ctr_features, self.ctx.config.max_ctr_complexity);
        let entries = self.cache.get_many(self.ctx, &combos);
        let ctx = self.ctx;
        let perm = self.perm;
        entries.par_iter().for_each(|e| {
            e.ts_for(ctx, perm);
        });
        for (desc, entry) in combos.into_iter().zip(&entries) {
            entry.push_columns(ctx, &Arc::new(desc), perm, &mut columns);
        }
        columns
    }
}

/// Bits of `split` for every row under permutation `perm`'s encodings.
fn split_bits(ctx: &Context, cache: &mut CtrCache, split: &TrainSplit, perm: usize) -> Vec<bool> {
    match split {
        TrainSplit::Float { feature, bin, .. } => {
            let col = &ctx.float_bins[*feature];
            (0..ctx.n).map(|r| col.get(r) > *bin).collect()
        }
        TrainSplit::OneHot { feature, value } => ctx.cat_ids[*feature].iter().map(|&id| id == *value).collect(),
        TrainSplit::Ctr { source, stat, border } => {
            let entry = cache.get_or_build(ctx, source);
            let values = match stat {
                CtrStat::Count => entry.count_values.clone(),
                CtrStat::Ts(prior) => entry.ts_values(ctx, perm, *prior as usize),
            };
            values.iter().map(|&v| v >= *border).collect()
        }
    }
}

fn permutation_independent(split: &TrainSplit) -> bool {
    !matches!(split, TrainSplit::Ctr { stat: CtrStat::Ts(_), .. })
}

fn leaves_for_permutations(ctx: &Context, cache: &mut CtrCache, splits: &[TrainSplit], perms: &[usize]) -> Vec<Vec<u32>> {
    let mut leaves = vec![vec![0u32; ctx.n]; perms.len()];
    for (level, split) in splits.iter().enumerate() {
        if permutation_independent(split) {
            let bits = split_bits(ctx, cache, split, 0);
            for l in leaves.iter_mut() {
                for (leaf, &b) in l.iter_mut().zip(&bits) {
                    *leaf |= (b as u32) << level;
                }
            }
        } else {
            for (l, &perm) in leaves.iter_mut().zip(perms) {
                let bits = split_bits(ctx, cache, split, perm);
                for (leaf, &b) in l.iter_mut().zip(&bits) {
                    *leaf |= (b as u32) << level;
                }
            }
        }
    }
    leaves
}

fn mean_loss(loss: Loss, labels: &[f64], scores: &[f64]) -> f64 {
    match loss {
        Loss::Logloss => {
            let p: Vec<f64> = scores.iter().map(|&a| metrics::sigmoid(a)).collect();
            metrics::logloss(labels, &p).unwrap_or(f64::NAN)
        }
        Loss::Rmse => metrics::rmse(labels, scores).unwrap_or(f64::NAN),
    }
}

/// Trains an ensemble with default observers.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<Ensemble> {
    run(dataset, config, &mut |_, _| {}, None)
}

/// Trains and reports `(iteration, train_loss)` after every tree.
pub fn train_with_progress(
    dataset: &Dataset,
    config: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<Ensemble> {
    run(dataset, config, &mut progress, None)
}

/// Trains and records per-iteration state. With `record_state` the full
/// gradients, leaf assignments and prefix models are kept for every
/// iteration, which is only sensible for small datasets.
pub fn train_traced(dataset: &Dataset, config: &TrainConfig, record_state: bool) -> Result<(Ensemble, TrainTrace)> {
    let mut trace = TrainTrace {
        permutations: generate_permutations(dataset.n_rows().max(1), config.permutations.max(1), config.seed)?,
        iterations: Vec::new(),
    };
    let ensemble = run(dataset, config, &mut |_, _| {}, Some((&mut trace, record_state)))?;
    Ok((ensemble, trace))
}

fn run(
    dataset: &Dataset,
    config: &TrainConfig,
    progress: &mut dyn FnMut(usize, f64),
    mut trace: Option<(&mut TrainTrace, bool)>,
) -> Result<Ensemble> {
    config.validate()?;
    if dataset.n_rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if config.loss == Loss::Logloss {
        dataset.check_binary_labels()?;
    }
    let ctx = Context::new(dataset, config)?;
    let mut cache = CtrCache::new(&ctx);
    let labels = ctx.labels;
    let n = ctx.n;
    let s = ctx.perms.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut approximations: Vec<OrderedApproximations> = if config.plain {
        Vec::new()
    } else {
        vec![OrderedApproximations::new(n); s]
    };
    // full-model scores on training rows, encoded with permutation 0
    let mut scores = vec![0.0f64; n];
    let mut trees: Vec<(Vec<TrainSplit>, Vec<f64>)> = Vec::with_capacity(config.iterations);
    let all_perms: Vec<usize> = if config.plain { vec![0] } else { (0..s).collect() };

    for iteration in 0..config.iterations {
        let perm = rng.gen_range(0..s);
        let structure_gradients: Vec<f64> = if config.plain {
            labels.iter().zip(&scores).map(|(&y, &a)| config.loss.gradient(y, a)).collect()
        } else {
            approximations[perm].ordered_gradients(ctx.perms.get(perm), labels, config.loss)
        };

        let structure = {
            let mut source = IterationSource::new(&ctx, &mut cache, perm);
            search_structure(&mut source, &structure_gradients, config.depth)
        };
        let splits: Vec<TrainSplit> = structure.splits.iter().map(|s| ctx.train_split(s)).collect();
        let depth = splits.len();
        let n_leaves = 1usize << depth;

        let leaves = leaves_for_permutations(&ctx, &mut cache, &splits, &all_perms);

        let full_gradients: Vec<f64> = labels.iter().zip(&scores).map(|(&y, &a)| config.loss.gradient(y, a)).collect();
        let leaf_values = fit_leaf_values(&leaves[0], depth, &full_gradients, config.learning_rate);
        for (score, &leaf) in scores.iter_mut().zip(&leaves[0]) {
            *score += leaf_values[leaf as usize];
        }

        if !config.plain {
            approximations
                .par_iter_mut()
                .zip(&leaves)
                .enumerate()
                .for_each(|(j, (approx, leaf_of_row))| {
                    approx.update(leaf_of_row, n_leaves, ctx.perms.get(j), labels, config.loss, config.learning_rate);
                });
        }

        let train_loss = mean_loss(config.loss, labels, &scores);
        progress(iteration, train_loss);

        if let Some((trace, record_state)) = trace.as_mut() {
            trace.iterations.push(IterationTrace {
                permutation: perm,
                depth,
                structure_gradients: if *record_state { structure_gradients } else { Vec::new() },
                leaves: if *record_state { leaves } else { Vec::new() },
                approximations: if *record_state { approximations.clone() } else { Vec::new() },
                stored_values: approximations.iter().map(OrderedApproximations::stored_values).collect(),
                train_loss,
            });
        }
        trees.push((splits, leaf_values));
    }

    let meta = ModelMeta {
        iterations: config.iterations,
        learning_rate: config.learning_rate,
        depth: config.depth,
        permutations: config.permutations,
        seed: config.seed,
        one_hot_max_size: config.one_hot_max_size,
        max_ctr_complexity: config.max_ctr_complexity,
        border_count: config.border_count,
        ctr_border_count: config.ctr_border_count,
        plain: config.plain,
    };
    let mut builder = EnsembleBuilder::new(
        dataset.layout().clone(),
        config.loss,
        ctx.ts.clone(),
        ctx.float_borders.clone(),
        ctx.dictionaries.clone(),
        meta,
    );
    for (splits, leaf_values) in trees {
        let features = splits
            .iter()
            .map(|s| builder.split_id(s, &ctx.cat_ids, dataset))
            .collect::<Result<Vec<u32>>>()?;
        builder.push_tree(features, leaf_values)?;
    }
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnLayout;
    use proptest::prelude::*;

    #[test]
    fn logloss_gradient_at_zero() {
        assert_eq!(gradient(Loss::Logloss, 1.0, 0.0), 0.5);
        assert_eq!(gradient(Loss::Logloss, 0.0, 0.0), -0.5);
    }

    #[test]
    fn rmse_gradient_at_fit() {
        assert_eq!(gradient(Loss::Rmse, 2.5, 2.5), 0.0);
    }

    #[test]
    fn logloss_is_stable_for_large_scores() {
        assert!(Loss::Logloss.loss(1.0, 800.0).abs() < 1e-12);
        assert!((Loss::Logloss.loss(0.0, 800.0) - 800.0).abs() < 1e-9);
        assert!((Loss::Logloss.loss(1.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn loss_names_round_trip() {
        for l in [Loss::Logloss, Loss::Rmse] {
            assert_eq!(l.as_str().parse::<Loss>().unwrap(), l);
        }
        assert!("hinge".parse::<Loss>().is_err());
    }

    #[test]
    fn level_arithmetic() {
        // 1-based position 7 reads level 2
        assert_eq!(OrderedApproximations::level_of_position(6), 2);
        assert_eq!(OrderedApproximations::level_of_position(0), 0);
        assert_eq!(OrderedApproximations::level_of_position(1), 1);
        assert_eq!(OrderedApproximations::level_of_position(2), 1);
        assert_eq!(OrderedApproximations::level_of_position(3), 2);
    }

    #[test]
    fn baseline_gradients() {
        let approx = OrderedApproximations::new(10);
        let perm = Permutation::identity(10);
        let g = approx.ordered_gradients(&perm, &[1.0; 10], Loss::Logloss);
        assert!(g.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn zero_step_changes_nothing() {
        let mut approx = OrderedApproximations::new(20);
        let perm = Permutation::identity(20);
        let before = approx.clone();
        let leaves: Vec<u32> = (0..20).map(|r| (r % 2) as u32).collect();
        approx.update(&leaves, 2, &perm, &[1.0; 20], Loss::Logloss, 0.0);
        assert_eq!(approx, before);
    }

    #[test]
    fn single_leaf_update_adds_prefix_mean() {
        let n = 20;
        let mut approx = OrderedApproximations::new(n);
        let perm = Permutation::identity(n);
        let labels: Vec<f64> = (0..n).map(|i| i as f64).collect();
        approx.update(&vec![0; n], 1, &perm, &labels, Loss::Rmse, 0.5);
        for level in 0..approx.n_levels() {
            let k = approx.training_len(level);
            let expected = if k == 0 { 0.0 } else { 0.5 * labels[..k].iter().sum::<f64>() / k as f64 };
            assert!(approx.levels()[level].iter().all(|&v| (v - expected).abs() < 1e-12));
        }
    }

    proptest! {
        #[test]
        fn stored_values_below_four_n(n in 1usize..5000) {
            let approx = OrderedApproximations::new(n);
            prop_assert!(approx.stored_values() < 4 * n);
            // the last level covers every position
            prop_assert_eq!(approx.levels().last().unwrap().len(), n);
        }

        #[test]
        fn gradients_match_finite_differences(y in 0u8..2, a in -8.0f64..8.0, r in -50.0f64..50.0) {
            let h = 1e-6;
            let y = y as f64;
            let fd = -(Loss::Logloss.loss(y, a + h) - Loss::Logloss.loss(y, a - h)) / (2.0 * h);
            let g = gradient(Loss::Logloss, y, a);
            prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3));
            let fd = -(Loss::Rmse.loss(r, a + h) - Loss::Rmse.loss(r, a - h)) / (2.0 * h);
            let g = gradient(Loss::Rmse, r, a);
            prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3));
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig { iterations: 0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { depth: 17, ..Default::default() },
            TrainConfig { permutations: 0, ..Default::default() },
            TrainConfig { border_count: 256, ..Default::default() },
            TrainConfig { max_ctr_complexity: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    fn constant_dataset(y: f64, n: usize) -> Dataset {
        let layout = ColumnLayout::parse("0\tLabel\n1\tNum\n2\tCateg\n").unwrap();
        let numeric = vec![(0..n).map(|i| i as f64).collect()];
        let cat = vec![(0..n).map(|i| format!("c{}", i % 3)).collect()];
        Dataset::new(layout, numeric, cat, vec![y; n]).unwrap()
    }

    #[test]
    fn depth_zero_rmse_fits_the_mean() {
        let ds = constant_dataset(4.2, 30);
        let cfg = TrainConfig {
            iterations: 1,
            depth: 0,
            learning_rate: 1.0,
            loss: Loss::Rmse,
            ..Default::default()
        };
        let model = train(&ds, &cfg).unwrap();
        assert_eq!(model.trees.len(), 1);
        for p in model.predict(&ds).unwrap() {
            assert!((p - 4.2).abs() < 1e-12);
        }
    }

    #[test]
    fn logloss_rejects_non_binary_labels() {
        let ds = constant_dataset(2.0, 10);
        let err = train(&ds, &TrainConfig { iterations: 1, ..Default::default() }).unwrap_err();
        assert!(err.to_string().contains("labels must be 0/1"));
    }

    #[test]
    fn tree_count_and_depth_contract() {
        let ds = constant_dataset(1.0, 50);
        let cfg = TrainConfig { iterations: 7, depth: 3, ..Default::default() };
        let model = train(&ds, &cfg).unwrap();
        assert_eq!(model.trees.len(), 7);
        assert!(model.trees.iter().all(|t| t.depth() <= 3));
    }
}
