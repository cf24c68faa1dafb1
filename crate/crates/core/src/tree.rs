//! Oblivious trees and histogram-based structure search.
//!
//! An oblivious tree of depth `d` uses one binary feature per level, so a
//! leaf is addressed by the `d`-bit integer `sum_i 2^i * B(x, f(i))` with level
//! 0 as the least significant bit. Structure search is greedy per level: every
//! candidate binary feature is scored from per-(leaf, bin) gradient histograms
//! and the best one refines all leaves at once.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantization::{BinaryFeatureTable, ColumnBins};

pub const MAX_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ObliviousTree {
    /// Binary feature id used at each level, root level first.
    pub level_features: Vec<u32>,
    /// `2^depth` leaf values.
    pub leaf_values: Vec<f64>,
}

impl ObliviousTree {
    pub fn new(level_features: Vec<u32>, leaf_values: Vec<f64>) -> Result<Self> {
        if level_features.len() > MAX_DEPTH {
            return Err(Error::Config(format!("depth {} exceeds {MAX_DEPTH}", level_features.len())));
        }
        if leaf_values.len() != 1 << level_features.len() {
            return Err(Error::Config(format!(
                "depth {} needs {} leaf values, got {}",
                level_features.len(),
                1usize << level_features.len(),
                leaf_values.len()
            )));
        }
        Ok(ObliviousTree {
            level_features,
            leaf_values,
        })
    }

    pub fn depth(&self) -> usize {
        self.level_features.len()
    }

    /// Leaf index of `example` given its binary features in `table`.
    #[inline]
    pub fn leaf_index(&self, table: &BinaryFeatureTable, example: usize) -> usize {
        let mut index = 0;
        for (level, &f) in self.level_features.iter().enumerate() {
            index |= (table.get(example, f as usize) as usize) << level;
        }
        index
    }
}

/// Gradient sum and example count of one histogram cell or leaf.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStats {
    pub sum: f64,
    pub count: u32,
}

impl BinStats {
    #[inline]
    fn add(&mut self, g: f64) {
        self.sum += g;
        self.count += 1;
    }

    #[inline]
    fn minus(self, other: BinStats) -> BinStats {
        BinStats {
            sum: self.sum - other.sum,
            count: self.count - other.count,
        }
    }
}

/// Per-leaf, per-bin gradient sums of one feature column: `cells[leaf * n_bins + bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub n_leaves: usize,
    pub n_bins: usize,
    pub cells: Vec<BinStats>,
}

impl Histogram {
    #[inline]
    pub fn cell(&self, leaf: usize, bin: usize) -> BinStats {
        self.cells[leaf * self.n_bins + bin]
    }

    pub fn leaf_total(&self, leaf: usize) -> BinStats {
        let mut total = BinStats::default();
        for c in &self.cells[leaf * self.n_bins..(leaf + 1) * self.n_bins] {
            total.sum += c.sum;
            total.count += c.count;
        }
        total
    }
}

/// Accumulates `hist[leaf][bin] += g` over rows in row order.
pub fn build_histogram(
    bins: &ColumnBins,
    n_bins: usize,
    leaves: &[u32],
    n_leaves: usize,
    gradients: &[f64],
) -> Histogram {
    let mut cells = vec![BinStats::default(); n_leaves * n_bins];
    bins.for_each(|row, bin| {
        cells[leaves[row] as usize * n_bins + bin as usize].add(gradients[row]);
    });
    Histogram {
        n_leaves,
        n_bins,
        cells,
    }
}

/// Sum over resulting leaves of `gradient_sum^2 / max(count, 1)`; higher is better.
pub fn score_split(children: &[BinStats]) -> f64 {
    children
        .iter()
        .map(|c| c.sum * c.sum / c.count.max(1) as f64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    /// Binary feature `bin > threshold`.
    Threshold,
    /// Binary feature `bin == category`.
    OneHot,
}

/// A quantized column offered to the structure search. `origin` is an opaque
/// tag identifying where the column came from.
#[derive(Debug, Clone)]
pub struct CandidateColumn<T> {
    pub origin: T,
    pub bins: ColumnBins,
    pub n_bins: usize,
    pub kind: SplitKind,
}

impl<T> CandidateColumn<T> {
    /// Number of binary features this column contributes.
    pub fn n_binary_features(&self) -> usize {
        match self.kind {
            SplitKind::Threshold => self.n_bins.saturating_sub(1),
            SplitKind::OneHot => self.n_bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedSplit<T> {
    pub origin: T,
    pub kind: SplitKind,
    /// Threshold index or category, depending on `kind`.
    pub bin: u8,
    pub score: f64,
}

impl<T> SelectedSplit<T> {
    #[inline]
    pub fn goes_right(&self, bin: u8) -> bool {
        match self.kind {
            SplitKind::Threshold => bin > self.bin,
            SplitKind::OneHot => bin == self.bin,
        }
    }
}

/// Supplies the candidate columns for each level of a tree. Sources that
/// grow feature combinations inspect the splits selected so far.
pub trait CandidateSource<T> {
    fn columns(&mut self, level: usize, selected: &[SelectedSplit<T>]) -> Vec<CandidateColumn<T>>;
}

impl<T: Clone> CandidateSource<T> for Vec<CandidateColumn<T>> {
    fn columns(&mut self, _level: usize, _selected: &[SelectedSplit<T>]) -> Vec<CandidateColumn<T>> {
        self.clone()
    }
}

#[derive(Debug, Clone)]
pub struct TreeStructure<T> {
    pub splits: Vec<SelectedSplit<T>>,
    /// Leaf index of every row.
    pub leaves: Vec<u32>,
}

impl<T> TreeStructure<T> {
    pub fn depth(&self) -> usize {
        self.splits.len()
    }
}

struct ColumnBest {
    bin: u8,
    score: f64,
}

fn best_in_column<T: PartialEq>(
    column: &CandidateColumn<T>,
    leaves: &[u32],
    n_leaves: usize,
    gradients: &[f64],
    selected: &[SelectedSplit<T>],
) -> Option<ColumnBest> {
    let n_candidates = column.n_binary_features();
    if n_candidates == 0 {
        return None;
    }
    let hist = build_histogram(&column.bins, column.n_bins, leaves, n_leaves, gradients);
    let totals: Vec<BinStats> = (0..n_leaves).map(|l| hist.leaf_total(l)).collect();
    let n_rows = leaves.len() as u32;
    let mut right = vec![BinStats::default(); n_leaves];
    let mut children = vec![BinStats::default(); 2 * n_leaves];
    let mut scores: Vec<Option<f64>> = vec![None; n_candidates];

    // thresholds are visited from the top bin down so the right side is a running suffix
    let visit: Box<dyn Iterator<Item = usize>> = match column.kind {
        SplitKind::Threshold => Box::new((0..n_candidates).rev()),
        SplitKind::OneHot => Box::new(0..n_candidates),
    };
    for candidate in visit {
        match column.kind {
            SplitKind::Threshold => {
                for (leaf, r) in right.iter_mut().enumerate() {
                    let c = hist.cell(leaf, candidate + 1);
                    r.sum += c.sum;
                    r.count += c.count;
                }
            }
            SplitKind::OneHot => {
                for (leaf, r) in right.iter_mut().enumerate() {
                    *r = hist.cell(leaf, candidate);
                }
            }
        }
        let bin = candidate as u8;
        if selected
            .iter()
            .any(|s| s.kind == column.kind && s.bin == bin && s.origin == column.origin)
        {
            continue;
        }
        let right_total: u32 = right.iter().map(|r| r.count).sum();
        if right_total == 0 || right_total == n_rows {
            continue;
        }
        for leaf in 0..n_leaves {
            children[leaf] = totals[leaf].minus(right[leaf]);
            children[leaf + n_leaves] = right[leaf];
        }
        scores[candidate] = Some(score_split(&children));
    }

    let mut best: Option<ColumnBest> = None;
    for (candidate, score) in scores.into_iter().enumerate() {
        if let Some(score) = score {
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(ColumnBest {
                    bin: candidate as u8,
                    score,
                });
            }
        }
    }
    best
}

/// Greedy level-by-level search for an oblivious tree structure of depth at
/// most `depth`.
///
/// Every binary feature of every candidate column is scored; ties go to the
/// lowest binary feature id (columns in order, then bins). A level always takes
/// its best split even without positive gain. Splits that would send every
/// row to the same side, and splits already used in the tree, are not
/// eligible; the tree stops early when nothing eligible remains.
pub fn search_structure<T, S>(source: &mut S, gradients: &[f64], depth: usize) -> TreeStructure<T>
where
    T: Clone + PartialEq + Send + Sync,
    S: CandidateSource<T> + ?Sized,
{
    let n = gradients.len();
    let mut leaves = vec![0u32; n];
    let mut splits: Vec<SelectedSplit<T>> = Vec::new();
    for level in 0..depth {
        let columns = source.columns(level, &splits);
        let n_leaves = 1usize << level;
        let bests: Vec<Option<ColumnBest>> = columns
            .par_iter()
            .map(|c| best_in_column(c, &leaves, n_leaves, gradients, &splits))
            .collect();
        let mut winner: Option<(usize, ColumnBest)> = None;
        for (i, b) in bests.into_iter().enumerate() {
            if let Some(b) = b {
                if winner.as_ref().is_none_or(|(_, w)| b.score > w.score) {
                    winner = Some((i, b));
                }
            }
        }
        let Some((i, best)) = winner else { break };
        let column = &columns[i];
        let split = SelectedSplit {
            origin: column.origin.clone(),
            kind: column.kind,
            bin: best.bin,
            score: best.score,
        };
        column.bins.for_each(|row, bin| {
            if split.goes_right(bin) {
                leaves[row] |= 1 << level;
            }
        });
        splits.push(split);
    }
    TreeStructure { splits, leaves }
}

/// `learning_rate * mean gradient` of the rows in each of the `2^depth`
/// leaves; empty leaves get 0.
pub fn fit_leaf_values(leaves: &[u32], depth: usize, gradients: &[f64], learning_rate: f64) -> Vec<f64> {
    let mut stats = vec![BinStats::default(); 1 << depth];
    for (&leaf, &g) in leaves.iter().zip(gradients) {
        stats[leaf as usize].add(g);
    }
    stats
        .iter()
        .map(|s| {
            if s.count == 0 {
                0.0
            } else {
                learning_rate * (s.sum / s.count as f64)
            }
        })
        .collect()
}
