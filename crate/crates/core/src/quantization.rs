//! Feature discretization into at most 255 bins, binary features over bin
//! borders, and bit-packed bin storage.

use std::sync::Arc;

use crate::error::{Error, Result};

pub const MAX_BINS: usize = 255;
pub const DEFAULT_NUMERIC_BINS: usize = 128;
pub const DEFAULT_CTR_BINS: usize = 15;

/// Strictly increasing split thresholds of one feature.
///
/// A value `v` falls into bin `#{b in borders : b <= v}`; NaN always falls into
/// bin 0. When the source column had missing values the first border is
/// `-inf`, which gives missing values a bin of their own.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BorderSet {
    pub borders: Vec<f64>,
}

impl BorderSet {
    pub fn new(borders: Vec<f64>) -> Result<Self> {
        if borders.len() >= MAX_BINS {
            return Err(Error::Config(format!(
                "{} borders exceed the {MAX_BINS}-bin limit",
                borders.len()
            )));
        }
        if borders.windows(2).any(|w| !(w[0] < w[1])) || borders.iter().any(|b| b.is_nan()) {
            return Err(Error::Config("borders must be strictly increasing".into()));
        }
        Ok(BorderSet { borders })
    }

    pub fn len(&self) -> usize {
        self.borders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.borders.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.borders.len() + 1
    }

    #[inline]
    pub fn bin(&self, v: f64) -> u8 {
        if v.is_nan() {
            return 0;
        }
        self.borders.partition_point(|&b| b <= v) as u8
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Equal-frequency borders over the distinct values of `values`.
///
/// With no more distinct values than bins the borders are the midpoints of
/// consecutive distinct values. Otherwise distinct values are swept in order
/// and a border is placed whenever the running row count reaches the share of
/// the remaining rows owed to the next bin.
pub fn compute_borders(values: &[f64], max_bins: usize) -> BorderSet {
    assert!((2..=MAX_BINS).contains(&max_bins), "max_bins must lie in [2, 255]");
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    let has_missing = finite.len() < values.len();
    finite.sort_unstable_by(f64::total_cmp);

    let mut distinct: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for &v in &finite {
        if distinct.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1;
        } else {
            distinct.push(v);
            counts.push(1);
        }
    }

    let mut borders = Vec::new();
    if has_missing && !distinct.is_empty() {
        borders.push(f64::NEG_INFINITY);
    }
    let budget = if has_missing { max_bins - 1 } else { max_bins };
    let d = distinct.len();

    let mut start = 0;
    let mut rows_done = 0usize;
    let mut bins_left = budget;
    while bins_left > 1 && start + 1 < d {
        if d - start <= bins_left {
            for i in start + 1..d {
                borders.push(midpoint(distinct[i - 1], distinct[i]));
            }
            break;
        }
        let target = (finite.len() - rows_done) as f64 / bins_left as f64;
        let mut acc = 0usize;
        let mut i = start;
        while i < d {
            acc += counts[i];
            i += 1;
            if acc as f64 >= target {
                break;
            }
        }
        // step back one value when that lands closer to the target
        if i - start > 1 {
            let prev = acc - counts[i - 1];
            if (acc as f64 - target) > (target - prev as f64) {
                i -= 1;
                acc = prev;
            }
        }
        if i >= d {
            break;
        }
        borders.push(midpoint(distinct[i - 1], distinct[i]));
        rows_done += acc;
        start = i;
        bins_left -= 1;
    }
    BorderSet { borders }
}

pub fn quantize(values: &[f64], borders: &BorderSet) -> Vec<u8> {
    values.iter().map(|&v| borders.bin(v)).collect()
}

/// Per-feature bin indices, column-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedMatrix {
    columns: Vec<Vec<u8>>,
    bins_per_feature: Vec<usize>,
    n_rows: usize,
}

impl QuantizedMatrix {
    pub fn new(columns: Vec<Vec<u8>>, bins_per_feature: Vec<usize>) -> Result<Self> {
        if columns.len() != bins_per_feature.len() {
            return Err(Error::LengthMismatch(
                "one bin count is required per column".into(),
            ));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (j, (col, &bins)) in columns.iter().zip(&bins_per_feature).enumerate() {
            if col.len() != n_rows {
                return Err(Error::LengthMismatch(format!("column {j} has {} rows", col.len())));
            }
            if bins == 0 || bins > MAX_BINS {
                return Err(Error::Config(format!("column {j} has {bins} bins")));
            }
            if let Some(&b) = col.iter().find(|&&b| b as usize >= bins) {
                return Err(Error::Config(format!("column {j}: bin {b} out of range {bins}")));
            }
        }
        Ok(QuantizedMatrix {
            columns,
            bins_per_feature,
            n_rows,
        })
    }

    pub fn from_raw(columns: &[Vec<f64>], borders: &[BorderSet]) -> Self {
        QuantizedMatrix {
            columns: columns.iter().zip(borders).map(|(c, b)| quantize(c, b)).collect(),
            bins_per_feature: borders.iter().map(BorderSet::n_bins).collect(),
            n_rows: columns.first().map_or(0, Vec::len),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, feature: usize) -> &[u8] {
        &self.columns[feature]
    }

    pub fn bins_per_feature(&self) -> &[usize] {
        &self.bins_per_feature
    }
}

/// Binary feature values laid out feature-major: `values[f * n_examples + x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryFeatureTable {
    pub n_examples: usize,
    pub n_features: usize,
    pub values: Vec<u8>,
}

impl BinaryFeatureTable {
    pub fn zeros(n_features: usize, n_examples: usize) -> Self {
        BinaryFeatureTable {
            n_examples,
            n_features,
            values: vec![0; n_features * n_examples],
        }
    }

    #[inline]
    pub fn get(&self, example: usize, feature: usize) -> u8 {
        self.values[feature * self.n_examples + example]
    }

    pub fn feature(&self, feature: usize) -> &[u8] {
        &self.values[feature * self.n_examples..(feature + 1) * self.n_examples]
    }

    pub fn feature_mut(&mut self, feature: usize) -> &mut [u8] {
        &mut self.values[feature * self.n_examples..(feature + 1) * self.n_examples]
    }
}

/// Binarized view of a quantized matrix together with the
/// `binary feature -> (source feature, border index)` mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binarized {
    pub table: BinaryFeatureTable,
    pub sources: Vec<(usize, usize)>,
}

/// One binary feature per (feature, border) pair, in lexicographic order, with
/// `B(x, f) = [bin(x) > border_index]`.
pub fn binarize(quantized: &QuantizedMatrix) -> Binarized {
    let sources: Vec<(usize, usize)> = quantized
        .bins_per_feature()
        .iter()
        .enumerate()
        .flat_map(|(j, &bins)| (0..bins.saturating_sub(1)).map(move |k| (j, k)))
        .collect();
    let n = quantized.n_rows();
    let mut table = BinaryFeatureTable::zeros(sources.len(), n);
    for (f, &(j, k)) in sources.iter().enumerate() {
        let col = quantized.column(j);
        for (dst, &b) in table.feature_mut(f).iter_mut().zip(col) {
            *dst = (b as usize > k) as u8;
        }
    }
    Binarized { table, sources }
}

/// Bits per stored bin index for a feature with `bins` bins.
pub fn pack_width(bins: usize) -> u32 {
    match bins {
        0..=2 => 1,
        3..=16 => 4,
        _ => 8,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedGroup {
    pub width: u32,
    /// One word per row.
    pub words: Arc<[u32]>,
}

/// Bin indices grouped into 32-bit words: 32 features per word at 1 bit,
/// 8 per word at 4 bits, 4 per word at 8 bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBins {
    n_rows: usize,
    groups: Vec<PackedGroup>,
    /// feature -> (group, bit offset)
    slots: Vec<(usize, u32)>,
    bins_per_feature: Vec<usize>,
}

pub fn pack_bins(quantized: &QuantizedMatrix) -> PackedBins {
    let n = quantized.n_rows();
    let mut groups: Vec<(u32, Vec<u32>, u32)> = Vec::new(); // (width, words, used bits)
    let mut open: [Option<usize>; 3] = [None; 3];
    let mut slots = Vec::with_capacity(quantized.n_features());
    for (j, &bins) in quantized.bins_per_feature().iter().enumerate() {
        let width = pack_width(bins);
        let key = match width {
            1 => 0,
            4 => 1,
            _ => 2,
        };
        let g = match open[key] {
            Some(g) if groups[g].2 + width <= 32 => g,
            _ => {
                groups.push((width, vec![0u32; n], 0));
                open[key] = Some(groups.len() - 1);
                groups.len() - 1
            }
        };
        let shift = groups[g].2;
        for (w, &b) in groups[g].1.iter_mut().zip(quantized.column(j)) {
            *w |= (b as u32) << shift;
        }
        groups[g].2 += width;
        slots.push((g, shift));
    }
    PackedBins {
        n_rows: n,
        groups: groups
            .into_iter()
            .map(|(width, words, _)| PackedGroup {
                width,
                words: words.into(),
            })
            .collect(),
        slots,
        bins_per_feature: quantized.bins_per_feature().to_vec(),
    }
}

impl PackedBins {
    pub fn groups(&self) -> &[PackedGroup] {
        &self.groups
    }

    pub fn width_of(&self, feature: usize) -> u32 {
        self.groups[self.slots[feature].0].width
    }

    #[inline]
    pub fn get(&self, feature: usize, row: usize) -> u8 {
        let (g, shift) = self.slots[feature];
        let group = &self.groups[g];
        ((group.words[row] >> shift) & mask(group.width)) as u8
    }

    /// Column accessor usable by the histogram builder.
    pub fn column(&self, feature: usize) -> ColumnBins {
        let (g, shift) = self.slots[feature];
        let group = &self.groups[g];
        ColumnBins::Packed {
            words: group.words.clone(),
            shift,
            mask: mask(group.width),
        }
    }

    pub fn unpack(&self) -> QuantizedMatrix {
        let columns = (0..self.slots.len())
            .map(|j| (0..self.n_rows).map(|r| self.get(j, r)).collect())
            .collect();
        QuantizedMatrix {
            columns,
            bins_per_feature: self.bins_per_feature.clone(),
            n_rows: self.n_rows,
        }
    }
}

fn mask(width: u32) -> u32 {
    if width >= 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    }
}

/// Shared, read-only view of one column of bin indices.
#[derive(Debug, Clone)]
pub enum ColumnBins {
    Plain(Arc<[u8]>),
    Packed {
        words: Arc<[u32]>,
        shift: u32,
        mask: u32,
    },
}

impl ColumnBins {
    pub fn len(&self) -> usize {
        match self {
            ColumnBins::Plain(b) => b.len(),
            ColumnBins::Packed { words, .. } => words.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, row: usize) -> u8 {
        match self {
            ColumnBins::Plain(b) => b[row],
            ColumnBins::Packed { words, shift, mask } => ((words[row] >> shift) & mask) as u8,
        }
    }

    /// Calls `f(row, bin)` for every row in order.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut(usize, u8)) {
        match self {
            ColumnBins::Plain(b) => {
                for (row, &bin) in b.iter().enumerate() {
                    f(row, bin);
                }
            }
            ColumnBins::Packed { words, shift, mask } => {
                for (row, &w) in words.iter().enumerate() {
                    f(row, ((w >> shift) & mask) as u8);
                }
            }
        }
    }
}
