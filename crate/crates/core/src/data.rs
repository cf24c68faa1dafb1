//! Dataset ingestion and the shared permutation set.
//!
//! Data files are tab-separated text without a header. A separate column
//! descriptor file assigns a kind to every column, one `index<TAB>kind` line
//! per column where kind is one of `Label`, `Num`, `Categ` or `Ignored`.
//!
//! Missing numeric values (the empty string or `NaN`) are stored as `f64::NAN`
//! and land in their own lowest bin during quantization.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Label,
    Numeric,
    Categorical,
    Ignored,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Label => "Label",
            ColumnKind::Numeric => "Num",
            ColumnKind::Categorical => "Categ",
            ColumnKind::Ignored => "Ignored",
        }
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Label" => Ok(ColumnKind::Label),
            "Num" => Ok(ColumnKind::Numeric),
            "Categ" => Ok(ColumnKind::Categorical),
            "Ignored" => Ok(ColumnKind::Ignored),
            other => Err(Error::Descriptor(format!("unknown column kind {other:?}"))),
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnDescriptor {
    pub column_index: usize,
    pub kind: ColumnKind,
}

/// Validated set of column descriptors, indexed by column position.
///
/// Exactly one column is the label and the indices cover `0..n_columns`
/// without gaps or duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnLayout {
    kinds: Vec<ColumnKind>,
}

impl ColumnLayout {
    pub fn new(descriptors: &[ColumnDescriptor]) -> Result<Self> {
        let n = descriptors.len();
        let mut kinds: Vec<Option<ColumnKind>> = vec![None; n];
        for d in descriptors {
            let slot = kinds.get_mut(d.column_index).ok_or_else(|| {
                Error::Descriptor(format!(
                    "column index {} out of range for {n} columns",
                    d.column_index
                ))
            })?;
            if slot.is_some() {
                return Err(Error::Descriptor(format!(
                    "duplicate column index {}",
                    d.column_index
                )));
            }
            *slot = Some(d.kind);
        }
        let kinds: Vec<ColumnKind> = kinds.into_iter().map(|k| k.unwrap()).collect();
        let labels = kinds.iter().filter(|k| **k == ColumnKind::Label).count();
        if labels != 1 {
            return Err(Error::Descriptor(format!(
                "expected exactly one Label column, found {labels}"
            )));
        }
        Ok(ColumnLayout { kinds })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut descriptors = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let index = fields.next().unwrap_or_default();
            let kind = fields.next().ok_or_else(|| {
                Error::Descriptor(format!("line {}: missing column kind", line_no + 1))
            })?;
            let column_index = index.trim().parse::<usize>().map_err(|_| {
                Error::Descriptor(format!("line {}: bad column index {index:?}", line_no + 1))
            })?;
            descriptors.push(ColumnDescriptor {
                column_index,
                kind: kind.trim().parse()?,
            });
        }
        Self::new(&descriptors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.kinds
            .iter()
            .enumerate()
            .map(|(i, k)| format!("{i}\t{k}\n"))
            .collect()
    }

    pub fn n_columns(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn label_column(&self) -> usize {
        self.kinds
            .iter()
            .position(|k| *k == ColumnKind::Label)
            .expect("layout validated to contain a label")
    }

    fn columns_of(&self, kind: ColumnKind) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&i| self.kinds[i] == kind)
            .collect()
    }

    pub fn numeric_columns(&self) -> Vec<usize> {
        self.columns_of(ColumnKind::Numeric)
    }

    pub fn categorical_columns(&self) -> Vec<usize> {
        self.columns_of(ColumnKind::Categorical)
    }
}

/// Typed, immutable in-memory dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    layout: ColumnLayout,
    numeric: Vec<Vec<f64>>,
    categorical: Vec<Vec<String>>,
    labels: Vec<f64>,
}

impl Dataset {
    /// Columns are given in layout order: the i-th numeric column corresponds to
    /// the i-th `Num` descriptor, likewise for categorical ones.
    pub fn new(
        layout: ColumnLayout,
        numeric: Vec<Vec<f64>>,
        categorical: Vec<Vec<String>>,
        labels: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if numeric.len() != layout.numeric_columns().len()
            || categorical.len() != layout.categorical_columns().len()
        {
            return Err(Error::Schema(format!(
                "layout has {} numeric and {} categorical columns, got {} and {}",
                layout.numeric_columns().len(),
                layout.categorical_columns().len(),
                numeric.len(),
                categorical.len()
            )));
        }
        for (i, c) in numeric.iter().enumerate() {
            if c.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "numeric column {i} has {} rows, labels have {n}",
                    c.len()
                )));
            }
        }
        for (i, c) in categorical.iter().enumerate() {
            if c.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "categorical column {i} has {} rows, labels have {n}",
                    c.len()
                )));
            }
        }
        Ok(Dataset {
            layout,
            numeric,
            categorical,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn layout(&self) -> &ColumnLayout {
        &self.layout
    }

    pub fn numeric_columns(&self) -> &[Vec<f64>] {
        &self.numeric
    }

    pub fn categorical_columns(&self) -> &[Vec<String>] {
        &self.categorical
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Checks that every label is exactly 0 or 1.
    pub fn check_binary_labels(&self) -> Result<()> {
        match self
            .labels
            .iter()
            .enumerate()
            .find(|(_, y)| **y != 0.0 && **y != 1.0)
        {
            Some((row, &value)) => Err(Error::LabelNotBinary { row, value }),
            None => Ok(()),
        }
    }

    /// Writes the dataset back as tab-separated text. Ignored columns are
    /// written as empty fields.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut fields = vec![String::new(); self.layout.n_columns()];
        for row in 0..self.n_rows() {
            let (mut num, mut cat) = (0, 0);
            for (col, kind) in self.layout.kinds().iter().enumerate() {
                fields[col] = match kind {
                    ColumnKind::Label => format_real(self.labels[row]),
                    ColumnKind::Numeric => {
                        num += 1;
                        format_real(self.numeric[num - 1][row])
                    }
                    ColumnKind::Categorical => {
                        cat += 1;
                        self.categorical[cat - 1][row].clone()
                    }
                    ColumnKind::Ignored => String::new(),
                };
            }
            writeln!(out, "{}", fields.join("\t")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

fn format_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        v.to_string()
    }
}

fn parse_real(token: &str) -> Option<f64> {
    if token.is_empty() || token == "NaN" {
        return Some(f64::NAN);
    }
    token.parse::<f64>().ok()
}

/// Loads a tab-separated data file using the column descriptor at `descriptor_path`.
pub fn load_dataset(data_path: impl AsRef<Path>, descriptor_path: impl AsRef<Path>) -> Result<Dataset> {
    let layout = ColumnLayout::load(descriptor_path)?;
    load_dataset_with_layout(data_path, layout)
}

pub fn load_dataset_with_layout(data_path: impl AsRef<Path>, layout: ColumnLayout) -> Result<Dataset> {
    let path = data_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let n_num = layout.numeric_columns().len();
    let n_cat = layout.categorical_columns().len();
    let mut numeric = vec![Vec::new(); n_num];
    let mut categorical = vec![Vec::new(); n_cat];
    let mut labels = Vec::new();

    for (line_no, line) in text.split('\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != layout.n_columns() {
            return Err(Error::ColumnCount {
                path: path.to_path_buf(),
                line: line_no + 1,
                expected: layout.n_columns(),
                found: fields.len(),
            });
        }
        let (mut num, mut cat) = (0, 0);
        for (col, (kind, token)) in layout.kinds().iter().zip(&fields).enumerate() {
            let non_numeric = || Error::NonNumeric {
                path: path.to_path_buf(),
                line: line_no + 1,
                column: col,
                token: token.to_string(),
            };
            match kind {
                ColumnKind::Label => {
                    let y = parse_real(token).filter(|y| !y.is_nan()).ok_or_else(non_numeric)?;
                    labels.push(y);
                }
                ColumnKind::Numeric => {
                    numeric[num].push(parse_real(token).ok_or_else(non_numeric)?);
                    num += 1;
                }
                ColumnKind::Categorical => {
                    categorical[cat].push(token.to_string());
                    cat += 1;
                }
                ColumnKind::Ignored => {}
            }
        }
    }
    Dataset::new(layout, numeric, categorical, labels)
}

/// A bijection over row indices: `order[p]` is the row at position `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    position_of: Vec<usize>,
}

impl Permutation {
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut position_of = vec![usize::MAX; n];
        for (p, &row) in order.iter().enumerate() {
            if row >= n || position_of[row] != usize::MAX {
                return Err(Error::Config(format!(
                    "not a permutation: row {row} at position {p}"
                )));
            }
            position_of[row] = p;
        }
        Ok(Permutation { order, position_of })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            order: (0..n).collect(),
            position_of: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position_of(&self) -> &[usize] {
        &self.position_of
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    pub permutations: Vec<Permutation>,
    pub seed: u64,
}

impl PermutationSet {
    pub fn len(&self) -> usize {
        self.permutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutations.is_empty()
    }

    pub fn get(&self, i: usize) -> &Permutation {
        &self.permutations[i]
    }
}

/// Draws `s` independent uniform permutations of `0..n_rows` from a ChaCha8
/// stream seeded with `seed`, using Fisher-Yates shuffles.
pub fn generate_permutations(n_rows: usize, s: usize, seed: u64) -> Result<PermutationSet> {
    if s == 0 {
        return Err(Error::Config("number of permutations must be at least 1".into()));
    }
    if n_rows == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let permutations = (0..s)
        .map(|_| {
            let mut order: Vec<usize> = (0..n_rows).collect();
            order.shuffle(&mut rng);
            let mut position_of = vec![0; n_rows];
            for (p, &row) in order.iter().enumerate() {
                position_of[row] = p;
            }
            Permutation { order, position_of }
        })
        .collect();
    Ok(PermutationSet { permutations, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_mixed_columns() {
        let dir = tempfile::tempdir().unwrap();
        let data = write(&dir, "d.tsv", "1\t0.5\ta\n0\t1.5\tb\n1\t2.5\ta\n");
        let cd = write(&dir, "cd", "0\tLabel\n1\tNum\n2\tCateg\n");
        let ds = load_dataset(&data, &cd).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.numeric_columns().len(), 1);
        assert_eq!(ds.categorical_columns().len(), 1);
        assert_eq!(ds.labels(), &[1.0, 0.0, 1.0]);
        assert_eq!(ds.categorical_columns()[0], vec!["a", "b", "a"]);
    }

    #[test]
    fn ignored_column_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let data = write(&dir, "d.tsv", "1\t0.5\ta\n0\t1.5\tb\n");
        let cd = write(&dir, "cd", "0\tLabel\n1\tNum\n2\tIgnored\n");
        let ds = load_dataset(&data, &cd).unwrap();
        assert_eq!(ds.categorical_columns().len(), 0);
        assert_eq!(ds.numeric_columns().len(), 1);
    }

    #[test]
    fn non_numeric_token_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let data = write(&dir, "d.tsv", "1\tabc\n");
        let cd = write(&dir, "cd", "0\tLabel\n1\tNum\n");
        let err = load_dataset(&data, &cd).unwrap_err();
        assert!(err.to_string().contains("non-numeric token"), "{err}");
    }

    #[test]
    fn column_count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let data = write(&dir, "d.tsv", "1\t2\t3\n");
        let cd = write(&dir, "cd", "0\tLabel\n1\tNum\n");
        assert!(matches!(
            load_dataset(&data, &cd),
            Err(Error::ColumnCount { expected: 2, found: 3, .. })
        ));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let cd = write(&dir, "cd", "0\tLabel\n");
        assert!(matches!(
            load_dataset(dir.path().join("nope.tsv"), &cd),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn missing_numeric_values_become_nan() {
        let dir = tempfile::tempdir().unwrap();
        let data = write(&dir, "d.tsv", "1\t\n0\tNaN\n1\t3\n");
        let cd = write(&dir, "cd", "0\tLabel\n1\tNum\n");
        let ds = load_dataset(&data, &cd).unwrap();
        let col = &ds.numeric_columns()[0];
        assert!(col[0].is_nan() && col[1].is_nan());
        assert_eq!(col[2], 3.0);
    }

    #[test]
    fn descriptor_needs_exactly_one_label() {
        assert!(ColumnLayout::parse("0\tNum\n1\tNum\n").is_err());
        assert!(ColumnLayout::parse("0\tLabel\n1\tLabel\n").is_err());
        assert!(ColumnLayout::parse("0\tLabel\n0\tNum\n").is_err());
        assert!(ColumnLayout::parse("0\tLabel\n2\tNum\n").is_err());
        assert!(ColumnLayout::parse("0\tLabel\n1\tWhat\n").is_err());
    }

    #[test]
    fn binary_label_check() {
        let layout = ColumnLayout::parse("0\tLabel\n").unwrap();
        let ok = Dataset::new(layout.clone(), vec![], vec![], vec![0.0, 1.0]).unwrap();
        assert!(ok.check_binary_labels().is_ok());
        let bad = Dataset::new(layout, vec![], vec![], vec![0.0, 2.0]).unwrap();
        let err = bad.check_binary_labels().unwrap_err();
        assert!(err.to_string().contains("labels must be 0/1"));
    }

    #[test]
    fn single_row_permutations_are_trivial() {
        let set = generate_permutations(1, 3, 7).unwrap();
        assert_eq!(set.len(), 3);
        for p in &set.permutations {
            assert_eq!(p.order(), &[0]);
        }
    }

    #[test]
    fn permutations_are_deterministic() {
        let a = generate_permutations(5, 2, 42).unwrap();
        let b = generate_permutations(5, 2, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_permutations(5, 2, 43).unwrap();
        assert_eq!(c.seed, 43);
    }

    #[test]
    fn permutations_are_bijections() {
        let set = generate_permutations(1000, 4, 1).unwrap();
        for p in &set.permutations {
            let mut sorted = p.order().to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..1000).collect::<Vec<_>>());
            for (pos, &row) in p.order().iter().enumerate() {
                assert_eq!(p.position_of()[row], pos);
            }
        }
    }

    #[test]
    fn zero_permutations_rejected() {
        assert!(generate_permutations(10, 0, 0).is_err());
    }
}
