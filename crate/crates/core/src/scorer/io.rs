//! Binary model file.
//!
//! ```text
//! "OAKB" | version: u32 | payload length: u64 | payload | xxh64(payload): u64
//! payload = meta | borders | encoders | trees, each prefixed by its u64 length
//! ```
//!
//! All integers and floats are little-endian; floats are stored as raw bits.

use std::fs;
use std::path::Path;

use twox_hash::XxHash64;

use super::{CtrStat, Ensemble, ModelCtr, ModelMeta, ModelSplit};
use crate::booster::Loss;
use crate::cat_encoder::{Border, CategoryDictionary, CombinationDescriptor, FullDataStats, SplitPart, TsConfig};
use crate::data::{ColumnDescriptor, ColumnKind, ColumnLayout};
use crate::error::{Error, Result};
use crate::quantization::BorderSet;
use crate::tree::{ObliviousTree, MAX_DEPTH};

pub const MAGIC: [u8; 4] = *b"OAKB";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const CHECKSUM_SEED: u64 = 0;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection too large for model file"));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn section(&mut self, body: Writer) {
        self.u64(body.0.len() as u64);
        self.0.extend_from_slice(&body.0);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Malformed("section overruns its length".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    /// A count of items that each take at least `min_size` bytes.
    fn len(&mut self, min_size: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(min_size) > self.buf.len() - self.pos {
            return Err(Error::Malformed("length field exceeds section".into()));
        }
        Ok(n)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Malformed("invalid utf-8 token".into()))
    }
    fn section(&mut self) -> Result<Reader<'a>> {
        let n = usize::try_from(self.u64()?).map_err(|_| Error::Malformed("section too large".into()))?;
        Ok(Reader::new(self.take(n)?))
    }
    fn finish(&self, what: &str) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Malformed(format!("trailing bytes in {what}")));
        }
        Ok(())
    }
}

fn loss_tag(loss: Loss) -> u8 {
    match loss {
        Loss::Logloss => 0,
        Loss::Rmse => 1,
    }
}

fn kind_tag(kind: ColumnKind) -> u8 {
    match kind {
        ColumnKind::Label => 0,
        ColumnKind::Numeric => 1,
        ColumnKind::Categorical => 2,
        ColumnKind::Ignored => 3,
    }
}

fn write_meta(m: &Ensemble) -> Writer {
    let mut w = Writer::default();
    w.u8(loss_tag(m.loss));
    w.len(m.layout.kinds().len());
    for &k in m.layout.kinds() {
        w.u8(kind_tag(k));
    }
    w.len(m.ts_config.priors.len());
    for &p in &m.ts_config.priors {
        w.f64(p);
    }
    w.f64(m.ts_config.prior_weight);
    let meta = &m.meta;
    w.u64(meta.iterations as u64);
    w.f64(meta.learning_rate);
    w.u32(meta.depth as u32);
    w.u32(meta.permutations as u32);
    w.u64(meta.seed);
    w.u32(meta.one_hot_max_size as u32);
    w.u32(meta.max_ctr_complexity as u32);
    w.u32(meta.border_count as u32);
    w.u32(meta.ctr_border_count as u32);
    w.u8(meta.plain as u8);
    w
}

fn write_borders(m: &Ensemble) -> Writer {
    let mut w = Writer::default();
    w.len(m.float_borders.len());
    for b in &m.float_borders {
        w.len(b.borders.len());
        for &v in &b.borders {
            w.f64(v);
        }
    }
    w
}

fn write_split_part(w: &mut Writer, p: &SplitPart) {
    match *p {
        SplitPart::Float { feature, border } => {
            w.u8(0);
            w.u32(feature as u32);
            w.f64(border.0);
        }
        SplitPart::OneHot { feature, value } => {
            w.u8(1);
            w.u32(feature as u32);
            w.u32(value);
        }
    }
}

fn write_encoders(m: &Ensemble) -> Writer {
    let mut w = Writer::default();
    w.len(m.dictionaries.len());
    for d in &m.dictionaries {
        w.len(d.tokens().len());
        for t in d.tokens() {
            w.str(t);
        }
    }
    w.len(m.ctrs.len());
    for ctr in &m.ctrs {
        let d = &ctr.descriptor;
        w.len(d.cat_parts().len());
        for &c in d.cat_parts() {
            w.u32(c as u32);
        }
        w.len(d.split_parts().len());
        for p in d.split_parts() {
            write_split_part(&mut w, p);
        }
        w.len(ctr.tuples.len());
        for t in &ctr.tuples {
            for &v in t.iter() {
                w.u32(v);
            }
        }
        for (&s, &c) in ctr.stats.label_sum.iter().zip(&ctr.stats.count) {
            w.f64(s);
            w.u32(c);
        }
    }
    w
}

fn write_trees(m: &Ensemble) -> Writer {
    let mut w = Writer::default();
    w.len(m.splits.len());
    for s in &m.splits {
        match *s {
            ModelSplit::Float { feature, border } => {
                w.u8(0);
                w.u32(feature as u32);
                w.f64(border);
            }
            ModelSplit::OneHot { feature, value } => {
                w.u8(1);
                w.u32(feature as u32);
                w.u32(value);
            }
            ModelSplit::Ctr { ctr, stat, border } => {
                w.u8(2);
                w.u32(ctr as u32);
                w.u8(match stat {
                    CtrStat::Count => 0,
                    CtrStat::Ts(p) => p + 1,
                });
                w.f64(border);
            }
        }
    }
    w.len(m.trees.len());
    for t in &m.trees {
        w.u8(t.depth() as u8);
        for &f in &t.level_features {
            w.u32(f);
        }
        for &v in &t.leaf_values {
            w.f64(v);
        }
    }
    w
}

/// Serializes `model` into the versioned, checksummed container.
pub fn to_bytes(model: &Ensemble) -> Vec<u8> {
    let mut payload = Writer::default();
    payload.section(write_meta(model));
    payload.section(write_borders(model));
    payload.section(write_encoders(model));
    payload.section(write_trees(model));
    let payload = payload.0;

    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&XxHash64::oneshot(CHECKSUM_SEED, &payload).to_le_bytes());
    out
}

fn read_meta(r: &mut Reader) -> Result<(Loss, ColumnLayout, TsConfig, ModelMeta)> {
    let loss = match r.u8()? {
        0 => Loss::Logloss,
        1 => Loss::Rmse,
        t => return Err(Error::Malformed(format!("unknown loss tag {t}"))),
    };
    let n_cols = r.len(1)?;
    let mut descriptors = Vec::with_capacity(n_cols);
    for column_index in 0..n_cols {
        let kind = match r.u8()? {
            0 => ColumnKind::Label,
            1 => ColumnKind::Numeric,
            2 => ColumnKind::Categorical,
            3 => ColumnKind::Ignored,
            t => return Err(Error::Malformed(format!("unknown column kind tag {t}"))),
        };
        descriptors.push(ColumnDescriptor { column_index, kind });
    }
    let layout = ColumnLayout::new(&descriptors).map_err(|e| Error::Malformed(e.to_string()))?;
    let n_priors = r.len(8)?;
    let priors = (0..n_priors).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let prior_weight = r.f64()?;
    let ts = TsConfig::new(priors, prior_weight).map_err(|e| Error::Malformed(e.to_string()))?;
    let meta = ModelMeta {
        iterations: r.u64()? as usize,
        learning_rate: r.f64()?,
        depth: r.usize()?,
        permutations: r.usize()?,
        seed: r.u64()?,
        one_hot_max_size: r.usize()?,
        max_ctr_complexity: r.usize()?,
        border_count: r.usize()?,
        ctr_border_count: r.usize()?,
        plain: r.u8()? != 0,
    };
    r.finish("meta section")?;
    Ok((loss, layout, ts, meta))
}

fn read_borders(r: &mut Reader) -> Result<Vec<BorderSet>> {
    let n = r.len(4)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let k = r.len(8)?;
        let borders = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        out.push(BorderSet::new(borders).map_err(|e| Error::Malformed(e.to_string()))?);
    }
    r.finish("borders section")?;
    Ok(out)
}

fn read_split_part(r: &mut Reader) -> Result<SplitPart> {
    match r.u8()? {
        0 => Ok(SplitPart::Float {
            feature: r.usize()?,
            border: Border(r.f64()?),
        }),
        1 => Ok(SplitPart::OneHot {
            feature: r.usize()?,
            value: r.u32()?,
        }),
        t => Err(Error::Malformed(format!("unknown split part tag {t}"))),
    }
}

fn read_encoders(r: &mut Reader) -> Result<(Vec<CategoryDictionary>, Vec<ModelCtr>)> {
    let n_dicts = r.len(4)?;
    let mut dictionaries = Vec::with_capacity(n_dicts);
    for _ in 0..n_dicts {
        let n_tokens = r.len(4)?;
        let tokens = (0..n_tokens).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        dictionaries.push(CategoryDictionary::from_tokens(tokens).map_err(|e| Error::Malformed(e.to_string()))?);
    }
    let n_ctrs = r.len(8)?;
    let mut ctrs = Vec::with_capacity(n_ctrs);
    for _ in 0..n_ctrs {
        let n_cat = r.len(4)?;
        let cat_parts = (0..n_cat).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
        let n_split = r.len(5)?;
        let split_parts = (0..n_split).map(|_| read_split_part(r)).collect::<Result<Vec<_>>>()?;
        let descriptor = CombinationDescriptor::new(cat_parts, split_parts).map_err(|e| Error::Malformed(e.to_string()))?;
        let width = descriptor.part_count();
        let n_tuples = r.len(4 * width + 12)?;
        let mut tuples = Vec::with_capacity(n_tuples);
        for _ in 0..n_tuples {
            let t = (0..width).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            tuples.push(t.into_boxed_slice());
        }
        let mut label_sum = Vec::with_capacity(n_tuples);
        let mut count = Vec::with_capacity(n_tuples);
        for _ in 0..n_tuples {
            label_sum.push(r.f64()?);
            count.push(r.u32()?);
        }
        let total = count.iter().map(|&c| c as u64).sum();
        let stats = FullDataStats {
            label_sum,
            count,
            total,
        };
        ctrs.push(ModelCtr::new(descriptor, tuples, stats)?);
    }
    r.finish("encoders section")?;
    Ok((dictionaries, ctrs))
}

fn read_trees(r: &mut Reader) -> Result<(Vec<ModelSplit>, Vec<ObliviousTree>)> {
    let n_splits = r.len(9)?;
    let mut splits = Vec::with_capacity(n_splits);
    for _ in 0..n_splits {
        let split = match r.u8()? {
            0 => ModelSplit::Float {
                feature: r.usize()?,
                border: r.f64()?,
            },
            1 => ModelSplit::OneHot {
                feature: r.usize()?,
                value: r.u32()?,
            },
            2 => {
                let ctr = r.usize()?;
                let stat = match r.u8()? {
                    0 => CtrStat::Count,
                    p => CtrStat::Ts(p - 1),
                };
                ModelSplit::Ctr {
                    ctr,
                    stat,
                    border: r.f64()?,
                }
            }
            t => return Err(Error::Malformed(format!("unknown split tag {t}"))),
        };
        splits.push(split);
    }
    let n_trees = r.len(9)?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let depth = r.u8()? as usize;
        if depth > MAX_DEPTH {
            return Err(Error::Malformed(format!("tree depth {depth} exceeds {MAX_DEPTH}")));
        }
        let features = (0..depth).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let values = (0..1usize << depth).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        trees.push(ObliviousTree::new(features, values).map_err(|e| Error::Malformed(e.to_string()))?);
    }
    r.finish("trees section")?;
    Ok((splits, trees))
}

/// Parses and verifies a model produced by [`to_bytes`]. Nothing is returned
/// unless the header, checksum and every cross-reference check out.
pub fn from_bytes(bytes: &[u8]) -> Result<Ensemble> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let payload_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected = usize::try_from(payload_len)
        .ok()
        .and_then(|p| p.checked_add(HEADER_LEN + 8))
        .ok_or(Error::Truncated)?;
    if bytes.len() < expected {
        return Err(Error::Truncated);
    }
    if bytes.len() > expected {
        return Err(Error::Malformed("trailing bytes after checksum".into()));
    }
    let payload = &bytes[HEADER_LEN..expected - 8];
    let stored = u64::from_le_bytes(bytes[expected - 8..].try_into().unwrap());
    if XxHash64::oneshot(CHECKSUM_SEED, payload) != stored {
        return Err(Error::Checksum);
    }

    let mut r = Reader::new(payload);
    let (loss, layout, ts_config, meta) = read_meta(&mut r.section()?)?;
    let float_borders = read_borders(&mut r.section()?)?;
    let (dictionaries, ctrs) = read_encoders(&mut r.section()?)?;
    let (splits, trees) = read_trees(&mut r.section()?)?;
    r.finish("payload")?;

    let model = Ensemble {
        layout,
        loss,
        ts_config,
        float_borders,
        dictionaries,
        ctrs,
        splits,
        trees,
        meta,
    };
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &Ensemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Ensemble> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::booster::{train, TrainConfig};
    use crate::data::Dataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = ColumnLayout::parse("0\tLabel\n1\tNum\n2\tCateg\n3\tCateg\n").unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let a: Vec<String> = (0..n).map(|_| format!("u{}", rng.gen_range(0..5))).collect();
        let b: Vec<String> = (0..n).map(|_| format!("v{}", rng.gen_range(0..4))).collect();
        let y = (0..n)
            .map(|i| ((x[i] > 0.5) ^ (a[i] == "u2") ^ rng.gen_bool(0.1)) as u8 as f64)
            .collect();
        Dataset::new(layout, vec![x], vec![a, b], y).unwrap()
    }

    fn model() -> (Ensemble, Dataset) {
        let ds = dataset(300, 7);
        let m = train(&ds, &TrainConfig { iterations: 10, depth: 4, ..Default::default() }).unwrap();
        (m, ds)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let (m, _) = model();
        let loaded = from_bytes(&to_bytes(&m)).unwrap();
        assert_eq!(loaded, m);
        let probe = dataset(1000, 99);
        let a = m.predict(&probe).unwrap();
        let b = loaded.predict(&probe).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(to_bytes(&loaded), to_bytes(&m));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let (m, _) = model();
        let mut bytes = to_bytes(&m);
        bytes[4..8].copy_from_slice(&999u32.to_le_bytes());
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("unsupported version"), "{err}");
    }

    #[test]
    fn every_payload_byte_is_guarded() {
        let (m, _) = model();
        let bytes = to_bytes(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut corrupt = bytes.clone();
            let i = rng.gen_range(HEADER_LEN..bytes.len() - 8);
            corrupt[i] ^= 1 << rng.gen_range(0..8);
            assert!(matches!(from_bytes(&corrupt), Err(Error::Checksum)));
        }
    }

    #[test]
    fn truncation_and_magic() {
        let (m, _) = model();
        let bytes = to_bytes(&m);
        for cut in [5, 15, HEADER_LEN + 3, bytes.len() - 1] {
            assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::Truncated)), "cut {cut}");
        }
        assert!(matches!(from_bytes(b"GBDT0000"), Err(Error::BadMagic)));
    }
}
