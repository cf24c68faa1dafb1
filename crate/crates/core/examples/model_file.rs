//! The model container: header, sections, checksum.
//!
//! `cargo run --release --example model_file`

use oakboost::scorer::{from_bytes, to_bytes, FORMAT_VERSION, MAGIC};
use oakboost::{train, ColumnLayout, Dataset, TrainConfig};

fn main() -> oakboost::Result<()> {
    let layout = ColumnLayout::parse("0\tLabel\n1\tNum\n2\tCateg\n")?;
    let x: Vec<f64> = (0..200).map(|i| (i % 17) as f64).collect();
    let c: Vec<String> = (0..200).map(|i| format!("c{}", i % 6)).collect();
    let y: Vec<f64> = (0..200).map(|i| ((i % 17 > 8) ^ (i % 6 == 2)) as u8 as f64).collect();
    let data = Dataset::new(layout, vec![x], vec![c], y)?;
    let model = train(&data, &TrainConfig { iterations: 20, ..Default::default() })?;

    let bytes = to_bytes(&model);
    println!("magic {:?}, version {FORMAT_VERSION}, {} bytes", std::str::from_utf8(&MAGIC).unwrap(), bytes.len());
    assert_eq!(from_bytes(&bytes)?, model);

    let mut corrupted = bytes.clone();
    corrupted[bytes.len() / 2] ^= 0x10;
    println!("flipped bit:   {}", from_bytes(&corrupted).unwrap_err());
    println!("truncated:     {}", from_bytes(&bytes[..bytes.len() - 3]).unwrap_err());
    let mut future = bytes.clone();
    future[4..8].copy_from_slice(&999u32.to_le_bytes());
    println!("version 999:   {}", from_bytes(&future).unwrap_err());
    Ok(())
}
