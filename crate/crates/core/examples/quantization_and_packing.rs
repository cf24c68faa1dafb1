//! Borders, bins and the bit-packed bin layout.
//!
//! `cargo run --release --example quantization_and_packing`

use oakboost::quantization::{binarize, compute_borders, pack_bins, pack_width, quantize, QuantizedMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let skewed: Vec<f64> = (0..10_000).map(|_| rng.gen_range(0.0f64..1.0).powi(4) * 100.0).collect();
    let borders = compute_borders(&skewed, 8);
    let bins = quantize(&skewed, &borders);
    let mut occupancy = vec![0usize; borders.n_bins()];
    for &b in &bins {
        occupancy[b as usize] += 1;
    }
    println!("borders   {:?}", borders.borders.iter().map(|b| (b * 100.0).round() / 100.0).collect::<Vec<_>>());
    println!("occupancy {occupancy:?}");

    let with_missing = [1.0, f64::NAN, 3.0, 2.0, f64::NAN];
    let b = compute_borders(&with_missing, 4);
    println!("\nwith missing values: borders {:?}, bins {:?}", b.borders, quantize(&with_missing, &b));

    let columns = vec![vec![0u8, 1, 1, 0], vec![3, 0, 15, 7], vec![200, 17, 0, 99]];
    let matrix = QuantizedMatrix::new(columns, vec![2, 16, 201]).unwrap();
    for bins in [2, 16, 201] {
        println!("{bins:>3} bins -> {} bits", pack_width(bins));
    }
    let packed = pack_bins(&matrix);
    println!("{} packed word groups; unpack round-trips: {}", packed.groups().len(), packed.unpack() == matrix);

    let binary = binarize(&matrix);
    println!("{} binary features from 3 columns", binary.table.n_features);
}
