#![allow(dead_code)]

use territory_core::rng::SplitMix64;

pub const HEADER: &str = "origin,vol_cbm,weight_ton,partner_longitude,partner_latitude\n";

/// Random order table: volumes uniform in [0.05, 1.5], points uniform in a
/// 0.5 x 0.5 degree box.
pub fn synthetic_csv(n: usize, seed: u64) -> String {
    let mut rng = SplitMix64::new(seed ^ 0x5EED_0FDA_7A00);
    let mut text = String::from(HEADER);
    for i in 0..n {
        let vol = 0.05 + 1.45 * rng.next_f64();
        let weight = 0.01 + 0.5 * rng.next_f64();
        let lon = 106.6 + 0.5 * rng.next_f64();
        let lat = -6.5 + 0.5 * rng.next_f64();
        text.push_str(&format!("so-{seed}-{i:05},{vol},{weight},{lon},{lat}\n"));
    }
    text
}

/// Size of dataset `seed` in the 200-dataset suite: 50..=2000 orders.
pub fn suite_size(seed: u64) -> usize {
    let mut rng = SplitMix64::new(seed.wrapping_mul(31).wrapping_add(7));
    50 + rng.next_index(1951)
}

pub fn ids_in_csv(text: &str) -> Vec<String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| r.expect("valid csv")[0].to_string())
        .collect()
}
