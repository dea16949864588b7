//! Synthetic pristine datasets with the produce-price schema.
//!
//! Stand-in for the original source file, which is not redistributed. The
//! method under test is domain-agnostic, so any numeric table with
//! outlier-free marginals is a valid substrate; the distribution parameters
//! below are fixture choices shaped to look like the real columns, nothing
//! more.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::tabular::{Column, Table};

/// Column names of the generated dataset, in output order.
pub const SCHEMA: [&str; 5] = [
    "AveragePrice",
    "Total Volume",
    "Total Bags",
    "Small Bags",
    "Large Bags",
];

const PRICE_RANGE: (f64, f64) = (0.44, 3.25);
const LOG_VOLUME_MEAN: f64 = 11.1;
const LOG_VOLUME_SIGMA: f64 = 0.5;
const BAGS_SHARE: (f64, f64) = (0.05, 0.25);
const SMALL_SHARE: (f64, f64) = (0.70, 0.97);
const LARGE_FILL: (f64, f64) = (0.50, 0.95);

/// Generate `rows` pristine rows, deterministic per seed.
///
/// Invariants of the output: every cell is present and positive,
/// `Small Bags + Large Bags <= Total Bags <= Total Volume` on every row.
pub fn generate(rows: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let volume_dist = LogNormal::new(LOG_VOLUME_MEAN, LOG_VOLUME_SIGMA).expect("valid sigma");

    let mut price = Vec::with_capacity(rows);
    let mut volume = Vec::with_capacity(rows);
    let mut bags = Vec::with_capacity(rows);
    let mut small = Vec::with_capacity(rows);
    let mut large = Vec::with_capacity(rows);
    for _ in 0..rows {
        let p = round2(rng.random_range(PRICE_RANGE.0..PRICE_RANGE.1));
        let v = round2(volume_dist.sample(&mut rng));
        let b = round2(v * rng.random_range(BAGS_SHARE.0..BAGS_SHARE.1));
        let small_share = rng.random_range(SMALL_SHARE.0..SMALL_SHARE.1);
        let s = round2(b * small_share);
        let l = round2(b * (1.0 - small_share) * rng.random_range(LARGE_FILL.0..LARGE_FILL.1));
        price.push(Some(p));
        volume.push(Some(v));
        bags.push(Some(b));
        small.push(Some(s));
        large.push(Some(l));
    }

    let columns = vec![
        (SCHEMA[0].to_string(), Column::Numeric(price)),
        (SCHEMA[1].to_string(), Column::Numeric(volume)),
        (SCHEMA[2].to_string(), Column::Numeric(bags)),
        (SCHEMA[3].to_string(), Column::Numeric(small)),
        (SCHEMA[4].to_string(), Column::Numeric(large)),
    ];
    Table::from_columns(columns, None).expect("generated columns are valid")
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::to_csv_bytes;

    #[test]
    fn schema_matches() {
        let table = generate(8, 7);
        let names: Vec<&str> = table.column_names().collect();
        assert_eq!(names, SCHEMA);
        assert_eq!(table.n_rows(), 8);
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let a = to_csv_bytes(&generate(200, 31));
        let b = to_csv_bytes(&generate(200, 31));
        assert_eq!(a, b);
        let c = to_csv_bytes(&generate(200, 32));
        assert_ne!(a, c);
    }

    #[test]
    fn bag_counts_nest_inside_volume() {
        let table = generate(4000, 1);
        let volume = table.numeric("Total Volume").unwrap();
        let bags = table.numeric("Total Bags").unwrap();
        let small = table.numeric("Small Bags").unwrap();
        let large = table.numeric("Large Bags").unwrap();
        for i in 0..table.n_rows() {
            let (v, b, s, l) = (
                volume[i].unwrap(),
                bags[i].unwrap(),
                small[i].unwrap(),
                large[i].unwrap(),
            );
            assert!(s + l <= b, "row {i}: {s} + {l} > {b}");
            assert!(b <= v, "row {i}: {b} > {v}");
            assert!(v > 0.0 && s > 0.0 && l > 0.0);
        }
    }

    #[test]
    fn prices_stay_in_range() {
        let table = generate(2000, 5);
        for cell in table.numeric("AveragePrice").unwrap() {
            let p = cell.unwrap();
            assert!((PRICE_RANGE.0..=PRICE_RANGE.1).contains(&p));
        }
    }
}
