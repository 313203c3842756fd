use rand::seq::SliceRandom;

use super::TabularDataset;
use crate::error::{Error, Result};
use crate::seed;

/// Seeded partition of `0..n` into a training part of `⌈n·f⌉` indices and a
/// held-out part with the rest. Both parts come back sorted.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    // The epsilon keeps products like 0.7 * 10 = 7.000000000000001 from
    // rounding up.
    let n_train = ((n as f64 * train_fraction) - 1e-9).ceil().max(0.0) as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(
    ds: &TabularDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    let (train, test) = split_indices(ds.len(), train_fraction, seed)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Argument(format!(
            "splitting {} rows at {train_fraction} leaves an empty side",
            ds.len()
        )));
    }
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{ColumnMeta, DatasetMeta, FeatureMatrix};
    use proptest::prelude::*;

    fn ten(n: usize) -> TabularDataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        TabularDataset::new(
            "seq",
            "base",
            "g",
            vec![ColumnMeta::numeric("x")],
            FeatureMatrix::from_rows(&rows).unwrap(),
            (0..n).map(|i| (i % 2) as u8).collect(),
            (0..n).map(|i| (i % 3 == 0) as u8).collect(),
            DatasetMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn sizes_follow_the_ceiling_rule() {
        let (a, b) = split(&ten(10), 0.8, 7).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a, b) = split(&ten(5), 0.8, 7).unwrap();
        assert_eq!((a.len(), b.len()), (4, 1));
        let (a, b) = split_indices(10, 0.7, 1).unwrap();
        assert_eq!((a.len(), b.len()), (7, 3));
    }

    #[test]
    fn union_is_the_original_and_deterministic() {
        let ds = ten(10);
        let (a, b) = split(&ds, 0.8, 7).unwrap();
        let mut seen: Vec<f64> = a.rows().as_slice().iter().chain(b.rows().as_slice()).copied().collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..10).map(|i| i as f64).collect::<Vec<_>>());
        let (a2, b2) = split(&ds, 0.8, 7).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }

    #[test]
    fn fraction_outside_unit_interval_is_rejected() {
        assert!(split(&ten(10), 0.0, 1).is_err());
        assert!(split(&ten(10), 1.0, 1).is_err());
        assert!(split(&ten(10), -0.5, 1).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 1usize..300, f in 0.01f64..0.99, seed in any::<u64>()) {
            let (a, b) = split_indices(n, f, seed).unwrap();
            let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
