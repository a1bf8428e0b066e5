//! Synthetic balanced binary-classification data with swap noise: selected
//! positive and negative samples exchange feature vectors while keeping
//! their labels. The marginal feature distribution is untouched; only the
//! feature↔label relation is corrupted.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum DataError {
    OddSampleCount { n: usize },
    BadDimension { d: usize },
    BadSeparation { separation: f64 },
    /// Noise fraction must lie in [0, 0.5].
    BadFraction { fraction: f64 },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::OddSampleCount { n } => {
                write!(f, "sample count {n} must be even for balanced classes")
            }
            DataError::BadDimension { d } => write!(f, "feature dimension {d} must be >= 1"),
            DataError::BadSeparation { separation } => {
                write!(f, "class separation {separation} must be > 0")
            }
            DataError::BadFraction { fraction } => {
                write!(f, "noise fraction {fraction} must be in [0, 0.5]")
            }
        }
    }
}

impl std::error::Error for DataError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub separation: f64,
    pub noise_fraction: f64,
    /// Seed of the swap-noise draw, when noise was injected.
    pub noise_seed: Option<u64>,
}

/// A labeled dataset. `noise_mask[i]` is true when row i's features were
/// exchanged by the most recent [`inject_swap_noise`]; labels are never
/// changed by noising.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    pub noise_mask: Vec<bool>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, |row| row.len())
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.y.iter().map(|&y| f64::from(y)).collect()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.y.iter().filter(|&&y| y == label).count()
    }

    /// CSV with feature columns f0..f{d−1}, then `label` and `noisy`.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = String::new();
        for j in 0..self.dim() {
            out.push_str(&format!("f{j},"));
        }
        out.push_str("label,noisy\n");
        for i in 0..self.n() {
            for v in &self.x[i] {
                out.push_str(&format!("{v:.16e},"));
            }
            out.push_str(&format!("{},{}\n", self.y[i], u8::from(self.noise_mask[i])));
        }
        out.into_bytes()
    }
}

/// Balanced pair of Gaussian clouds N(±μ, I) with |2μ| = `separation` along
/// a seeded random unit direction. The first n/2 rows are positive (label
/// 1), the rest negative. Deterministic per seed.
pub fn gen_gaussian_pair(
    n: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n % 2 != 0 || n == 0 {
        return Err(DataError::OddSampleCount { n });
    }
    if d == 0 {
        return Err(DataError::BadDimension { d });
    }
    if !(separation > 0.0) || !separation.is_finite() {
        return Err(DataError::BadSeparation { separation });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut direction: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    // A fully degenerate draw is essentially impossible; fall back to e0.
    if norm == 0.0 {
        direction[0] = 1.0;
    } else {
        direction.iter_mut().for_each(|v| *v /= norm);
    }
    let mu: Vec<f64> = direction.iter().map(|v| v * separation / 2.0).collect();

    let half = n / 2;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let sign = if i < half { 1.0 } else { -1.0 };
        let row: Vec<f64> = mu
            .iter()
            .map(|&m| sign * m + normal.sample(&mut rng))
            .collect();
        x.push(row);
        y.push(u8::from(i < half));
    }
    Ok(Dataset {
        x,
        y,
        noise_mask: vec![false; n],
        meta: DatasetMeta {
            seed,
            separation,
            noise_fraction: 0.0,
            noise_seed: None,
        },
    })
}

/// Splits a balanced dataset into a balanced head of `n_head` samples and a
/// balanced tail: the head takes the first n_head/2 rows of each class, the
/// tail the rest. Rows are i.i.d., so both halves follow the generating
/// distribution; a train/validation pair must come from one generated
/// dataset (one seed) to share that distribution.
pub fn split_balanced(ds: &Dataset, n_head: usize) -> Result<(Dataset, Dataset), DataError> {
    if n_head % 2 != 0 || n_head == 0 || n_head >= ds.n() {
        return Err(DataError::OddSampleCount { n: n_head });
    }
    let half_total = ds.n() / 2;
    let half_head = n_head / 2;
    let pick = |idx: Vec<usize>| -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| ds.x[i].clone()).collect(),
            y: idx.iter().map(|&i| ds.y[i]).collect(),
            noise_mask: idx.iter().map(|&i| ds.noise_mask[i]).collect(),
            meta: ds.meta,
        }
    };
    // Generated layout: positives first, then negatives.
    let head: Vec<usize> = (0..half_head)
        .chain(half_total..half_total + half_head)
        .collect();
    let tail: Vec<usize> = (half_head..half_total)
        .chain(half_total + half_head..ds.n())
        .collect();
    Ok((pick(head), pick(tail)))
}

/// Swap noise: k = round(fraction · n/2) seeded random positives exchange
/// feature vectors pairwise with k random negatives. Labels stay put; the
/// mask marks all 2k affected rows (reflecting this application only, so
/// re-applying the same swap restores the original features).
pub fn inject_swap_noise(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(0.0..=0.5).contains(&fraction) || !fraction.is_finite() {
        return Err(DataError::BadFraction { fraction });
    }
    let mut out = ds.clone();
    out.noise_mask = vec![false; ds.n()];
    out.meta.noise_fraction = fraction;
    out.meta.noise_seed = Some(seed);

    let per_class = ds.n() / 2;
    let k = (fraction * per_class as f64).round() as usize;
    if k == 0 {
        return Ok(out);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positives: Vec<usize> = (0..ds.n()).filter(|&i| ds.y[i] == 1).collect();
    let mut negatives: Vec<usize> = (0..ds.n()).filter(|&i| ds.y[i] == 0).collect();
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    for (&pi, &ni) in positives.iter().take(k).zip(negatives.iter().take(k)) {
        out.x.swap(pi, ni);
        out.noise_mask[pi] = true;
        out.noise_mask[ni] = true;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_are_balanced() {
        let ds = gen_gaussian_pair(4, 2, 1.0, 0).unwrap();
        assert_eq!(ds.count_label(1), 2);
        assert_eq!(ds.count_label(0), 2);
        let ds = gen_gaussian_pair(300, 20, 4.0, 1).unwrap();
        assert_eq!(ds.count_label(1), 150);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = gen_gaussian_pair(50, 5, 2.0, 7).unwrap();
        let b = gen_gaussian_pair(50, 5, 2.0, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_gaussian_pair(50, 5, 2.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_means_are_separated_along_one_direction() {
        let sep = 10.0;
        let ds = gen_gaussian_pair(2000, 5, sep, 3).unwrap();
        let mean_of = |label: u8| -> Vec<f64> {
            let rows: Vec<&Vec<f64>> = ds
                .x
                .iter()
                .zip(&ds.y)
                .filter(|(_, &y)| y == label)
                .map(|(x, _)| x)
                .collect();
            (0..ds.dim())
                .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
                .collect()
        };
        let mp = mean_of(1);
        let mn = mean_of(0);
        let dist: f64 = mp
            .iter()
            .zip(&mn)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!((dist - sep).abs() < 0.5, "mean distance {dist} vs {sep}");
    }

    #[test]
    fn odd_counts_and_bad_params_are_rejected() {
        assert!(matches!(
            gen_gaussian_pair(5, 2, 1.0, 0),
            Err(DataError::OddSampleCount { n: 5 })
        ));
        assert!(gen_gaussian_pair(4, 0, 1.0, 0).is_err());
        assert!(gen_gaussian_pair(4, 2, 0.0, 0).is_err());
    }

    #[test]
    fn zero_fraction_changes_nothing() {
        let ds = gen_gaussian_pair(20, 3, 2.0, 0).unwrap();
        let noised = inject_swap_noise(&ds, 0.0, 1).unwrap();
        assert_eq!(noised.x, ds.x);
        assert_eq!(noised.y, ds.y);
        assert!(noised.noise_mask.iter().all(|&m| !m));
    }

    #[test]
    fn ten_percent_of_three_hundred_swaps_thirty_rows() {
        let ds = gen_gaussian_pair(300, 20, 4.0, 2).unwrap();
        let noised = inject_swap_noise(&ds, 0.1, 5).unwrap();
        let masked = noised.noise_mask.iter().filter(|&&m| m).count();
        assert_eq!(masked, 30);
        let masked_pos = (0..300)
            .filter(|&i| noised.noise_mask[i] && noised.y[i] == 1)
            .count();
        assert_eq!(masked_pos, 15);
        // Labels untouched, balance preserved.
        assert_eq!(noised.y, ds.y);
        assert_eq!(noised.count_label(1), 150);
    }

    #[test]
    fn swapping_twice_with_the_same_seed_restores_features() {
        let ds = gen_gaussian_pair(100, 4, 3.0, 11).unwrap();
        let once = inject_swap_noise(&ds, 0.2, 13).unwrap();
        assert_ne!(once.x, ds.x);
        let twice = inject_swap_noise(&once, 0.2, 13).unwrap();
        assert_eq!(twice.x, ds.x);
        // The mask still reflects the (second) application.
        assert_eq!(
            twice.noise_mask.iter().filter(|&&m| m).count(),
            once.noise_mask.iter().filter(|&&m| m).count()
        );
    }

    #[test]
    fn noising_permutes_the_multiset_of_rows() {
        let ds = gen_gaussian_pair(60, 3, 2.0, 4).unwrap();
        let noised = inject_swap_noise(&ds, 0.3, 9).unwrap();
        let mut before = ds.x.clone();
        let mut after = noised.x.clone();
        let key = |r: &Vec<f64>| r.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
        before.sort_by_key(key);
        after.sort_by_key(key);
        assert_eq!(before, after);
    }

    #[test]
    fn out_of_range_fraction_is_rejected() {
        let ds = gen_gaussian_pair(10, 2, 1.0, 0).unwrap();
        assert!(inject_swap_noise(&ds, 0.6, 0).is_err());
        assert!(inject_swap_noise(&ds, -0.1, 0).is_err());
    }

    #[test]
    fn split_preserves_balance_and_distribution_rows() {
        let ds = gen_gaussian_pair(600, 4, 3.0, 5).unwrap();
        let (head, tail) = split_balanced(&ds, 300).unwrap();
        assert_eq!(head.n(), 300);
        assert_eq!(tail.n(), 300);
        assert_eq!(head.count_label(1), 150);
        assert_eq!(tail.count_label(1), 150);
        // Every generated row lands in exactly one half.
        let mut all: Vec<&Vec<f64>> = head.x.iter().chain(tail.x.iter()).collect();
        let mut orig: Vec<&Vec<f64>> = ds.x.iter().collect();
        let key = |r: &&Vec<f64>| r.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
        all.sort_by_key(key);
        orig.sort_by_key(key);
        assert_eq!(all, orig);
        assert!(split_balanced(&ds, 601).is_err());
        assert!(split_balanced(&ds, 0).is_err());
    }

    #[test]
    fn csv_has_feature_label_and_noise_columns() {
        let ds = gen_gaussian_pair(4, 2, 1.0, 0).unwrap();
        let noised = inject_swap_noise(&ds, 0.5, 3).unwrap();
        let text = String::from_utf8(noised.to_csv()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "f0,f1,label,noisy");
        assert_eq!(lines.count(), 4);
        for line in text.lines().skip(1) {
            assert_eq!(line.split(',').count(), 4);
        }
    }
}
