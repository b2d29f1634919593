use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;

/// Disjoint train/validation/test index sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratios: [u64; 3],
}

fn cut(len: usize, ratios: [f64; 3]) -> (usize, usize) {
    let a = (ratios[0] * len as f64 + 1e-9).floor() as usize;
    let b = (ratios[1] * len as f64 + 1e-9).floor() as usize;
    let a = a.min(len);
    (a, b.min(len - a))
}

/// Shuffles `0..n` with `seed` and cuts it into train/val/test with sizes
/// `floor(r0 n)`, `floor(r1 n)` and the remainder. With `strata`, the cut is
/// made inside every class and the parts are merged. Each part is returned in
/// ascending order.
pub fn split(
    n: usize,
    ratios: [f64; 3],
    seed: u64,
    strata: Option<&[usize]>,
) -> Result<SplitAssignment, DataError> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(DataError::Invalid(format!("split ratios {ratios:?} outside [0, 1]")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(DataError::Invalid(format!("split ratios sum to {total}, not 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = match strata {
        None => vec![(0..n).collect()],
        Some(labels) => {
            if labels.len() != n {
                return Err(DataError::Invalid(format!("{} strata labels for {n} items", labels.len())));
            }
            let classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut g = vec![Vec::new(); classes];
            for (i, &c) in labels.iter().enumerate() {
                g[c].push(i);
            }
            g
        }
    };
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for mut g in groups {
        g.shuffle(&mut rng);
        let (a, b) = cut(g.len(), ratios);
        train.extend_from_slice(&g[..a]);
        val.extend_from_slice(&g[a..a + b]);
        test.extend_from_slice(&g[a + b..]);
    }
    for (name, part) in [("train", &train), ("validation", &val), ("test", &test)] {
        if part.is_empty() {
            return Err(DataError::Invalid(format!(
                "{name} split of {n} items with ratios {ratios:?} is empty"
            )));
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitAssignment { train, val, test, seed, ratios: ratios.map(f64::to_bits) })
}
