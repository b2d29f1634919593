use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DataError, Dataset};
use crate::hypergraph::Hypergraph;
use crate::models::TaskKind;
use crate::tensor::Tensor;

/// Shifts every column to mean 0 and scales it to unit (population)
/// variance. Constant columns are only centred.
pub fn standardize_columns(x: &Tensor) -> Tensor {
    let (n, f) = x.shape();
    let mut out = x.clone();
    for c in 0..f {
        let mean = (0..n).map(|r| x.get(r, c)).sum::<f64>() / n as f64;
        let var = (0..n).map(|r| (x.get(r, c) - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        for r in 0..n {
            out.set(r, c, (x.get(r, c) - mean) * scale);
        }
    }
    out
}

/// One hyperedge per row: the row and its `k` nearest rows by Euclidean
/// distance over standardised columns, ties to the lower index.
pub fn knn_hypergraph(table: &Tensor, k: usize) -> Result<Hypergraph, DataError> {
    let n = table.rows();
    if k >= n {
        return Err(DataError::Invalid(format!("k = {k} needs more than {n} rows")));
    }
    let z = standardize_columns(table);
    let edges: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let zi = z.row(i);
            let mut dist: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = zi.iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, j)
                })
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut e: Vec<usize> = dist[..k].iter().map(|&(_, j)| j).collect();
            e.push(i);
            e
        })
        .collect();
    Ok(Hypergraph::new(&edges, n)?)
}

/// A synthetic credit table shaped like the German credit data: 27
/// non-sensitive columns, a binary sensitive attribute and a binary
/// good/bad label that depends on the columns and, weakly, on the attribute.
#[derive(Debug, Clone)]
pub struct GermanLike {
    pub table: Tensor,
    pub sensitive: Vec<u8>,
    pub labels: Vec<usize>,
}

pub const GERMAN_COLUMNS: usize = 27;

/// Deterministic generator for [`GermanLike`] tables.
pub fn generate_german_like(rows: usize, seed: u64) -> GermanLike {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    // Fixed label weights, drawn once from a separate stream.
    let mut wrng = ChaCha8Rng::seed_from_u64(0x6e_726d_616e);
    let weights: Vec<f64> = (0..GERMAN_COLUMNS).map(|_| normal(&mut wrng) / 3.0).collect();

    let mut data = Vec::with_capacity(rows * GERMAN_COLUMNS);
    let mut sensitive = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let s = u8::from(rng.random_bool(0.69));
        let g = f64::from(s) - 0.5;
        let mut row = Vec::with_capacity(GERMAN_COLUMNS);
        // duration (months), amount, age, rate, residence, existing credits, dependents
        row.push((20.0 + 12.0 * normal(&mut rng)).clamp(4.0, 72.0).round());
        row.push((3200.0 * (0.6 * normal(&mut rng)).exp()).round());
        row.push((35.0 + 4.0 * g + 11.0 * normal(&mut rng)).clamp(19.0, 75.0).round());
        row.push(rng.random_range(1..=4) as f64);
        row.push(rng.random_range(1..=4) as f64);
        row.push(rng.random_range(1..=3) as f64);
        row.push(if rng.random_bool(0.15 + 0.1 * g) { 2.0 } else { 1.0 });
        // one-hot style indicators with group-dependent rates
        while row.len() < GERMAN_COLUMNS {
            let i = row.len();
            let p = 0.3 + 0.2 * ((i * 7 % 5) as f64 / 4.0) + if i % 4 == 0 { 0.1 * g } else { 0.0 };
            row.push(f64::from(u8::from(rng.random_bool(p.clamp(0.05, 0.95)))));
        }
        let scaled = [(row[0] - 20.0) / 12.0, (row[1].ln() - 3200f64.ln()) / 0.6, (row[2] - 35.0) / 11.0];
        let mut score = -0.73 + 0.15 * g;
        for (c, w) in weights.iter().enumerate() {
            let v = if c < 3 { scaled[c] } else { row[c] - 0.5 };
            score += w * v;
        }
        score += 0.5 * normal(&mut rng);
        labels.push(usize::from(score > 0.0));
        sensitive.push(s);
        data.extend(row);
    }
    GermanLike { table: Tensor::from_vec(rows, GERMAN_COLUMNS, data).expect("shape"), sensitive, labels }
}

impl GermanLike {
    /// kNN hypergraph over the table with standardised features.
    pub fn into_dataset(self, k: usize) -> Result<Dataset, DataError> {
        let hg = knn_hypergraph(&self.table, k)?;
        Ok(Dataset {
            name: "german_like".into(),
            level: TaskKind::Node,
            hypergraphs: vec![hg],
            features: vec![standardize_columns(&self.table)],
            labels: self.labels,
            num_classes: 2,
            sensitive: Some(self.sensitive),
        })
    }
}
