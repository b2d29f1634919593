//! Negative hyperedge samplers.
//!
//! * SNS draws a size from the positive size distribution and fills it with
//!   uniform nodes.
//! * MNS grows a connected node set from a real hyperedge through
//!   intersecting hyperedges.
//! * CNS swaps one member of a real hyperedge for a node adjacent to all of
//!   the others.
//!
//! Every sampler rejects candidates that are known positives and gives up
//! after [`MAX_ATTEMPTS`] draws.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::hypergraph::Hypergraph;
use crate::models::CandidateSet;

pub const MAX_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplerKind {
    #[serde(rename = "SNS")]
    Sns,
    #[serde(rename = "MNS")]
    Mns,
    #[serde(rename = "CNS")]
    Cns,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Sns, SamplerKind::Mns, SamplerKind::Cns];
}

/// Negative candidates with the sampler that produced each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeBatch {
    pub candidates: CandidateSet,
    pub method_tags: Vec<SamplerKind>,
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

fn random_edge<'a, R: Rng + ?Sized>(hg: &'a Hypergraph, rng: &mut R) -> Option<&'a [usize]> {
    if hg.num_edges() == 0 {
        return None;
    }
    Some(hg.edge(rng.random_range(0..hg.num_edges())))
}

fn reject_known<R: Rng + ?Sized>(
    known: &HashSet<Vec<usize>>,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Option<Vec<usize>>,
) -> Option<Vec<usize>> {
    for _ in 0..MAX_ATTEMPTS {
        let c = draw(rng)?;
        if !known.contains(&c) {
            return Some(c);
        }
    }
    None
}

/// Size-matched uniform node set.
pub fn sns_sample<R: Rng + ?Sized>(
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    rng: &mut R,
) -> Option<Vec<usize>> {
    let n = hg.num_nodes();
    reject_known(known, rng, |rng| {
        let k = random_edge(hg, rng)?.len();
        Some(sorted(rand::seq::index::sample(rng, n, k).into_vec()))
    })
}

/// Connected node set grown from a real hyperedge. The set starts as a
/// random strict subset of a random hyperedge (a single node for size-one
/// edges), at most the target size, and absorbs random intersecting
/// hyperedges until it reaches the target size; the last one is absorbed
/// partially, so every member stays adjacent to the rest. Starting from a
/// strict subset keeps uniform hypergraphs from reproducing the seed edge.
/// If no intersecting hyperedge adds new nodes, uniform random nodes pad the
/// set.
pub fn mns_sample<R: Rng + ?Sized>(
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    rng: &mut R,
) -> Option<Vec<usize>> {
    reject_known(known, rng, |rng| mns_draw(hg, rng).map(|(c, _)| c))
}

/// One MNS draw and whether padding was needed.
pub(crate) fn mns_draw<R: Rng + ?Sized>(hg: &Hypergraph, rng: &mut R) -> Option<(Vec<usize>, bool)> {
    let k = random_edge(hg, rng)?.len();
    let seed = random_edge(hg, rng)?;
    let start = k.min(seed.len().saturating_sub(1)).max(1);
    let mut set: Vec<usize> =
        rand::seq::index::sample(rng, seed.len(), start).into_iter().map(|i| seed[i]).collect();
    let mut member = vec![false; hg.num_nodes()];
    for &v in &set {
        member[v] = true;
    }
    while set.len() < k {
        let mut frontier: Vec<usize> = set
            .iter()
            .flat_map(|&v| hg.incident_edges(v).iter().copied())
            .filter(|&e| hg.edge(e).iter().any(|&u| !member[u]))
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        let Some(&e) = frontier.choose(rng) else {
            let outside: Vec<usize> = (0..hg.num_nodes()).filter(|&u| !member[u]).collect();
            let extra: Vec<usize> = outside.choose_multiple(rng, k - set.len()).copied().collect();
            set.extend(extra);
            return Some((sorted(set), true));
        };
        let mut fresh: Vec<usize> = hg.edge(e).iter().copied().filter(|&u| !member[u]).collect();
        fresh.shuffle(rng);
        fresh.truncate(k - set.len());
        for &u in &fresh {
            member[u] = true;
        }
        set.extend(fresh);
    }
    Some((sorted(set), false))
}

/// A real hyperedge with one member replaced by a node that co-occurs with
/// all remaining members (uniform over all outside nodes if none does).
pub fn cns_sample<R: Rng + ?Sized>(
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    rng: &mut R,
) -> Option<Vec<usize>> {
    let star = hg.star_expansion();
    reject_known(known, rng, |rng| {
        let e = random_edge(hg, rng)?;
        let drop = rng.random_range(0..e.len());
        let rest: Vec<usize> = e.iter().copied().filter(|&u| u != e[drop]).collect();
        let outside = |u: &usize| e.binary_search(u).is_err();
        let mut common: Option<Vec<usize>> = None;
        for &w in &rest {
            let nb = star.neighbors(w);
            common = Some(match common {
                None => nb,
                Some(c) => c.into_iter().filter(|u| nb.binary_search(u).is_ok()).collect(),
            });
        }
        let pool: Vec<usize> = match common {
            Some(c) => c.into_iter().filter(outside).collect(),
            None => Vec::new(),
        };
        let u = match pool.choose(rng) {
            Some(&u) => u,
            None => {
                let any: Vec<usize> = (0..hg.num_nodes()).filter(outside).collect();
                *any.choose(rng)?
            }
        };
        let mut c = rest;
        c.push(u);
        Some(sorted(c))
    })
}

fn draw<R: Rng + ?Sized>(
    kind: SamplerKind,
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    rng: &mut R,
) -> Option<Vec<usize>> {
    match kind {
        SamplerKind::Sns => sns_sample(hg, known, rng),
        SamplerKind::Mns => mns_sample(hg, known, rng),
        SamplerKind::Cns => cns_sample(hg, known, rng),
    }
}

/// Per-method counts for `n` negatives: `n / 3` each, remainder assigned in
/// SNS, MNS, CNS order.
pub fn method_counts(n: usize) -> [usize; 3] {
    let base = n / 3;
    let extra = n % 3;
    [0, 1, 2].map(|i| base + usize::from(i < extra))
}

fn mixed<R: Rng + ?Sized>(
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    n: usize,
    rng: &mut R,
) -> (Vec<Vec<usize>>, Vec<SamplerKind>, usize) {
    let mut cands = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);
    let mut missing = 0;
    for (kind, count) in SamplerKind::ALL.into_iter().zip(method_counts(n)) {
        for _ in 0..count {
            let got = draw(kind, hg, known, rng)
                .map(|c| (c, kind))
                .or_else(|| sns_sample(hg, known, rng).map(|c| (c, SamplerKind::Sns)));
            match got {
                Some((c, used)) => {
                    cands.push(c);
                    tags.push(used);
                }
                None => missing += 1,
            }
        }
    }
    (cands, tags, missing)
}

/// Up to `n` negatives split evenly over the three samplers. An MNS or CNS
/// draw that exhausts its attempts falls back to SNS; draws that still fail
/// are skipped.
pub fn sample_mixed<R: Rng + ?Sized>(
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    n: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    mixed(hg, known, n, rng).0
}

/// Exactly `n` negatives for an evaluation split, seeded by `seed`.
pub fn build_eval_negatives(
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    n: usize,
    seed: u64,
) -> Result<NegativeBatch, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cands, tags, missing) = mixed(hg, known, n, &mut rng);
    if missing > 0 {
        return Err(DataError::Invalid(format!(
            "could not draw {missing} of {n} negatives: the hypergraph is too dense"
        )));
    }
    Ok(NegativeBatch {
        candidates: CandidateSet::new(cands, vec![0; n]).map_err(|e| DataError::Invalid(e.to_string()))?,
        method_tags: tags,
    })
}

/// The four evaluation variants, seeded `seed + 1001` to `seed + 1004`.
pub fn eval_negative_variants(
    hg: &Hypergraph,
    known: &HashSet<Vec<usize>>,
    n: usize,
    seed: u64,
) -> Result<Vec<NegativeBatch>, DataError> {
    (1001..=1004).map(|k| build_eval_negatives(hg, known, n, seed.wrapping_add(k))).collect()
}
