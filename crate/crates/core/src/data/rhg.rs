//! Random hypergraph families for hypergraph classification.
//!
//! Pyramid, check table and wheel follow their names directly. The other
//! seven families are parametric constructions of our own; they are
//! structurally distinct from each other but not canonical.
//!
//! Node features are a one-hot of the node degree (degrees at or above
//! [`DEGREE_CAP`] share the last slot) plus small Gaussian jitter.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::hypergraph::Hypergraph;
use crate::models::TaskKind;
use crate::tensor::Tensor;

pub const DEGREE_CAP: usize = 8;
pub const JITTER_STD: f64 = 0.05;
/// Mean node count of a generated hypergraph; sizes vary by ±30%.
pub const MEAN_NODES: f64 = 35.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhgKind {
    Pyramid,
    CheckTable,
    Wheel,
    Flower,
    Lattice,
    Windmill,
    FirmPyramid,
    RcheckedTable,
    Cycle,
    Fern,
}

impl RhgKind {
    pub const RHG3: [RhgKind; 3] = [RhgKind::Pyramid, RhgKind::CheckTable, RhgKind::Wheel];
    pub const RHG10: [RhgKind; 10] = [
        RhgKind::Pyramid,
        RhgKind::CheckTable,
        RhgKind::Wheel,
        RhgKind::Flower,
        RhgKind::Lattice,
        RhgKind::Windmill,
        RhgKind::FirmPyramid,
        RhgKind::RcheckedTable,
        RhgKind::Cycle,
        RhgKind::Fern,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RhgKind::Pyramid => "pyramid",
            RhgKind::CheckTable => "check_table",
            RhgKind::Wheel => "wheel",
            RhgKind::Flower => "flower",
            RhgKind::Lattice => "lattice",
            RhgKind::Windmill => "windmill",
            RhgKind::FirmPyramid => "firm_pyramid",
            RhgKind::RcheckedTable => "rchecked_table",
            RhgKind::Cycle => "cycle",
            RhgKind::Fern => "fern",
        }
    }
}

impl std::str::FromStr for RhgKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RhgKind::RHG10
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown hypergraph family {s:?}"))
    }
}

/// Draws a node budget uniformly from `MEAN_NODES ± 30%`.
pub fn random_size<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let lo = (MEAN_NODES * 0.7).ceil() as usize;
    let hi = (MEAN_NODES * 1.3).floor() as usize;
    rng.random_range(lo..=hi)
}

/// `r × c` grid dimensions with `r·c` close to `target`, both at least 2.
fn grid_dims<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (usize, usize) {
    let side = (target as f64).sqrt();
    let r = ((side * rng.random_range(0.7..1.3)).round() as usize).max(2);
    let c = ((target as f64 / r as f64).round() as usize).max(2);
    (r, c)
}

/// Layers of parents with 2–3 children each; every hyperedge is one parent
/// with its children. Returns the hyperedges and the per-layer node lists.
fn pyramid_layers<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut edges = Vec::new();
    let mut layers = vec![vec![0]];
    let mut next = 1;
    'grow: loop {
        let parents = layers.last().expect("root layer").clone();
        let mut layer = Vec::new();
        for p in parents {
            if next >= target {
                break 'grow;
            }
            let kids = rng.random_range(2..=3).min(target - next);
            let children: Vec<usize> = (next..next + kids).collect();
            next += kids;
            let mut e = vec![p];
            e.extend(&children);
            edges.push(e);
            layer.extend(children);
        }
        layers.push(layer);
    }
    if layers.last().is_some_and(Vec::is_empty) {
        layers.pop();
    }
    (edges, layers)
}

fn pyramid<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let (edges, _) = pyramid_layers(target, rng);
    let n = edges.iter().flatten().max().map_or(1, |m| m + 1);
    (edges, n)
}

fn firm_pyramid<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let (mut edges, layers) = pyramid_layers(target, rng);
    let n = edges.iter().flatten().max().map_or(1, |m| m + 1);
    edges.extend(layers.into_iter().filter(|l| l.len() >= 2));
    (edges, n)
}

fn check_table<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let (r, c) = grid_dims(target, rng);
    let mut edges: Vec<Vec<usize>> = (0..r).map(|i| (0..c).map(|j| i * c + j).collect()).collect();
    edges.extend((0..c).map(|j| (0..r).map(|i| i * c + j).collect()));
    (edges, r * c)
}

/// Check table plus wrapped diagonals, giving every node degree 3.
fn rchecked_table<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let (mut edges, n) = check_table(target, rng);
    let c = edges[0].len();
    let r = n / c;
    edges.extend((0..c).map(|d| (0..r).map(|i| i * c + (i + d) % c).collect()));
    (edges, n)
}

/// Hub node 0 joined to consecutive rim arcs of 2–4 nodes. Neighbouring
/// arcs share an endpoint and the last arc closes the rim.
fn wheel<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let rim = target.max(4) - 1;
    let mut edges = Vec::new();
    let mut start = 0;
    // Rim positions 0..rim map to nodes 1..=rim; position `rim` wraps to 0.
    while start < rim {
        let left = rim - start;
        let step = if left <= 3 { left } else { rng.random_range(1..=3) };
        let mut e = vec![0];
        e.extend((start..=start + step).map(|p| 1 + p % rim));
        edges.push(e);
        start += step;
    }
    (edges, rim + 1)
}

/// Blades of 2–4 fresh nodes, each a hyperedge with the shared centre 0.
fn windmill<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let mut edges = Vec::new();
    let mut next = 1;
    while next < target {
        let s = rng.random_range(2..=4).min(target - next);
        let mut e = vec![0];
        e.extend(next..next + s);
        edges.push(e);
        next += s;
    }
    (edges, next)
}

/// A three-node core hyperedge with petals: each petal is one core node plus
/// 3–5 fresh nodes, core nodes taken in turn.
fn flower<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let mut edges = vec![vec![0, 1, 2]];
    let mut next = 3;
    let mut k = 0;
    while next < target {
        let s = rng.random_range(3..=5).min(target - next);
        let mut e = vec![k % 3];
        e.extend(next..next + s);
        edges.push(e);
        next += s;
        k += 1;
    }
    (edges, next)
}

/// Grid whose hyperedges are the 2×2 blocks.
fn lattice<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let (r, c) = grid_dims(target, rng);
    let mut edges = Vec::new();
    for i in 0..r - 1 {
        for j in 0..c - 1 {
            edges.push(vec![i * c + j, i * c + j + 1, (i + 1) * c + j, (i + 1) * c + j + 1]);
        }
    }
    (edges, r * c)
}

/// Ring of nodes covered by windows of three that overlap in one node.
fn cycle<R: Rng + ?Sized>(target: usize, _rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let n = (target.max(4) / 2) * 2;
    let edges = (0..n / 2).map(|k| vec![2 * k, 2 * k + 1, (2 * k + 2) % n]).collect();
    (edges, n)
}

/// A spine of three-node hyperedges overlapping in one node, with a leaflet
/// (spine node plus 1–2 fresh nodes) on every spine junction.
fn fern<R: Rng + ?Sized>(target: usize, rng: &mut R) -> (Vec<Vec<usize>>, usize) {
    let mut edges = Vec::new();
    let mut junction = 0;
    let mut next = 1;
    while next + 2 <= target {
        edges.push(vec![junction, next, next + 1]);
        let j = next + 1;
        next += 2;
        let leaf = rng.random_range(1..=2).min(target.saturating_sub(next));
        if leaf > 0 {
            let mut e = vec![j];
            e.extend(next..next + leaf);
            edges.push(e);
            next += leaf;
        }
        junction = j;
    }
    (edges, next)
}

/// One hypergraph of `kind` with about `target` nodes.
pub fn generate_rhg<R: Rng + ?Sized>(kind: RhgKind, target: usize, rng: &mut R) -> Hypergraph {
    let (edges, n) = match kind {
        RhgKind::Pyramid => pyramid(target, rng),
        RhgKind::CheckTable => check_table(target, rng),
        RhgKind::Wheel => wheel(target, rng),
        RhgKind::Flower => flower(target, rng),
        RhgKind::Lattice => lattice(target, rng),
        RhgKind::Windmill => windmill(target, rng),
        RhgKind::FirmPyramid => firm_pyramid(target, rng),
        RhgKind::RcheckedTable => rchecked_table(target, rng),
        RhgKind::Cycle => cycle(target, rng),
        RhgKind::Fern => fern(target, rng),
    };
    Hypergraph::new(&edges, n).expect("generator emits valid hyperedges")
}

/// Degree one-hot plus Gaussian jitter.
pub fn degree_features<R: Rng + ?Sized>(hg: &Hypergraph, rng: &mut R) -> Tensor {
    let noise = Normal::new(0.0, JITTER_STD).expect("valid std");
    let mut x = Tensor::zeros(hg.num_nodes(), DEGREE_CAP);
    for v in 0..hg.num_nodes() {
        let slot = hg.node_degrees()[v].min(DEGREE_CAP - 1);
        for c in 0..DEGREE_CAP {
            let base = if c == slot { 1.0 } else { 0.0 };
            x.set(v, c, base + noise.sample(rng));
        }
    }
    x
}

/// `count` hypergraphs cycling through `kinds` (label = position in
/// `kinds`), shuffled with `seed`.
pub fn generate_rhg_corpus(kinds: &[RhgKind], count: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items: Vec<(Hypergraph, Tensor, usize)> = (0..count)
        .map(|i| {
            let label = i % kinds.len();
            let target = random_size(&mut rng);
            let hg = generate_rhg(kinds[label], target, &mut rng);
            let x = degree_features(&hg, &mut rng);
            (hg, x, label)
        })
        .collect();
    items.shuffle(&mut rng);
    let name = if kinds == RhgKind::RHG3 {
        "rhg3".to_string()
    } else if kinds == RhgKind::RHG10 {
        "rhg10".to_string()
    } else {
        format!("rhg{}", kinds.len())
    };
    let mut ds = Dataset {
        name,
        level: TaskKind::Graph,
        hypergraphs: Vec::with_capacity(count),
        features: Vec::with_capacity(count),
        labels: Vec::with_capacity(count),
        num_classes: kinds.len(),
        sensitive: None,
    };
    for (hg, x, y) in items {
        ds.hypergraphs.push(hg);
        ds.features.push(x);
        ds.labels.push(y);
    }
    ds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_hub_in_every_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for target in [5, 12, 30, 46] {
            let hg = generate_rhg(RhgKind::Wheel, target, &mut rng);
            assert_eq!(hg.node_degrees()[0], hg.num_edges());
            assert!(hg.edge_sizes().iter().all(|&s| (3..=5).contains(&s)));
            // closed rim: every rim node is in one or two arcs
            assert!(hg.node_degrees()[1..].iter().all(|&d| d == 1 || d == 2));
            assert_eq!(hg.node_degrees()[1], 2);
        }
    }

    #[test]
    fn check_table_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let hg = generate_rhg(RhgKind::CheckTable, 35, &mut rng);
            let c = hg.edge_sizes()[0];
            let r = hg.num_nodes() / c;
            assert_eq!(hg.num_edges(), r + c);
            assert!(hg.node_degrees().iter().all(|&d| d == 2));
        }
    }

    #[test]
    fn pyramid_edges_are_parent_and_children() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hg = generate_rhg(RhgKind::Pyramid, 35, &mut rng);
        assert_eq!(hg.num_nodes(), 35);
        assert!(hg.edge_sizes().iter().all(|&s| (2..=4).contains(&s)));
        // a tree: n - 1 parent-child incidences beyond the parents
        assert_eq!(hg.nnz() - hg.num_edges(), hg.num_nodes() - 1);
    }

    #[test]
    fn all_families_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in RhgKind::RHG10 {
            for _ in 0..20 {
                let t = random_size(&mut rng);
                let hg = generate_rhg(kind, t, &mut rng);
                hg.audit().unwrap();
                assert!(hg.num_edges() > 0, "{kind:?}");
                assert!(hg.node_degrees().iter().all(|&d| d > 0), "{kind:?}");
            }
        }
    }

    #[test]
    fn corpus_scale() {
        let ds = generate_rhg_corpus(&RhgKind::RHG3, 300, 0);
        ds.validate().unwrap();
        let mean = ds.hypergraphs.iter().map(Hypergraph::num_nodes).sum::<usize>() as f64 / 300.0;
        assert!((25.0..=46.0).contains(&mean), "{mean}");
        assert_eq!(ds.labels.iter().filter(|&&y| y == 2).count(), 100);
    }
}
