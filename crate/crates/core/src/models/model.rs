use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Activation, ModelConfig, ModelKind, Pooling};
use super::layers::{
    activate, allset_layer, gcn_operator, hgnn_layer, hnhn_layer, unigcnii_layer, HnhnOperators, Linear,
    MeanOperators, UniOperators,
};
use super::tfhnn::tfhnn_precompute;
use super::ModelError;
use crate::hypergraph::{clique_expansion, propagation_operator, CliqueWeighting, Hypergraph, Normalization};
use crate::tensor::{ParamId, ParamStore, SparseMatrix, Tape, Tensor, Var};

/// Output head of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Per-node logits over `classes`.
    Node { classes: usize },
    /// One logit per candidate node set.
    Edge,
    /// Per-hypergraph logits over `classes`.
    Graph { classes: usize },
}

/// Structural operators a model reads during its forward pass, built once
/// per hypergraph.
#[derive(Debug, Clone)]
pub enum Structure {
    /// No structure: the model sees raw features only.
    Features,
    /// Node-by-node operator (HGNN, HyperGCN).
    Propagation(Arc<SparseMatrix>),
    Hnhn(HnhnOperators),
    Uni(UniOperators),
    AllSet(MeanOperators),
    /// Features already propagated through the structure (TF-HNN).
    Precomputed(Arc<Tensor>),
}

impl Structure {
    pub fn prepare(cfg: &ModelConfig, hg: &Hypergraph, features: &Arc<Tensor>) -> Structure {
        match cfg.kind {
            ModelKind::Mlp => Structure::Features,
            ModelKind::Hgnn => {
                Structure::Propagation(propagation_operator(hg, Normalization::Symmetric, 0.0).matrix)
            }
            ModelKind::Hypergcn => Structure::Propagation(Arc::new(gcn_operator(&clique_expansion(
                hg,
                CliqueWeighting::InverseSize,
            )))),
            ModelKind::Hnhn => Structure::Hnhn(HnhnOperators::new(hg, cfg.alpha, cfg.beta)),
            ModelKind::Unigcnii => Structure::Uni(UniOperators::new(hg)),
            ModelKind::Allset => Structure::AllSet(MeanOperators::new(hg)),
            ModelKind::Tfhnn => {
                Structure::Precomputed(tfhnn_precompute(hg, features, cfg.tfhnn_k, cfg.tfhnn_alpha))
            }
        }
    }

    /// The matrix the first layer consumes.
    pub fn input<'a>(&'a self, features: &'a Arc<Tensor>) -> &'a Arc<Tensor> {
        match self {
            Structure::Precomputed(x) => x,
            _ => features,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LinearIds {
    weight: ParamId,
    bias: Option<ParamId>,
}

#[derive(Debug, Clone)]
enum LayerIds {
    Single(LinearIds),
    Pair(LinearIds, LinearIds),
    Mix(ParamId),
}

/// A model's parameters bound to tape leaves for one forward pass.
pub struct Bound(Vec<Var>);

impl Bound {
    fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }

    fn linear(&self, ids: LinearIds) -> Linear {
        Linear { weight: self.var(ids.weight), bias: ids.bias.map(|b| self.var(b)) }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub head: Head,
    pub input_dim: usize,
    pub params: ParamStore,
    input: Option<LinearIds>,
    layers: Vec<LayerIds>,
    head_layers: Vec<LinearIds>,
}

fn add_linear(
    store: &mut ParamStore,
    name: &str,
    fan_in: usize,
    fan_out: usize,
    rng: &mut ChaCha8Rng,
) -> LinearIds {
    let weight = store.add_uniform(format!("{name}.weight"), fan_in, fan_out, fan_in, rng);
    let bias = store.add_uniform(format!("{name}.bias"), 1, fan_out, fan_in, rng);
    LinearIds { weight, bias: Some(bias) }
}

impl Model {
    /// Allocates parameters with uniform fan-in initialisation drawn from
    /// `seed`.
    pub fn new(config: ModelConfig, head: Head, input_dim: usize, seed: u64) -> Result<Model, ModelError> {
        config.validate()?;
        if input_dim == 0 {
            return Err(ModelError::Config("input width is zero".into()));
        }
        match head {
            Head::Node { classes } | Head::Graph { classes } if classes < 2 => {
                return Err(ModelError::Config(format!("{classes} classes")))
            }
            _ => {}
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let h = config.hidden;
        let mut input = None;
        let mut width = input_dim;
        if config.kind == ModelKind::Unigcnii {
            input = Some(add_linear(&mut params, "input", input_dim, h, &mut rng));
            width = h;
        }
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let name = format!("layer{l}");
            let ids = match config.kind {
                ModelKind::Mlp | ModelKind::Tfhnn | ModelKind::Hgnn | ModelKind::Hypergcn => {
                    LayerIds::Single(add_linear(&mut params, &name, width, h, &mut rng))
                }
                ModelKind::Hnhn | ModelKind::Allset => LayerIds::Pair(
                    add_linear(&mut params, &format!("{name}.edge"), width, h, &mut rng),
                    add_linear(&mut params, &format!("{name}.node"), h, h, &mut rng),
                ),
                ModelKind::Unigcnii => {
                    LayerIds::Mix(params.add_uniform(format!("{name}.weight"), h, h, h, &mut rng))
                }
            };
            layers.push(ids);
            width = h;
        }
        let head_layers = match head {
            Head::Node { classes } | Head::Graph { classes } => {
                vec![add_linear(&mut params, "head", h, classes, &mut rng)]
            }
            Head::Edge => {
                let pooled = match config.edge_pooling {
                    Pooling::MaxMin => 2 * h,
                    _ => h,
                };
                vec![
                    add_linear(&mut params, "scorer0", pooled, h, &mut rng),
                    add_linear(&mut params, "scorer1", h, 1, &mut rng),
                ]
            }
        };
        Ok(Model { config, head, input_dim, params, input, layers, head_layers })
    }

    /// Puts every parameter on the tape, as a gradient leaf if `trainable`.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Bound {
        Bound(
            self.params
                .ids()
                .map(|id| {
                    if trainable {
                        tape.param(&self.params, id)
                    } else {
                        tape.param_frozen(&self.params, id)
                    }
                })
                .collect(),
        )
    }

    fn check_structure(&self, structure: &Structure) -> Result<(), ModelError> {
        let ok = matches!(
            (self.config.kind, structure),
            (ModelKind::Mlp, Structure::Features)
                | (ModelKind::Hgnn | ModelKind::Hypergcn, Structure::Propagation(_))
                | (ModelKind::Hnhn, Structure::Hnhn(_))
                | (ModelKind::Unigcnii, Structure::Uni(_))
                | (ModelKind::Allset, Structure::AllSet(_))
                | (ModelKind::Tfhnn, Structure::Precomputed(_))
        );
        if ok {
            Ok(())
        } else {
            Err(ModelError::Structure(format!(
                "{} model cannot use the supplied structure",
                self.config.kind
            )))
        }
    }

    /// Node embeddings of width `hidden` after all configured layers.
    pub fn embed<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        structure: &Structure,
        x: Var,
        train: bool,
        rng: &mut R,
    ) -> Result<Var, ModelError> {
        self.check_structure(structure)?;
        if tape.shape(x).1 != self.input_dim {
            return Err(ModelError::Structure(format!(
                "features have width {}, model expects {}",
                tape.shape(x).1,
                self.input_dim
            )));
        }
        let cfg = &self.config;
        let act = cfg.activation;
        let p = cfg.dropout;
        let mut h = x;
        let mut x0 = None;
        if let Some(ids) = self.input {
            h = tape.dropout(h, p, rng, train)?;
            let proj = bound.linear(ids).apply(tape, h)?;
            h = activate(tape, proj, Activation::Relu);
            x0 = Some(h);
        }
        for ids in &self.layers {
            h = tape.dropout(h, p, rng, train)?;
            h = match (ids, structure) {
                (LayerIds::Single(ids), Structure::Propagation(op)) => {
                    let lin = bound.linear(*ids);
                    hgnn_layer(tape, h, op, lin.weight, lin.bias, act)?
                }
                (LayerIds::Single(ids), _) => {
                    let y = bound.linear(*ids).apply(tape, h)?;
                    activate(tape, y, act)
                }
                (LayerIds::Pair(e, v), Structure::Hnhn(ops)) => {
                    hnhn_layer(tape, h, ops, &bound.linear(*e), &bound.linear(*v), act)?
                }
                (LayerIds::Pair(e, v), Structure::AllSet(ops)) => {
                    allset_layer(tape, h, ops, &bound.linear(*e), &bound.linear(*v), act)?
                }
                (LayerIds::Mix(w), Structure::Uni(ops)) => unigcnii_layer(
                    tape,
                    h,
                    x0.expect("input projection"),
                    ops,
                    bound.var(*w),
                    cfg.alpha,
                    cfg.beta,
                    act,
                )?,
                _ => unreachable!("structure checked above"),
            };
        }
        Ok(h)
    }

    fn head_linear(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        h: Var,
        train: bool,
        rng: &mut (impl Rng + ?Sized),
    ) -> Result<Var, ModelError> {
        let h = tape.dropout(h, self.config.dropout, rng, train)?;
        bound.linear(self.head_layers[0]).apply(tape, h)
    }

    /// `|V| × C` logits.
    pub fn node_logits<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        emb: Var,
        train: bool,
        rng: &mut R,
    ) -> Result<Var, ModelError> {
        if !matches!(self.head, Head::Node { .. }) {
            return Err(ModelError::Config("model was not built for node classification".into()));
        }
        self.head_linear(tape, bound, emb, train, rng)
    }

    /// `k × 1` logits, one per candidate.
    pub fn candidate_logits(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        emb: Var,
        candidates: &Arc<Vec<Vec<usize>>>,
    ) -> Result<Var, ModelError> {
        if self.head != Head::Edge {
            return Err(ModelError::Config("model was not built for hyperedge prediction".into()));
        }
        let scorer: Vec<Linear> = self.head_layers.iter().map(|ids| bound.linear(*ids)).collect();
        score_candidates(tape, emb, candidates, self.config.edge_pooling, &scorer)
    }

    /// `G × C` logits for hypergraphs given as node segments of a
    /// block-diagonal union.
    pub fn graph_logits<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        emb: Var,
        segments: &Arc<Vec<Vec<usize>>>,
        train: bool,
        rng: &mut R,
    ) -> Result<Var, ModelError> {
        if !matches!(self.head, Head::Graph { .. }) {
            return Err(ModelError::Config("model was not built for hypergraph classification".into()));
        }
        let pooled = hypergraph_readout(tape, emb, segments, self.config.graph_pooling)?;
        self.head_linear(tape, bound, pooled, train, rng)
    }

    /// Evaluation-mode node logits for a hypergraph and its features.
    pub fn predict_node_logits(&self, hg: &Hypergraph, features: &Arc<Tensor>) -> Result<Tensor, ModelError> {
        let structure = Structure::prepare(&self.config, hg, features);
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let x = tape.constant_shared(structure.input(features));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let emb = self.embed(&mut tape, &bound, &structure, x, false, &mut rng)?;
        let logits = self.node_logits(&mut tape, &bound, emb, false, &mut rng)?;
        Ok(tape.value(logits).clone())
    }
}

fn pool(
    tape: &mut Tape,
    emb: Var,
    groups: &Arc<Vec<Vec<usize>>>,
    pooling: Pooling,
) -> Result<Var, ModelError> {
    Ok(match pooling {
        Pooling::Mean => tape.group_mean(emb, groups)?,
        Pooling::Max => tape.group_max(emb, groups)?,
        Pooling::MaxMin => {
            let max = tape.group_max(emb, groups)?;
            let neg = tape.scale(emb, -1.0);
            let neg_min = tape.group_max(neg, groups)?;
            let min = tape.scale(neg_min, -1.0);
            tape.concat_cols(&[max, min])?
        }
    })
}

/// Pools member embeddings of each candidate and maps the pooled vector
/// through `scorer` (ReLU between layers) to a single logit.
pub fn score_candidates(
    tape: &mut Tape,
    emb: Var,
    candidates: &Arc<Vec<Vec<usize>>>,
    pooling: Pooling,
    scorer: &[Linear],
) -> Result<Var, ModelError> {
    let n = tape.shape(emb).0;
    for (k, c) in candidates.iter().enumerate() {
        if c.is_empty() {
            return Err(ModelError::EmptyCandidate(k));
        }
        if let Some(&v) = c.iter().find(|&&v| v >= n) {
            return Err(ModelError::Structure(format!("candidate {k} names node {v} of {n}")));
        }
    }
    let mut h = pool(tape, emb, candidates, pooling)?;
    for (i, lin) in scorer.iter().enumerate() {
        h = lin.apply(tape, h)?;
        if i + 1 < scorer.len() {
            h = tape.relu(h);
        }
    }
    Ok(h)
}

/// One pooled row per segment of node ids.
pub fn hypergraph_readout(
    tape: &mut Tape,
    emb: Var,
    segments: &Arc<Vec<Vec<usize>>>,
    pooling: Pooling,
) -> Result<Var, ModelError> {
    if let Some(k) = segments.iter().position(Vec::is_empty) {
        return Err(ModelError::EmptyReadout(k));
    }
    if pooling == Pooling::MaxMin {
        return Err(ModelError::Config("hypergraph readout supports max or mean".into()));
    }
    pool(tape, emb, segments, pooling)
}
