//! Reverse-mode differentiation over a linear tape.
//!
//! Every operation appends a node; node indices are therefore a topological
//! order and the backward sweep is a single reverse scan.

use std::sync::Arc;

use rand::Rng;

use super::params::{ParamId, ParamStore};
use super::{SparseMatrix, Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Arc<SparseMatrix>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Dropout(Var, Vec<f64>),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    RowGather(Var, Vec<usize>),
    GroupMean(Var, Arc<Vec<Vec<usize>>>),
    /// Winning source row per output entry; `usize::MAX` for empty groups.
    GroupMax(Var, Vec<usize>),
    LogSoftmax(Var),
    Pick(Var, Vec<(usize, usize)>),
    MeanAll(Var),
    SumAll(Var),
    BinaryLogistic(Var, Vec<f64>),
}

struct Node {
    value: Arc<Tensor>,
    op: Op,
    requires_grad: bool,
    param: Option<ParamId>,
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug, Default)]
pub struct Gradients {
    leaves: Vec<(Var, Tensor)>,
    params: Vec<(ParamId, Tensor)>,
}

impl Gradients {
    /// Gradient of a leaf created with [`Tape::leaf`] or [`Tape::param`].
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.leaves.iter().find(|(v, _)| *v == var).map(|(_, g)| g)
    }

    /// Summed gradient of a parameter over every leaf that referenced it.
    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.iter().find(|(p, _)| *p == id).map(|(_, g)| g)
    }

    pub fn params(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.params.iter().map(|(p, g)| (*p, g))
    }
}

/// Recording of one forward pass. Confined to a single thread.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value: Arc::new(value), op, requires_grad, param: None });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A value that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A constant that shares its buffer instead of copying it.
    pub fn constant_shared(&mut self, value: &Arc<Tensor>) -> Var {
        self.nodes.push(Node { value: Arc::clone(value), op: Op::Leaf, requires_grad: false, param: None });
        Var(self.nodes.len() - 1)
    }

    /// Parameter value without gradient tracking, for evaluation passes.
    pub fn param_frozen(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.constant(store.get(id).clone())
    }

    /// A differentiable input that is not a stored parameter.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let v = self.push(store.get(id).clone(), Op::Leaf, true);
        self.nodes[v.0].param = Some(id);
        v
    }

    fn mismatch(&self, op: &'static str, a: Var, b: Var) -> TensorError {
        TensorError::ShapeMismatch { op, left: self.shape(a), right: self.shape(b) }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    /// `sparse · dense`. The sparse operand is structural and gets no gradient.
    pub fn spmm(&mut self, s: &Arc<SparseMatrix>, d: Var) -> Result<Var, TensorError> {
        let out = s.spmm(self.value(d))?;
        let rg = self.rg(&[d]);
        Ok(self.push(out, Op::SpMM(Arc::clone(s), d), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(self.mismatch("add", a, b));
        }
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    /// Adds the `1 × c` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var, TensorError> {
        let (_, c) = self.shape(a);
        if self.shape(bias) != (1, c) {
            return Err(self.mismatch("add_row", a, bias));
        }
        let mut out = self.value(a).clone();
        let b = self.value(bias).as_slice().to_vec();
        for row in out.as_mut_slice().chunks_mut(c.max(1)) {
            for (o, x) in row.iter_mut().zip(&b) {
                *o += x;
            }
        }
        let rg = self.rg(&[a, bias]);
        Ok(self.push(out, Op::AddRow(a, bias), rg))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|v| v * s);
        let rg = self.rg(&[a]);
        self.push(out, Op::Scale(a, s), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| if v > 0.0 { v } else { 0.0 });
        let rg = self.rg(&[a]);
        self.push(out, Op::Relu(a), rg)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let out = self.value(a).map(|v| if v > 0.0 { v } else { slope * v });
        let rg = self.rg(&[a]);
        self.push(out, Op::LeakyRelu(a, slope), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        let rg = self.rg(&[a]);
        self.push(out, Op::Sigmoid(a), rg)
    }

    /// Inverted dropout. Identity (same handle) when `train` is false or `p` is 0.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        p: f64,
        rng: &mut R,
        train: bool,
    ) -> Result<Var, TensorError> {
        if !(0.0..1.0).contains(&p) {
            return Err(TensorError::InvalidArgument(format!("dropout rate {p} outside [0, 1)")));
        }
        if !train || p == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - p);
        let (r, c) = self.shape(a);
        let rg = self.rg(&[a]);
        if !rg {
            // No gradient flows back, so zero entries need no mask draw.
            let data = self
                .value(a)
                .as_slice()
                .iter()
                .map(|&x| if x == 0.0 || rng.random::<f64>() < p { 0.0 } else { x * keep })
                .collect();
            let out = Tensor::from_vec(r, c, data)?;
            return Ok(self.push(out, Op::Dropout(a, Vec::new()), false));
        }
        let mask: Vec<f64> =
            (0..self.value(a).len()).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
        let data = self.value(a).as_slice().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let out = Tensor::from_vec(r, c, data)?;
        Ok(self.push(out, Op::Dropout(a, mask), rg))
    }

    /// Stacks inputs vertically; all must share a column count.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::InvalidArgument("concat of nothing".into()));
        };
        let c = self.shape(first).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            if self.shape(p).1 != c {
                return Err(self.mismatch("concat_rows", first, p));
            }
            rows += self.shape(p).0;
            data.extend_from_slice(self.value(p).as_slice());
        }
        let out = Tensor::from_vec(rows, c, data)?;
        let rg = self.rg(parts);
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), rg))
    }

    /// Joins inputs side by side; all must share a row count.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::InvalidArgument("concat of nothing".into()));
        };
        let r = self.shape(first).0;
        if let Some(&bad) = parts.iter().find(|&&p| self.shape(p).0 != r) {
            return Err(self.mismatch("concat_cols", first, bad));
        }
        let total: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Tensor::zeros(r, total);
        for i in 0..r {
            let mut off = 0;
            for &p in parts {
                let src = self.nodes[p.0].value.row(i);
                out.row_mut(i)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let rg = self.rg(parts);
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), rg))
    }

    pub fn row_gather(&mut self, a: Var, index: &[usize]) -> Result<Var, TensorError> {
        let n = self.shape(a).0;
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(TensorError::InvalidArgument(format!("row {bad} out of range for {n} rows")));
        }
        let out = self.value(a).select_rows(index);
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::RowGather(a, index.to_vec()), rg))
    }

    /// One output row per group: the mean of the group's rows (zero if empty).
    pub fn group_mean(&mut self, a: Var, groups: &Arc<Vec<Vec<usize>>>) -> Result<Var, TensorError> {
        let (n, c) = self.shape(a);
        check_groups(groups, n)?;
        let src = self.value(a);
        let mut out = Tensor::zeros(groups.len(), c);
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let row = out.row_mut(g);
            for &m in members {
                for (o, x) in row.iter_mut().zip(src.row(m)) {
                    *o += x;
                }
            }
            let inv = 1.0 / members.len() as f64;
            row.iter_mut().for_each(|o| *o *= inv);
        }
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::GroupMean(a, Arc::clone(groups)), rg))
    }

    /// Column-wise maximum per group. Ties go to the member listed first, so
    /// with ascending member lists the lower row index wins.
    pub fn group_max(&mut self, a: Var, groups: &[Vec<usize>]) -> Result<Var, TensorError> {
        let (n, c) = self.shape(a);
        check_groups(groups, n)?;
        let src = self.value(a);
        let mut out = Tensor::zeros(groups.len(), c);
        let mut winner = vec![usize::MAX; groups.len() * c];
        for (g, members) in groups.iter().enumerate() {
            let Some((&head, rest)) = members.split_first() else {
                continue;
            };
            let w = &mut winner[g * c..(g + 1) * c];
            w.iter_mut().for_each(|x| *x = head);
            let row = out.row_mut(g);
            row.copy_from_slice(src.row(head));
            for &m in rest {
                for (j, &x) in src.row(m).iter().enumerate() {
                    if x > row[j] {
                        row[j] = x;
                        w[j] = m;
                    }
                }
            }
        }
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::GroupMax(a, winner), rg))
    }

    pub fn mean_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let all: Vec<usize> = (0..self.shape(a).0).collect();
        self.group_mean(a, &Arc::new(vec![all]))
    }

    pub fn max_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let all: Vec<usize> = (0..self.shape(a).0).collect();
        self.group_max(a, &[all])
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let (r, c) = src.shape();
        let mut out = Tensor::zeros(r, c);
        for i in 0..r {
            let row = src.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            for (o, x) in out.row_mut(i).iter_mut().zip(row) {
                *o = x - lse;
            }
        }
        let rg = self.rg(&[a]);
        self.push(out, Op::LogSoftmax(a), rg)
    }

    /// Gathers single entries into an `n × 1` column.
    pub fn pick(&mut self, a: Var, entries: &[(usize, usize)]) -> Result<Var, TensorError> {
        let (r, c) = self.shape(a);
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= r || j >= c) {
            return Err(TensorError::InvalidArgument(format!("entry ({i}, {j}) outside {r}x{c}")));
        }
        let vals: Vec<f64> = entries.iter().map(|&(i, j)| self.value(a).get(i, j)).collect();
        let out = Tensor::column(&vals);
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::Pick(a, entries.to_vec()), rg))
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let m = if src.is_empty() { 0.0 } else { src.as_slice().iter().sum::<f64>() / src.len() as f64 };
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(m), Op::MeanAll(a), rg)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).as_slice().iter().sum::<f64>();
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(s), Op::SumAll(a), rg)
    }

    /// Mean negative log-likelihood of `labels[i]` over the rows in `mask`.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        labels: &[usize],
        mask: &[usize],
    ) -> Result<Var, TensorError> {
        if mask.is_empty() {
            return Err(TensorError::InvalidArgument("empty loss mask".into()));
        }
        let (n, c) = self.shape(logits);
        if labels.len() != n {
            return Err(TensorError::InvalidArgument(format!("{} labels for {n} rows", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
            return Err(TensorError::InvalidArgument(format!("label {bad} outside {c} classes")));
        }
        let lsm = self.log_softmax_rows(logits);
        let entries: Vec<_> = mask.iter().map(|&i| (i, labels[i])).collect();
        let picked = self.pick(lsm, &entries)?;
        let mean = self.mean_all(picked);
        Ok(self.scale(mean, -1.0))
    }

    /// Mean sigmoid cross-entropy of raw scores against 0/1 targets.
    pub fn binary_logistic(&mut self, scores: Var, targets: &[f64]) -> Result<Var, TensorError> {
        let s = self.value(scores);
        if s.len() != targets.len() || targets.is_empty() {
            return Err(TensorError::InvalidArgument(format!(
                "{} scores for {} targets",
                s.len(),
                targets.len()
            )));
        }
        let total: f64 = s
            .as_slice()
            .iter()
            .zip(targets)
            .map(|(&x, &t)| x.max(0.0) - x * t + (-x.abs()).exp().ln_1p())
            .sum();
        let out = Tensor::scalar(total / targets.len() as f64);
        let rg = self.rg(&[scores]);
        Ok(self.push(out, Op::BinaryLogistic(scores, targets.to_vec()), rg))
    }

    /// Backpropagates from the scalar `loss`, then clears the tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients, TensorError> {
        if self.shape(loss) != (1, 1) {
            return Err(TensorError::NotScalar(self.shape(loss)));
        }
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Tensor>> = (0..n).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut result = Gradients::default();

        for i in (0..n).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let val = |v: Var| -> &Tensor { &self.nodes[v.0].value };
            let needs = |v: Var| self.nodes[v.0].requires_grad;
            let mut send = |v: Var, t: Tensor| {
                if !self.nodes[v.0].requires_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.add_assign(&t),
                    slot => *slot = Some(t),
                }
            };
            match &node.op {
                Op::Leaf => {
                    if let Some(p) = node.param {
                        match result.params.iter_mut().find(|(id, _)| *id == p) {
                            Some((_, acc)) => acc.add_assign(&g),
                            None => result.params.push((p, g.clone())),
                        }
                    }
                    result.leaves.push((Var(i), g));
                }
                Op::MatMul(a, b) => {
                    if needs(*a) {
                        send(*a, g.matmul(&val(*b).transpose())?);
                    }
                    if needs(*b) {
                        send(*b, val(*a).t_matmul(&g)?);
                    }
                }
                Op::SpMM(s, d) => {
                    if needs(*d) {
                        send(*d, s.transpose().spmm(&g)?);
                    }
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::AddRow(a, b) => {
                    let c = g.cols();
                    let mut sums = vec![0.0; c];
                    for r in 0..g.rows() {
                        for (s, x) in sums.iter_mut().zip(g.row(r)) {
                            *s += x;
                        }
                    }
                    send(*b, Tensor::from_vec(1, c, sums)?);
                    send(*a, g);
                }
                Op::Scale(a, s) => send(*a, g.map(|x| x * s)),
                Op::Relu(a) => send(*a, zip_map(&g, val(*a), |g, x| if x > 0.0 { g } else { 0.0 })),
                Op::LeakyRelu(a, slope) => {
                    send(*a, zip_map(&g, val(*a), |g, x| if x > 0.0 { g } else { slope * g }))
                }
                Op::Sigmoid(a) => send(*a, zip_map(&g, &node.value, |g, y| g * y * (1.0 - y))),
                Op::Dropout(a, mask) => {
                    let data = g.as_slice().iter().zip(mask).map(|(g, m)| g * m).collect();
                    send(*a, Tensor::from_vec(g.rows(), g.cols(), data)?);
                }
                Op::ConcatRows(parts) => {
                    let c = g.cols();
                    let mut start = 0;
                    for &p in parts {
                        let r = val(p).rows();
                        let data = g.as_slice()[start * c..(start + r) * c].to_vec();
                        send(p, Tensor::from_vec(r, c, data)?);
                        start += r;
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (r, c) = val(p).shape();
                        let mut part = Tensor::zeros(r, c);
                        for i in 0..r {
                            part.row_mut(i).copy_from_slice(&g.row(i)[off..off + c]);
                        }
                        send(p, part);
                        off += c;
                    }
                }
                Op::RowGather(a, index) => {
                    let (r, c) = val(*a).shape();
                    let mut out = Tensor::zeros(r, c);
                    for (k, &src) in index.iter().enumerate() {
                        for (o, x) in out.row_mut(src).iter_mut().zip(g.row(k)) {
                            *o += x;
                        }
                    }
                    send(*a, out);
                }
                Op::GroupMean(a, groups) => {
                    let (r, c) = val(*a).shape();
                    let mut out = Tensor::zeros(r, c);
                    for (k, members) in groups.iter().enumerate() {
                        if members.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / members.len() as f64;
                        for &m in members {
                            for (o, x) in out.row_mut(m).iter_mut().zip(g.row(k)) {
                                *o += x * inv;
                            }
                        }
                    }
                    send(*a, out);
                }
                Op::GroupMax(a, winner) => {
                    let (r, c) = val(*a).shape();
                    let mut out = Tensor::zeros(r, c);
                    for (slot, &w) in winner.iter().enumerate() {
                        if w != usize::MAX {
                            let (k, j) = (slot / c, slot % c);
                            let cur = out.get(w, j);
                            out.set(w, j, cur + g.get(k, j));
                        }
                    }
                    send(*a, out);
                }
                Op::LogSoftmax(a) => {
                    let y = &node.value;
                    let mut out = Tensor::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let gs: f64 = g.row(i).iter().sum();
                        for ((o, gy), yy) in out.row_mut(i).iter_mut().zip(g.row(i)).zip(y.row(i)) {
                            *o = gy - yy.exp() * gs;
                        }
                    }
                    send(*a, out);
                }
                Op::Pick(a, entries) => {
                    let (r, c) = val(*a).shape();
                    let mut out = Tensor::zeros(r, c);
                    for (k, &(i, j)) in entries.iter().enumerate() {
                        let cur = out.get(i, j);
                        out.set(i, j, cur + g.as_slice()[k]);
                    }
                    send(*a, out);
                }
                Op::MeanAll(a) => {
                    let (r, c) = val(*a).shape();
                    let n = (r * c).max(1) as f64;
                    send(*a, Tensor::filled(r, c, g.as_slice()[0] / n));
                }
                Op::SumAll(a) => {
                    let (r, c) = val(*a).shape();
                    send(*a, Tensor::filled(r, c, g.as_slice()[0]));
                }
                Op::BinaryLogistic(a, targets) => {
                    let s = val(*a);
                    let scale = g.as_slice()[0] / targets.len() as f64;
                    let data =
                        s.as_slice().iter().zip(targets).map(|(&x, &t)| (sigmoid(x) - t) * scale).collect();
                    send(*a, Tensor::from_vec(s.rows(), s.cols(), data)?);
                }
            }
        }
        self.nodes.clear();
        result.leaves.sort_by_key(|(v, _)| *v);
        Ok(result)
    }
}

fn check_groups(groups: &[Vec<usize>], n: usize) -> Result<(), TensorError> {
    match groups.iter().flatten().find(|&&m| m >= n) {
        Some(&bad) => {
            Err(TensorError::InvalidArgument(format!("group member {bad} out of range for {n} rows")))
        }
        None => Ok(()),
    }
}

fn zip_map(g: &Tensor, x: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = g.as_slice().iter().zip(x.as_slice()).map(|(&a, &b)| f(a, b)).collect();
    Tensor::from_vec(g.rows(), g.cols(), data).expect("same shape")
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
