//! Eager computation graph with reverse-mode gradients.
//!
//! Every operation computes its output immediately and records itself on
//! the graph. [`Graph::backward`] walks the record in reverse and adds
//! parameter gradients into a [`Gradients`] buffer, so several graphs (one
//! per training example) can accumulate into the same buffer before an
//! optimizer step. Nodes that depend on no trainable parameter carry no
//! gradient and are skipped.

use super::{Gradients, NnError, ParamId, ParamStore, Rng, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// Operation kinds, used to name checks and to inject faults in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Param,
    Input,
    Embed,
    Conv1d,
    Relu,
    Sigmoid,
    Softmax,
    MaxPool1d,
    Dropout,
    Dense,
    Concat,
    CrossEntropy,
    BinaryCrossEntropy,
    Add,
    Scale,
}

impl OpKind {
    pub const ALL: [OpKind; 15] = [
        OpKind::Param,
        OpKind::Input,
        OpKind::Embed,
        OpKind::Conv1d,
        OpKind::Relu,
        OpKind::Sigmoid,
        OpKind::Softmax,
        OpKind::MaxPool1d,
        OpKind::Dropout,
        OpKind::Dense,
        OpKind::Concat,
        OpKind::CrossEntropy,
        OpKind::BinaryCrossEntropy,
        OpKind::Add,
        OpKind::Scale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Param => "param",
            OpKind::Input => "input",
            OpKind::Embed => "embed",
            OpKind::Conv1d => "conv1d",
            OpKind::Relu => "relu",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Softmax => "softmax",
            OpKind::MaxPool1d => "max_pool1d",
            OpKind::Dropout => "dropout",
            OpKind::Dense => "dense",
            OpKind::Concat => "concat",
            OpKind::CrossEntropy => "cross_entropy",
            OpKind::BinaryCrossEntropy => "binary_cross_entropy",
            OpKind::Add => "add",
            OpKind::Scale => "scale",
        }
    }

    pub fn from_name(name: &str) -> Option<OpKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

/// Probabilities are clamped to `[EPS, 1 - EPS]` inside the losses.
pub const PROB_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Op {
    Param(ParamId),
    Input,
    Embed { table: ParamId, indices: Vec<usize> },
    Conv1d { input: NodeId, filters: NodeId, bias: NodeId },
    Relu(NodeId),
    Sigmoid(NodeId),
    Softmax(NodeId),
    MaxPool1d { input: NodeId, argmax: Vec<usize> },
    Dropout { input: NodeId, mask: Vec<f64> },
    Dense { input: NodeId, weight: NodeId, bias: NodeId },
    Concat(Vec<NodeId>),
    CrossEntropy { probs: NodeId, gold: usize },
    BinaryCrossEntropy { probs: NodeId, targets: Vec<f64> },
    Add(NodeId, NodeId),
    Scale(NodeId, f64),
}

impl Op {
    fn kind(&self) -> OpKind {
        match self {
            Op::Param(_) => OpKind::Param,
            Op::Input => OpKind::Input,
            Op::Embed { .. } => OpKind::Embed,
            Op::Conv1d { .. } => OpKind::Conv1d,
            Op::Relu(_) => OpKind::Relu,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::Softmax(_) => OpKind::Softmax,
            Op::MaxPool1d { .. } => OpKind::MaxPool1d,
            Op::Dropout { .. } => OpKind::Dropout,
            Op::Dense { .. } => OpKind::Dense,
            Op::Concat(_) => OpKind::Concat,
            Op::CrossEntropy { .. } => OpKind::CrossEntropy,
            Op::BinaryCrossEntropy { .. } => OpKind::BinaryCrossEntropy,
            Op::Add(..) => OpKind::Add,
            Op::Scale(..) => OpKind::Scale,
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    /// Empty for parameter nodes, whose value lives in the store.
    value: Tensor,
    requires_grad: bool,
}

/// Whether dropout is active.
pub enum Mode<'r> {
    Train(&'r mut Rng),
    Infer,
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    fault: Option<OpKind>,
}

fn mismatch(op: &'static str, detail: String) -> NnError {
    NnError::ShapeMismatch { op, detail }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            fault: None,
        }
    }

    /// Negates the input gradients produced by every op of `kind`.
    /// Only meant for negative controls of the gradient checker.
    pub fn with_fault(mut self, kind: Option<OpKind>) -> Self {
        self.fault = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        match &self.nodes[id.0].op {
            Op::Param(p) => self.params.get(*p),
            _ => &self.nodes[id.0].value,
        }
    }

    fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        let trainable = self.params.param(id).trainable;
        self.push(Op::Param(id), Tensor::default(), trainable)
    }

    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, value, false)
    }

    /// Rows `indices` of the `[vocab × dim]` table, as `[len × dim]`.
    ///
    /// Row 0 is padding: it never receives gradient.
    pub fn embed(&mut self, table: ParamId, indices: &[usize]) -> Result<NodeId, NnError> {
        let t = self.params.get(table);
        if t.rank() != 2 {
            return Err(mismatch("embed", format!("table must be rank 2, got {:?}", t.shape())));
        }
        let (vocab, dim) = (t.shape()[0], t.shape()[1]);
        let mut out = Vec::with_capacity(indices.len() * dim);
        for &i in indices {
            if i >= vocab {
                return Err(mismatch("embed", format!("index {i} outside vocabulary of {vocab}")));
            }
            out.extend_from_slice(&t.data()[i * dim..(i + 1) * dim]);
        }
        let value = Tensor::new(vec![indices.len(), dim], out)?;
        let trainable = self.params.param(table).trainable;
        Ok(self.push(
            Op::Embed {
                table,
                indices: indices.to_vec(),
            },
            value,
            trainable,
        ))
    }

    /// Valid cross-correlation over time: `[T × C]` with `[W × C × O]`
    /// filters and `[O]` bias gives `[(T − W + 1) × O]`.
    pub fn conv1d(&mut self, input: NodeId, filters: NodeId, bias: NodeId) -> Result<NodeId, NnError> {
        let x = self.value(input);
        let f = self.value(filters);
        let b = self.value(bias);
        if x.rank() != 2 || f.rank() != 3 || b.rank() != 1 {
            return Err(mismatch(
                "conv1d",
                format!("input {:?}, filters {:?}, bias {:?}", x.shape(), f.shape(), b.shape()),
            ));
        }
        let (time, ch) = (x.shape()[0], x.shape()[1]);
        let (width, fch, out_ch) = (f.shape()[0], f.shape()[1], f.shape()[2]);
        if fch != ch || b.shape()[0] != out_ch || width == 0 {
            return Err(mismatch(
                "conv1d",
                format!("input {:?}, filters {:?}, bias {:?}", x.shape(), f.shape(), b.shape()),
            ));
        }
        if time < width {
            return Err(mismatch("conv1d", format!("{time} time steps shorter than filter width {width}")));
        }
        let steps = time - width + 1;
        let mut out = Vec::with_capacity(steps * out_ch);
        for _ in 0..steps {
            out.extend_from_slice(b.data());
        }
        let (xd, fd) = (x.data(), f.data());
        for t_in in 0..time {
            let row = &xd[t_in * ch..(t_in + 1) * ch];
            for k in 0..width {
                if t_in < k || t_in - k >= steps {
                    continue;
                }
                let t_out = t_in - k;
                let out_row = &mut out[t_out * out_ch..(t_out + 1) * out_ch];
                for (c, &xv) in row.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let frow = &fd[(k * ch + c) * out_ch..(k * ch + c + 1) * out_ch];
                    for (o, fv) in out_row.iter_mut().zip(frow) {
                        *o += xv * fv;
                    }
                }
            }
        }
        let value = Tensor::new(vec![steps, out_ch], out)?;
        let rg = self.requires_grad(input) || self.requires_grad(filters) || self.requires_grad(bias);
        Ok(self.push(Op::Conv1d { input, filters, bias }, value, rg))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let data = v.data().iter().map(|&a| a.max(0.0)).collect();
        let value = Tensor::new(v.shape().to_vec(), data).expect("same shape");
        let rg = self.requires_grad(x);
        self.push(Op::Relu(x), value, rg)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let data = v.data().iter().map(|&a| sigmoid(a)).collect();
        let value = Tensor::new(v.shape().to_vec(), data).expect("same shape");
        let rg = self.requires_grad(x);
        self.push(Op::Sigmoid(x), value, rg)
    }

    /// Softmax over a rank-1 tensor.
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId, NnError> {
        let v = self.value(x);
        if v.rank() != 1 || v.is_empty() {
            return Err(mismatch("softmax", format!("expected non-empty vector, got {:?}", v.shape())));
        }
        let value = Tensor::vector(softmax(v.data()));
        let rg = self.requires_grad(x);
        Ok(self.push(Op::Softmax(x), value, rg))
    }

    /// Max over non-overlapping windows along time; a trailing partial
    /// window is dropped. Ties pick the earliest step.
    pub fn max_pool1d(&mut self, input: NodeId, window: usize) -> Result<NodeId, NnError> {
        let x = self.value(input);
        if x.rank() != 2 || window == 0 || x.shape()[0] < window {
            return Err(mismatch(
                "max_pool1d",
                format!("input {:?} with window {window}", x.shape()),
            ));
        }
        let (time, ch) = (x.shape()[0], x.shape()[1]);
        let steps = time / window;
        let mut out = Vec::with_capacity(steps * ch);
        let mut argmax = Vec::with_capacity(steps * ch);
        let xd = x.data();
        for s in 0..steps {
            for c in 0..ch {
                let mut best = s * window;
                for t in s * window + 1..(s + 1) * window {
                    if xd[t * ch + c] > xd[best * ch + c] {
                        best = t;
                    }
                }
                out.push(xd[best * ch + c]);
                argmax.push(best * ch + c);
            }
        }
        let value = Tensor::new(vec![steps, ch], out)?;
        let rg = self.requires_grad(input);
        Ok(self.push(Op::MaxPool1d { input, argmax }, value, rg))
    }

    /// Inverted dropout: in training, each unit is zeroed with probability
    /// `p` and survivors are scaled by `1 / (1 − p)`. Identity at inference.
    pub fn dropout(&mut self, input: NodeId, p: f64, mode: &mut Mode<'_>) -> Result<NodeId, NnError> {
        if !(0.0..1.0).contains(&p) {
            return Err(mismatch("dropout", format!("probability {p} outside [0, 1)")));
        }
        let rng = match mode {
            Mode::Train(rng) => rng,
            Mode::Infer => return Ok(input),
        };
        let keep = 1.0 / (1.0 - p);
        let x = self.value(input);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.bernoulli(p) { 0.0 } else { keep })
            .collect();
        let data = x.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        let rg = self.requires_grad(input);
        Ok(self.push(Op::Dropout { input, mask }, value, rg))
    }

    /// `x · W + b` for a vector `x` of length n, `W` of shape `[n × m]`, `b` of length m.
    pub fn dense(&mut self, input: NodeId, weight: NodeId, bias: NodeId) -> Result<NodeId, NnError> {
        let x = self.value(input);
        let w = self.value(weight);
        let b = self.value(bias);
        if x.rank() != 1 || w.rank() != 2 || b.rank() != 1 || w.shape()[0] != x.len() || w.shape()[1] != b.len() {
            return Err(mismatch(
                "dense",
                format!("input {:?}, weight {:?}, bias {:?}", x.shape(), w.shape(), b.shape()),
            ));
        }
        let m = b.len();
        let mut out = b.data().to_vec();
        for (n, &xv) in x.data().iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wrow = &w.data()[n * m..(n + 1) * m];
            for (o, wv) in out.iter_mut().zip(wrow) {
                *o += xv * wv;
            }
        }
        let rg = self.requires_grad(input) || self.requires_grad(weight) || self.requires_grad(bias);
        Ok(self.push(Op::Dense { input, weight, bias }, Tensor::vector(out), rg))
    }

    /// Flattens and concatenates the inputs into one vector.
    pub fn concat(&mut self, inputs: &[NodeId]) -> NodeId {
        let mut out = Vec::new();
        for &i in inputs {
            out.extend_from_slice(self.value(i).data());
        }
        let rg = inputs.iter().any(|&i| self.requires_grad(i));
        self.push(Op::Concat(inputs.to_vec()), Tensor::vector(out), rg)
    }

    /// `−log p[gold]`, with `p` clamped to `[PROB_EPS, 1 − PROB_EPS]`.
    pub fn cross_entropy(&mut self, probs: NodeId, gold: usize) -> Result<NodeId, NnError> {
        let p = self.value(probs);
        if p.rank() != 1 || gold >= p.len() {
            return Err(mismatch("cross_entropy", format!("class {gold} for probabilities {:?}", p.shape())));
        }
        let loss = -clamp_prob(p.data()[gold]).ln();
        let rg = self.requires_grad(probs);
        Ok(self.push(Op::CrossEntropy { probs, gold }, Tensor::scalar(loss), rg))
    }

    /// Mean over dimensions of `−[y log p + (1 − y) log(1 − p)]`, `p` clamped.
    pub fn binary_cross_entropy(&mut self, probs: NodeId, targets: &[f64]) -> Result<NodeId, NnError> {
        let p = self.value(probs);
        if p.rank() != 1 || p.len() != targets.len() || targets.is_empty() {
            return Err(mismatch(
                "binary_cross_entropy",
                format!("{} targets for probabilities {:?}", targets.len(), p.shape()),
            ));
        }
        let n = targets.len() as f64;
        let loss = p
            .data()
            .iter()
            .zip(targets)
            .map(|(&pv, &y)| {
                let q = clamp_prob(pv);
                -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
            })
            .sum::<f64>()
            / n;
        let rg = self.requires_grad(probs);
        Ok(self.push(
            Op::BinaryCrossEntropy {
                probs,
                targets: targets.to_vec(),
            },
            Tensor::scalar(loss),
            rg,
        ))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(mismatch("add", format!("{:?} + {:?}", x.shape(), y.shape())));
        }
        let mut value = x.clone();
        value.add_assign(y);
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::Add(a, b), value, rg))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let mut value = self.value(x).clone();
        value.scale(factor);
        let rg = self.requires_grad(x);
        self.push(Op::Scale(x, factor), value, rg)
    }

    /// Discrete choices made during the forward pass (ReLU signs, pooling
    /// winners, clamping). Two evaluations with equal patterns lie in the
    /// same differentiable region.
    pub fn pattern(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for node in &self.nodes {
            match &node.op {
                Op::Relu(x) => {
                    out.extend(self.value(*x).data().iter().map(|&v| u64::from(v > 0.0)));
                }
                Op::MaxPool1d { argmax, .. } => out.extend(argmax.iter().map(|&a| a as u64)),
                Op::CrossEntropy { probs, gold } => {
                    let p = self.value(*probs).data()[*gold];
                    out.push(u64::from(clamp_prob(p) != p));
                }
                Op::BinaryCrossEntropy { probs, .. } => {
                    out.extend(self.value(*probs).data().iter().map(|&p| u64::from(clamp_prob(p) != p)));
                }
                _ => {}
            }
        }
        out
    }

    /// Back-propagates from the scalar `loss`, adding parameter gradients
    /// into `grads`.
    pub fn backward(&self, loss: NodeId, grads: &mut Gradients) -> Result<(), NnError> {
        if loss.0 >= self.nodes.len() {
            return Err(NnError::GraphNotEvaluated);
        }
        if self.value(loss).len() != 1 {
            return Err(NnError::NotScalar(self.value(loss).shape().to_vec()));
        }
        let mut node_grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        node_grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = node_grads[idx].take() else {
                continue;
            };
            let sign = if self.fault == Some(node.op.kind()) { -1.0 } else { 1.0 };
            let send = |target: NodeId, mut grad: Tensor, store: &mut Vec<Option<Tensor>>| {
                if sign < 0.0 {
                    grad.scale(-1.0);
                }
                match &mut store[target.0] {
                    Some(existing) => existing.add_assign(&grad),
                    slot @ None => *slot = Some(grad),
                }
            };
            match &node.op {
                Op::Param(p) => {
                    grads.accumulate(*p, &g);
                }
                Op::Input => {}
                Op::Embed { table, indices } => {
                    let shape = self.params.get(*table).shape().to_vec();
                    let dim = shape[1];
                    let slot = grads.slot(*table, &shape);
                    let gd = slot.data_mut();
                    for (row, &i) in indices.iter().enumerate() {
                        if i == 0 {
                            continue;
                        }
                        let src = &g.data()[row * dim..(row + 1) * dim];
                        for (d, s) in gd[i * dim..(i + 1) * dim].iter_mut().zip(src) {
                            *d += sign * s;
                        }
                    }
                }
                Op::Conv1d { input, filters, bias } => {
                    let x = self.value(*input);
                    let f = self.value(*filters);
                    let (time, ch) = (x.shape()[0], x.shape()[1]);
                    let (width, out_ch) = (f.shape()[0], f.shape()[2]);
                    let steps = time - width + 1;
                    let gd = g.data();
                    if self.requires_grad(*bias) {
                        let mut db = vec![0.0; out_ch];
                        for t in 0..steps {
                            for (d, s) in db.iter_mut().zip(&gd[t * out_ch..(t + 1) * out_ch]) {
                                *d += s;
                            }
                        }
                        send(*bias, Tensor::vector(db), &mut node_grads);
                    }
                    if self.requires_grad(*filters) {
                        let mut df = vec![0.0; f.len()];
                        let xd = x.data();
                        for t_in in 0..time {
                            let row = &xd[t_in * ch..(t_in + 1) * ch];
                            for k in 0..width {
                                if t_in < k || t_in - k >= steps {
                                    continue;
                                }
                                let grow = &gd[(t_in - k) * out_ch..(t_in - k + 1) * out_ch];
                                for (c, &xv) in row.iter().enumerate() {
                                    if xv == 0.0 {
                                        continue;
                                    }
                                    let drow = &mut df[(k * ch + c) * out_ch..(k * ch + c + 1) * out_ch];
                                    for (d, gv) in drow.iter_mut().zip(grow) {
                                        *d += xv * gv;
                                    }
                                }
                            }
                        }
                        send(*filters, Tensor::new(f.shape().to_vec(), df)?, &mut node_grads);
                    }
                    if self.requires_grad(*input) {
                        let mut dx = vec![0.0; x.len()];
                        let fd = f.data();
                        for t_in in 0..time {
                            for k in 0..width {
                                if t_in < k || t_in - k >= steps {
                                    continue;
                                }
                                let grow = &gd[(t_in - k) * out_ch..(t_in - k + 1) * out_ch];
                                for c in 0..ch {
                                    let frow = &fd[(k * ch + c) * out_ch..(k * ch + c + 1) * out_ch];
                                    dx[t_in * ch + c] += frow.iter().zip(grow).map(|(a, b)| a * b).sum::<f64>();
                                }
                            }
                        }
                        send(*input, Tensor::new(x.shape().to_vec(), dx)?, &mut node_grads);
                    }
                }
                Op::Relu(x) => {
                    let xv = self.value(*x);
                    let data = g
                        .data()
                        .iter()
                        .zip(xv.data())
                        .map(|(gv, &a)| if a > 0.0 { *gv } else { 0.0 })
                        .collect();
                    send(*x, Tensor::new(xv.shape().to_vec(), data)?, &mut node_grads);
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    let data = g.data().iter().zip(y.data()).map(|(gv, &s)| gv * s * (1.0 - s)).collect();
                    send(*x, Tensor::new(y.shape().to_vec(), data)?, &mut node_grads);
                }
                Op::Softmax(x) => {
                    let y = node.value.data();
                    let dot: f64 = g.data().iter().zip(y).map(|(a, b)| a * b).sum();
                    let data = g.data().iter().zip(y).map(|(gv, &s)| s * (gv - dot)).collect();
                    send(*x, Tensor::vector(data), &mut node_grads);
                }
                Op::MaxPool1d { input, argmax } => {
                    let shape = self.value(*input).shape().to_vec();
                    let mut dx = vec![0.0; shape.iter().product()];
                    for (&pos, gv) in argmax.iter().zip(g.data()) {
                        dx[pos] += gv;
                    }
                    send(*input, Tensor::new(shape, dx)?, &mut node_grads);
                }
                Op::Dropout { input, mask } => {
                    let data = g.data().iter().zip(mask).map(|(a, m)| a * m).collect();
                    send(*input, Tensor::new(g.shape().to_vec(), data)?, &mut node_grads);
                }
                Op::Dense { input, weight, bias } => {
                    let x = self.value(*input);
                    let w = self.value(*weight);
                    let m = g.len();
                    if self.requires_grad(*bias) {
                        send(*bias, g.clone(), &mut node_grads);
                    }
                    if self.requires_grad(*weight) {
                        let mut dw = vec![0.0; w.len()];
                        for (n, &xv) in x.data().iter().enumerate() {
                            if xv == 0.0 {
                                continue;
                            }
                            for (d, gv) in dw[n * m..(n + 1) * m].iter_mut().zip(g.data()) {
                                *d = xv * gv;
                            }
                        }
                        send(*weight, Tensor::new(w.shape().to_vec(), dw)?, &mut node_grads);
                    }
                    if self.requires_grad(*input) {
                        let dx = (0..x.len())
                            .map(|n| {
                                w.data()[n * m..(n + 1) * m]
                                    .iter()
                                    .zip(g.data())
                                    .map(|(a, b)| a * b)
                                    .sum()
                            })
                            .collect();
                        send(*input, Tensor::vector(dx), &mut node_grads);
                    }
                }
                Op::Concat(inputs) => {
                    let mut offset = 0;
                    for &i in inputs {
                        let v = self.value(i);
                        let n = v.len();
                        if self.requires_grad(i) {
                            let part = g.data()[offset..offset + n].to_vec();
                            send(i, Tensor::new(v.shape().to_vec(), part)?, &mut node_grads);
                        }
                        offset += n;
                    }
                }
                Op::CrossEntropy { probs, gold } => {
                    let p = self.value(*probs);
                    let mut dp = vec![0.0; p.len()];
                    let pg = p.data()[*gold];
                    if clamp_prob(pg) == pg {
                        dp[*gold] = -g.item() / pg;
                    }
                    send(*probs, Tensor::vector(dp), &mut node_grads);
                }
                Op::BinaryCrossEntropy { probs, targets } => {
                    let p = self.value(*probs);
                    let n = targets.len() as f64;
                    let up = g.item();
                    let dp = p
                        .data()
                        .iter()
                        .zip(targets)
                        .map(|(&pv, &y)| {
                            if clamp_prob(pv) != pv {
                                0.0
                            } else {
                                up * (-y / pv + (1.0 - y) / (1.0 - pv)) / n
                            }
                        })
                        .collect();
                    send(*probs, Tensor::vector(dp), &mut node_grads);
                }
                Op::Add(a, b) => {
                    if self.requires_grad(*a) {
                        send(*a, g.clone(), &mut node_grads);
                    }
                    if self.requires_grad(*b) {
                        send(*b, g.clone(), &mut node_grads);
                    }
                }
                Op::Scale(x, factor) => {
                    let mut gx = g.clone();
                    gx.scale(*factor);
                    send(*x, gx, &mut node_grads);
                }
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}
