//! Central finite-difference verification of analytic gradients.
//!
//! The checker perturbs trainable parameter coordinates by ±h and compares
//! `(L(θ+h) − L(θ−h)) / 2h` with the gradient from [`Graph::backward`].
//! A coordinate whose perturbation changes the discrete pattern of the
//! forward pass (a ReLU flipping sign, a different pooling winner, a clamp
//! engaging) sits on a kink and is skipped.
//!
//! Relative error is `|a − n| / max(|a|, |n|, floor)`.

use super::{Gradients, Graph, Mode, NnError, NodeId, OpKind, ParamStore, Rng, Tensor};

pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub h: f64,
    pub floor: f64,
    pub tolerance: f64,
    /// Coordinates sampled per parameter; larger parameters are subsampled.
    pub max_coords: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            h: 1e-5,
            floor: 1e-5,
            tolerance: TOLERANCE,
            max_coords: 48,
        }
    }
}

/// Result of checking one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    pub skipped: usize,
}

impl CheckOutcome {
    fn empty() -> Self {
        CheckOutcome {
            max_rel_error: 0.0,
            worst: None,
            checked: 0,
            skipped: 0,
        }
    }

    fn merge(&mut self, other: CheckOutcome) {
        if other.max_rel_error > self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst;
        }
        self.checked += other.checked;
        self.skipped += other.skipped;
    }
}

/// Summary over several random cases of one op or model.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub outcome: CheckOutcome,
    pub passed: bool,
}

impl CheckReport {
    pub fn from_outcomes(name: &str, outcomes: Vec<CheckOutcome>, tolerance: f64) -> Self {
        let cases = outcomes.len();
        let mut total = CheckOutcome::empty();
        for o in outcomes {
            total.merge(o);
        }
        let passed = total.checked > 0 && total.max_rel_error < tolerance;
        CheckReport {
            name: name.to_string(),
            cases,
            outcome: total,
            passed,
        }
    }
}

fn evaluate<F>(store: &ParamStore, build: &F) -> Result<(f64, Vec<u64>), NnError>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId, NnError>,
{
    let mut g = Graph::new(store);
    let loss = build(&mut g)?;
    let v = g.value(loss);
    if v.len() != 1 {
        return Err(NnError::NotScalar(v.shape().to_vec()));
    }
    Ok((v.data()[0], g.pattern()))
}

/// Checks the gradients of the scalar returned by `build` with respect to
/// every trainable parameter of `store`. `fault` is forwarded to
/// [`Graph::with_fault`] for the analytic pass only.
pub fn check_gradients<F>(
    store: &ParamStore,
    build: F,
    opts: &CheckOptions,
    fault: Option<OpKind>,
    rng: &mut Rng,
) -> Result<CheckOutcome, NnError>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId, NnError>,
{
    let mut grads = Gradients::new(store);
    let base_pattern = {
        let mut g = Graph::new(store).with_fault(fault);
        let loss = build(&mut g)?;
        g.backward(loss, &mut grads)?;
        g.pattern()
    };

    let mut work = store.clone();
    let mut out = CheckOutcome::empty();
    for (id, param) in store.iter() {
        if !param.trainable {
            continue;
        }
        let n = param.value().len();
        let coords: Vec<usize> = if n <= opts.max_coords {
            (0..n).collect()
        } else {
            (0..opts.max_coords).map(|_| rng.below(n)).collect()
        };
        let zeros;
        let analytic = match grads.get(id) {
            Some(t) => t,
            None => {
                zeros = Tensor::zeros(param.value().shape());
                &zeros
            }
        };
        for c in coords {
            let original = work.get(id).data()[c];
            work.get_mut(id).data_mut()[c] = original + opts.h;
            let (plus, p_plus) = evaluate(&work, &build)?;
            work.get_mut(id).data_mut()[c] = original - opts.h;
            let (minus, p_minus) = evaluate(&work, &build)?;
            work.get_mut(id).data_mut()[c] = original;
            if p_plus != base_pattern || p_minus != base_pattern {
                out.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * opts.h);
            let a = analytic.data()[c];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            out.checked += 1;
            if rel > out.max_rel_error || out.worst.is_none() {
                out.max_rel_error = rel;
                out.worst = Some((param.name.clone(), c));
            }
        }
    }
    Ok(out)
}

/// Ops covered by [`layer_suite`].
pub const CHECKED_OPS: [OpKind; 13] = [
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

fn random_tensor(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).expect("shape")
}

fn dim(rng: &mut Rng, lo: usize, hi: usize) -> usize {
    lo + rng.below(hi - lo + 1)
}

/// Reduces any node to a scalar with a fixed random linear read-out.
fn read_out(g: &mut Graph<'_>, y: NodeId, seed: u64) -> Result<NodeId, NnError> {
    let flat = g.concat(&[y]);
    let n = g.value(flat).len();
    let mut rng = Rng::new(seed);
    let w = g.input(random_tensor(&mut rng, &[n, 1]));
    let b = g.input(Tensor::zeros(&[1]));
    g.dense(flat, w, b)
}

type Build = Box<dyn Fn(&mut Graph<'_>) -> Result<NodeId, NnError>>;

fn layer_case(op: OpKind, rng: &mut Rng) -> (ParamStore, Build) {
    let mut s = ParamStore::new();
    let head = rng.next_u64();
    let build: Build = match op {
        OpKind::Embed => {
            let (vocab, d, len) = (dim(rng, 3, 8), dim(rng, 1, 4), dim(rng, 1, 6));
            let table = s.add("table", random_tensor(rng, &[vocab, d]), true);
            let idx: Vec<usize> = (0..len).map(|_| 1 + rng.below(vocab - 1)).collect();
            Box::new(move |g| {
                let e = g.embed(table, &idx)?;
                read_out(g, e, head)
            })
        }
        OpKind::Conv1d => {
            let (w, c, o) = (dim(rng, 1, 4), dim(rng, 1, 4), dim(rng, 1, 4));
            let t = w + rng.below(5);
            let x = s.add("x", random_tensor(rng, &[t, c]), true);
            let f = s.add("f", random_tensor(rng, &[w, c, o]), true);
            let b = s.add("b", random_tensor(rng, &[o]), true);
            Box::new(move |g| {
                let (x, f, b) = (g.param(x), g.param(f), g.param(b));
                let y = g.conv1d(x, f, b)?;
                read_out(g, y, head)
            })
        }
        OpKind::Relu | OpKind::Sigmoid | OpKind::Softmax | OpKind::Scale => {
            let n = dim(rng, 1, 8);
            let x = s.add("x", random_tensor(rng, &[n]), true);
            let factor = rng.uniform_in(-2.0, 2.0);
            Box::new(move |g| {
                let x = g.param(x);
                let y = match op {
                    OpKind::Relu => g.relu(x),
                    OpKind::Sigmoid => g.sigmoid(x),
                    OpKind::Softmax => g.softmax(x)?,
                    _ => g.scale(x, factor),
                };
                read_out(g, y, head)
            })
        }
        OpKind::MaxPool1d => {
            let (t, c) = (dim(rng, 2, 9), dim(rng, 1, 4));
            let x = s.add("x", random_tensor(rng, &[t, c]), true);
            Box::new(move |g| {
                let x = g.param(x);
                let y = g.max_pool1d(x, 2)?;
                read_out(g, y, head)
            })
        }
        OpKind::Dropout => {
            let n = dim(rng, 2, 12);
            let x = s.add("x", random_tensor(rng, &[n]), true);
            let mask_seed = rng.next_u64();
            Box::new(move |g| {
                let x = g.param(x);
                let mut mask_rng = Rng::new(mask_seed);
                let y = g.dropout(x, 0.5, &mut Mode::Train(&mut mask_rng))?;
                read_out(g, y, head)
            })
        }
        OpKind::Dense => {
            let (n, m) = (dim(rng, 1, 6), dim(rng, 1, 6));
            let x = s.add("x", random_tensor(rng, &[n]), true);
            let w = s.add("w", random_tensor(rng, &[n, m]), true);
            let b = s.add("b", random_tensor(rng, &[m]), true);
            Box::new(move |g| {
                let (x, w, b) = (g.param(x), g.param(w), g.param(b));
                let y = g.dense(x, w, b)?;
                read_out(g, y, head)
            })
        }
        OpKind::Concat => {
            let (ra, ca, nb) = (dim(rng, 1, 4), dim(rng, 1, 3), dim(rng, 1, 5));
            let a = s.add("a", random_tensor(rng, &[ra, ca]), true);
            let b = s.add("b", random_tensor(rng, &[nb]), true);
            Box::new(move |g| {
                let (a, b) = (g.param(a), g.param(b));
                let y = g.concat(&[a, b]);
                read_out(g, y, head)
            })
        }
        OpKind::CrossEntropy => {
            let k = dim(rng, 2, 7);
            let x = s.add("logits", random_tensor(rng, &[k]), true);
            let gold = rng.below(k);
            Box::new(move |g| {
                let x = g.param(x);
                let p = g.softmax(x)?;
                g.cross_entropy(p, gold)
            })
        }
        OpKind::BinaryCrossEntropy => {
            let x = s.add("logits", random_tensor(rng, &[7]), true);
            let targets: Vec<f64> = (0..7).map(|_| f64::from(u8::from(rng.bernoulli(0.5)))).collect();
            Box::new(move |g| {
                let x = g.param(x);
                let p = g.sigmoid(x);
                g.binary_cross_entropy(p, &targets)
            })
        }
        OpKind::Add => {
            let shape = [dim(rng, 1, 4), dim(rng, 1, 4)];
            let a = s.add("a", random_tensor(rng, &shape), true);
            let b = s.add("b", random_tensor(rng, &shape), true);
            Box::new(move |g| {
                let (a, b) = (g.param(a), g.param(b));
                let y = g.add(a, b)?;
                read_out(g, y, head)
            })
        }
        OpKind::Param | OpKind::Input => unreachable!("not a checked op"),
    };
    (s, build)
}

/// Checks every differentiable op on `cases` random shapes each.
pub fn layer_suite(seed: u64, cases: usize, fault: Option<OpKind>) -> Result<Vec<CheckReport>, NnError> {
    let opts = CheckOptions::default();
    CHECKED_OPS
        .iter()
        .map(|&op| {
            let outcomes = (0..cases)
                .map(|case| {
                    let mut rng = Rng::derive(seed, &[0x6C, op as u64, case as u64]);
                    let (store, build) = layer_case(op, &mut rng);
                    check_gradients(&store, build, &opts, fault, &mut rng)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CheckReport::from_outcomes(op.name(), outcomes, opts.tolerance))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_layers_pass() {
        let reports = layer_suite(11, 20, None).unwrap();
        for r in &reports {
            assert!(r.passed, "{} failed: {:?}", r.name, r.outcome);
            assert_eq!(r.cases, 20);
        }
    }

    #[test]
    fn injected_sign_error_is_caught() {
        for op in [OpKind::Conv1d, OpKind::MaxPool1d, OpKind::Sigmoid, OpKind::Embed] {
            let reports = layer_suite(5, 3, Some(op)).unwrap();
            let r = reports.iter().find(|r| r.name == op.name()).unwrap();
            assert!(!r.passed, "fault in {} went unnoticed", op.name());
        }
    }

    #[test]
    fn same_seed_same_errors() {
        let a = layer_suite(9, 2, None).unwrap();
        let b = layer_suite(9, 2, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kinks_are_skipped() {
        let mut s = ParamStore::new();
        let x = s.add("x", Tensor::vector(vec![0.0, 1e-7, 0.5]), true);
        let build = move |g: &mut Graph<'_>| {
            let x = g.param(x);
            let r = g.relu(x);
            read_out(g, r, 1)
        };
        let out = check_gradients(&s, build, &CheckOptions::default(), None, &mut Rng::new(0)).unwrap();
        assert_eq!(out.skipped, 2);
        assert_eq!(out.checked, 1);
    }
}
