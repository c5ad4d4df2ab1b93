use std::sync::Arc;

use super::{NnError, Rng, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub trainable: bool,
    value: Arc<Tensor>,
}

impl Param {
    pub fn value(&self) -> &Tensor {
        &self.value
    }
}

/// Named parameter tensors of one model.
///
/// Values are reference counted so that large frozen tables (word
/// embeddings) can be shared between models without copying. Updating a
/// shared value copies it first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter. Names must be unique and free of whitespace.
    pub fn add(&mut self, name: &str, value: Tensor, trainable: bool) -> ParamId {
        self.add_shared(name, Arc::new(value), trainable)
    }

    pub fn add_shared(&mut self, name: &str, value: Arc<Tensor>, trainable: bool) -> ParamId {
        assert!(
            !name.is_empty() && !name.contains(char::is_whitespace),
            "invalid parameter name {name:?}"
        );
        assert!(self.id(name).is_none(), "duplicate parameter {name}");
        self.params.push(Param {
            name: name.to_string(),
            trainable,
            value,
        });
        ParamId(self.params.len() - 1)
    }

    /// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)).
    pub fn add_glorot(&mut self, name: &str, shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> ParamId {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.uniform_in(-limit, limit)).collect();
        self.add(name, Tensor::new(shape.to_vec(), data).expect("shape"), true)
    }

    pub fn add_zeros(&mut self, name: &str, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::zeros(shape), true)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        Arc::make_mut(&mut self.params[id.0].value)
    }

    pub fn shared(&self, id: ParamId) -> Arc<Tensor> {
        Arc::clone(&self.params[id.0].value)
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.params[id.0].trainable = trainable;
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    /// Number of scalar values across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Replaces the value of `name`, keeping its shape.
    pub fn assign(&mut self, name: &str, value: &Tensor) -> Result<(), NnError> {
        let id = self
            .id(name)
            .ok_or_else(|| NnError::UnknownParameter(name.to_string()))?;
        if self.get(id).shape() != value.shape() {
            return Err(NnError::ShapeMismatch {
                op: "assign",
                detail: format!("{name}: {:?} vs {:?}", self.get(id).shape(), value.shape()),
            });
        }
        *self.get_mut(id) = value.clone();
        Ok(())
    }
}

/// Accumulated gradients, one optional tensor per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn new(store: &ParamStore) -> Self {
        Gradients {
            grads: vec![None; store.len()],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    /// Gradient slot for `id`, created as zeros of `shape` on first use.
    pub fn slot(&mut self, id: ParamId, shape: &[usize]) -> &mut Tensor {
        self.grads[id.0].get_or_insert_with(|| Tensor::zeros(shape))
    }

    pub fn accumulate(&mut self, id: ParamId, grad: &Tensor) {
        match &mut self.grads[id.0] {
            Some(g) => g.add_assign(grad),
            slot @ None => *slot = Some(grad.clone()),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.scale(factor);
        }
    }

    pub fn clear(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glorot_within_limit() {
        let mut store = ParamStore::new();
        let mut rng = Rng::new(1);
        let id = store.add_glorot("w", &[10, 20], 10, 20, &mut rng);
        let limit = (6.0f64 / 30.0).sqrt();
        assert!(store.get(id).data().iter().all(|x| x.abs() <= limit));
        assert_eq!(store.scalar_count(), 200);
    }

    #[test]
    fn shared_values_copy_on_write() {
        let table = Arc::new(Tensor::vector(vec![1.0, 2.0]));
        let mut a = ParamStore::new();
        let id = a.add_shared("emb", Arc::clone(&table), false);
        a.get_mut(id).data_mut()[0] = 5.0;
        assert_eq!(table.data()[0], 1.0);
        assert_eq!(a.get(id).data()[0], 5.0);
    }

    #[test]
    fn assign_checks_shape() {
        let mut s = ParamStore::new();
        s.add_zeros("b", &[3]);
        assert!(s.assign("b", &Tensor::vector(vec![1.0; 3])).is_ok());
        assert!(s.assign("b", &Tensor::vector(vec![1.0; 2])).is_err());
        assert!(s.assign("nope", &Tensor::vector(vec![1.0; 3])).is_err());
    }
}
