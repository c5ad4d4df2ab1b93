use log::debug;

use super::{ModelConfig, ModelError};
use crate::nn::{Adam, Gradients, Graph, Mode, NnError, NodeId, ParamStore, Rng};

/// Mini-batch Adam over `n` examples. Each example gets its own graph;
/// gradients are averaged over the batch. Returns the mean loss per epoch.
pub(crate) fn fit<F>(store: &mut ParamStore, n: usize, config: &ModelConfig, rng: &mut Rng, loss: F) -> Result<Vec<f64>, ModelError>
where
    F: Fn(&mut Graph<'_>, usize, &mut Mode<'_>) -> Result<NodeId, NnError>,
{
    let mut adam = Adam::new(config.lr);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::new(store);
            for &i in batch {
                let mut g = Graph::new(store);
                let mut mode = Mode::Train(rng);
                let l = loss(&mut g, i, &mut mode)?;
                total += g.value(l).item();
                g.backward(l, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(store, &grads)?;
        }
        let mean = total / n as f64;
        if !mean.is_finite() {
            return Err(ModelError::Diverged { epoch });
        }
        debug!("epoch {epoch}: loss {mean:.5}");
        log.push(mean);
    }
    Ok(log)
}
