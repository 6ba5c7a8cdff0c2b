use super::Tensor;
use crate::error::{Error, Result};

/// A differentiable building block with cached activations.
///
/// `forward` caches whatever `backward` needs; each `backward` consumes the
/// cache of the most recent `forward`. `infer` is the cache-free path and
/// only needs `&self`, so a trained module can be shared across threads.
pub trait Module: Send + Sync {
    fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor>;

    /// Returns the gradient w.r.t. the input and accumulates parameter
    /// gradients into each parameter's grad slot.
    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor>;

    fn infer(&self, input: &Tensor) -> Result<Tensor>;

    fn params(&self) -> Vec<&Tensor> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        Vec::new()
    }

    fn name(&self) -> &'static str;
}

pub fn param_count(module: &dyn Module) -> usize {
    module.params().iter().map(|p| p.len()).sum()
}

/// Copies out every parameter value (used to keep the best epoch).
pub fn snapshot_params(module: &dyn Module) -> Vec<Vec<f64>> {
    module.params().iter().map(|p| p.data().to_vec()).collect()
}

pub fn restore_params(module: &mut dyn Module, snapshot: &[Vec<f64>]) -> Result<()> {
    let mut params = module.params_mut();
    if params.len() != snapshot.len() {
        return Err(Error::State(format!(
            "snapshot has {} tensors, module has {}",
            snapshot.len(),
            params.len()
        )));
    }
    for (p, s) in params.iter_mut().zip(snapshot) {
        if p.len() != s.len() {
            return Err(Error::State("snapshot tensor size mismatch".into()));
        }
        p.data_mut().copy_from_slice(s);
    }
    Ok(())
}

/// Modules applied in order.
#[derive(Default)]
pub struct Sequential {
    layers: Vec<Box<dyn Module>>,
}

impl Sequential {
    pub fn new() -> Self {
        Sequential { layers: Vec::new() }
    }

    pub fn push(&mut self, layer: impl Module + 'static) {
        self.layers.push(Box::new(layer));
    }

    pub fn with(mut self, layer: impl Module + 'static) -> Self {
        self.push(layer);
        self
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[Box<dyn Module>] {
        &self.layers
    }

    pub fn layer_names(&self) -> Vec<&'static str> {
        self.layers.iter().map(|l| l.name()).collect()
    }
}

impl Module for Sequential {
    fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, training)?;
        }
        Ok(x)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let mut g = upstream.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.infer(&x)?;
        }
        Ok(x)
    }

    fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn name(&self) -> &'static str {
        "sequential"
    }
}
