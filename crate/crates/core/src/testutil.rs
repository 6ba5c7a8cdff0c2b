//! Finite-difference oracle shared by unit tests.

use rand::{Rng as _, SeedableRng};

use crate::rng::Rng;
use crate::tensor::{Module, Tensor};

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn close(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= 1e-6 || diff <= 1e-3 * analytic.abs().max(numeric.abs())
}

/// Checks input and parameter gradients of `module` (in inference mode)
/// against central differences of `L = sum(r * y)` for a fixed random `r`.
pub fn assert_grads_match(module: &mut dyn Module, input_shape: &[usize], seed: u64) {
    let x = random_tensor(input_shape, seed);
    let y = module.forward(&x, false).unwrap();
    let r = random_tensor(y.shape(), seed + 1);
    let loss = |m: &dyn Module, x: &Tensor| -> f64 {
        let y = m.infer(x).unwrap();
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
    };
    for p in module.params_mut() {
        p.zero_grad();
    }
    let gx = module.backward(&r).unwrap();
    let h = 1e-4;
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += h;
        let mut xm = x.clone();
        xm.data_mut()[i] -= h;
        let num = (loss(module, &xp) - loss(module, &xm)) / (2.0 * h);
        assert!(
            close(gx.data()[i], num),
            "{} input grad {i}: analytic {} vs numeric {num}",
            module.name(),
            gx.data()[i]
        );
    }
    let analytic: Vec<Vec<f64>> = module
        .params()
        .iter()
        .map(|p| p.grad().map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &g) in grads.iter().enumerate() {
            let orig = module.params()[pi].data()[j];
            module.params_mut()[pi].data_mut()[j] = orig + h;
            let lp = loss(module, &x);
            module.params_mut()[pi].data_mut()[j] = orig - h;
            let lm = loss(module, &x);
            module.params_mut()[pi].data_mut()[j] = orig;
            let num = (lp - lm) / (2.0 * h);
            assert!(
                close(g, num),
                "{} param {pi}[{j}]: analytic {g} vs numeric {num}",
                module.name()
            );
        }
    }
}
