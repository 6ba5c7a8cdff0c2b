//! Bilinear pooling of two convolutional streams followed by signed square
//! root and L2 normalisation.

use crate::error::{Error, Result};
use crate::tensor::{Module, Sequential, Tensor};

const SQRT_EPS: f64 = 1e-10;
const NORM_FLOOR: f64 = 1e-12;

fn spatial_dims(t: &Tensor, op: &'static str) -> Result<(usize, usize)> {
    match *t.shape() {
        [c, h, w] => Ok((c, h * w)),
        _ => Err(Error::Shape {
            op,
            expected: "[channels, height, width]".into(),
            actual: t.shape().to_vec(),
        }),
    }
}

/// `u[i * C_y + j] = sum over locations l of fx[i, l] * fy[j, l]`.
pub fn bilinear_pool(fx: &Tensor, fy: &Tensor) -> Result<Tensor> {
    let (cx, lx) = spatial_dims(fx, "bilinear_pool")?;
    let (cy, ly) = spatial_dims(fy, "bilinear_pool")?;
    if fx.shape()[1..] != fy.shape()[1..] {
        return Err(Error::contract(format!(
            "bilinear streams disagree on spatial locations: {:?} vs {:?}",
            &fx.shape()[1..],
            &fy.shape()[1..]
        )));
    }
    debug_assert_eq!(lx, ly);
    let (x, y) = (fx.data(), fy.data());
    let mut u = vec![0.0; cx * cy];
    for i in 0..cx {
        let xi = &x[i * lx..(i + 1) * lx];
        for j in 0..cy {
            let yj = &y[j * ly..(j + 1) * ly];
            u[i * cy + j] = xi.iter().zip(yj).map(|(a, b)| a * b).sum();
        }
    }
    Ok(Tensor::vector(u))
}

/// Gradients of [`bilinear_pool`] with respect to both streams.
pub fn bilinear_pool_backward(fx: &Tensor, fy: &Tensor, grad: &Tensor) -> Result<(Tensor, Tensor)> {
    let (cx, l) = spatial_dims(fx, "bilinear_pool backward")?;
    let (cy, _) = spatial_dims(fy, "bilinear_pool backward")?;
    grad.expect_shape("bilinear_pool backward", &[cx * cy])?;
    let (x, y, g) = (fx.data(), fy.data(), grad.data());
    let mut gx = vec![0.0; cx * l];
    let mut gy = vec![0.0; cy * l];
    for i in 0..cx {
        for j in 0..cy {
            let gij = g[i * cy + j];
            if gij == 0.0 {
                continue;
            }
            for k in 0..l {
                gx[i * l + k] += gij * y[j * l + k];
                gy[j * l + k] += gij * x[i * l + k];
            }
        }
    }
    Ok((
        Tensor::new(fx.shape().to_vec(), gx)?,
        Tensor::new(fy.shape().to_vec(), gy)?,
    ))
}

/// Elementwise `sign(u) * sqrt(|u|)`.
pub fn signed_sqrt(u: &Tensor) -> Tensor {
    let data = u.data().iter().map(|v| v.signum() * v.abs().sqrt()).collect();
    Tensor::new(u.shape().to_vec(), data).expect("same shape")
}

pub fn signed_sqrt_backward(u: &Tensor, grad: &Tensor) -> Tensor {
    let data = u
        .data()
        .iter()
        .zip(grad.data())
        .map(|(v, g)| g * 0.5 / (v.abs() + SQRT_EPS).sqrt())
        .collect();
    Tensor::new(u.shape().to_vec(), data).expect("same shape")
}

/// `v / max(||v||, 1e-12)`.
pub fn l2_normalize(v: &Tensor) -> Tensor {
    let n = norm(v.data()).max(NORM_FLOOR);
    let data = v.data().iter().map(|x| x / n).collect();
    Tensor::new(v.shape().to_vec(), data).expect("same shape")
}

pub fn l2_normalize_backward(v: &Tensor, grad: &Tensor) -> Tensor {
    let raw = norm(v.data());
    let g = grad.data();
    let data = if raw <= NORM_FLOOR {
        g.iter().map(|x| x / NORM_FLOOR).collect()
    } else {
        let dot: f64 = v.data().iter().zip(g).map(|(a, b)| a * b).sum();
        v.data()
            .iter()
            .zip(g)
            .map(|(x, gi)| gi / raw - x * dot / (raw * raw * raw))
            .collect()
    };
    Tensor::new(v.shape().to_vec(), data).expect("same shape")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct PoolCache {
    fx: Tensor,
    fy: Tensor,
    u: Tensor,
    s: Tensor,
}

/// Image -> two conv streams -> bilinear pool -> signed sqrt -> L2.
///
/// With `stream_y` absent the same stream feeds both sides (symmetric
/// bilinear model) and its gradient is the sum of both sides.
pub struct BilinearFeatures {
    pub stream_x: Sequential,
    pub stream_y: Option<Sequential>,
    cache: Option<PoolCache>,
}

impl BilinearFeatures {
    pub fn new(stream_x: Sequential, stream_y: Option<Sequential>) -> Self {
        BilinearFeatures {
            stream_x,
            stream_y,
            cache: None,
        }
    }

    fn pool_chain(fx: &Tensor, fy: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        let u = bilinear_pool(fx, fy)?;
        let s = signed_sqrt(&u);
        let v = l2_normalize(&s);
        Ok((u, s, v))
    }
}

impl Module for BilinearFeatures {
    fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor> {
        let fx = self.stream_x.forward(input, training)?;
        let fy = match &mut self.stream_y {
            Some(s) => s.forward(input, training)?,
            None => fx.clone(),
        };
        let (u, s, v) = Self::pool_chain(&fx, &fy)?;
        self.cache = Some(PoolCache { fx, fy, u, s });
        Ok(v)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let c = self
            .cache
            .take()
            .ok_or_else(|| Error::State("bilinear backward called before forward".into()))?;
        let gs = l2_normalize_backward(&c.s, upstream);
        let gu = signed_sqrt_backward(&c.u, &gs);
        let (gx, gy) = bilinear_pool_backward(&c.fx, &c.fy, &gu)?;
        match &mut self.stream_y {
            Some(sy) => {
                let a = self.stream_x.backward(&gx)?;
                let b = sy.backward(&gy)?;
                let data = a.data().iter().zip(b.data()).map(|(p, q)| p + q).collect();
                Tensor::new(a.shape().to_vec(), data)
            }
            None => {
                let data = gx.data().iter().zip(gy.data()).map(|(p, q)| p + q).collect();
                self.stream_x.backward(&Tensor::new(gx.shape().to_vec(), data)?)
            }
        }
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let fx = self.stream_x.infer(input)?;
        let fy = match &self.stream_y {
            Some(s) => s.infer(input)?,
            None => fx.clone(),
        };
        Ok(Self::pool_chain(&fx, &fy)?.2)
    }

    fn params(&self) -> Vec<&Tensor> {
        let mut p = self.stream_x.params();
        if let Some(s) = &self.stream_y {
            p.extend(s.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.stream_x.params_mut();
        if let Some(s) = &mut self.stream_y {
            p.extend(s.params_mut());
        }
        p
    }

    fn name(&self) -> &'static str {
        "bilinear_features"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Conv2d, MaxPool2d};
    use crate::testutil::{assert_grads_match, random_tensor};

    fn map(c: usize, h: usize, w: usize, data: Vec<f64>) -> Tensor {
        Tensor::new(vec![c, h, w], data).unwrap()
    }

    #[test]
    fn outer_product_and_sum_pooling() {
        let u = bilinear_pool(&map(2, 1, 1, vec![1.0, 2.0]), &map(2, 1, 1, vec![3.0, 4.0])).unwrap();
        assert_eq!(u.data(), &[3.0, 4.0, 6.0, 8.0]);
        let u = bilinear_pool(
            &map(2, 1, 2, vec![1.0, 1.0, 2.0, 2.0]),
            &map(2, 1, 2, vec![3.0, 3.0, 4.0, 4.0]),
        )
        .unwrap();
        assert_eq!(u.data(), &[6.0, 8.0, 12.0, 16.0]);
    }

    #[test]
    fn spatial_mismatch_is_a_contract_error() {
        let r = bilinear_pool(&map(1, 2, 2, vec![0.0; 4]), &map(1, 1, 4, vec![0.0; 4]));
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn sqrt_and_norm_examples() {
        let s = signed_sqrt(&Tensor::vector(vec![4.0, -9.0, 0.0]));
        assert_eq!(s.data(), &[2.0, -3.0, 0.0]);
        let v = l2_normalize(&Tensor::vector(vec![3.0, 4.0]));
        assert!((v.data()[0] - 0.6).abs() < 1e-15 && (v.data()[1] - 0.8).abs() < 1e-15);
        assert_eq!(l2_normalize(&Tensor::vector(vec![0.0; 3])).data(), &[0.0; 3]);
    }

    #[test]
    fn pool_gradients() {
        let fx = random_tensor(&[2, 2, 3], 1);
        let fy = random_tensor(&[3, 2, 3], 2);
        let g = random_tensor(&[6], 3);
        let (gx, gy) = bilinear_pool_backward(&fx, &fy, &g).unwrap();
        let f = |a: &Tensor, b: &Tensor| -> f64 {
            bilinear_pool(a, b)
                .unwrap()
                .data()
                .iter()
                .zip(g.data())
                .map(|(p, q)| p * q)
                .sum()
        };
        let h = 1e-5;
        for i in 0..fx.len() {
            let mut p = fx.clone();
            p.data_mut()[i] += h;
            let mut m = fx.clone();
            m.data_mut()[i] -= h;
            assert!(((f(&p, &fy) - f(&m, &fy)) / (2.0 * h) - gx.data()[i]).abs() < 1e-7);
        }
        for i in 0..fy.len() {
            let mut p = fy.clone();
            p.data_mut()[i] += h;
            let mut m = fy.clone();
            m.data_mut()[i] -= h;
            assert!(((f(&fx, &p) - f(&fx, &m)) / (2.0 * h) - gy.data()[i]).abs() < 1e-7);
        }
    }

    fn stream(seed: u64) -> Sequential {
        Sequential::new()
            .with(Conv2d::new(1, 2, 3, 1, 1, seed).unwrap())
            .with(MaxPool2d::new(2, 2).unwrap())
    }

    #[test]
    fn features_gradcheck_two_streams_and_shared() {
        let mut two = BilinearFeatures::new(stream(1), Some(stream(2)));
        assert_grads_match(&mut two, &[1, 4, 4], 5);
        let mut shared = BilinearFeatures::new(stream(3), None);
        assert_grads_match(&mut shared, &[1, 4, 4], 6);
    }
}
