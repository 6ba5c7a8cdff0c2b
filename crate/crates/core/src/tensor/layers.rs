use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{Activation, Module, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Which layer to build and with what hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    #[serde(rename = "maxpool2d")]
    MaxPool2d {
        size: usize,
        stride: usize,
    },
    Dense {
        inputs: usize,
        units: usize,
    },
    Dropout {
        rate: f64,
    },
    Activation {
        function: Activation,
    },
    /// Reshapes any tensor to 1-D so a conv stack can feed a dense stack.
    Flatten,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(flatten)]
    pub kind: LayerKind,
    /// Seeds weight init and dropout masks.
    pub seed: u64,
}

impl LayerSpec {
    /// 3x3 convolution with "same" padding and stride 1.
    pub fn conv3x3(in_channels: usize, out_channels: usize, seed: u64) -> Self {
        LayerSpec {
            kind: LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            seed,
        }
    }

    pub fn maxpool2x2() -> Self {
        LayerSpec {
            kind: LayerKind::MaxPool2d { size: 2, stride: 2 },
            seed: 0,
        }
    }

    pub fn dense(inputs: usize, units: usize, seed: u64) -> Self {
        LayerSpec {
            kind: LayerKind::Dense { inputs, units },
            seed,
        }
    }

    pub fn dropout(rate: f64, seed: u64) -> Self {
        LayerSpec {
            kind: LayerKind::Dropout { rate },
            seed,
        }
    }

    pub fn activation(function: Activation) -> Self {
        LayerSpec {
            kind: LayerKind::Activation { function },
            seed: 0,
        }
    }

    pub fn flatten() -> Self {
        LayerSpec {
            kind: LayerKind::Flatten,
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<Layer> {
        Layer::from_spec(self)
    }
}

/// `floor((input + 2 * padding - kernel) / stride) + 1`, or `None` when the
/// kernel does not fit.
pub fn conv_output_len(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if stride == 0 || kernel == 0 || padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// Uniform Glorot initialisation.
pub fn glorot_uniform(rng: &mut Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

/// A layer built from a [`LayerSpec`].
pub enum Layer {
    Conv2d(Conv2d),
    MaxPool2d(MaxPool2d),
    Dense(Dense),
    Dropout(Dropout),
    Activation(ActivationLayer),
    Flatten(Flatten),
}

impl Layer {
    pub fn from_spec(spec: &LayerSpec) -> Result<Self> {
        Ok(match spec.kind {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => Layer::Conv2d(Conv2d::new(
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                spec.seed,
            )?),
            LayerKind::MaxPool2d { size, stride } => Layer::MaxPool2d(MaxPool2d::new(size, stride)?),
            LayerKind::Dense { inputs, units } => Layer::Dense(Dense::new(inputs, units, spec.seed)?),
            LayerKind::Dropout { rate } => Layer::Dropout(Dropout::new(rate, spec.seed)?),
            LayerKind::Activation { function } => Layer::Activation(ActivationLayer::new(function)),
            LayerKind::Flatten => Layer::Flatten(Flatten::default()),
        })
    }

    fn inner(&self) -> &dyn Module {
        match self {
            Layer::Conv2d(l) => l,
            Layer::MaxPool2d(l) => l,
            Layer::Dense(l) => l,
            Layer::Dropout(l) => l,
            Layer::Activation(l) => l,
            Layer::Flatten(l) => l,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Module {
        match self {
            Layer::Conv2d(l) => l,
            Layer::MaxPool2d(l) => l,
            Layer::Dense(l) => l,
            Layer::Dropout(l) => l,
            Layer::Activation(l) => l,
            Layer::Flatten(l) => l,
        }
    }
}

impl Module for Layer {
    fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor> {
        self.inner_mut().forward(input, training)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        self.inner_mut().backward(upstream)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.inner().infer(input)
    }

    fn params(&self) -> Vec<&Tensor> {
        self.inner().params()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.inner_mut().params_mut()
    }

    fn name(&self) -> &'static str {
        self.inner().name()
    }
}

fn not_ready(layer: &str) -> Error {
    Error::State(format!("{layer}: backward called before forward"))
}

fn chw(op: &'static str, t: &Tensor, channels: usize) -> Result<(usize, usize)> {
    match *t.shape() {
        [c, h, w] if c == channels => Ok((h, w)),
        _ => Err(Error::Shape {
            op,
            expected: format!("[{channels}, height, width]"),
            actual: t.shape().to_vec(),
        }),
    }
}

/// Output positions `o` in `0..out_len` for which `o * stride + k - pad`
/// lands inside `0..in_len`.
fn valid_range(k: usize, pad: usize, stride: usize, in_len: usize, out_len: usize) -> (usize, usize) {
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    if in_len + pad < k + 1 {
        return (0, 0);
    }
    let hi = ((in_len - 1 + pad - k) / stride + 1).min(out_len);
    (lo.min(hi), hi)
}

/// 2-D convolution over a `[channels, height, width]` map.
pub struct Conv2d {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    /// `[out, in, k, k]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
    cache: Option<Tensor>,
}

impl Conv2d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        seed: u64,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0 {
            return Err(Error::contract("conv2d dimensions must be positive"));
        }
        let mut rng = Rng::seed_from_u64(seed);
        let k2 = kernel * kernel;
        let n = out_channels * in_channels * k2;
        let w = glorot_uniform(&mut rng, in_channels * k2, out_channels * k2, n);
        Ok(Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weight: Tensor::new(vec![out_channels, in_channels, kernel, kernel], w)?,
            bias: Tensor::zeros(&[out_channels]),
            cache: None,
        })
    }

    fn output_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        match (
            conv_output_len(h, self.kernel, self.stride, self.padding),
            conv_output_len(w, self.kernel, self.stride, self.padding),
        ) {
            (Some(ho), Some(wo)) => Ok((ho, wo)),
            _ => Err(Error::Shape {
                op: "conv2d",
                expected: format!("spatial size >= kernel {} after padding", self.kernel),
                actual: vec![self.in_channels, h, w],
            }),
        }
    }

    fn compute(&self, input: &Tensor) -> Result<Tensor> {
        let (h, w) = chw("conv2d", input, self.in_channels)?;
        let (ho, wo) = self.output_dims(h, w)?;
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let x = input.data();
        let wt = self.weight.data();
        let mut out = vec![0.0; self.out_channels * ho * wo];
        for o in 0..self.out_channels {
            let plane = &mut out[o * ho * wo..(o + 1) * ho * wo];
            plane.fill(self.bias.data()[o]);
            for c in 0..self.in_channels {
                let src = &x[c * h * w..(c + 1) * h * w];
                for ky in 0..k {
                    let (oy0, oy1) = valid_range(ky, p, s, h, ho);
                    for kx in 0..k {
                        let (ox0, ox1) = valid_range(kx, p, s, w, wo);
                        if ox0 >= ox1 {
                            continue;
                        }
                        let wv = wt[((o * self.in_channels + c) * k + ky) * k + kx];
                        for oy in oy0..oy1 {
                            let iy = oy * s + ky - p;
                            let row = &src[iy * w..(iy + 1) * w];
                            let dst = &mut plane[oy * wo + ox0..oy * wo + ox1];
                            if s == 1 {
                                let ix0 = ox0 + kx - p;
                                for (d, v) in dst.iter_mut().zip(&row[ix0..ix0 + (ox1 - ox0)]) {
                                    *d += wv * v;
                                }
                            } else {
                                for (j, d) in dst.iter_mut().enumerate() {
                                    *d += wv * row[(ox0 + j) * s + kx - p];
                                }
                            }
                        }
                    }
                }
            }
        }
        let t = Tensor::new(vec![self.out_channels, ho, wo], out)?;
        t.ensure_finite("conv2d")?;
        Ok(t)
    }
}

impl Module for Conv2d {
    fn forward(&mut self, input: &Tensor, _training: bool) -> Result<Tensor> {
        let out = self.compute(input)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let input = self.cache.take().ok_or_else(|| not_ready("conv2d"))?;
        let (h, w) = chw("conv2d", &input, self.in_channels)?;
        let (ho, wo) = self.output_dims(h, w)?;
        upstream.expect_shape("conv2d backward", &[self.out_channels, ho, wo])?;
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let x = input.data();
        let g = upstream.data();
        let mut gx = vec![0.0; x.len()];
        let wt = self.weight.data().to_vec();
        let gw = self.weight.grad_mut();
        for o in 0..self.out_channels {
            let gplane = &g[o * ho * wo..(o + 1) * ho * wo];
            for c in 0..self.in_channels {
                let src = &x[c * h * w..(c + 1) * h * w];
                let gsrc = &mut gx[c * h * w..(c + 1) * h * w];
                for ky in 0..k {
                    let (oy0, oy1) = valid_range(ky, p, s, h, ho);
                    for kx in 0..k {
                        let (ox0, ox1) = valid_range(kx, p, s, w, wo);
                        if ox0 >= ox1 {
                            continue;
                        }
                        let widx = ((o * self.in_channels + c) * k + ky) * k + kx;
                        let wv = wt[widx];
                        let mut acc = 0.0;
                        for oy in oy0..oy1 {
                            let iy = oy * s + ky - p;
                            let grow = &gplane[oy * wo + ox0..oy * wo + ox1];
                            for (j, gv) in grow.iter().enumerate() {
                                let ix = (ox0 + j) * s + kx - p;
                                acc += gv * src[iy * w + ix];
                                gsrc[iy * w + ix] += wv * gv;
                            }
                        }
                        gw[widx] += acc;
                    }
                }
            }
        }
        let gb = self.bias.grad_mut();
        for o in 0..self.out_channels {
            gb[o] += g[o * ho * wo..(o + 1) * ho * wo].iter().sum::<f64>();
        }
        Tensor::new(input.shape().to_vec(), gx)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.compute(input)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn name(&self) -> &'static str {
        "conv2d"
    }
}

/// Max pooling over non-overlapping (or strided) windows of each channel.
pub struct MaxPool2d {
    size: usize,
    stride: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(size: usize, stride: usize) -> Result<Self> {
        if size == 0 || stride == 0 {
            return Err(Error::contract("pool size and stride must be positive"));
        }
        Ok(MaxPool2d {
            size,
            stride,
            cache: None,
        })
    }

    fn compute(&self, input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
        let [c, h, w] = *input.shape() else {
            return Err(Error::Shape {
                op: "maxpool2d",
                expected: "[channels, height, width]".into(),
                actual: input.shape().to_vec(),
            });
        };
        let (Some(ho), Some(wo)) = (
            conv_output_len(h, self.size, self.stride, 0),
            conv_output_len(w, self.size, self.stride, 0),
        ) else {
            return Err(Error::Shape {
                op: "maxpool2d",
                expected: format!("spatial size >= {}", self.size),
                actual: input.shape().to_vec(),
            });
        };
        let x = input.data();
        let mut out = Vec::with_capacity(c * ho * wo);
        let mut arg = Vec::with_capacity(c * ho * wo);
        for ch in 0..c {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_i = 0;
                    for dy in 0..self.size {
                        for dx in 0..self.size {
                            let i = ch * h * w + (oy * self.stride + dy) * w + ox * self.stride + dx;
                            if x[i] > best {
                                best = x[i];
                                best_i = i;
                            }
                        }
                    }
                    out.push(best);
                    arg.push(best_i);
                }
            }
        }
        Ok((Tensor::new(vec![c, ho, wo], out)?, arg))
    }
}

impl Module for MaxPool2d {
    fn forward(&mut self, input: &Tensor, _training: bool) -> Result<Tensor> {
        let (out, arg) = self.compute(input)?;
        self.cache = Some((input.shape().to_vec(), arg));
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let (shape, arg) = self.cache.take().ok_or_else(|| not_ready("maxpool2d"))?;
        if upstream.len() != arg.len() {
            return Err(Error::Shape {
                op: "maxpool2d backward",
                expected: format!("{} values", arg.len()),
                actual: upstream.shape().to_vec(),
            });
        }
        let mut gx = vec![0.0; shape.iter().product()];
        for (g, &i) in upstream.data().iter().zip(&arg) {
            gx[i] += g;
        }
        Tensor::new(shape, gx)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.compute(input)?.0)
    }

    fn name(&self) -> &'static str {
        "maxpool2d"
    }
}

/// Fully connected layer `y = W x + b`.
pub struct Dense {
    inputs: usize,
    units: usize,
    /// `[units, inputs]`
    pub weight: Tensor,
    /// `[units]`
    pub bias: Tensor,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, units: usize, seed: u64) -> Result<Self> {
        if inputs == 0 || units == 0 {
            return Err(Error::contract("dense dimensions must be positive"));
        }
        let mut rng = Rng::seed_from_u64(seed);
        let w = glorot_uniform(&mut rng, inputs, units, inputs * units);
        Ok(Dense {
            inputs,
            units,
            weight: Tensor::new(vec![units, inputs], w)?,
            bias: Tensor::zeros(&[units]),
            cache: None,
        })
    }

    pub fn units(&self) -> usize {
        self.units
    }

    fn compute(&self, input: &Tensor) -> Result<Tensor> {
        input.expect_shape("dense", &[self.inputs])?;
        let x = input.data();
        let out: Vec<f64> = self
            .weight
            .data()
            .chunks_exact(self.inputs)
            .zip(self.bias.data())
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        let t = Tensor::vector(out);
        t.ensure_finite("dense")?;
        Ok(t)
    }
}

impl Module for Dense {
    fn forward(&mut self, input: &Tensor, _training: bool) -> Result<Tensor> {
        let out = self.compute(input)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let input = self.cache.take().ok_or_else(|| not_ready("dense"))?;
        upstream.expect_shape("dense backward", &[self.units])?;
        let x = input.data();
        let g = upstream.data();
        let mut gx = vec![0.0; self.inputs];
        for (row, gj) in self.weight.data().chunks_exact(self.inputs).zip(g) {
            for (d, w) in gx.iter_mut().zip(row) {
                *d += w * gj;
            }
        }
        let inputs = self.inputs;
        for (grow, gj) in self.weight.grad_mut().chunks_exact_mut(inputs).zip(g) {
            for (d, v) in grow.iter_mut().zip(x) {
                *d += gj * v;
            }
        }
        for (d, gj) in self.bias.grad_mut().iter_mut().zip(g) {
            *d += gj;
        }
        Ok(Tensor::vector(gx))
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.compute(input)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn name(&self) -> &'static str {
        "dense"
    }
}

/// Inverted dropout: scaled at train time, exact identity at inference.
pub struct Dropout {
    rate: f64,
    rng: Rng,
    cache: Option<Option<Vec<f64>>>,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::contract(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Dropout {
            rate,
            rng: Rng::seed_from_u64(seed),
            cache: None,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Module for Dropout {
    fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor> {
        if !training || self.rate == 0.0 {
            self.cache = Some(None);
            return Ok(input.clone());
        }
        let keep = 1.0 - self.rate;
        let mask: Vec<f64> = (0..input.len())
            .map(|_| if self.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let out = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        self.cache = Some(Some(mask));
        Tensor::new(input.shape().to_vec(), out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        match self.cache.take().ok_or_else(|| not_ready("dropout"))? {
            None => Ok(upstream.clone()),
            Some(mask) => {
                if mask.len() != upstream.len() {
                    return Err(Error::Shape {
                        op: "dropout backward",
                        expected: format!("{} values", mask.len()),
                        actual: upstream.shape().to_vec(),
                    });
                }
                let g = upstream.data().iter().zip(&mask).map(|(g, m)| g * m).collect();
                Tensor::new(upstream.shape().to_vec(), g)
            }
        }
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        Ok(input.clone())
    }

    fn name(&self) -> &'static str {
        "dropout"
    }
}

pub struct ActivationLayer {
    function: Activation,
    cache: Option<(Tensor, Tensor)>,
}

impl ActivationLayer {
    pub fn new(function: Activation) -> Self {
        ActivationLayer { function, cache: None }
    }

    pub fn function(&self) -> Activation {
        self.function
    }

    fn compute(&self, input: &Tensor) -> Result<Tensor> {
        let out = input.data().iter().map(|&x| self.function.apply(x)).collect();
        let t = Tensor::new(input.shape().to_vec(), out)?;
        t.ensure_finite("activation")?;
        Ok(t)
    }
}

impl Module for ActivationLayer {
    fn forward(&mut self, input: &Tensor, _training: bool) -> Result<Tensor> {
        let out = self.compute(input)?;
        self.cache = Some((input.clone(), out.clone()));
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let (x, y) = self.cache.take().ok_or_else(|| not_ready("activation"))?;
        upstream.expect_shape("activation backward", x.shape())?;
        let g = upstream
            .data()
            .iter()
            .zip(x.data().iter().zip(y.data()))
            .map(|(g, (&x, &y))| g * self.function.derivative(x, y))
            .collect();
        Tensor::new(x.shape().to_vec(), g)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.compute(input)
    }

    fn name(&self) -> &'static str {
        "activation"
    }
}

#[derive(Default)]
pub struct Flatten {
    cache: Option<Vec<usize>>,
}

impl Module for Flatten {
    fn forward(&mut self, input: &Tensor, _training: bool) -> Result<Tensor> {
        self.cache = Some(input.shape().to_vec());
        self.infer(input)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let shape = self.cache.take().ok_or_else(|| not_ready("flatten"))?;
        upstream.clone().reshape(shape)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let n = input.len();
        input.clone().reshape(vec![n])
    }

    fn name(&self) -> &'static str {
        "flatten"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_grads_match, random_tensor};

    #[test]
    fn identity_kernel_conv() {
        let mut conv = Conv2d::new(1, 1, 1, 1, 0, 0).unwrap();
        conv.weight.data_mut()[0] = 1.0;
        let x = random_tensor(&[1, 5, 4], 3);
        assert_eq!(conv.infer(&x).unwrap(), x);
    }

    #[test]
    fn all_ones_kernel_on_constant_field() {
        let mut conv = Conv2d::new(1, 1, 3, 1, 1, 0).unwrap();
        conv.weight.data_mut().fill(1.0);
        let c = 2.5;
        let x = Tensor::new(vec![1, 6, 6], vec![c; 36]).unwrap();
        let y = conv.infer(&x).unwrap();
        for r in 1..5 {
            for col in 1..5 {
                assert_eq!(y.data()[r * 6 + col], 9.0 * c);
            }
        }
        // corners only see four in-bounds taps under zero padding
        assert_eq!(y.data()[0], 4.0 * c);
    }

    #[test]
    fn dense_hand_arithmetic() {
        let mut d = Dense::new(2, 2, 0).unwrap();
        d.weight.data_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        d.bias.data_mut().copy_from_slice(&[0.5, -0.5]);
        let y = d.infer(&Tensor::vector(vec![1.0, 2.0])).unwrap();
        assert_eq!(y.data(), &[1.5, 1.5]);
    }

    #[test]
    fn shape_mismatch_names_shapes() {
        let d = Dense::new(3, 2, 0).unwrap();
        let err = d.infer(&Tensor::vector(vec![1.0, 2.0])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[3]") && msg.contains("[2]"), "{msg}");
        let conv = Conv2d::new(3, 2, 3, 1, 1, 0).unwrap();
        assert!(matches!(
            conv.infer(&Tensor::zeros(&[1, 4, 4])),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn backward_before_forward_is_state_error() {
        let mut d = Dense::new(2, 2, 0).unwrap();
        assert!(matches!(
            d.backward(&Tensor::vector(vec![1.0, 1.0])),
            Err(Error::State(_))
        ));
        let mut r = ActivationLayer::new(Activation::Relu);
        assert!(matches!(r.backward(&Tensor::vector(vec![1.0])), Err(Error::State(_))));
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        let mut r = ActivationLayer::new(Activation::Relu);
        r.forward(&Tensor::vector(vec![-1.0]), true).unwrap();
        let g = r.backward(&Tensor::vector(vec![123.0])).unwrap();
        assert_eq!(g.data(), &[0.0]);
    }

    #[test]
    fn dropout_inference_is_exact_identity() {
        let mut d = Dropout::new(0.5, 9).unwrap();
        let x = random_tensor(&[2, 3, 3], 1);
        let y = d.forward(&x, false).unwrap();
        assert_eq!(y.data(), x.data());
        let up = random_tensor(&[2, 3, 3], 2);
        assert_eq!(d.backward(&up).unwrap().data(), up.data());
        assert!(Dropout::new(1.0, 0).is_err());
    }

    #[test]
    fn dropout_masks_are_seeded() {
        let x = Tensor::vector(vec![1.0; 64]);
        let a = Dropout::new(0.3, 5).unwrap().forward(&x, true).unwrap();
        let b = Dropout::new(0.3, 5).unwrap().forward(&x, true).unwrap();
        assert_eq!(a, b);
        assert!(a.data().contains(&0.0));
    }

    #[test]
    fn conv_shape_formula() {
        for (h, k, s, p) in [(7, 3, 2, 1), (8, 3, 1, 1), (5, 5, 1, 0), (9, 2, 3, 2)] {
            let mut conv = Conv2d::new(1, 2, k, s, p, 0).unwrap();
            let y = conv.forward(&random_tensor(&[1, h, h + 1], 0), false).unwrap();
            let expect_h = (h + 2 * p - k) / s + 1;
            let expect_w = (h + 1 + 2 * p - k) / s + 1;
            assert_eq!(y.shape(), &[2, expect_h, expect_w]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let layers: Vec<(Box<dyn Module>, Vec<usize>)> = vec![
            (Box::new(Conv2d::new(2, 3, 3, 1, 1, 1).unwrap()), vec![2, 5, 4]),
            (Box::new(Conv2d::new(1, 2, 3, 2, 1, 2).unwrap()), vec![1, 7, 6]),
            (Box::new(MaxPool2d::new(2, 2).unwrap()), vec![2, 4, 6]),
            (Box::new(Dense::new(5, 3, 3).unwrap()), vec![5]),
            (Box::new(ActivationLayer::new(Activation::Tanh)), vec![6]),
            (Box::new(ActivationLayer::new(Activation::Sigmoid)), vec![6]),
            (Box::new(ActivationLayer::new(Activation::Linear)), vec![6]),
            (Box::new(Flatten::default()), vec![2, 2, 3]),
        ];
        for (mut layer, shape) in layers {
            assert_grads_match(layer.as_mut(), &shape, 11);
        }
    }
}
