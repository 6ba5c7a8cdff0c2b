//! LSTM cell and the two-layer recurrent classification head.

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};
use crate::tensor::{glorot_uniform, Activation, ActivationLayer, Dense, Dropout, Module, Sequential, Tensor};

/// Hyperparameters of one LSTM layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmSpec {
    pub input_size: usize,
    pub units: usize,
    /// Gate nonlinearity (input, forget, output).
    pub gate_activation: Activation,
    /// Candidate and output nonlinearity.
    pub cell_activation: Activation,
    /// Dropout on the input connections, applied per step while training.
    pub dropout: f64,
    /// Emit `[steps, units]` instead of the final hidden state.
    pub return_sequences: bool,
    pub seed: u64,
}

impl LstmSpec {
    pub fn new(input_size: usize, units: usize, seed: u64) -> Self {
        LstmSpec {
            input_size,
            units,
            gate_activation: Activation::HardSigmoid,
            cell_activation: Activation::Tanh,
            dropout: 0.0,
            return_sequences: false,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.units == 0 || self.input_size == 0 {
            return Err(Error::contract("lstm sizes must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::contract(format!("lstm dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(units: usize) -> Self {
        LstmState {
            h: vec![0.0; units],
            c: vec![0.0; units],
        }
    }
}

/// Everything backprop-through-time needs from one step.
struct StepCache {
    x: Vec<f64>,
    mask: Option<Vec<f64>>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Pre-activations, gate order i, f, g, o.
    z: Vec<f64>,
    /// Activated gates, same order.
    a: Vec<f64>,
    c: Vec<f64>,
    c_act: Vec<f64>,
}

/// One recurrent layer. Gate blocks are stacked in the order input,
/// forget, candidate, output along the first weight dimension.
pub struct Lstm {
    spec: LstmSpec,
    /// `[4 * units, input_size]`
    pub kernel: Tensor,
    /// `[4 * units, units]`
    pub recurrent: Tensor,
    /// `[4 * units]`
    pub bias: Tensor,
    rng: Rng,
    cache: Option<(Vec<StepCache>, usize)>,
}

impl Lstm {
    pub fn new(spec: LstmSpec) -> Result<Self> {
        spec.validate()?;
        let (d, u) = (spec.input_size, spec.units);
        let mut rng = Rng::seed_from_u64(spec.seed);
        let kernel = glorot_uniform(&mut rng, d, 4 * u, 4 * u * d);
        let recurrent = glorot_uniform(&mut rng, u, 4 * u, 4 * u * u);
        let mut bias = vec![0.0; 4 * u];
        // unit forget bias
        bias[u..2 * u].fill(1.0);
        Ok(Lstm {
            kernel: Tensor::new(vec![4 * u, d], kernel)?,
            recurrent: Tensor::new(vec![4 * u, u], recurrent)?,
            bias: Tensor::new(vec![4 * u], bias)?,
            rng: Rng::seed_from_u64(derive_seed(spec.seed, "lstm-dropout", 0)),
            spec,
            cache: None,
        })
    }

    pub fn spec(&self) -> &LstmSpec {
        &self.spec
    }

    fn gates(&self, x: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (d, u) = (self.spec.input_size, self.spec.units);
        let w = self.kernel.data();
        let r = self.recurrent.data();
        let mut z = self.bias.data().to_vec();
        for (row, zr) in z.iter_mut().enumerate() {
            let wx: f64 = w[row * d..(row + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
            let rh: f64 = r[row * u..(row + 1) * u].iter().zip(h).map(|(a, b)| a * b).sum();
            *zr += wx + rh;
        }
        let a = z
            .iter()
            .enumerate()
            .map(|(row, &v)| {
                if row / u == 2 {
                    self.spec.cell_activation.apply(v)
                } else {
                    self.spec.gate_activation.apply(v)
                }
            })
            .collect();
        (z, a)
    }

    fn advance(&self, x: &[f64], state: &LstmState) -> (LstmState, Vec<f64>, Vec<f64>, Vec<f64>) {
        let u = self.spec.units;
        let (z, a) = self.gates(x, &state.h);
        let c: Vec<f64> = (0..u).map(|j| a[u + j] * state.c[j] + a[j] * a[2 * u + j]).collect();
        let c_act: Vec<f64> = c.iter().map(|&v| self.spec.cell_activation.apply(v)).collect();
        let h = (0..u).map(|j| a[3 * u + j] * c_act[j]).collect();
        (LstmState { h, c: c.clone() }, z, a, c_act)
    }

    /// One recurrent step without dropout.
    pub fn step(&self, x: &[f64], state: &LstmState) -> Result<LstmState> {
        if x.len() != self.spec.input_size {
            return Err(Error::Shape {
                op: "lstm_step",
                expected: format!("[{}]", self.spec.input_size),
                actual: vec![x.len()],
            });
        }
        if state.h.len() != self.spec.units || state.c.len() != self.spec.units {
            return Err(Error::contract("lstm state size does not match units"));
        }
        Ok(self.advance(x, state).0)
    }

    fn sequence_dims(&self, input: &Tensor) -> Result<usize> {
        match *input.shape() {
            [t, d] if d == self.spec.input_size => Ok(t),
            _ => Err(Error::Shape {
                op: "lstm",
                expected: format!("[steps, {}]", self.spec.input_size),
                actual: input.shape().to_vec(),
            }),
        }
    }

    fn emit(&self, hs: Vec<Vec<f64>>) -> Result<Tensor> {
        let t = hs.len();
        let u = self.spec.units;
        let out = if self.spec.return_sequences {
            Tensor::new(vec![t, u], hs.into_iter().flatten().collect())?
        } else {
            Tensor::vector(hs.into_iter().last().unwrap_or_else(|| vec![0.0; u]))
        };
        out.ensure_finite("lstm")?;
        Ok(out)
    }
}

impl Module for Lstm {
    fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor> {
        let steps = self.sequence_dims(input)?;
        let d = self.spec.input_size;
        let mut state = LstmState::zeros(self.spec.units);
        let mut caches = Vec::with_capacity(steps);
        let mut hs = Vec::with_capacity(steps);
        for t in 0..steps {
            let raw = &input.data()[t * d..(t + 1) * d];
            let (x, mask) = if training && self.spec.dropout > 0.0 {
                let keep = 1.0 - self.spec.dropout;
                let mask: Vec<f64> = (0..d)
                    .map(|_| if self.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                (raw.iter().zip(&mask).map(|(a, m)| a * m).collect(), Some(mask))
            } else {
                (raw.to_vec(), None)
            };
            let (next, z, a, c_act) = self.advance(&x, &state);
            caches.push(StepCache {
                x,
                mask,
                h_prev: state.h,
                c_prev: state.c,
                z,
                a,
                c: next.c.clone(),
                c_act,
            });
            hs.push(next.h.clone());
            state = next;
        }
        self.cache = Some((caches, steps));
        self.emit(hs)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let (caches, steps) = self
            .cache
            .take()
            .ok_or_else(|| Error::State("lstm: backward called before forward".into()))?;
        let (d, u) = (self.spec.input_size, self.spec.units);
        let expected: Vec<usize> = if self.spec.return_sequences {
            vec![steps, u]
        } else {
            vec![u]
        };
        upstream.expect_shape("lstm backward", &expected)?;
        let w = self.kernel.data().to_vec();
        let r = self.recurrent.data().to_vec();
        let mut gw = vec![0.0; w.len()];
        let mut gr = vec![0.0; r.len()];
        let mut gb = vec![0.0; 4 * u];
        let mut gx = vec![0.0; steps * d];
        let mut dh_next = vec![0.0; u];
        let mut dc_next = vec![0.0; u];
        let (gate, cell) = (self.spec.gate_activation, self.spec.cell_activation);
        for t in (0..steps).rev() {
            let sc = &caches[t];
            let mut dh = dh_next.clone();
            if self.spec.return_sequences {
                for (a, b) in dh.iter_mut().zip(&upstream.data()[t * u..(t + 1) * u]) {
                    *a += b;
                }
            } else if t + 1 == steps {
                for (a, b) in dh.iter_mut().zip(upstream.data()) {
                    *a += b;
                }
            }
            let mut dz = vec![0.0; 4 * u];
            for j in 0..u {
                let (i_g, f_g, g_g, o_g) = (sc.a[j], sc.a[u + j], sc.a[2 * u + j], sc.a[3 * u + j]);
                let d_o = dh[j] * sc.c_act[j];
                let dc = dh[j] * o_g * cell.derivative(sc.c[j], sc.c_act[j]) + dc_next[j];
                let d_i = dc * g_g;
                let d_g = dc * i_g;
                let d_f = dc * sc.c_prev[j];
                dc_next[j] = dc * f_g;
                dz[j] = d_i * gate.derivative(sc.z[j], i_g);
                dz[u + j] = d_f * gate.derivative(sc.z[u + j], f_g);
                dz[2 * u + j] = d_g * cell.derivative(sc.z[2 * u + j], g_g);
                dz[3 * u + j] = d_o * gate.derivative(sc.z[3 * u + j], o_g);
            }
            dh_next.fill(0.0);
            let gxt = &mut gx[t * d..(t + 1) * d];
            for (row, &dzr) in dz.iter().enumerate() {
                gb[row] += dzr;
                if dzr == 0.0 {
                    continue;
                }
                let wrow = &w[row * d..(row + 1) * d];
                let gwrow = &mut gw[row * d..(row + 1) * d];
                for k in 0..d {
                    gwrow[k] += dzr * sc.x[k];
                    gxt[k] += dzr * wrow[k];
                }
                let rrow = &r[row * u..(row + 1) * u];
                let grrow = &mut gr[row * u..(row + 1) * u];
                for k in 0..u {
                    grrow[k] += dzr * sc.h_prev[k];
                    dh_next[k] += dzr * rrow[k];
                }
            }
            if let Some(mask) = &sc.mask {
                for (g, m) in gxt.iter_mut().zip(mask) {
                    *g *= m;
                }
            }
        }
        for (a, b) in self.kernel.grad_mut().iter_mut().zip(&gw) {
            *a += b;
        }
        for (a, b) in self.recurrent.grad_mut().iter_mut().zip(&gr) {
            *a += b;
        }
        for (a, b) in self.bias.grad_mut().iter_mut().zip(&gb) {
            *a += b;
        }
        Tensor::new(vec![steps, d], gx)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let steps = self.sequence_dims(input)?;
        let d = self.spec.input_size;
        let mut state = LstmState::zeros(self.spec.units);
        let mut hs = Vec::with_capacity(steps);
        for t in 0..steps {
            state = self.advance(&input.data()[t * d..(t + 1) * d], &state).0;
            hs.push(state.h.clone());
        }
        self.emit(hs)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.kernel, &self.recurrent, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.kernel, &mut self.recurrent, &mut self.bias]
    }

    fn name(&self) -> &'static str {
        "lstm"
    }
}

/// Advances `cell` by one step on input `x`.
pub fn lstm_step(cell: &Lstm, x: &Tensor, state: &LstmState) -> Result<LstmState> {
    cell.step(x.data(), state)
}

/// Widths of the recurrent head; [`TemporalHeadSpec::default`] is the
/// reference configuration (16-unit LSTMs, 16-unit dense layers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemporalHeadSpec {
    pub lstm_units: usize,
    pub lstm_dropout: f64,
    pub dense_units: usize,
    pub dense_dropout: f64,
}

impl Default for TemporalHeadSpec {
    fn default() -> Self {
        TemporalHeadSpec {
            lstm_units: 16,
            lstm_dropout: 0.2,
            dense_units: 16,
            dense_dropout: 0.3,
        }
    }
}

/// LSTM(16, seq) -> LSTM(16) -> Dense(16, relu) -> Dropout(0.3)
/// -> Dense(16, relu) -> Dropout(0.3) -> Dense(1, sigmoid).
pub fn build_temporal_head(feature_dim: usize, seed: u64) -> Result<Sequential> {
    build_temporal_head_with(feature_dim, &TemporalHeadSpec::default(), seed)
}

pub fn build_temporal_head_with(feature_dim: usize, spec: &TemporalHeadSpec, seed: u64) -> Result<Sequential> {
    if feature_dim == 0 {
        return Err(Error::contract("feature_dim must be positive"));
    }
    let s = |i| derive_seed(seed, "temporal-head", i);
    let u = spec.lstm_units;
    let first = LstmSpec {
        dropout: spec.lstm_dropout,
        return_sequences: true,
        ..LstmSpec::new(feature_dim, u, s(0))
    };
    let second = LstmSpec {
        dropout: spec.lstm_dropout,
        ..LstmSpec::new(u, u, s(1))
    };
    let k = spec.dense_units;
    Ok(Sequential::new()
        .with(Lstm::new(first)?)
        .with(Lstm::new(second)?)
        .with(Dense::new(u, k, s(2))?)
        .with(ActivationLayer::new(Activation::Relu))
        .with(Dropout::new(spec.dense_dropout, s(3))?)
        .with(Dense::new(k, k, s(4))?)
        .with(ActivationLayer::new(Activation::Relu))
        .with(Dropout::new(spec.dense_dropout, s(5))?)
        .with(Dense::new(k, 1, s(6))?)
        .with(ActivationLayer::new(Activation::Sigmoid)))
}
