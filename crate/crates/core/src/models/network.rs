//! VGG-style backbones, dense heads and the spatial network that combines
//! them.

use serde::{Deserialize, Serialize};

use super::bilinear::BilinearFeatures;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::tensor::{
    Activation, ActivationLayer, Conv2d, Dense, Dropout, Flatten, MaxPool2d, Module, Sequential, Tensor,
};

/// Convolution blocks: each block is `convs` 3x3 same-padded conv+relu
/// layers of `width` channels followed by a 2x2 max-pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VggConfig {
    pub blocks: Vec<VggBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VggBlock {
    pub convs: usize,
    pub width: usize,
}

impl VggConfig {
    /// The 13-conv, 5-pool topology (64-128-256-512-512).
    pub fn vgg16() -> Self {
        let b = |convs, width| VggBlock { convs, width };
        VggConfig {
            blocks: vec![b(2, 64), b(2, 128), b(3, 256), b(3, 512), b(3, 512)],
        }
    }

    /// Four convs in two pooled blocks with doubling widths.
    pub fn miniature(base_width: usize) -> Self {
        VggConfig {
            blocks: vec![
                VggBlock {
                    convs: 2,
                    width: base_width,
                },
                VggBlock {
                    convs: 2,
                    width: 2 * base_width,
                },
            ],
        }
    }

    pub fn conv_count(&self) -> usize {
        self.blocks.iter().map(|b| b.convs).sum()
    }

    /// `(channels, side)` of the final feature map for a square input,
    /// optionally skipping the last pool.
    pub fn output_dims(&self, input_size: usize, last_pool: bool) -> Result<(usize, usize)> {
        let mut side = input_size;
        for (i, _) in self.blocks.iter().enumerate() {
            if i + 1 < self.blocks.len() || last_pool {
                side /= 2;
            }
        }
        if side == 0 || self.blocks.is_empty() {
            return Err(Error::contract(format!(
                "input size {input_size} is too small for {} pooling blocks",
                self.blocks.len()
            )));
        }
        Ok((self.blocks.last().expect("non-empty").width, side))
    }
}

/// Conv stack; `last_pool = false` leaves the final block unpooled (the
/// bilinear streams read the last conv activations directly).
pub fn build_vgg_backbone(cfg: &VggConfig, in_channels: usize, last_pool: bool, seed: u64) -> Result<Sequential> {
    let mut net = Sequential::new();
    let mut c = in_channels;
    let mut k = 0;
    for (bi, block) in cfg.blocks.iter().enumerate() {
        for _ in 0..block.convs {
            net.push(Conv2d::new(c, block.width, 3, 1, 1, derive_seed(seed, "vgg-conv", k))?);
            net.push(ActivationLayer::new(Activation::Relu));
            c = block.width;
            k += 1;
        }
        if bi + 1 < cfg.blocks.len() || last_pool {
            net.push(MaxPool2d::new(2, 2)?);
        }
    }
    Ok(net)
}

fn dense_stack(
    net: &mut Sequential,
    inputs: usize,
    units: usize,
    layers: usize,
    dropout: f64,
    seed: u64,
) -> Result<()> {
    let mut d = inputs;
    for i in 0..layers {
        net.push(Dense::new(d, units, derive_seed(seed, "head-dense", i as u64))?);
        net.push(ActivationLayer::new(Activation::Relu));
        net.push(Dropout::new(dropout, derive_seed(seed, "head-dropout", i as u64))?);
        d = units;
    }
    Ok(())
}

/// Dense(512, relu) -> Dropout(0.5) -> Dense(512, relu) -> Dropout(0.5)
/// -> Dense(1, linear).
pub fn build_vgg_head(feature_dim: usize, seed: u64) -> Result<Sequential> {
    build_dense_head(feature_dim, 512, seed)
}

/// Two FC(64, relu) + Dropout(0.5) layers and a linear unit.
pub fn build_bilinear_classifier(feature_dim: usize, seed: u64) -> Result<Sequential> {
    build_dense_head(feature_dim, 64, seed)
}

/// Two `units`-wide relu layers with dropout 0.5, then one linear unit.
pub fn build_dense_head(feature_dim: usize, units: usize, seed: u64) -> Result<Sequential> {
    if feature_dim == 0 {
        return Err(Error::contract("feature_dim must be positive"));
    }
    let mut net = Sequential::new();
    dense_stack(&mut net, feature_dim, units, 2, 0.5, seed)?;
    net.push(Dense::new(units, 1, derive_seed(seed, "head-out", 0))?);
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Backbone, flatten, dense head.
    Vgg,
    /// Bilinear pooling over two backbone streams; `shared` uses one
    /// stream for both sides.
    Bilinear { shared: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Linear,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialConfig {
    pub architecture: Architecture,
    pub backbone: VggConfig,
    pub in_channels: usize,
    /// Square input side in pixels.
    pub input_size: usize,
    /// Width of the dense head layers (512 for the VGG head, 64 for the
    /// bilinear classifier in the reference configuration).
    pub head_units: usize,
    pub output: OutputKind,
}

/// A spatial network split at the tap point: `trunk` ends at the
/// penultimate activations, `output` is the final unit (plus sigmoid).
pub struct SpatialNet {
    pub config: SpatialConfig,
    pub trunk: Sequential,
    pub output: Sequential,
}

impl SpatialNet {
    pub fn build(config: &SpatialConfig, seed: u64) -> Result<Self> {
        let mut trunk = Sequential::new();
        let feature_dim = match config.architecture {
            Architecture::Vgg => {
                let (c, side) = config.backbone.output_dims(config.input_size, true)?;
                trunk.push(build_vgg_backbone(
                    &config.backbone,
                    config.in_channels,
                    true,
                    derive_seed(seed, "stream", 0),
                )?);
                trunk.push(Flatten::default());
                c * side * side
            }
            Architecture::Bilinear { shared } => {
                let (c, _) = config.backbone.output_dims(config.input_size, false)?;
                let sx = build_vgg_backbone(
                    &config.backbone,
                    config.in_channels,
                    false,
                    derive_seed(seed, "stream", 0),
                )?;
                let sy = if shared {
                    None
                } else {
                    Some(build_vgg_backbone(
                        &config.backbone,
                        config.in_channels,
                        false,
                        derive_seed(seed, "stream", 1),
                    )?)
                };
                trunk.push(BilinearFeatures::new(sx, sy));
                c * c
            }
        };
        dense_stack(&mut trunk, feature_dim, config.head_units, 2, 0.5, seed)?;
        let mut output = Sequential::new().with(Dense::new(config.head_units, 1, derive_seed(seed, "head-out", 0))?);
        if config.output == OutputKind::Sigmoid {
            output.push(ActivationLayer::new(Activation::Sigmoid));
        }
        Ok(SpatialNet {
            config: config.clone(),
            trunk,
            output,
        })
    }

    /// Penultimate activations in inference mode.
    pub fn features(&self, input: &Tensor) -> Result<Tensor> {
        self.trunk.infer(input)
    }

    pub fn feature_dim(&self) -> usize {
        self.config.head_units
    }
}

impl Module for SpatialNet {
    fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor> {
        let f = self.trunk.forward(input, training)?;
        self.output.forward(&f, training)
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let g = self.output.backward(upstream)?;
        self.trunk.backward(&g)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.output.infer(&self.trunk.infer(input)?)
    }

    fn params(&self) -> Vec<&Tensor> {
        let mut p = self.trunk.params();
        p.extend(self.output.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.trunk.params_mut();
        p.extend(self.output.params_mut());
        p
    }

    fn name(&self) -> &'static str {
        "spatial_net"
    }
}
