//! Compiles the guide's code blocks as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/tensors.md")]
pub mod tensors {}
#[doc = include_str!("../../../book/src/bilinear.md")]
pub mod bilinear {}
#[doc = include_str!("../../../book/src/temporal.md")]
pub mod temporal {}
#[doc = include_str!("../../../book/src/audio.md")]
pub mod audio {}
#[doc = include_str!("../../../book/src/video.md")]
pub mod video {}
#[doc = include_str!("../../../book/src/scales.md")]
pub mod scales {}
#[doc = include_str!("../../../book/src/shallow.md")]
pub mod shallow {}
#[doc = include_str!("../../../book/src/fusion.md")]
pub mod fusion {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
