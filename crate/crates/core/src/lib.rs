//! Conditioned generative adversarial networks on a small reverse-mode
//! autodiff core.
//!
//! Four ways of conditioning a GAN on a label vector `c` are provided:
//! concatenation at the discriminator input (CGAN), concatenation at every
//! discriminator layer (FCGAN), spatial bilinear pooling of the image with
//! `c` (SBP), and an unconditional discriminator plus a frozen classifier
//! `Q(c|x)` whose log-likelihood regularizes the generator (IRGAN). Models
//! are evaluated per condition with a Gaussian Parzen-window estimator.

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod conditioning;
pub mod data;
pub mod error;
pub mod graph;
pub mod kvconfig;
pub mod models;
pub mod parzen;
pub mod report;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::Tensor;
