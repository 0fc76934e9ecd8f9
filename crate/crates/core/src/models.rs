//! Generator, discriminators and the condition approximator.
//!
//! All networks are dense: images are flattened after the conditioning op.
//! Every network is a stack of `fc{i}` layers, each holding a
//! `[fan_in, fan_out]` weight and a `[fan_out]` bias.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::activation::Activation;
use crate::adam::{adam_step, AdamHyper, AdamState};
use crate::conditioning::{bilinear_pool, replicate_concat, ConditionVector, SpatialTensor};
use crate::error::{Error, Result};
use crate::graph::{softmax_rows, Gradients, Graph, Var};
use crate::rng::RngStream;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Cgan,
    Fcgan,
    Sbp,
    Irgan,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Cgan, Variant::Fcgan, Variant::Sbp, Variant::Irgan];

    /// Whether the discriminator sees `c`. IRGAN's does not.
    pub fn conditional_discriminator(self) -> bool {
        self != Variant::Irgan
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Cgan => "cgan",
            Variant::Fcgan => "fcgan",
            Variant::Sbp => "sbp",
            Variant::Irgan => "irgan",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cgan" => Ok(Variant::Cgan),
            "fcgan" => Ok(Variant::Fcgan),
            "sbp" => Ok(Variant::Sbp),
            "irgan" => Ok(Variant::Irgan),
            other => Err(Error::Config(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    SigmoidScalar,
    Softmax,
    Tanh,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub head: OutputHead,
}

impl NetworkSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation, head: OutputHead) -> Result<Self> {
        let activations = vec![activation; layer_widths.len()];
        let spec = NetworkSpec {
            layer_widths,
            activations,
            head,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.is_empty() {
            return Err(Error::Config("network needs at least one hidden layer".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::Config(format!("zero layer width in {:?}", self.layer_widths)));
        }
        if self.activations.len() != self.layer_widths.len() {
            return Err(Error::Config(format!(
                "{} hidden layers but {} activations",
                self.layer_widths.len(),
                self.activations.len()
            )));
        }
        Ok(())
    }
}

fn image_len(shape: &[usize; 3]) -> usize {
    shape.iter().product()
}

/// Generator `G(z, c)`: `[z, c]` through the hidden stack, tanh output
/// reshaped to the image shape. Identical for every variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorArch {
    pub noise_dim: usize,
    pub cond_dim: usize,
    pub image_shape: [usize; 3],
    pub spec: NetworkSpec,
}

/// Discriminator `D(x, c)` (or `D(x)` for IRGAN) with a sigmoid output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorArch {
    pub variant: Variant,
    pub cond_dim: usize,
    pub image_shape: [usize; 3],
    pub spec: NetworkSpec,
}

/// Approximator `Q(c | x)`: flattened image to `m` logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximatorArch {
    pub cond_dim: usize,
    pub image_shape: [usize; 3],
    pub spec: NetworkSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Generator(GeneratorArch),
    Discriminator(DiscriminatorArch),
    Approximator(ApproximatorArch),
}

impl Architecture {
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        match self {
            Architecture::Generator(a) => a.layer_dims(),
            Architecture::Discriminator(a) => a.layer_dims(),
            Architecture::Approximator(a) => a.layer_dims(),
        }
    }

    pub fn cond_dim(&self) -> usize {
        match self {
            Architecture::Generator(a) => a.cond_dim,
            Architecture::Discriminator(a) => a.cond_dim,
            Architecture::Approximator(a) => a.cond_dim,
        }
    }

    pub fn image_shape(&self) -> [usize; 3] {
        match self {
            Architecture::Generator(a) => a.image_shape,
            Architecture::Discriminator(a) => a.image_shape,
            Architecture::Approximator(a) => a.image_shape,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Architecture::Generator(_) => "generator",
            Architecture::Discriminator(_) => "discriminator",
            Architecture::Approximator(_) => "approximator",
        }
    }
}

fn chain_dims(input: usize, widths: &[usize], output: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(widths.len() + 1);
    let mut fan_in = input;
    for (i, &w) in widths.iter().enumerate() {
        dims.push((fan_in, w));
        fan_in = if i + 1 < widths.len() { w + extra } else { w };
    }
    dims.push((fan_in, output));
    dims
}

impl GeneratorArch {
    pub fn new(noise_dim: usize, cond_dim: usize, image_shape: [usize; 3], spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        if noise_dim == 0 || cond_dim == 0 || image_shape.contains(&0) {
            return Err(Error::Config("generator dimensions must be positive".into()));
        }
        Ok(GeneratorArch {
            noise_dim,
            cond_dim,
            image_shape,
            spec,
        })
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        chain_dims(
            self.noise_dim + self.cond_dim,
            &self.spec.layer_widths,
            image_len(&self.image_shape),
            0,
        )
    }

    /// `z: [b, k]`, `c: [b, m]` to images `[b, h, w, d]`.
    pub fn forward(&self, g: &mut Graph, p: &BoundParams, z: Var, c: Var) -> Result<Var> {
        let b = g.value(z).shape()[0];
        expect_shape(g, z, &[b, self.noise_dim], "generator noise")?;
        expect_shape(g, c, &[b, self.cond_dim], "generator condition")?;
        let input = g.concat(z, c)?;
        let out = mlp(g, p, input, &self.spec, None)?;
        let out = g.activation(out, Activation::Tanh)?;
        let [h, w, d] = self.image_shape;
        g.reshape(out, &[b, h, w, d])
    }

    /// Batched generation outside of any training graph.
    pub fn generate(&self, params: &ModelParams, z: &Tensor, c: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let p = params.bind(&mut g, false);
        let zv = g.constant(z.clone());
        let cv = g.constant(c.clone());
        let out = self.forward(&mut g, &p, zv, cv)?;
        Ok(g.value(out).clone())
    }

    /// Uniform noise on `[-1, 1)^k` for `count` samples.
    pub fn sample_noise(&self, count: usize, rng: &mut RngStream) -> Tensor {
        let data = (0..count * self.noise_dim)
            .map(|_| rng.uniform_range(-1.0, 1.0))
            .collect();
        Tensor::from_raw(vec![count, self.noise_dim], data)
    }
}

impl DiscriminatorArch {
    pub fn new(variant: Variant, cond_dim: usize, image_shape: [usize; 3], spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        if cond_dim == 0 || image_shape.contains(&0) {
            return Err(Error::Config("discriminator dimensions must be positive".into()));
        }
        Ok(DiscriminatorArch {
            variant,
            cond_dim,
            image_shape,
            spec,
        })
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let [h, w, d] = self.image_shape;
        let m = self.cond_dim;
        let widths = &self.spec.layer_widths;
        match self.variant {
            Variant::Cgan => chain_dims(h * w * (d + m), widths, 1, 0),
            Variant::Fcgan => chain_dims(h * w * (d + m), widths, 1, m),
            Variant::Sbp => chain_dims(h * w * d * m, widths, 1, 0),
            Variant::Irgan => chain_dims(h * w * d, widths, 1, 0),
        }
    }

    /// `x: [b, h, w, d]`, `c: [b, m]` to probabilities `[b, 1]`.
    pub fn forward(&self, g: &mut Graph, p: &BoundParams, x: Var, c: Var) -> Result<Var> {
        let b = g.value(x).shape()[0];
        let [h, w, d] = self.image_shape;
        expect_shape(g, x, &[b, h, w, d], "discriminator input")?;
        expect_shape(g, c, &[b, self.cond_dim], "discriminator condition")?;
        let features = match self.variant {
            Variant::Cgan | Variant::Fcgan => replicate_concat(g, x, c)?,
            Variant::Sbp => bilinear_pool(g, x, c)?,
            Variant::Irgan => x,
        };
        let flat = g.flatten(features)?;
        let fc_cond = (self.variant == Variant::Fcgan).then_some(c);
        let logit = mlp(g, p, flat, &self.spec, fc_cond)?;
        g.activation(logit, Activation::Sigmoid)
    }

    pub fn probabilities(&self, params: &ModelParams, x: &Tensor, c: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let p = params.bind(&mut g, false);
        let xv = g.constant(x.clone());
        let cv = g.constant(c.clone());
        let out = self.forward(&mut g, &p, xv, cv)?;
        Ok(g.value(out).clone())
    }
}

impl ApproximatorArch {
    pub fn new(cond_dim: usize, image_shape: [usize; 3], spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        if cond_dim == 0 || image_shape.contains(&0) {
            return Err(Error::Config("approximator dimensions must be positive".into()));
        }
        Ok(ApproximatorArch {
            cond_dim,
            image_shape,
            spec,
        })
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        chain_dims(image_len(&self.image_shape), &self.spec.layer_widths, self.cond_dim, 0)
    }

    /// Logits `[b, m]`; softmax is applied by the caller or the loss.
    pub fn logits(&self, g: &mut Graph, p: &BoundParams, x: Var) -> Result<Var> {
        let b = g.value(x).shape()[0];
        let [h, w, d] = self.image_shape;
        expect_shape(g, x, &[b, h, w, d], "approximator input")?;
        let flat = g.flatten(x)?;
        mlp(g, p, flat, &self.spec, None)
    }

    /// `Q(c | x)` rows for a batch of images.
    pub fn probabilities(&self, params: &ModelParams, x: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let p = params.bind(&mut g, false);
        let xv = g.constant(x.clone());
        let logits = self.logits(&mut g, &p, xv)?;
        Ok(softmax_rows(g.value(logits)))
    }
}

fn expect_shape(g: &Graph, v: Var, shape: &[usize], what: &'static str) -> Result<()> {
    if g.value(v).shape() == shape {
        Ok(())
    } else {
        Err(Error::dim(what, shape, g.value(v).shape()))
    }
}

/// Hidden stack plus a linear output layer. With `fc_cond`, `c` is appended
/// to the input of every layer after the first (the first layer's input
/// already carries it).
fn mlp(g: &mut Graph, p: &BoundParams, input: Var, spec: &NetworkSpec, fc_cond: Option<Var>) -> Result<Var> {
    let mut h = input;
    let hidden = spec.activations.len();
    for (layer, &act) in spec.activations.iter().enumerate() {
        h = dense(g, p, layer, h)?;
        h = g.activation(h, act)?;
        // FCGAN feeds c to every hidden layer; the output logit sees only h
        if let Some(c) = fc_cond.filter(|_| layer + 1 < hidden) {
            let (b, width) = (g.value(h).shape()[0], g.value(h).shape()[1]);
            let spatial = g.reshape(h, &[b, 1, 1, width])?;
            let joined = replicate_concat(g, spatial, c)?;
            h = g.flatten(joined)?;
        }
    }
    dense(g, p, spec.layer_widths.len(), h)
}

fn dense(g: &mut Graph, p: &BoundParams, layer: usize, x: Var) -> Result<Var> {
    let (w, b) = p.layer(layer)?;
    let xw = g.matmul(x, w)?;
    g.add_bias(xw, b)
}

/// One named parameter with its optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub value: Tensor,
    pub adam: AdamState,
}

/// Ordered parameters of one network: `fc0.weight, fc0.bias, fc1.weight, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    entries: Vec<ParamEntry>,
}

impl ModelParams {
    /// Fan-in scaled uniform weights `U(-1/√fan_in, 1/√fan_in)`, zero biases.
    pub fn init(dims: &[(usize, usize)], hyper: AdamHyper, rng: &mut RngStream) -> Result<Self> {
        let mut entries = Vec::with_capacity(2 * dims.len());
        for (i, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.uniform_range(-bound, bound))
                .collect();
            let weight = Tensor::new(vec![fan_in, fan_out], w)?;
            let bias = Tensor::zeros(&[fan_out]);
            entries.push(ParamEntry {
                name: format!("fc{i}.weight"),
                adam: AdamState::new(weight.shape(), hyper)?,
                value: weight,
            });
            entries.push(ParamEntry {
                name: format!("fc{i}.bias"),
                adam: AdamState::new(bias.shape(), hyper)?,
                value: bias,
            });
        }
        Ok(ModelParams { entries })
    }

    pub fn from_entries(entries: Vec<ParamEntry>) -> Self {
        ModelParams { entries }
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|e| e.name == name).map(|e| &mut e.value)
    }

    pub fn num_params(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn shapes(&self) -> Vec<Vec<usize>> {
        self.entries.iter().map(|e| e.value.shape().to_vec()).collect()
    }

    pub fn set_hyper(&mut self, hyper: AdamHyper) -> Result<()> {
        hyper.validate()?;
        for e in &mut self.entries {
            e.adam.hyper = hyper;
        }
        Ok(())
    }

    /// Zeroes the output layer's weight and bias.
    pub fn zero_output_layer(&mut self) {
        let last = self.entries.len() / 2 - 1;
        for suffix in ["weight", "bias"] {
            if let Some(t) = self.get_mut(&format!("fc{last}.{suffix}")) {
                *t = Tensor::zeros(t.shape());
            }
        }
    }

    /// Adds every parameter to `g`, tracked or constant.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> BoundParams {
        let vars = self
            .entries
            .iter()
            .map(|e| {
                if trainable {
                    g.param(e.value.clone())
                } else {
                    g.constant(e.value.clone())
                }
            })
            .collect();
        BoundParams { vars }
    }

    /// One Adam step on every parameter using gradients from `grads`.
    pub fn apply_gradients(&mut self, g: &Graph, bound: &BoundParams, grads: &Gradients) -> Result<()> {
        for (e, &v) in self.entries.iter_mut().zip(&bound.vars) {
            let grad = grads.get_or_zeros(g, v);
            adam_step(&mut e.value, &grad, &mut e.adam)?;
        }
        Ok(())
    }

    /// SHA-256 over names, shapes and the bit patterns of all values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.name.as_bytes());
            for &d in e.value.shape() {
                h.update((d as u64).to_le_bytes());
            }
            for v in e.value.data() {
                h.update(v.to_le_bytes());
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Graph handles for a [`ModelParams`], in entry order.
pub struct BoundParams {
    vars: Vec<Var>,
}

impl BoundParams {
    /// Wraps vars already in the graph, ordered as `ModelParams::entries`
    /// (`fc0.w, fc0.b, fc1.w, ...`).
    pub fn from_vars(vars: Vec<Var>) -> Self {
        BoundParams { vars }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    fn layer(&self, i: usize) -> Result<(Var, Var)> {
        match (self.vars.get(2 * i), self.vars.get(2 * i + 1)) {
            (Some(&w), Some(&b)) => Ok((w, b)),
            _ => Err(Error::Contract(format!("network has no layer fc{i}"))),
        }
    }
}

fn spatial_batch(x: &SpatialTensor) -> Tensor {
    let mut shape = vec![1];
    shape.extend_from_slice(x.values().shape());
    Tensor::from_raw(shape, x.values().data().to_vec())
}

fn cond_batch(c: &ConditionVector) -> Tensor {
    Tensor::from_raw(vec![1, c.len()], c.values().data().to_vec())
}

/// `G(z, c)` for a single noise vector.
pub fn generator_forward(
    z: &Tensor,
    c: &ConditionVector,
    arch: &GeneratorArch,
    params: &ModelParams,
) -> Result<SpatialTensor> {
    if z.shape() != [arch.noise_dim] {
        return Err(Error::dim("generator noise", &[arch.noise_dim], z.shape()));
    }
    let zb = Tensor::from_raw(vec![1, arch.noise_dim], z.data().to_vec());
    let out = arch.generate(params, &zb, &cond_batch(c))?;
    SpatialTensor::new(Tensor::from_raw(arch.image_shape.to_vec(), out.into_data()))
}

/// `D(x, c)` for a single image; `c` is ignored by IRGAN.
pub fn discriminator_forward(
    x: &SpatialTensor,
    c: &ConditionVector,
    arch: &DiscriminatorArch,
    params: &ModelParams,
) -> Result<f64> {
    arch.probabilities(params, &spatial_batch(x), &cond_batch(c))?.item()
}

/// `Q(· | x)` for a single image.
pub fn approximator_forward(x: &SpatialTensor, arch: &ApproximatorArch, params: &ModelParams) -> Result<Tensor> {
    let p = arch.probabilities(params, &spatial_batch(x))?;
    Ok(Tensor::from_raw(vec![arch.cond_dim], p.into_data()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(head: OutputHead) -> NetworkSpec {
        NetworkSpec::new(vec![8, 6], Activation::LeakyRelu(0.2), head).unwrap()
    }

    fn rand_image(shape: [usize; 3], rng: &mut RngStream) -> SpatialTensor {
        let n = image_len(&shape);
        let data = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        SpatialTensor::new(Tensor::new(shape.to_vec(), data).unwrap()).unwrap()
    }

    #[test]
    fn zero_output_layer_generator_outputs_zero() {
        let arch = GeneratorArch::new(4, 3, [2, 2, 1], spec(OutputHead::Tanh)).unwrap();
        let mut rng = RngStream::new(1);
        let mut p = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut rng).unwrap();
        p.zero_output_layer();
        let z = Tensor::vector(&[0.1, -0.5, 0.9, 0.3]).unwrap();
        let out = generator_forward(&z, &ConditionVector::one_hot(1, 3).unwrap(), &arch, &p).unwrap();
        assert!(out.values().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generator_is_deterministic() {
        let arch = GeneratorArch::new(4, 3, [2, 2, 1], spec(OutputHead::Tanh)).unwrap();
        let p = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut RngStream::new(9)).unwrap();
        let z = Tensor::vector(&[0.1, -0.5, 0.9, 0.3]).unwrap();
        let c = ConditionVector::one_hot(2, 3).unwrap();
        let a = generator_forward(&z, &c, &arch, &p).unwrap();
        let b = generator_forward(&z, &c, &arch, &p).unwrap();
        let bits = |s: &SpatialTensor| s.values().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert!(a.values().data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn zero_output_layer_discriminator_is_half() {
        let mut rng = RngStream::new(2);
        for variant in Variant::ALL {
            let arch = DiscriminatorArch::new(variant, 3, [2, 2, 2], spec(OutputHead::SigmoidScalar)).unwrap();
            let mut p = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut rng).unwrap();
            p.zero_output_layer();
            let x = rand_image([2, 2, 2], &mut rng);
            let d = discriminator_forward(&x, &ConditionVector::one_hot(0, 3).unwrap(), &arch, &p).unwrap();
            assert_eq!(d, 0.5, "{variant}");
        }
    }

    #[test]
    fn irgan_discriminator_ignores_condition() {
        let mut rng = RngStream::new(3);
        let arch = DiscriminatorArch::new(Variant::Irgan, 3, [2, 2, 1], spec(OutputHead::SigmoidScalar)).unwrap();
        let p = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut rng).unwrap();
        let x = rand_image([2, 2, 1], &mut rng);
        let a = discriminator_forward(&x, &ConditionVector::one_hot(0, 3).unwrap(), &arch, &p).unwrap();
        let b = discriminator_forward(&x, &ConditionVector::one_hot(2, 3).unwrap(), &arch, &p).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn conditional_discriminators_see_the_condition() {
        let mut rng = RngStream::new(4);
        for variant in [Variant::Cgan, Variant::Fcgan, Variant::Sbp] {
            let arch = DiscriminatorArch::new(variant, 3, [2, 2, 1], spec(OutputHead::SigmoidScalar)).unwrap();
            let p = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut rng).unwrap();
            let x = rand_image([2, 2, 1], &mut rng);
            let a = discriminator_forward(&x, &ConditionVector::one_hot(0, 3).unwrap(), &arch, &p).unwrap();
            let b = discriminator_forward(&x, &ConditionVector::one_hot(1, 3).unwrap(), &arch, &p).unwrap();
            assert_ne!(a, b, "{variant}");
            assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn fcgan_layers_widen_by_m() {
        let arch = DiscriminatorArch::new(Variant::Fcgan, 3, [2, 2, 1], spec(OutputHead::SigmoidScalar)).unwrap();
        assert_eq!(arch.layer_dims(), vec![(16, 8), (11, 6), (6, 1)]);
        let sbp = DiscriminatorArch::new(Variant::Sbp, 3, [2, 2, 1], spec(OutputHead::SigmoidScalar)).unwrap();
        assert_eq!(sbp.layer_dims()[0], (12, 8));
    }

    #[test]
    fn approximator_zero_params_is_uniform() {
        let arch = ApproximatorArch::new(4, [2, 2, 1], spec(OutputHead::Softmax)).unwrap();
        let mut p = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut RngStream::new(5)).unwrap();
        for e in &mut p.entries {
            e.value = Tensor::zeros(e.value.shape());
        }
        let x = rand_image([2, 2, 1], &mut RngStream::new(6));
        let q = approximator_forward(&x, &arch, &p).unwrap();
        assert_eq!(q.data(), &[0.25; 4]);
    }

    #[test]
    fn wrong_shapes_are_rejected() {
        let arch = DiscriminatorArch::new(Variant::Sbp, 3, [2, 2, 1], spec(OutputHead::SigmoidScalar)).unwrap();
        let p = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut RngStream::new(7)).unwrap();
        let x = rand_image([3, 3, 1], &mut RngStream::new(8));
        let c = ConditionVector::one_hot(0, 3).unwrap();
        assert!(matches!(discriminator_forward(&x, &c, &arch, &p), Err(Error::Dimension { .. })));
        let x = rand_image([2, 2, 1], &mut RngStream::new(8));
        let c = ConditionVector::one_hot(0, 4).unwrap();
        assert!(matches!(discriminator_forward(&x, &c, &arch, &p), Err(Error::Dimension { .. })));
    }

    #[test]
    fn variant_parsing() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!("acgan".parse::<Variant>(), Err(Error::Config(_))));
    }
}
