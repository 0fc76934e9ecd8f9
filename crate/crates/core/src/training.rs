//! Adversarial objectives and the alternating optimization loop.
//!
//! The discriminator ascends `E[log D(x,c)] + E[log(1 - D(G(z,c),c))]`
//! (implemented as minimizing its negation); the generator minimizes either
//! the minimax term `E[log(1 - D(G(z,c)))]` or the non-saturating surrogate
//! `-E[log D(G(z,c))]`. IRGAN's discriminator ignores `c` and the generator
//! additionally pays `λ · E[-log Q(c | G(z,c))]` through a frozen `Q`.
//!
//! Every random draw of step `t` comes from a stream derived from
//! `(seed, t)`, and minibatches are a pure function of `(seed, t)` too, so a
//! run resumed from a checkpoint at step `t` continues exactly as the
//! uninterrupted run would.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::adam::AdamHyper;
use crate::checkpoint::ModelCheckpoint;
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::{one_hot_indices, Graph, Var};
use crate::models::{
    ApproximatorArch, Architecture, DiscriminatorArch, GeneratorArch, ModelParams, NetworkSpec, OutputHead, Variant,
};
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// Floor inside every `log` of the losses.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLossMode {
    Minimax,
    NonSaturating,
}

impl fmt::Display for GeneratorLossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorLossMode::Minimax => "minimax",
            GeneratorLossMode::NonSaturating => "non_saturating",
        })
    }
}

impl FromStr for GeneratorLossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "minimax" => Ok(GeneratorLossMode::Minimax),
            "non_saturating" | "non-saturating" => Ok(GeneratorLossMode::NonSaturating),
            other => Err(Error::Config(format!("unknown generator loss mode {other:?}"))),
        }
    }
}

fn check_probabilities(t: &Tensor, what: &str) -> Result<()> {
    match t.data().iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        Some(p) => Err(Error::Contract(format!("{what} contains {p}, outside (0, 1)"))),
        None => Ok(()),
    }
}

/// `-mean(log d_real) - mean(log(1 - d_fake))` on graph nodes.
pub fn d_loss_graph(g: &mut Graph, d_real: Var, d_fake: Var) -> Result<Var> {
    check_probabilities(g.value(d_real), "d_real")?;
    check_probabilities(g.value(d_fake), "d_fake")?;
    let log_real = g.log_floor(d_real, LOG_FLOOR)?;
    let real_term = g.mean(log_real)?;
    let one_minus = g.affine(d_fake, -1.0, 1.0)?;
    let log_fake = g.log_floor(one_minus, LOG_FLOOR)?;
    let fake_term = g.mean(log_fake)?;
    let total = g.add(real_term, fake_term)?;
    g.affine(total, -1.0, 0.0)
}

pub fn g_loss_graph(g: &mut Graph, d_fake: Var, mode: GeneratorLossMode) -> Result<Var> {
    check_probabilities(g.value(d_fake), "d_fake")?;
    match mode {
        GeneratorLossMode::Minimax => {
            let one_minus = g.affine(d_fake, -1.0, 1.0)?;
            let log = g.log_floor(one_minus, LOG_FLOOR)?;
            g.mean(log)
        }
        GeneratorLossMode::NonSaturating => {
            let log = g.log_floor(d_fake, LOG_FLOOR)?;
            let mean = g.mean(log)?;
            g.affine(mean, -1.0, 0.0)
        }
    }
}

pub fn d_loss(d_real: &Tensor, d_fake: &Tensor) -> Result<f64> {
    let mut g = Graph::new();
    let r = g.constant(d_real.clone());
    let f = g.constant(d_fake.clone());
    let l = d_loss_graph(&mut g, r, f)?;
    g.value(l).item()
}

pub fn g_loss(d_fake: &Tensor, mode: GeneratorLossMode) -> Result<f64> {
    let mut g = Graph::new();
    let f = g.constant(d_fake.clone());
    let l = g_loss_graph(&mut g, f, mode)?;
    g.value(l).item()
}

/// `λ · mean_i(-log q_out[i, class(c_i)])` for distributions `q_out[b×m]`
/// and one-hot `c[b×m]`. The constant `H(c)` term is omitted.
pub fn irgan_regularizer(q_out: &Tensor, c: &Tensor, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
    }
    if q_out.shape() != c.shape() || q_out.rank() != 2 {
        return Err(Error::dim("irgan_regularizer", q_out.shape(), c.shape()));
    }
    let classes = one_hot_indices(c)?;
    let (_, m) = q_out.rows_cols();
    let mut total = 0.0;
    for (i, &k) in classes.iter().enumerate() {
        let row = &q_out.data()[i * m..(i + 1) * m];
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!("q_out row {i} is not a distribution: {row:?}")));
        }
        total -= row[k].max(LOG_FLOOR).ln();
    }
    Ok(lambda * total / classes.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub batch_size: usize,
    pub total_steps: u64,
    pub d_steps_per_g_step: usize,
    /// IRGAN weight λ; ignored by the other variants.
    pub lambda: f64,
    pub adam: AdamHyper,
    pub seed: u64,
    pub generator_loss_mode: GeneratorLossMode,
    pub noise_dim: usize,
    pub g_hidden: Vec<usize>,
    pub g_activation: Activation,
    pub d_hidden: Vec<usize>,
    pub d_activation: Activation,
    /// Write G and D every this many steps (0 disables).
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::Sbp,
            batch_size: 64,
            total_steps: 1000,
            d_steps_per_g_step: 1,
            lambda: 1.0,
            adam: AdamHyper::default(),
            seed: 0,
            generator_loss_mode: GeneratorLossMode::NonSaturating,
            noise_dim: 64,
            g_hidden: vec![128, 128],
            g_activation: Activation::Relu,
            d_hidden: vec![128, 128],
            d_activation: Activation::LeakyRelu(0.2),
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    /// Defaults tuned for a named dataset; unknown names get [`Default`].
    pub fn preset(dataset: &str) -> Self {
        let base = TrainConfig::default();
        match dataset {
            "mixture-3x2" => TrainConfig {
                total_steps: 5000,
                noise_dim: 8,
                adam: AdamHyper { lr: 5e-4, ..base.adam },
                ..base
            },
            "tiny-mnist-3" => TrainConfig {
                total_steps: 3000,
                noise_dim: 32,
                ..base
            },
            "mnist" | "cifar10" => TrainConfig {
                total_steps: 20000,
                g_hidden: vec![512, 512],
                d_hidden: vec![512, 512],
                ..base
            },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == 0 || self.d_steps_per_g_step == 0 || self.noise_dim == 0 {
            return Err(Error::Config(
                "batch_size, d_steps_per_g_step and noise_dim must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.variant == Variant::Irgan && self.lambda == 0.0 {
            return Err(Error::Config("irgan needs lambda > 0".into()));
        }
        Ok(())
    }

    pub fn generator_arch(&self, data: &LabeledDataset) -> Result<GeneratorArch> {
        let spec = NetworkSpec::new(self.g_hidden.clone(), self.g_activation, OutputHead::Tanh)?;
        GeneratorArch::new(self.noise_dim, data.cond_dim(), data.image_shape(), spec)
    }

    pub fn discriminator_arch(&self, data: &LabeledDataset) -> Result<DiscriminatorArch> {
        let spec = NetworkSpec::new(self.d_hidden.clone(), self.d_activation, OutputHead::SigmoidScalar)?;
        DiscriminatorArch::new(self.variant, data.cond_dim(), data.image_shape(), spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: u64,
    pub d_loss: f64,
    pub g_loss: f64,
    /// `R(G)` including λ; IRGAN only.
    pub r_g: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

pub const TRAIN_LOG_HEADER: &str = "step,d_loss,g_loss,r_g,wall_ms";

impl TrainLog {
    /// CSV with header `step,d_loss,g_loss,r_g,wall_ms`; absent fields are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAIN_LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.step,
                r.d_loss,
                r.g_loss,
                opt(r.r_g),
                opt(r.wall_ms.map(|w| w.round()))
            ));
        }
        out
    }

    pub fn extend(&mut self, other: TrainLog) {
        self.records.extend(other.records);
    }

    /// Mean of `R(G)/λ` over records `range`.
    pub fn mean_r_over_lambda(&self, range: std::ops::Range<usize>, lambda: f64) -> Option<f64> {
        let vals: Vec<f64> = self.records.get(range)?.iter().filter_map(|r| r.r_g).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64 / lambda)
    }
}

/// Frozen condition approximator `Q(c | x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Approximator {
    pub arch: ApproximatorArch,
    pub params: ModelParams,
}

impl Approximator {
    pub fn classify(&self, images: &Tensor) -> Result<Vec<usize>> {
        let probs = self.arch.probabilities(&self.params, images)?;
        let (r, m) = probs.rows_cols();
        Ok((0..r)
            .map(|i| {
                let row = &probs.data()[i * m..(i + 1) * m];
                (0..m).fold(0, |best, j| if row[j] > row[best] { j } else { best })
            })
            .collect())
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        let predicted = self.classify(data.images())?;
        let hits = predicted.iter().zip(data.classes()).filter(|(p, c)| p == c).count();
        Ok(hits as f64 / data.len() as f64)
    }

    pub fn to_checkpoint(&self, seed: u64, label_names: Vec<String>) -> ModelCheckpoint {
        ModelCheckpoint {
            architecture: Architecture::Approximator(self.arch.clone()),
            params: self.params.clone(),
            seed,
            step: 0,
            label_names,
            notes: Default::default(),
        }
    }

    pub fn from_checkpoint(ck: ModelCheckpoint) -> Result<Self> {
        match ck.architecture {
            Architecture::Approximator(arch) => Ok(Approximator {
                arch,
                params: ck.params,
            }),
            other => Err(Error::Input(format!("expected an approximator checkpoint, got a {}", other.kind()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub steps: u64,
    pub batch_size: usize,
    pub adam: AdamHyper,
    pub eval_every: u64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            hidden: vec![64],
            activation: Activation::Relu,
            steps: 2000,
            batch_size: 64,
            adam: AdamHyper {
                lr: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
            },
            eval_every: 50,
            seed: 0,
        }
    }
}

impl PretrainConfig {
    pub fn preset(dataset: &str) -> Self {
        let base = PretrainConfig::default();
        match dataset {
            "mnist" | "cifar10" => PretrainConfig {
                hidden: vec![256],
                steps: 10000,
                eval_every: 500,
                ..base
            },
            _ => base,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub best_valid_accuracy: f64,
    pub best_step: u64,
    /// Training cross-entropy of every step.
    pub losses: Vec<f64>,
}

/// Trains `Q` with softmax cross-entropy and Adam, starting from a zero
/// output layer (uniform predictions); returns the parameters
/// with the best validation accuracy seen (evaluated every `eval_every`
/// steps and at step 0; ties keep the earlier step).
pub fn pretrain_approximator(
    train: &LabeledDataset,
    valid: &LabeledDataset,
    config: &PretrainConfig,
) -> Result<(Approximator, PretrainReport)> {
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Input("pretraining needs non-empty train and validation sets".into()));
    }
    if train.cond_dim() != valid.cond_dim() || train.image_shape() != valid.image_shape() {
        return Err(Error::Input("train and validation sets disagree on shapes".into()));
    }
    if config.batch_size == 0 || config.eval_every == 0 {
        return Err(Error::Config("batch_size and eval_every must be positive".into()));
    }
    let spec = NetworkSpec::new(config.hidden.clone(), config.activation, OutputHead::Softmax)?;
    let arch = ApproximatorArch::new(train.cond_dim(), train.image_shape(), spec)?;
    let root = RngStream::new(config.seed);
    let mut params = ModelParams::init(&arch.layer_dims(), config.adam, &mut root.split("init_q"))?;
    // an untrained Q predicts the uniform distribution
    params.zero_output_layer();
    let mut q = Approximator { arch, params };

    let mut best = q.clone();
    let mut report = PretrainReport {
        best_valid_accuracy: q.accuracy(valid)?,
        best_step: 0,
        losses: Vec::with_capacity(config.steps as usize),
    };
    let mut batches = BatchSchedule::new(train.len(), config.batch_size, root.split("shuffle"));
    for step in 0..config.steps {
        let idx = batches.indices(step);
        let x = train.images().select_rows(&idx)?;
        let c = train.labels().select_rows(&idx)?;
        let mut g = Graph::new();
        let p = q.params.bind(&mut g, true);
        let xv = g.constant(x);
        let logits = q.arch.logits(&mut g, &p, xv)?;
        let loss = g.softmax_cross_entropy(logits, &c)?;
        report.losses.push(g.value(loss).item()?);
        let grads = g.backward(loss)?;
        q.params.apply_gradients(&g, &p, &grads)?;

        let done = step + 1;
        if done % config.eval_every == 0 || done == config.steps {
            let acc = q.accuracy(valid)?;
            if acc > report.best_valid_accuracy {
                report.best_valid_accuracy = acc;
                report.best_step = done;
                best = q.clone();
            }
        }
    }
    Ok((best, report))
}

/// Minibatch indices as a pure function of the batch number: the data is
/// consumed as a stream of per-epoch permutations.
pub struct BatchSchedule {
    n: usize,
    batch_size: usize,
    rng: RngStream,
    cache: HashMap<u64, Vec<usize>>,
}

impl BatchSchedule {
    pub fn new(n: usize, batch_size: usize, rng: RngStream) -> Self {
        BatchSchedule {
            n,
            batch_size,
            rng,
            cache: HashMap::new(),
        }
    }

    fn permutation(&mut self, epoch: u64) -> &[usize] {
        if !self.cache.contains_key(&epoch) {
            if self.cache.len() > 4 {
                self.cache.retain(|&e, _| e + 1 >= epoch);
            }
            let perm = self.rng.split_index(epoch).permutation(self.n);
            self.cache.insert(epoch, perm);
        }
        &self.cache[&epoch]
    }

    pub fn indices(&mut self, batch: u64) -> Vec<usize> {
        let start = batch * self.batch_size as u64;
        let n = self.n as u64;
        (0..self.batch_size as u64)
            .map(|i| {
                let pos = start + i;
                self.permutation(pos / n)[(pos % n) as usize]
            })
            .collect()
    }
}

/// Generator and discriminator with their optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct GanState {
    pub g_arch: GeneratorArch,
    pub d_arch: DiscriminatorArch,
    pub g: ModelParams,
    pub d: ModelParams,
    /// Completed training steps.
    pub step: u64,
}

impl GanState {
    pub fn init(config: &TrainConfig, data: &LabeledDataset) -> Result<Self> {
        config.validate()?;
        let g_arch = config.generator_arch(data)?;
        let d_arch = config.discriminator_arch(data)?;
        let root = RngStream::new(config.seed);
        let g = ModelParams::init(&g_arch.layer_dims(), config.adam, &mut root.split("init_g"))?;
        let d = ModelParams::init(&d_arch.layer_dims(), config.adam, &mut root.split("init_d"))?;
        Ok(GanState {
            g_arch,
            d_arch,
            g,
            d,
            step: 0,
        })
    }

    pub fn checkpoints(
        &self,
        seed: u64,
        label_names: &[String],
        notes: &serde_json::Map<String, serde_json::Value>,
    ) -> (ModelCheckpoint, ModelCheckpoint) {
        let make = |architecture, params: &ModelParams| ModelCheckpoint {
            architecture,
            params: params.clone(),
            seed,
            step: self.step,
            label_names: label_names.to_vec(),
            notes: notes.clone(),
        };
        (
            make(Architecture::Generator(self.g_arch.clone()), &self.g),
            make(Architecture::Discriminator(self.d_arch.clone()), &self.d),
        )
    }

    pub fn from_checkpoints(g: ModelCheckpoint, d: ModelCheckpoint) -> Result<Self> {
        if g.step != d.step {
            return Err(Error::Input(format!(
                "generator is at step {} but discriminator at step {}",
                g.step, d.step
            )));
        }
        match (g.architecture, d.architecture) {
            (Architecture::Generator(g_arch), Architecture::Discriminator(d_arch)) => Ok(GanState {
                g_arch,
                d_arch,
                g: g.params,
                d: d.params,
                step: g.step,
            }),
            _ => Err(Error::Input("expected a generator and a discriminator checkpoint".into())),
        }
    }
}

/// `count` one-hot conditions drawn from `frequencies`.
pub fn sample_conditions(frequencies: &[f64], count: usize, rng: &mut RngStream) -> Tensor {
    let m = frequencies.len();
    let mut data = vec![0.0; count * m];
    for i in 0..count {
        data[i * m + rng.categorical(frequencies)] = 1.0;
    }
    Tensor::from_raw(vec![count, m], data)
}

/// One real minibatch: images `[b,h,w,d]` and one-hot labels `[b,m]`.
pub struct RealBatch {
    pub images: Tensor,
    pub labels: Tensor,
}

/// `d_steps_per_g_step` discriminator updates (one per entry of `real`),
/// then one generator update. Fake conditions follow `label_frequencies`.
pub fn train_step(
    state: &mut GanState,
    real: &[RealBatch],
    label_frequencies: &[f64],
    q: Option<&Approximator>,
    config: &TrainConfig,
    rng: &RngStream,
) -> Result<TrainRecord> {
    let step = state.step;
    let abort = |e: Error| match e {
        e @ Error::Training { .. } => e,
        e => Error::Training {
            step,
            message: e.to_string(),
        },
    };
    let b = config.batch_size;
    let mut last_d_loss = f64::NAN;

    for (k, batch) in real.iter().enumerate() {
        if batch.images.shape()[0] != b {
            return Err(Error::Config(format!(
                "real batch has {} samples, config says {b}",
                batch.images.shape()[0]
            )));
        }
        let mut r = rng.split("discriminator").split_index(k as u64);
        let z = state.g_arch.sample_noise(b, &mut r);
        let c_fake = sample_conditions(label_frequencies, b, &mut r);
        let x_fake = state.g_arch.generate(&state.g, &z, &c_fake).map_err(abort)?;

        let mut g = Graph::new();
        let dp = state.d.bind(&mut g, true);
        let xr = g.constant(batch.images.clone());
        let cr = g.constant(batch.labels.clone());
        let xf = g.constant(x_fake);
        let cf = g.constant(c_fake);
        let d_real = state.d_arch.forward(&mut g, &dp, xr, cr).map_err(abort)?;
        let d_fake = state.d_arch.forward(&mut g, &dp, xf, cf).map_err(abort)?;
        let loss = d_loss_graph(&mut g, d_real, d_fake).map_err(abort)?;
        last_d_loss = finite(g.value(loss).item()?, "d_loss", step)?;
        let grads = g.backward(loss)?;
        state.d.apply_gradients(&g, &dp, &grads).map_err(abort)?;
    }

    let mut r = rng.split("generator");
    let z = state.g_arch.sample_noise(b, &mut r);
    let c_fake = sample_conditions(label_frequencies, b, &mut r);
    let mut g = Graph::new();
    let gp = state.g.bind(&mut g, true);
    let dp = state.d.bind(&mut g, false);
    let zv = g.constant(z);
    let cv = g.constant(c_fake.clone());
    let x = state.g_arch.forward(&mut g, &gp, zv, cv).map_err(abort)?;
    let d_fake = state.d_arch.forward(&mut g, &dp, x, cv).map_err(abort)?;
    let adversarial = g_loss_graph(&mut g, d_fake, config.generator_loss_mode).map_err(abort)?;
    let g_loss_value = finite(g.value(adversarial).item()?, "g_loss", step)?;

    let (total, r_g) = match (config.variant, q) {
        (Variant::Irgan, Some(q)) => {
            let qp = q.params.bind(&mut g, false);
            let logits = q.arch.logits(&mut g, &qp, x).map_err(abort)?;
            let ce = g.softmax_cross_entropy(logits, &c_fake).map_err(abort)?;
            let reg = g.affine(ce, config.lambda, 0.0)?;
            let r_g = finite(g.value(reg).item()?, "r_g", step)?;
            (g.add(adversarial, reg)?, Some(r_g))
        }
        (Variant::Irgan, None) => return Err(Error::Config("irgan needs a pretrained Q".into())),
        _ => (adversarial, None),
    };
    let grads = g.backward(total)?;
    state.g.apply_gradients(&g, &gp, &grads).map_err(abort)?;
    state.step += 1;

    Ok(TrainRecord {
        step,
        d_loss: last_d_loss,
        g_loss: g_loss_value,
        r_g,
        wall_ms: None,
    })
}

fn finite(v: f64, what: &str, step: u64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Training {
            step,
            message: format!("{what} is {v}"),
        })
    }
}

/// Options of [`train`] that do not affect the numerical result.
#[derive(Default)]
pub struct TrainHooks<'a> {
    pub record_wall_time: bool,
    /// Called with the state after every `checkpoint_every` steps.
    pub on_checkpoint: Option<Box<dyn FnMut(&GanState) -> Result<()> + 'a>>,
    /// Called with every record as soon as it is produced.
    pub on_record: Option<Box<dyn FnMut(&TrainRecord) + 'a>>,
}

/// Runs steps `state.step .. config.total_steps`. Passing `resume` continues
/// a checkpointed run; otherwise fresh parameters are initialized from the
/// seed.
pub fn train(
    config: &TrainConfig,
    data: &LabeledDataset,
    q: Option<&Approximator>,
    resume: Option<GanState>,
    mut hooks: TrainHooks<'_>,
) -> Result<(GanState, TrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    match (config.variant == Variant::Irgan, q) {
        (true, None) => return Err(Error::Config("irgan needs a pretrained Q checkpoint".into())),
        (false, Some(_)) => return Err(Error::Config(format!("{} does not use Q", config.variant))),
        (true, Some(q)) if q.arch.cond_dim != data.cond_dim() || q.arch.image_shape != data.image_shape() => {
            return Err(Error::dim(
                "approximator vs dataset",
                &q.arch.image_shape,
                &data.image_shape(),
            ))
        }
        _ => {}
    }
    let mut state = match resume {
        Some(s) => {
            if s.g_arch != config.generator_arch(data)? || s.d_arch != config.discriminator_arch(data)? {
                return Err(Error::Config("resumed checkpoint does not match the configuration".into()));
            }
            s
        }
        None => GanState::init(config, data)?,
    };
    let freqs = data.label_frequencies();
    let root = RngStream::new(config.seed);
    let steps_rng = root.split("step");
    let mut batches = BatchSchedule::new(data.len(), config.batch_size, root.split("shuffle"));
    let mut log = TrainLog::default();
    let started = Instant::now();

    while state.step < config.total_steps {
        let t = state.step;
        let d_steps = config.d_steps_per_g_step as u64;
        let real: Vec<RealBatch> = (0..d_steps)
            .map(|k| {
                let idx = batches.indices(t * d_steps + k);
                Ok(RealBatch {
                    images: data.images().select_rows(&idx)?,
                    labels: data.labels().select_rows(&idx)?,
                })
            })
            .collect::<Result<_>>()?;
        let mut record = train_step(&mut state, &real, &freqs, q, config, &steps_rng.split_index(t))?;
        if hooks.record_wall_time {
            record.wall_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        }
        if let Some(f) = hooks.on_record.as_mut() {
            f(&record);
        }
        log.records.push(record);
        if config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0 {
            if let Some(f) = hooks.on_checkpoint.as_mut() {
                f(&state)?;
            }
        }
    }
    Ok((state, log))
}
