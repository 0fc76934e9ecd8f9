//! Layered settings: preset defaults, then the `--config` file, then flags.
//!
//! Every command resolves its settings into a [`KvConfig`] holding every key
//! it understands, so the snapshot stored with a run is complete and can be
//! fed back through `--config` to repeat it.

use std::path::Path;

use condgan::activation::Activation;
use condgan::adam::AdamHyper;
use condgan::kvconfig::KvConfig;
use condgan::models::Variant;
use condgan::parzen::{ParzenConfig, SigmaMode};
use condgan::training::{GeneratorLossMode, PretrainConfig, TrainConfig};
use condgan::{Error, Result};

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn required<T>(kv: &KvConfig, key: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    kv.parsed(key)?
        .ok_or_else(|| Error::Config(format!("missing setting {key:?}")))
}

fn required_list<T>(kv: &KvConfig, key: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    kv.list(key)?
        .ok_or_else(|| Error::Config(format!("missing setting {key:?}")))
}

fn put_adam(kv: &mut KvConfig, a: &AdamHyper) -> Result<()> {
    kv.set("lr", a.lr.to_string())?;
    kv.set("beta1", a.beta1.to_string())?;
    kv.set("beta2", a.beta2.to_string())?;
    kv.set("epsilon", a.epsilon.to_string())
}

fn get_adam(kv: &KvConfig) -> Result<AdamHyper> {
    Ok(AdamHyper {
        lr: required(kv, "lr")?,
        beta1: required(kv, "beta1")?,
        beta2: required(kv, "beta2")?,
        epsilon: required(kv, "epsilon")?,
    })
}

pub fn train_defaults(dataset: &str) -> Result<KvConfig> {
    let c = TrainConfig::preset(dataset);
    let mut kv = KvConfig::default();
    kv.set("dataset", dataset)?;
    kv.set("variant", c.variant.to_string())?;
    kv.set("steps", c.total_steps.to_string())?;
    kv.set("batch_size", c.batch_size.to_string())?;
    kv.set("d_steps", c.d_steps_per_g_step.to_string())?;
    kv.set("lambda", c.lambda.to_string())?;
    put_adam(&mut kv, &c.adam)?;
    kv.set("seed", c.seed.to_string())?;
    kv.set("generator_loss", c.generator_loss_mode.to_string())?;
    kv.set("noise_dim", c.noise_dim.to_string())?;
    kv.set("g_hidden", join(&c.g_hidden))?;
    kv.set("g_activation", c.g_activation.to_string())?;
    kv.set("d_hidden", join(&c.d_hidden))?;
    kv.set("d_activation", c.d_activation.to_string())?;
    kv.set("checkpoint_every", c.checkpoint_every.to_string())?;
    Ok(kv)
}

pub fn train_config(kv: &KvConfig) -> Result<TrainConfig> {
    let c = TrainConfig {
        variant: required::<Variant>(kv, "variant")?,
        batch_size: required(kv, "batch_size")?,
        total_steps: required(kv, "steps")?,
        d_steps_per_g_step: required(kv, "d_steps")?,
        lambda: required(kv, "lambda")?,
        adam: get_adam(kv)?,
        seed: required(kv, "seed")?,
        generator_loss_mode: required::<GeneratorLossMode>(kv, "generator_loss")?,
        noise_dim: required(kv, "noise_dim")?,
        g_hidden: required_list(kv, "g_hidden")?,
        g_activation: required::<Activation>(kv, "g_activation")?,
        d_hidden: required_list(kv, "d_hidden")?,
        d_activation: required::<Activation>(kv, "d_activation")?,
        checkpoint_every: required(kv, "checkpoint_every")?,
    };
    c.validate()?;
    Ok(c)
}

pub fn pretrain_defaults(dataset: &str) -> Result<KvConfig> {
    let c = PretrainConfig::preset(dataset);
    let mut kv = KvConfig::default();
    kv.set("dataset", dataset)?;
    kv.set("hidden", join(&c.hidden))?;
    kv.set("activation", c.activation.to_string())?;
    kv.set("steps", c.steps.to_string())?;
    kv.set("batch_size", c.batch_size.to_string())?;
    put_adam(&mut kv, &c.adam)?;
    kv.set("eval_every", c.eval_every.to_string())?;
    kv.set("seed", c.seed.to_string())?;
    Ok(kv)
}

pub fn pretrain_config(kv: &KvConfig) -> Result<PretrainConfig> {
    let c = PretrainConfig {
        hidden: required_list(kv, "hidden")?,
        activation: required::<Activation>(kv, "activation")?,
        steps: required(kv, "steps")?,
        batch_size: required(kv, "batch_size")?,
        adam: get_adam(kv)?,
        eval_every: required(kv, "eval_every")?,
        seed: required(kv, "seed")?,
    };
    c.adam.validate()?;
    Ok(c)
}

fn sigma_mode_name(m: SigmaMode) -> &'static str {
    match m {
        SigmaMode::PerCondition => "per_condition",
        SigmaMode::Global => "global",
    }
}

fn parse_sigma_mode(s: &str) -> Result<SigmaMode> {
    match s {
        "per_condition" | "per-condition" => Ok(SigmaMode::PerCondition),
        "global" => Ok(SigmaMode::Global),
        other => Err(Error::Config(format!(
            "sigma_mode must be per_condition or global, got {other:?}"
        ))),
    }
}

pub fn eval_defaults(dataset: &str) -> Result<KvConfig> {
    let c = ParzenConfig::preset(dataset);
    let mut kv = KvConfig::default();
    kv.set("dataset", dataset)?;
    kv.set("sigma_grid", join(&c.sigma_grid))?;
    kv.set("samples_per_condition", c.samples_per_condition.to_string())?;
    kv.set("query_chunk", c.query_chunk.to_string())?;
    kv.set("sigma_mode", sigma_mode_name(c.sigma_mode))?;
    kv.set("seed", "0")?;
    Ok(kv)
}

pub fn parzen_config(kv: &KvConfig) -> Result<ParzenConfig> {
    let mode: String = required(kv, "sigma_mode")?;
    let c = ParzenConfig {
        sigma_grid: required_list(kv, "sigma_grid")?,
        samples_per_condition: required(kv, "samples_per_condition")?,
        query_chunk: required(kv, "query_chunk")?,
        sigma_mode: parse_sigma_mode(&mode)?,
    };
    c.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(c)
}

pub fn sample_defaults() -> Result<KvConfig> {
    let mut kv = KvConfig::default();
    kv.set("condition", "0")?;
    kv.set("count", "64")?;
    kv.set("seed", "0")?;
    Ok(kv)
}

/// Loads the optional config file; any problem with it is a usage error.
pub fn load_file(path: Option<&Path>) -> Result<KvConfig> {
    match path {
        None => Ok(KvConfig::default()),
        Some(p) => KvConfig::load(p).map_err(|e| Error::Config(format!("config file {}: {e}", p.display()))),
    }
}

/// `defaults < file < flags`, rejecting keys the command does not know.
pub fn layer(defaults: KvConfig, file: &KvConfig, flags: &KvConfig) -> Result<KvConfig> {
    for (source, kv) in [("config file", file), ("flags", flags)] {
        if let Some(bad) = kv.keys().find(|k| defaults.get(k).is_none()) {
            let known: Vec<&str> = defaults.keys().collect();
            return Err(Error::Config(format!(
                "unknown setting {bad:?} in {source}; this command accepts {known:?}"
            )));
        }
    }
    let mut out = defaults;
    out.overlay(file);
    out.overlay(flags);
    Ok(out)
}

/// The dataset named by the flags or the config file, falling back to `fallback`.
pub fn dataset_name(file: &KvConfig, flags: &KvConfig, fallback: Option<&str>) -> Result<String> {
    flags
        .get("dataset")
        .or_else(|| file.get("dataset"))
        .or(fallback)
        .map(str::to_string)
        .ok_or_else(|| Error::Config("no dataset given; pass --dataset or set it in the config file".into()))
}
