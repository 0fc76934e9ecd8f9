//! Gaussian Parzen-window log-likelihoods with validation-selected bandwidth.
//!
//! A kernel of bandwidth `σ` is placed on each of `N` samples; the
//! log-density of a query `q` in `R^D` is
//! `logsumexp_i(-‖q - s_i‖² / 2σ²) - log N - (D/2)·log(2πσ²)`.
//!
//! Squared distances are sorted ascending before the reduction, which makes
//! the result independent of sample order bit for bit and lets one sort be
//! reused across the whole bandwidth grid.

use std::f64::consts::PI;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, MixtureOracle};
use crate::error::{Error, Result};
use crate::models::{GeneratorArch, ModelParams};
use crate::rng::RngStream;
use crate::tensor::Tensor;
use crate::training::sample_conditions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// One bandwidth per condition, chosen on that condition's validation points.
    PerCondition,
    /// One bandwidth for all conditions, chosen on the pooled validation points.
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParzenConfig {
    pub sigma_grid: Vec<f64>,
    pub samples_per_condition: usize,
    /// Queries handed to one worker at a time.
    pub query_chunk: usize,
    pub sigma_mode: SigmaMode,
}

impl Default for ParzenConfig {
    fn default() -> Self {
        ParzenConfig {
            sigma_grid: log_spaced(0.01, 1.0, 20),
            samples_per_condition: 2000,
            query_chunk: 64,
            sigma_mode: SigmaMode::PerCondition,
        }
    }
}

impl ParzenConfig {
    /// 10000 samples per condition on the full datasets, 2000 elsewhere.
    pub fn preset(dataset: &str) -> Self {
        let base = ParzenConfig::default();
        match dataset {
            "mnist" | "cifar10" => ParzenConfig {
                samples_per_condition: 10000,
                ..base
            },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.sigma_grid)?;
        if self.samples_per_condition == 0 || self.query_chunk == 0 {
            return Err(Error::Config(
                "samples_per_condition and query_chunk must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `count` values from `lo` to `hi` inclusive, evenly spaced in log scale.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    grid
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Input("sigma grid is empty".into()));
    }
    if grid.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::Input(format!("sigma grid must be positive and finite, got {grid:?}")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input(format!("sigma grid must be strictly ascending, got {grid:?}")));
    }
    Ok(())
}

fn check_pair(samples: &Tensor, queries: &Tensor) -> Result<(usize, usize, usize)> {
    if samples.rank() != 2 || queries.rank() != 2 {
        return Err(Error::Shape(format!(
            "samples and queries must be matrices, got {:?} and {:?}",
            samples.shape(),
            queries.shape()
        )));
    }
    let (n, d) = samples.rows_cols();
    let (t, dq) = queries.rows_cols();
    if d != dq {
        return Err(Error::dim("parzen", samples.shape(), queries.shape()));
    }
    Ok((n, t, d))
}

/// Sorted squared distances from `q` to every sample row.
fn sorted_sq_distances(samples: &[f64], d: usize, q: &[f64]) -> Vec<f64> {
    let mut dist: Vec<f64> = samples
        .chunks_exact(d)
        .map(|s| s.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    dist.sort_unstable_by(f64::total_cmp);
    dist
}

/// Log-likelihood of one query from its sorted squared distances.
fn ll_from_sorted(dist: &[f64], d: usize, sigma: f64) -> f64 {
    let two_var = 2.0 * sigma * sigma;
    let nearest = dist[0];
    // the nearest sample contributes the maximal exponent, so every term is ≤ 1
    let sum: f64 = dist.iter().map(|&x| (-(x - nearest) / two_var).exp()).sum();
    -nearest / two_var + sum.ln() - (dist.len() as f64).ln() - 0.5 * d as f64 * (2.0 * PI * sigma * sigma).ln()
}

/// Runs `f` on every query row (with its sorted distances), in parallel
/// chunks, returning results in query order.
fn per_query<T: Send>(
    samples: &Tensor,
    queries: &Tensor,
    chunk: usize,
    f: impl Fn(&[f64], usize) -> T + Sync,
) -> Result<Vec<T>> {
    let (n, t, d) = check_pair(samples, queries)?;
    if n == 0 || t == 0 {
        return Ok(Vec::new());
    }
    let s = samples.data();
    let rows: Vec<&[f64]> = queries.data().chunks_exact(d).collect();
    let workers = thread::available_parallelism().map_or(1, |w| w.get());
    let chunk = chunk.max(1);
    if workers == 1 || t <= chunk {
        return Ok(rows.iter().map(|q| f(&sorted_sq_distances(s, d, q), d)).collect());
    }
    let chunks: Vec<&[&[f64]]> = rows.chunks(chunk).collect();
    let f = &f;
    let mut out: Vec<Vec<T>> = Vec::with_capacity(chunks.len());
    for group in chunks.chunks(workers) {
        let done: Vec<Vec<T>> = thread::scope(|scope| {
            let handles: Vec<_> = group
                .iter()
                .map(|part| scope.spawn(move || part.iter().map(|q| f(&sorted_sq_distances(s, d, q), d)).collect()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("parzen worker panicked")).collect()
        });
        out.extend(done);
    }
    Ok(out.into_iter().flatten().collect())
}

/// Per-query log-likelihood `[T]` of `queries [T×D]` under the Parzen
/// density of `samples [N×D]`.
pub fn parzen_log_likelihood(samples: &Tensor, queries: &Tensor, sigma: f64) -> Result<Tensor> {
    let (n, t, _) = check_pair(samples, queries)?;
    if n == 0 {
        return Err(Error::Input("parzen window needs at least one sample".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Input(format!("sigma must be positive, got {sigma}")));
    }
    if t == 0 {
        return Err(Error::Input("no query points".into()));
    }
    let ll = per_query(samples, queries, 64, |dist, d| ll_from_sorted(dist, d, sigma))?;
    Tensor::new(vec![t], ll)
}

/// Per-query log-likelihoods for every grid bandwidth: `out[k][i]` is query
/// `i` at `grid[k]`.
fn grid_log_likelihoods(samples: &Tensor, queries: &Tensor, grid: &[f64], chunk: usize) -> Result<Vec<Vec<f64>>> {
    let per = per_query(samples, queries, chunk, |dist, d| {
        grid.iter().map(|&s| ll_from_sorted(dist, d, s)).collect::<Vec<f64>>()
    })?;
    Ok((0..grid.len()).map(|k| per.iter().map(|row| row[k]).collect()).collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Index of the largest value; the first one wins ties.
fn argmax_first(values: &[f64]) -> usize {
    (1..values.len()).fold(0, |best, k| if values[k] > values[best] { k } else { best })
}

/// The grid bandwidth maximizing mean validation log-likelihood, with that
/// mean. Ties go to the smaller bandwidth.
pub fn select_sigma(samples: &Tensor, validation: &Tensor, grid: &[f64]) -> Result<(f64, f64)> {
    validate_grid(grid)?;
    let (n, v, _) = check_pair(samples, validation)?;
    if n == 0 || v == 0 {
        return Err(Error::Input("select_sigma needs samples and validation points".into()));
    }
    let means: Vec<f64> = grid_log_likelihoods(samples, validation, grid, 64)?
        .iter()
        .map(|ll| mean(ll))
        .collect();
    let k = argmax_first(&means);
    Ok((grid[k], means[k]))
}

/// Something that can draw flattened samples `[count × D]` for a condition.
pub trait ConditionalSampler {
    fn cond_dim(&self) -> usize;
    fn sample_dim(&self) -> usize;
    fn sample(&self, condition: usize, count: usize, rng: &mut RngStream) -> Result<Tensor>;
}

/// A trained generator with `z ~ U(-1, 1)^k`.
pub struct GeneratorSampler<'a> {
    pub arch: &'a GeneratorArch,
    pub params: &'a ModelParams,
}

const GENERATE_BATCH: usize = 512;

impl ConditionalSampler for GeneratorSampler<'_> {
    fn cond_dim(&self) -> usize {
        self.arch.cond_dim
    }

    fn sample_dim(&self) -> usize {
        self.arch.image_shape.iter().product()
    }

    fn sample(&self, condition: usize, count: usize, rng: &mut RngStream) -> Result<Tensor> {
        let m = self.cond_dim();
        if condition >= m {
            return Err(Error::Input(format!("condition {condition} out of range 0..{m}")));
        }
        let mut freqs = vec![0.0; m];
        freqs[condition] = 1.0;
        let mut data = Vec::with_capacity(count * self.sample_dim());
        let mut left = count;
        while left > 0 {
            let b = left.min(GENERATE_BATCH);
            let z = self.arch.sample_noise(b, rng);
            let c = sample_conditions(&freqs, b, rng);
            data.extend_from_slice(self.arch.generate(self.params, &z, &c)?.data());
            left -= b;
        }
        Tensor::new(vec![count, self.sample_dim()], data)
    }
}

impl ConditionalSampler for MixtureOracle {
    fn cond_dim(&self) -> usize {
        self.spec().cond_dim()
    }

    fn sample_dim(&self) -> usize {
        self.spec().dim
    }

    fn sample(&self, condition: usize, count: usize, rng: &mut RngStream) -> Result<Tensor> {
        MixtureOracle::sample(self, condition, count, rng)
    }
}

/// Replays the stored images of each condition in order, cycling; a
/// generator that has memorized its training set.
pub struct ReplaySampler<'a> {
    pub data: &'a LabeledDataset,
}

impl ConditionalSampler for ReplaySampler<'_> {
    fn cond_dim(&self) -> usize {
        self.data.cond_dim()
    }

    fn sample_dim(&self) -> usize {
        self.data.image_len()
    }

    fn sample(&self, condition: usize, count: usize, _rng: &mut RngStream) -> Result<Tensor> {
        let pool = self
            .data
            .flat_images_of(condition)
            .ok_or_else(|| Error::Input(format!("no stored images for condition {condition}")))?;
        let n = pool.shape()[0];
        let idx: Vec<usize> = (0..count).map(|i| i % n).collect();
        pool.select_rows(&idx)
    }
}

/// Control sampler: requests for condition `c` are served with condition
/// `(c + 1) mod m`, a permutation without fixed points.
pub struct ShuffledConditions<S> {
    pub inner: S,
}

impl<S: ConditionalSampler> ConditionalSampler for ShuffledConditions<S> {
    fn cond_dim(&self) -> usize {
        self.inner.cond_dim()
    }

    fn sample_dim(&self) -> usize {
        self.inner.sample_dim()
    }

    fn sample(&self, condition: usize, count: usize, rng: &mut RngStream) -> Result<Tensor> {
        let m = self.cond_dim();
        if condition >= m {
            return Err(Error::Input(format!("condition {condition} out of range 0..{m}")));
        }
        self.inner.sample((condition + 1) % m, count, rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParzenRow {
    pub condition: usize,
    pub label: String,
    pub sigma: Option<f64>,
    pub mean_ll: Option<f64>,
    pub stderr: Option<f64>,
    pub n_test: usize,
    pub n_samples: usize,
    /// Why the row has no estimate.
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParzenReport {
    pub dataset: String,
    pub model: String,
    /// How stored data were mapped to the generator's output range.
    pub scale: String,
    pub sigma_mode: SigmaMode,
    pub rows: Vec<ParzenRow>,
}

/// Mean and standard error (sample standard deviation over √n).
fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let mu = mean(v);
    if v.len() < 2 {
        return (mu, 0.0);
    }
    let var = v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64;
    (mu, (var / v.len() as f64).sqrt())
}

/// Per-condition test log-likelihood of `sampler`'s samples. Condition `c`
/// draws from `rng(seed).split("parzen").split_index(c)`.
pub fn conditional_eval(
    sampler: &dyn ConditionalSampler,
    valid: &LabeledDataset,
    test: &LabeledDataset,
    config: &ParzenConfig,
    seed: u64,
    model: &str,
) -> Result<ParzenReport> {
    config.validate()?;
    let m = sampler.cond_dim();
    for (name, ds) in [("conditional_eval validation set", valid), ("conditional_eval test set", test)] {
        if ds.cond_dim() != m || ds.image_len() != sampler.sample_dim() {
            return Err(Error::dim(
                name,
                &[ds.cond_dim(), ds.image_len()],
                &[m, sampler.sample_dim()],
            ));
        }
    }
    let root = RngStream::new(seed).split("parzen");
    let grid = &config.sigma_grid;
    let labels = &test.meta().label_names;

    struct Pending {
        condition: usize,
        samples: Tensor,
        test: Tensor,
        valid_ll: Vec<Vec<f64>>,
    }
    let mut rows: Vec<Option<ParzenRow>> = vec![None; m];
    let mut pending = Vec::new();
    for c in 0..m {
        let label = labels.get(c).cloned().unwrap_or_else(|| c.to_string());
        let missing = |n_test: usize, why: String| ParzenRow {
            condition: c,
            label: label.clone(),
            sigma: None,
            mean_ll: None,
            stderr: None,
            n_test,
            n_samples: 0,
            diagnostic: Some(why),
        };
        let Some(test_c) = test.flat_images_of(c) else {
            rows[c] = Some(missing(0, format!("condition {c} is absent from the test split")));
            continue;
        };
        let Some(valid_c) = valid.flat_images_of(c) else {
            rows[c] = Some(missing(
                test_c.shape()[0],
                format!("condition {c} is absent from the validation split"),
            ));
            continue;
        };
        let samples = sampler.sample(c, config.samples_per_condition, &mut root.split_index(c as u64))?;
        let valid_ll = grid_log_likelihoods(&samples, &valid_c, grid, config.query_chunk)?;
        pending.push(Pending {
            condition: c,
            samples,
            test: test_c,
            valid_ll,
        });
    }

    let global = match config.sigma_mode {
        SigmaMode::PerCondition => None,
        SigmaMode::Global => {
            let pooled: Vec<f64> = (0..grid.len())
                .map(|k| {
                    let all: Vec<f64> = pending.iter().flat_map(|p| p.valid_ll[k].iter().copied()).collect();
                    mean(&all)
                })
                .collect();
            (!pending.is_empty()).then(|| argmax_first(&pooled))
        }
    };
    for p in pending {
        let k = global.unwrap_or_else(|| argmax_first(&p.valid_ll.iter().map(|ll| mean(ll)).collect::<Vec<_>>()));
        let sigma = grid[k];
        let ll = parzen_log_likelihood(&p.samples, &p.test, sigma)?;
        let (mu, se) = mean_stderr(ll.data());
        rows[p.condition] = Some(ParzenRow {
            condition: p.condition,
            label: labels.get(p.condition).cloned().unwrap_or_else(|| p.condition.to_string()),
            sigma: Some(sigma),
            mean_ll: Some(mu),
            stderr: Some(se),
            n_test: p.test.shape()[0],
            n_samples: p.samples.shape()[0],
            diagnostic: None,
        });
    }
    Ok(ParzenReport {
        dataset: test.meta().name.clone(),
        model: model.to_string(),
        scale: test.meta().scale.clone(),
        sigma_mode: config.sigma_mode,
        rows: rows.into_iter().flatten().collect(),
    })
}
