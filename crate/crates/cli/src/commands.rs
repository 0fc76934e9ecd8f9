use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use condgan::checkpoint::{Container, ModelCheckpoint};
use condgan::data::{load_preset, LabeledDataset, PresetData};
use condgan::kvconfig::KvConfig;
use condgan::models::{Architecture, GeneratorArch, Variant};
use condgan::parzen::{conditional_eval, ConditionalSampler, GeneratorSampler, ParzenReport, ShuffledConditions};
use condgan::report::{format_table, report_csv};
use condgan::rng::RngStream;
use condgan::tensor::Tensor;
use condgan::training::{pretrain_approximator, train as run_training, Approximator, GanState, TrainHooks};
use serde_json::{json, Map, Value};

use crate::config;
use crate::image::sample_grid;
use crate::manifest::{create_dir, write_file, DatasetRecord, RunManifest};
use crate::{Cli, CliError, CliResult, EvalArgs, PretrainArgs, SampleArgs, TrainArgs};

fn flags(pairs: &[(&str, Option<String>)]) -> CliResult<KvConfig> {
    let mut kv = KvConfig::default();
    for (k, v) in pairs {
        if let Some(v) = v {
            kv.set(k, v.clone())?;
        }
    }
    Ok(kv)
}

fn opt<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|v| v.to_string())
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn dataset_notes(data: &LabeledDataset) -> Map<String, Value> {
    let mut notes = Map::new();
    notes.insert("dataset".into(), json!(data.meta().name));
    notes.insert("dataset_sha256".into(), json!(data.meta().source_checksum));
    notes
}

fn dataset_record(data: &PresetData) -> DatasetRecord {
    let s = &data.splits;
    DatasetRecord::new(&s.train, &s.valid, &s.test, data.split_seed)
}

fn write_checkpoint(path: &Path, ck: &ModelCheckpoint) -> CliResult<()> {
    write_file(path, &ck.to_container().encode())
}

fn load_checkpoint(path: &Path) -> CliResult<ModelCheckpoint> {
    ModelCheckpoint::load(path).map_err(|e| CliError::data(format!("checkpoint {}: {e}", path.display())))
}

fn generator_of(path: &Path, ck: &ModelCheckpoint) -> CliResult<GeneratorArch> {
    match &ck.architecture {
        Architecture::Generator(a) => Ok(a.clone()),
        other => Err(CliError::usage(format!(
            "{} holds a {} checkpoint, expected a generator",
            path.display(),
            other.kind()
        ))),
    }
}

fn check_fits(what: &str, cond_dim: usize, image_shape: [usize; 3], data: &LabeledDataset) -> CliResult<()> {
    if cond_dim != data.cond_dim() || image_shape != data.image_shape() {
        return Err(CliError::usage(format!(
            "{what} expects {cond_dim} conditions and {image_shape:?} images, but dataset {} has {} conditions and {:?} images",
            data.meta().name,
            data.cond_dim(),
            data.image_shape()
        )));
    }
    Ok(())
}

fn emit(summary: &Value) {
    println!("{summary}");
}

pub fn pretrain_q(cli: &Cli, a: &PretrainArgs) -> CliResult<()> {
    let started = Instant::now();
    let file = config::load_file(cli.config.as_deref())?;
    let fl = flags(&[
        ("dataset", a.dataset.clone()),
        ("steps", opt(a.steps)),
        ("seed", opt(a.seed)),
        ("hidden", a.hidden.clone()),
        ("activation", a.activation.clone()),
        ("lr", opt(a.lr)),
        ("batch_size", opt(a.batch_size)),
        ("eval_every", opt(a.eval_every)),
    ])?;
    let dataset = config::dataset_name(&file, &fl, None)?;
    let kv = config::layer(config::pretrain_defaults(&dataset)?, &file, &fl)?;
    let pc = config::pretrain_config(&kv)?;
    let data = load_preset(&dataset, &cli.data_dir)?;
    let loaded = ms(started);

    let t = Instant::now();
    let (q, report) = pretrain_approximator(&data.splits.train, &data.splits.valid, &pc)?;
    let test_accuracy = q.accuracy(&data.splits.test)?;
    let trained = ms(t);

    create_dir(&a.out)?;
    let mut ck = q.to_checkpoint(pc.seed, data.splits.train.meta().label_names.clone());
    ck.step = pc.steps;
    ck.notes = dataset_notes(&data.splits.train);
    let q_path = a.out.join("q.ckpt");
    write_checkpoint(&q_path, &ck)?;

    let summary = json!({
        "command": "pretrain-q",
        "dataset": dataset,
        "steps": pc.steps,
        "valid_accuracy": report.best_valid_accuracy,
        "test_accuracy": test_accuracy,
        "best_step": report.best_step,
        "checkpoint": q_path,
    });
    let summary_path = a.out.join("summary.json");
    write_file(&summary_path, serde_json::to_string_pretty(&summary).expect("json").as_bytes())?;

    let mut m = RunManifest::new("pretrain-q", &kv, pc.seed);
    m.dataset = Some(dataset_record(&data));
    m.artifact("q_checkpoint", &q_path)?;
    m.artifact("summary", &summary_path)?;
    m.timings_ms.insert("load".into(), loaded);
    m.timings_ms.insert("pretrain".into(), trained);
    m.timings_ms.insert("total".into(), ms(started));
    m.write(&a.out, &kv)?;
    emit(&summary);
    Ok(())
}

pub fn train(cli: &Cli, a: &TrainArgs) -> CliResult<()> {
    let started = Instant::now();
    let file = config::load_file(cli.config.as_deref())?;
    let fl = flags(&[
        ("dataset", a.dataset.clone()),
        ("variant", a.variant.clone()),
        ("steps", opt(a.steps)),
        ("lambda", opt(a.lambda)),
        ("seed", opt(a.seed)),
        ("batch_size", opt(a.batch_size)),
        ("lr", opt(a.lr)),
        ("beta1", opt(a.beta1)),
        ("noise_dim", opt(a.noise_dim)),
        ("g_hidden", a.g_hidden.clone()),
        ("d_hidden", a.d_hidden.clone()),
        ("d_steps", opt(a.d_steps)),
        ("generator_loss", a.generator_loss.clone()),
        ("checkpoint_every", opt(a.checkpoint_every)),
    ])?;
    let dataset = config::dataset_name(&file, &fl, None)?;
    let kv = config::layer(config::train_defaults(&dataset)?, &file, &fl)?;
    let tc = config::train_config(&kv)?;
    match (tc.variant, &a.q_checkpoint) {
        (Variant::Irgan, None) => {
            return Err(CliError::usage(
                "irgan needs --q-checkpoint: its discriminator ignores the condition, so a pretrained Q (see pretrain-q) must supply it",
            ))
        }
        (v, Some(_)) if v != Variant::Irgan => {
            return Err(CliError::usage(format!("--q-checkpoint is only used by irgan, not {v}")))
        }
        _ => {}
    }
    let data = load_preset(&dataset, &cli.data_dir)?;
    let train_set = &data.splits.train;

    let mut m = RunManifest::new("train", &kv, tc.seed);
    m.dataset = Some(dataset_record(&data));
    let q = match &a.q_checkpoint {
        Some(path) => {
            let q = Approximator::from_checkpoint(load_checkpoint(path)?)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            check_fits("the Q checkpoint", q.arch.cond_dim, q.arch.image_shape, train_set)?;
            m.input("q_checkpoint", path)?;
            Some(q)
        }
        None => None,
    };
    let resume = match &a.resume {
        Some(dir) => {
            let (g, d) = (dir.join("g.ckpt"), dir.join("d.ckpt"));
            let state = GanState::from_checkpoints(load_checkpoint(&g)?, load_checkpoint(&d)?)?;
            m.input("resume_g", &g)?;
            m.input("resume_d", &d)?;
            Some(state)
        }
        None => None,
    };
    let loaded = ms(started);

    create_dir(&a.out)?;
    let mut notes = dataset_notes(train_set);
    notes.insert("variant".into(), json!(tc.variant.to_string()));
    if let Some(q) = &q {
        notes.insert("q_params_sha256".into(), json!(q.params.digest()));
    }
    let labels = train_set.meta().label_names.clone();
    let ck_root = a.out.join("checkpoints");
    let total = tc.total_steps;
    let log_every = a.log_every.max(1);
    let hooks = TrainHooks {
        record_wall_time: a.wall_time,
        on_checkpoint: Some(Box::new(|s: &GanState| {
            let dir = ck_root.join(format!("step-{:08}", s.step));
            std::fs::create_dir_all(&dir).map_err(|e| condgan::Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            let (g, d) = s.checkpoints(tc.seed, &labels, &notes);
            g.save(&dir.join("g.ckpt"))?;
            d.save(&dir.join("d.ckpt"))
        })),
        on_record: Some(Box::new(move |r| {
            if (r.step + 1) % log_every == 0 || r.step + 1 == total {
                let reg = r.r_g.map(|v| format!(" r_g {v:.4}")).unwrap_or_default();
                eprintln!(
                    "step {}/{total} d_loss {:.4} g_loss {:.4}{reg}",
                    r.step + 1,
                    r.d_loss,
                    r.g_loss
                );
            }
        })),
    };
    let t = Instant::now();
    let (state, log) = run_training(&tc, train_set, q.as_ref(), resume, hooks)?;
    let trained = ms(t);

    let (g, d) = state.checkpoints(tc.seed, &labels, &notes);
    let (g_path, d_path, log_path) = (a.out.join("g.ckpt"), a.out.join("d.ckpt"), a.out.join("log.csv"));
    write_checkpoint(&g_path, &g)?;
    write_checkpoint(&d_path, &d)?;
    write_file(&log_path, log.to_csv().as_bytes())?;
    m.artifact("g_checkpoint", &g_path)?;
    m.artifact("d_checkpoint", &d_path)?;
    m.artifact("log", &log_path)?;
    m.timings_ms.insert("load".into(), loaded);
    m.timings_ms.insert("train".into(), trained);
    m.timings_ms.insert("total".into(), ms(started));
    m.write(&a.out, &kv)?;

    let last = log.records.last();
    emit(&json!({
        "command": "train",
        "variant": tc.variant.to_string(),
        "dataset": dataset,
        "steps": state.step,
        "final_d_loss": last.map(|r| r.d_loss),
        "final_g_loss": last.map(|r| r.g_loss),
        "g_checkpoint": g_path,
        "d_checkpoint": d_path,
    }));
    Ok(())
}

/// Model names for report files: the recorded variant, made unique.
fn model_names(cks: &[(PathBuf, ModelCheckpoint)]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    cks.iter()
        .map(|(_, ck)| {
            let base = ck
                .notes
                .get("variant")
                .and_then(Value::as_str)
                .unwrap_or("model")
                .to_string();
            let mut name = base.clone();
            let mut k = 2;
            while !seen.insert(name.clone()) {
                name = format!("{base}-{k}");
                k += 1;
            }
            name
        })
        .collect()
}

pub fn eval(cli: &Cli, a: &EvalArgs) -> CliResult<()> {
    let started = Instant::now();
    let file = config::load_file(cli.config.as_deref())?;
    let cks: Vec<(PathBuf, ModelCheckpoint)> = a
        .g_checkpoint
        .iter()
        .map(|p| Ok((p.clone(), load_checkpoint(p)?)))
        .collect::<CliResult<_>>()?;
    let fl = flags(&[
        ("dataset", a.dataset.clone()),
        ("sigma_grid", a.sigma_grid.clone()),
        ("samples_per_condition", opt(a.samples_per_condition)),
        ("sigma_mode", a.sigma_mode.clone()),
        ("seed", opt(a.seed)),
    ])?;
    let recorded = cks[0].1.notes.get("dataset").and_then(Value::as_str);
    let dataset = config::dataset_name(&file, &fl, recorded)?;
    let kv = config::layer(config::eval_defaults(&dataset)?, &file, &fl)?;
    let pc = config::parzen_config(&kv)?;
    let seed: u64 = kv.parsed("seed")?.unwrap_or(0);
    let data = load_preset(&dataset, &cli.data_dir)?;
    let (valid, test) = (&data.splits.valid, &data.splits.test);

    let mut m = RunManifest::new("eval", &kv, seed);
    m.dataset = Some(dataset_record(&data));
    let mut archs = Vec::new();
    for (i, (path, ck)) in cks.iter().enumerate() {
        let arch = generator_of(path, ck)?;
        check_fits(&format!("generator {}", path.display()), arch.cond_dim, arch.image_shape, test)?;
        m.input(&format!("g_checkpoint_{i}"), path)?;
        archs.push(arch);
    }
    if a.oracle && data.oracle.is_none() {
        return Err(CliError::usage(format!("dataset {dataset} has no exact sampler for --oracle")));
    }

    let t = Instant::now();
    let mut reports: Vec<ParzenReport> = Vec::new();
    for ((name, (_, ck)), arch) in model_names(&cks).iter().zip(&cks).zip(&archs) {
        let g = GeneratorSampler {
            arch,
            params: &ck.params,
        };
        reports.push(conditional_eval(&g, valid, test, &pc, seed, name)?);
        if a.shuffled_control {
            let control = ShuffledConditions { inner: g };
            reports.push(conditional_eval(&control, valid, test, &pc, seed, &format!("{name}-shuffled"))?);
        }
    }
    if let Some(oracle) = &data.oracle {
        if a.oracle {
            reports.push(conditional_eval(oracle, valid, test, &pc, seed, "oracle")?);
        }
    }
    let evaluated = ms(t);

    create_dir(&a.out)?;
    if reports.len() == 1 {
        let p = a.out.join("report.csv");
        write_file(&p, report_csv(&reports[0]).as_bytes())?;
        m.artifact("report", &p)?;
    } else {
        for r in &reports {
            let p = a.out.join(format!("report-{}.csv", r.model));
            write_file(&p, report_csv(r).as_bytes())?;
            m.artifact(&format!("report_{}", r.model), &p)?;
        }
    }
    let table = format_table(&reports)?;
    let table_path = a.out.join("table.txt");
    write_file(&table_path, table.as_bytes())?;
    m.artifact("table", &table_path)?;
    let json_path = a.out.join("report.json");
    write_file(&json_path, serde_json::to_string_pretty(&reports).expect("json").as_bytes())?;
    m.artifact("report_json", &json_path)?;
    m.timings_ms.insert("evaluate".into(), evaluated);
    m.timings_ms.insert("total".into(), ms(started));
    m.write(&a.out, &kv)?;

    for r in &reports {
        for row in &r.rows {
            if let Some(why) = &row.diagnostic {
                eprintln!("{}: {why}", r.model);
            }
        }
    }
    eprint!("{table}");
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "model": r.model,
                "mean_ll": r.rows.iter().map(|row| row.mean_ll).collect::<Vec<_>>(),
                "sigma": r.rows.iter().map(|row| row.sigma).collect::<Vec<_>>(),
            })
        })
        .collect();
    emit(&json!({"command": "eval", "dataset": dataset, "reports": summary}));
    Ok(())
}

pub fn sample(cli: &Cli, a: &SampleArgs) -> CliResult<()> {
    let started = Instant::now();
    let file = config::load_file(cli.config.as_deref())?;
    let fl = flags(&[
        ("condition", opt(a.condition)),
        ("count", opt(a.count)),
        ("seed", opt(a.seed)),
    ])?;
    let kv = config::layer(config::sample_defaults()?, &file, &fl)?;
    let condition: usize = kv.parsed("condition")?.unwrap_or(0);
    let count: usize = kv.parsed("count")?.unwrap_or(0);
    let seed: u64 = kv.parsed("seed")?.unwrap_or(0);

    let ck = load_checkpoint(&a.g_checkpoint)?;
    let arch = generator_of(&a.g_checkpoint, &ck)?;
    if condition >= arch.cond_dim {
        return Err(CliError::usage(format!(
            "condition {condition} is out of range: the generator has conditions 0..{}",
            arch.cond_dim
        )));
    }
    if count == 0 {
        return Err(CliError::usage("count must be positive"));
    }
    let g = GeneratorSampler {
        arch: &arch,
        params: &ck.params,
    };
    let samples: Tensor = g.sample(condition, count, &mut RngStream::new(seed).split("sample"))?;

    create_dir(&a.out)?;
    let mut container = Container::new(json!({
        "condition": condition,
        "label": ck.label_names.get(condition),
        "count": count,
        "seed": seed,
        "image_shape": arch.image_shape,
        "generator_params_sha256": ck.params.digest(),
    }));
    container.push("samples", samples.clone());
    let bin_path = a.out.join("samples.bin");
    write_file(&bin_path, &container.encode())?;
    let (grid, ext) = sample_grid(samples.data(), count, arch.image_shape);
    let grid_path = a.out.join(format!("grid.{ext}"));
    write_file(&grid_path, &grid)?;

    let mut m = RunManifest::new("sample", &kv, seed);
    m.input("g_checkpoint", &a.g_checkpoint)?;
    m.artifact("samples", &bin_path)?;
    m.artifact("grid", &grid_path)?;
    m.timings_ms.insert("total".into(), ms(started));
    m.write(&a.out, &kv)?;
    emit(&json!({
        "command": "sample",
        "condition": condition,
        "count": count,
        "samples": bin_path,
        "grid": grid_path,
    }));
    Ok(())
}
