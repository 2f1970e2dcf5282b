//! Epoch loop, metrics logging, checkpointing and the ablation drivers.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::TrainConfig;
use crate::encoder::{init_embeddings, EmbeddingTable};
use crate::error::{HrcfError, Result};
use crate::eval::{evaluate, EvalResult};
use crate::graph::{generate_synthetic, load_interactions, split_and_index, InteractionGraph, SyntheticGraphSpec};
use crate::objective::{forward, loss_and_grad, reg_loss, sample_triplets, LossReport, TripletBatch};
use crate::optim::OptimizerState;

/// Where interactions come from.
#[derive(Clone, Debug)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticGraphSpec),
}

/// Loads or synthesizes interactions and splits them with the config seed.
pub fn load_graph(source: &DataSource, config: &TrainConfig) -> Result<InteractionGraph> {
    let records = match source {
        DataSource::File(path) => load_interactions(path, config.rating_threshold)?,
        DataSource::Synthetic(spec) => generate_synthetic(spec)?,
    };
    split_and_index(&records, config.train_fraction, config.seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub epoch: usize,
    pub result: EvalResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    /// Evaluations at epoch 0, every `eval_every` epochs, and the last epoch.
    pub evals: Vec<EvalRecord>,
    /// Batch-averaged loss per epoch.
    pub losses: Vec<LossReport>,
    pub epoch_seconds: Vec<f64>,
}

impl RunRecord {
    pub fn final_eval(&self) -> &EvalResult {
        &self.evals.last().expect("epoch 0 is always evaluated").result
    }

    /// Best Recall@k over all evaluations.
    pub fn best_recall(&self, k: usize) -> f64 {
        self.evals
            .iter()
            .filter_map(|e| e.result.recall_at.get(&k).copied())
            .fold(0.0, f64::max)
    }
}

/// Evaluates the aligned embeddings of `table`.
pub fn evaluate_table(graph: &InteractionGraph, table: &EmbeddingTable, config: &TrainConfig) -> Result<EvalResult> {
    let fwd = forward(graph, table, config.layers, config.include_layer0)?;
    evaluate(graph, &fwd.output, &config.eval_ks, Some(config.head_fraction))
}

/// Mean squared norm of the aligned tangent sums.
pub fn mean_sq_norm(graph: &InteractionGraph, table: &EmbeddingTable, config: &TrainConfig) -> Result<f64> {
    let fwd = forward(graph, table, config.layers, config.include_layer0)?;
    Ok(reg_loss(fwd.stacked_tangent().view())?.0)
}

fn metrics_record(epoch: usize, loss: Option<&LossReport>, eval: &EvalResult, wall: Option<f64>) -> Value {
    let mut m = Map::new();
    m.insert("epoch".into(), json!(epoch));
    let (margin, reg, total, norm) = match loss {
        Some(l) => (json!(l.margin_loss), json!(l.reg_loss), json!(l.total), json!(l.mean_sq_norm)),
        None => (Value::Null, Value::Null, Value::Null, Value::Null),
    };
    m.insert("margin_loss".into(), margin);
    m.insert("reg_loss".into(), reg);
    m.insert("total_loss".into(), total);
    m.insert("mean_sq_norm".into(), norm);
    for (k, v) in &eval.recall_at {
        m.insert(format!("recall@{k}"), json!(v));
    }
    for (k, v) in &eval.ndcg_at {
        m.insert(format!("ndcg@{k}"), json!(v));
    }
    if let Some(seg) = &eval.per_segment {
        for (name, s) in [("head", &seg.head), ("tail", &seg.tail)] {
            for (k, v) in &s.recall_at {
                m.insert(format!("{name}_recall@{k}"), json!(v));
            }
            for (k, v) in &s.ndcg_at {
                m.insert(format!("{name}_ndcg@{k}"), json!(v));
            }
        }
    }
    m.insert("wall_clock_s".into(), wall.map_or(Value::Null, |w| json!(w)));
    Value::Object(m)
}

/// Writes atomically through a temporary file in the same directory.
fn write_checkpoint(table: &EmbeddingTable, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        table.save(&mut w)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::load(BufReader::new(File::open(path)?))
}

/// Output files of a run directory.
pub struct RunFiles {
    pub metrics: PathBuf,
    pub checkpoint: PathBuf,
    pub record: PathBuf,
    pub abort: PathBuf,
}

impl RunFiles {
    pub fn new(dir: &Path) -> Self {
        Self {
            metrics: dir.join("metrics.jsonl"),
            checkpoint: dir.join("checkpoint.txt"),
            record: dir.join("run.json"),
            abort: dir.join("abort.txt"),
        }
    }
}

/// Hook called after every evaluation with the epoch and its result.
pub type EvalCallback<'a> = &'a mut dyn FnMut(usize, &EvalResult);

/// Trains from a fresh initialization. When `out_dir` is set, metrics,
/// checkpoints (refreshed at every evaluation) and the run record are
/// written there.
pub fn train(
    config: &TrainConfig,
    graph: &InteractionGraph,
    out_dir: Option<&Path>,
    mut on_eval: Option<EvalCallback<'_>>,
) -> Result<(RunRecord, EmbeddingTable)> {
    config.validate()?;
    if graph.train_edges().is_empty() {
        return Err(HrcfError::EmptyDataset("training split has no edges".into()));
    }
    let params = config.objective();
    let files = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let f = RunFiles::new(dir);
            File::create(&f.metrics)?;
            Some(f)
        }
        None => None,
    };

    let mut table = init_embeddings(
        graph.num_users(),
        graph.num_items(),
        config.dim,
        config.init_sigma,
        config.seed,
    )?;
    let mut opt = OptimizerState::new(config.lr, config.weight_decay, config.full_rsgd)?;
    // negatives use their own stream so the split and init stay fixed across settings
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut record = RunRecord {
        config: config.clone(),
        evals: Vec::new(),
        losses: Vec::new(),
        epoch_seconds: Vec::new(),
    };

    let mut log_eval = |epoch: usize,
                        loss: Option<&LossReport>,
                        wall: Option<f64>,
                        table: &EmbeddingTable,
                        record: &mut RunRecord|
     -> Result<()> {
        let result = evaluate_table(graph, table, config)?;
        if let Some(f) = &files {
            let wall = if config.reproducible { None } else { wall };
            let line = metrics_record(epoch, loss, &result, wall);
            let mut w = OpenOptions::new().append(true).open(&f.metrics)?;
            writeln!(w, "{line}")?;
            write_checkpoint(table, &f.checkpoint)?;
        }
        if let Some(cb) = on_eval.as_mut() {
            cb(epoch, &result);
        }
        record.evals.push(EvalRecord { epoch, result });
        Ok(())
    };

    log_eval(0, None, Some(0.0), &table, &mut record)?;

    let started = Instant::now();
    for epoch in 1..=config.epochs {
        let epoch_start = Instant::now();
        let triplets = sample_triplets(graph, &mut rng);
        let mut sums = [0.0f64; 4];
        let mut batches = 0usize;
        for (b, batch) in triplets.chunks(config.batch_size).enumerate() {
            let (report, grad) = loss_and_grad(graph, &table, &batch, &params)?;
            if !report.is_finite() || !grad.is_finite() {
                return Err(abort(epoch, b, &batch, graph, &table, &report, files.as_ref()));
            }
            opt.step(&mut table, &grad)?;
            sums[0] += report.margin_loss;
            sums[1] += report.reg_loss;
            sums[2] += report.total;
            sums[3] += report.mean_sq_norm;
            batches += 1;
        }
        if !table.is_finite() {
            return Err(abort(epoch, batches, &TripletBatch::default(), graph, &table, &LossReport {
                margin_loss: f64::NAN,
                reg_loss: f64::NAN,
                total: f64::NAN,
                mean_sq_norm: f64::NAN,
            }, files.as_ref()));
        }
        let nb = batches.max(1) as f64;
        let loss = LossReport {
            margin_loss: sums[0] / nb,
            reg_loss: sums[1] / nb,
            total: sums[2] / nb,
            mean_sq_norm: sums[3] / nb,
        };
        record.losses.push(loss);
        record.epoch_seconds.push(epoch_start.elapsed().as_secs_f64());
        if epoch % config.eval_every == 0 || epoch == config.epochs {
            log_eval(
                epoch,
                Some(&loss),
                Some(started.elapsed().as_secs_f64()),
                &table,
                &mut record,
            )?;
        }
    }

    if let Some(f) = &files {
        let mut w = BufWriter::new(File::create(&f.record)?);
        serde_json::to_writer_pretty(&mut w, &record).map_err(std::io::Error::from)?;
        w.flush()?;
    }
    Ok((record, table))
}

fn abort(
    epoch: usize,
    batch: usize,
    triplets: &TripletBatch,
    graph: &InteractionGraph,
    table: &EmbeddingTable,
    report: &LossReport,
    files: Option<&RunFiles>,
) -> HrcfError {
    let nu = graph.num_users();
    let bad_users: Vec<usize> = (0..nu)
        .filter(|&u| table.users.row(u).iter().any(|v| !v.is_finite()))
        .collect();
    let bad_items: Vec<usize> = (0..graph.num_items())
        .filter(|&i| table.items.row(i).iter().any(|v| !v.is_finite()))
        .collect();
    let offending: Vec<String> = triplets
        .triplets
        .iter()
        .filter(|t| {
            bad_users.binary_search(&t.user).is_ok()
                || bad_items.binary_search(&t.positive).is_ok()
                || bad_items.binary_search(&t.negative).is_ok()
        })
        .take(20)
        .map(|t| format!("({},{},{})", t.user, t.positive, t.negative))
        .collect();
    let detail = format!(
        "non-finite loss {:?}; non-finite user rows {:?}; non-finite item rows {:?}; triplets {:?}",
        report,
        &bad_users[..bad_users.len().min(20)],
        &bad_items[..bad_items.len().min(20)],
        offending
    );
    if let Some(f) = files {
        let _ = fs::write(&f.abort, format!("epoch={epoch} batch={batch}\n{detail}\n"));
    }
    HrcfError::NumericAbort { epoch, batch, detail }
}

/// One training run per value, everything else fixed.
pub fn sweep<T: Copy + std::fmt::Display>(
    config: &TrainConfig,
    graph: &InteractionGraph,
    values: &[T],
    apply: impl Fn(&mut TrainConfig, T),
    out_dir: Option<&Path>,
    label: &str,
) -> Result<Vec<(T, RunRecord)>> {
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = config.clone();
        apply(&mut c, v);
        let dir = out_dir.map(|d| d.join(format!("{label}_{v}")));
        let (record, _) = train(&c, graph, dir.as_deref(), None)?;
        rows.push((v, record));
    }
    Ok(rows)
}

/// Trains one model per aggregation order.
pub fn ablate_orders(
    config: &TrainConfig,
    graph: &InteractionGraph,
    orders: &[usize],
    out_dir: Option<&Path>,
) -> Result<Vec<(usize, RunRecord)>> {
    if let Some(&bad) = orders.iter().find(|&&o| !(1..=12).contains(&o)) {
        return Err(HrcfError::Config(format!("aggregation order {bad} outside [1, 12]")));
    }
    sweep(config, graph, orders, |c, o| c.layers = o, out_dir, "order")
}

/// Trains one model per regularizer weight.
pub fn ablate_lambda(
    config: &TrainConfig,
    graph: &InteractionGraph,
    lambdas: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<(f64, RunRecord)>> {
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l >= 0.0)) {
        return Err(HrcfError::Config(format!("lambda {bad} must be >= 0")));
    }
    sweep(config, graph, lambdas, |c, l| c.lambda = l, out_dir, "lambda")
}

/// Comparison table: one row per setting with the final metrics.
pub fn format_table<T: std::fmt::Display>(label: &str, rows: &[(T, RunRecord)]) -> String {
    let mut out = String::new();
    let Some((_, first)) = rows.first() else {
        return out;
    };
    let ks: Vec<usize> = first.final_eval().recall_at.keys().copied().collect();
    out.push_str(label);
    for k in &ks {
        out.push_str(&format!("\tR@{k}"));
    }
    for k in &ks {
        out.push_str(&format!("\tN@{k}"));
    }
    out.push('\n');
    for (v, rec) in rows {
        let e = rec.final_eval();
        out.push_str(&v.to_string());
        for k in &ks {
            out.push_str(&format!("\t{:.6}", e.recall_at[k]));
        }
        for k in &ks {
            out.push_str(&format!("\t{:.6}", e.ndcg_at[k]));
        }
        out.push('\n');
    }
    out
}
