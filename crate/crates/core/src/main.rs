use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hrcf::config::TrainConfig;
use hrcf::error::{HrcfError, Result};
use hrcf::graph::{generate_synthetic, write_interactions, SyntheticGraphSpec};
use hrcf::oracle::verify_oracles;
use hrcf::train::{ablate_lambda, ablate_orders, evaluate_table, format_table, load_graph, read_checkpoint, train, DataSource};

#[derive(Parser)]
#[command(name = "hrcf", version, about = "Hyperbolic graph collaborative filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and log metrics to <out>/metrics.jsonl.
    Train(TrainArgs),
    /// Evaluate a saved checkpoint.
    Eval {
        #[command(flatten)]
        common: TrainArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train one model per aggregation order.
    AblateOrders {
        #[command(flatten)]
        common: TrainArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
        orders: Vec<usize>,
    },
    /// Train one model per regularizer weight.
    AblateLambda {
        #[command(flatten)]
        common: TrainArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,5,10,20")]
        lambdas: Vec<f64>,
    },
    /// Write a synthetic interaction file.
    Synth {
        /// e.g. users=2000,items=1500,exponent=2.0,mean_degree=12,seed=1
        #[arg(long)]
        spec: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write the split graph in the export format.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
    },
    /// Run the built-in numerical self-checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "synth")]
    data: Option<PathBuf>,
    #[arg(long)]
    synth: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    wd: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timestamps are left out of metrics.jsonl.
    #[arg(long)]
    reproducible: bool,
    /// Extra overrides, `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl TrainArgs {
    fn config(&self) -> Result<TrainConfig> {
        let mut c = TrainConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| HrcfError::Config(format!("expected key=value, got {kv:?}")))?;
            c.set(k, v)?;
        }
        let flags = [
            ("dim", self.dim.map(|v| v.to_string())),
            ("layers", self.layers.map(|v| v.to_string())),
            ("margin", self.margin.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("lr", self.lr.map(|v| v.to_string())),
            ("weight_decay", self.wd.map(|v| v.to_string())),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        if self.reproducible {
            c.reproducible = true;
        }
        c.validate()?;
        Ok(c)
    }

    fn source(&self) -> Result<DataSource> {
        match (&self.data, &self.synth) {
            (Some(p), None) => Ok(DataSource::File(p.clone())),
            (None, Some(s)) => Ok(DataSource::Synthetic(SyntheticGraphSpec::parse(s)?)),
            _ => Err(HrcfError::Config("exactly one of --data or --synth is required".into())),
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let config = args.config()?;
            let graph = load_graph(&args.source()?, &config)?;
            if let Some(out) = &args.out {
                write_text(&out.join("config.txt"), &config.to_text())?;
            }
            let mut print = |epoch: usize, r: &hrcf::EvalResult| println!("{}", r.format_line(epoch));
            train(&config, &graph, args.out.as_deref(), Some(&mut print))?;
        }
        Command::Eval { common, checkpoint } => {
            let config = common.config()?;
            let graph = load_graph(&common.source()?, &config)?;
            let table = read_checkpoint(&checkpoint)?;
            if table.num_users() != graph.num_users() || table.num_items() != graph.num_items() {
                return Err(HrcfError::Config(format!(
                    "checkpoint has {} users and {} items, data has {} and {}",
                    table.num_users(),
                    table.num_items(),
                    graph.num_users(),
                    graph.num_items()
                )));
            }
            let result = evaluate_table(&graph, &table, &config)?;
            println!("{}", result.format_line(0));
        }
        Command::AblateOrders { common, orders } => {
            let config = common.config()?;
            let graph = load_graph(&common.source()?, &config)?;
            let rows = ablate_orders(&config, &graph, &orders, common.out.as_deref())?;
            let table = format_table("order", &rows);
            print!("{table}");
            if let Some(out) = &common.out {
                write_text(&out.join("orders.tsv"), &table)?;
            }
        }
        Command::AblateLambda { common, lambdas } => {
            let config = common.config()?;
            let graph = load_graph(&common.source()?, &config)?;
            let rows = ablate_lambda(&config, &graph, &lambdas, common.out.as_deref())?;
            let table = format_table("lambda", &rows);
            print!("{table}");
            if let Some(out) = &common.out {
                write_text(&out.join("lambdas.tsv"), &table)?;
            }
        }
        Command::Synth { spec, out, export, train_fraction } => {
            let spec = SyntheticGraphSpec::parse(&spec)?;
            let records = generate_synthetic(&spec)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_interactions(&records, &mut w)?;
            w.flush()?;
            if let Some(path) = export {
                let graph = hrcf::graph::split_and_index(&records, train_fraction, spec.seed)?;
                let mut w = BufWriter::new(File::create(path)?);
                graph.write_export(&mut w)?;
                w.flush()?;
            }
        }
        Command::Verify { seed } => {
            let report = verify_oracles(seed)?;
            print!("{}", report.format());
            if !report.all_passed() {
                return Err(HrcfError::OracleFailure("one or more checks failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
