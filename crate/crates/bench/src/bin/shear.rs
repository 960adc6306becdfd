use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shear_bench::config::{MetricKind, TrainSpec};
use shear_bench::data::Table;
use shear_bench::harness::{self, AGGREGATE_FILE, METRICS_FILE};
use shear_bench::records::{attributions_csv, metrics_csv, read_attributions, serde_csv, AttributionRow};
use shear_bench::report::{aggregate, evaluate, oracle_by_instance, preceding_differences};
use shear_bench::{binding, make_fixture, BenchConfig, Binding, Error, FixtureKind, Result, Sources};
use shear_core::estimate::explain;
use shear_core::exact::exact_shapley;
use shear_core::model::{accuracy, save_model, Activation, Head, LabeledData, Loss, TrainConfig};
use shear_core::value::RefPolicy;
use shear_core::Method;

/// Exact and accelerated Shapley explanations for small tabular models.
#[derive(Parser)]
#[command(name = "shear", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an MLP on a labelled CSV and save it as JSON.
    Train(TrainArgs),
    /// Brute-force Shapley values for every instance.
    Oracle {
        #[command(flatten)]
        binding: BindingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Explain every instance with one method at per-feature budget N.
    Explain {
        #[command(flatten)]
        binding: BindingArgs,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value_t = 16)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark sweep from a JSON config or a previous run's manifest.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score attribution CSVs and aggregate per method and budget.
    Report {
        #[command(flatten)]
        binding: BindingArgs,
        #[arg(long)]
        attributions: PathBuf,
        /// Exact attributions; required for ae and acc.
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = ["ae".to_string(), "acc".to_string(), "faithfulness".to_string(), "monotonicity".to_string()])]
        metrics: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a seeded synthetic dataset, model, group map and reference vector.
    Fixture {
        #[arg(long)]
        kind: FixtureKind,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BindingArgs {
    /// Model JSON.
    #[arg(long)]
    model: PathBuf,
    /// CSV of instances to explain.
    #[arg(long)]
    data: PathBuf,
    /// Column dropped from the data before explaining.
    #[arg(long)]
    label: Option<String>,
    /// Feature group JSON; one feature per column when omitted.
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Reference vector JSON.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// CSV to compute references from when no reference file is given.
    #[arg(long)]
    background: Option<PathBuf>,
    /// Reference policy for categorical groups.
    #[arg(long, default_value = "mode", value_parser = parse_policy)]
    categorical: RefPolicy,
    /// Explain only the first rows.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label: String,
    /// Hidden layer widths.
    #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [32usize, 32])]
    hidden: Vec<usize>,
    #[arg(long, default_value = "tanh", value_parser = parse_activation)]
    activation: Activation,
    #[arg(long, default_value = "cross_entropy", value_parser = parse_loss)]
    loss: Loss,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_json_enum<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_policy(s: &str) -> std::result::Result<RefPolicy, String> {
    parse_json_enum(s)
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    parse_json_enum(s)
}

fn parse_loss(s: &str) -> std::result::Result<Loss, String> {
    parse_json_enum(s)
}

impl BindingArgs {
    fn load(&self) -> Result<Binding> {
        Binding::load(&Sources {
            model: &self.model,
            instances: &self.data,
            label: self.label.as_deref(),
            groups: self.groups.as_deref(),
            reference: self.reference.as_deref(),
            background: self.background.as_deref(),
            categorical: self.categorical,
            limit: self.limit,
        })
    }
}

fn features(b: &Binding) -> Vec<String> {
    b.groups.names().map(str::to_string).collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let spec = TrainSpec {
                hidden: a.hidden,
                activation: a.activation,
                head: Head::Scalar,
                optimiser: TrainConfig {
                    learning_rate: a.learning_rate,
                    epochs: a.epochs,
                    batch_size: a.batch_size,
                    seed: a.seed,
                    loss: a.loss,
                },
            };
            let (x, y) = Table::read(&a.data)?.split_label(&a.label)?;
            let model = binding::train_model(&x, y.clone(), &spec)?;
            save_model(&model, &a.out)?;
            if a.loss == Loss::CrossEntropy {
                let acc = accuracy(&model, &LabeledData::new(x.rows, y)?)?;
                println!("training accuracy {acc:.4}");
            }
        }
        Command::Oracle { binding, out } => {
            let b = binding.load()?;
            let rows = (0..b.instances.len())
                .map(|i| Ok(AttributionRow::new(i, None, &exact_shapley(&b.value_function(i)?)?)))
                .collect::<Result<Vec<_>>>()?;
            fs::write(out, attributions_csv("", &features(&b), &rows)?)?;
        }
        Command::Explain { binding, method, n, seed, out } => {
            let b = binding.load()?;
            let rows = (0..b.instances.len())
                .map(|i| {
                    let s = harness::cell_seed(seed, method, n, i);
                    Ok(AttributionRow::new(i, Some(seed), &explain(&b.value_function(i)?, method, n, s)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let bytes = attributions_csv("", &features(&b), &rows)?;
            match out {
                Some(p) => fs::write(p, bytes)?,
                None => std::io::stdout().write_all(&bytes)?,
            }
        }
        Command::Bench { config } => {
            let cfg = BenchConfig::load(&config)?;
            let report = harness::run_bench(&cfg)?;
            let failed = report.cells.iter().filter(|c| c.status != "ok").count();
            println!(
                "{} attributions, {} failed cells, written to {}",
                report.attributions.len(),
                failed,
                report.output_dir.display()
            );
        }
        Command::Report { binding, attributions, oracle, metrics, out_dir } => {
            let wanted = metrics
                .iter()
                .map(|m| parse_json_enum::<MetricKind>(m).map_err(|_| Error::Config(format!("unknown metric {m:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let b = binding.load()?;
            let (_, rows) = read_attributions(&attributions)?;
            let truth = match &oracle {
                Some(p) => Some(oracle_by_instance(&read_attributions(p)?.1, b.instances.len())?),
                None => None,
            };
            let diffs = if wanted.contains(&MetricKind::Faithfulness) { Some(preceding_differences(&b, false)?) } else { None };
            let scored = evaluate(&b, &rows, truth.as_deref(), diffs.as_deref(), &wanted, false)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join(METRICS_FILE), metrics_csv("", &scored)?)?;
            fs::write(out_dir.join(AGGREGATE_FILE), serde_csv(&aggregate("", &scored, &wanted))?)?;
        }
        Command::Fixture { kind, m, seed, out } => {
            let files = make_fixture(kind, m, seed, &out)?;
            println!("wrote {}", files.model.parent().unwrap_or(&out).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
