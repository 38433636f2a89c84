use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use melc::harness::{
    bounds_table, emit_reports, load_dataset, load_manifest, run_grid, write_bounds, BoundsSpec, DataFormat,
    LabelColumn,
};
use melc::{fit, ApproxConfig, KdeParams, LabeledDataset, MelcError, MelcModel, Method, Mode, OptimizerConfig};

#[derive(Parser)]
#[command(name = "melc", version, about = "Train and evaluate entropy-based linear classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// libsvm or csv (guessed from the extension when omitted)
    #[arg(long)]
    format: Option<DataFormat>,
    /// CSV label column, by name or 0-based index
    #[arg(long, default_value = "0")]
    label_column: LabelColumn,
}

impl DataArgs {
    fn load(&self, path: &Path) -> melc::Result<LabeledDataset> {
        load_dataset(path, self.format.unwrap_or_else(|| DataFormat::guess(path)), &self.label_column)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write it as JSON
    Train {
        data: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// exact, discard or bin
        #[arg(long, default_value = "exact")]
        method: Mode,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// cg or lbfgs
        #[arg(long, default_value = "cg")]
        optimizer: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
        #[command(flatten)]
        data_args: DataArgs,
    },
    /// Score a saved model on a dataset
    Eval {
        model: PathBuf,
        data: PathBuf,
        #[command(flatten)]
        data_args: DataArgs,
    },
    /// Run a cross-validated grid from a TOML manifest and write reports
    Grid {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the discard threshold and bin width over ε
    Bounds {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        v_values: Vec<f64>,
        #[arg(long, default_value_t = 0.001)]
        eps_min: f64,
        #[arg(long, default_value_t = 0.5)]
        eps_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = "bounds.csv")]
        out: PathBuf,
    },
}

fn run(command: Command) -> melc::Result<()> {
    match command {
        Command::Train {
            data,
            gamma,
            method,
            epsilon,
            optimizer,
            seed,
            restarts,
            out,
            data_args,
        } => {
            let dataset = data_args.load(&data)?;
            let approx = ApproxConfig::new(method, if method == Mode::Exact { 0.0 } else { epsilon });
            let opt = OptimizerConfig::new(optimizer).with_seed(seed);
            let model = fit(&dataset, KdeParams::new(gamma)?, approx, &opt, restarts)?;
            model.save(&out)?;
            let train = model.evaluate(&dataset)?;
            let t = model.training.as_ref().expect("fit records training");
            println!(
                "wrote {}: D_CS {:.6}, {} iterations{}, {} exp calls ({:.4} of naive), training BAC {:.4}",
                out.display(),
                t.value_final,
                t.iterations,
                if t.converged { "" } else { " (not converged)" },
                t.exp_calls_total,
                t.exp_calls_total as f64 / t.naive_pairs_total as f64,
                train.bac
            );
        }
        Command::Eval { model, data, data_args } => {
            let model = MelcModel::load(&model)?;
            let metrics = model.evaluate(&data_args.load(&data)?)?;
            println!("{}", serde_json::to_string(&metrics)?);
        }
        Command::Grid { manifest, out } => {
            let (m, datasets) = load_manifest(&manifest)?;
            std::fs::create_dir_all(&out)?;
            let records = run_grid(&datasets, &m.grid, Some(&out.join("records.csv")))?;
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            if records.is_empty() {
                println!("grid is empty; wrote {}", out.join("records.csv").display());
            } else {
                emit_reports(&records, &out)?;
                println!("{} cells ({failed} failed); reports in {}", records.len(), out.display());
            }
        }
        Command::Bounds {
            v_values,
            eps_min,
            eps_max,
            steps,
            out,
        } => {
            let spec = BoundsSpec {
                v_values,
                eps_min,
                eps_max,
                steps,
                ..BoundsSpec::default()
            };
            let rows = bounds_table(&spec)?;
            write_bounds(&out, &rows)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &MelcError) -> u8 {
    match e {
        MelcError::InvalidConfig(_) => 1,
        e if e.is_data_error() => 2,
        _ => 3,
    }
}
