//! Command-line front end: inject, impute, corr, evaluate, benchmark.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fcmi::baselines::{iterative_impute, knn_impute, mean_mode_impute, IterativeConfig, KnnConfig};
use fcmi::dataset::{default_missing_tokens, read_csv, write_csv, Dataset};
use fcmi::error::{Error, Result};
use fcmi::eval::{load_spec, run_experiment, AlgorithmSpec};
use fcmi::fcmi::{fcmi_impute_mixed, FcmiConfig};
use fcmi::missingness::{inject_missing, Mechanism, MissingnessSpec};

#[derive(Parser)]
#[command(name = "fcmi", version, about = "Correlation-guided missing data imputation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inject controlled missingness into a complete CSV file.
    Inject {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the removed cells (row,column,value CSV).
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 0.10)]
        rate: f64,
        #[arg(long, default_value = "mcar")]
        mechanism: String,
        #[arg(long)]
        mar_driver: Option<String>,
        /// Columns never masked; repeatable.
        #[arg(long)]
        exclude: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fill every missing cell of a CSV file.
    Impute {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "fcmi")]
        algo: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        fcmi_args: FcmiArgs,
        /// Write per-column training trajectories as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Report each column's correlation with a target column.
    Corr {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config and write the full result as JSON.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inject + impute-all + evaluate in one pass; flat CSV output.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FcmiArgs {
    /// Predictors per target column (fcmi).
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    kl_weight: f64,
}

impl FcmiArgs {
    fn config(&self, seed: u64) -> FcmiConfig {
        FcmiConfig {
            k: self.k,
            learning_rate: self.lr,
            max_iters: self.max_iters,
            kl_weight: self.kl_weight,
            seed,
            ..Default::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read_input(path: &PathBuf) -> Result<Dataset> {
    read_csv(path, &default_missing_tokens())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Inject {
            input,
            out,
            truth,
            rate,
            mechanism,
            mar_driver,
            exclude,
            seed,
        } => {
            let mechanism = match mechanism.as_str() {
                "mcar" => Mechanism::Mcar,
                "mar" => Mechanism::Mar,
                other => return Err(Error::Usage(format!("unknown mechanism '{other}'"))),
            };
            let d = read_input(&input)?;
            let spec = MissingnessSpec {
                rate,
                mechanism,
                excluded_columns: exclude.into_iter().collect::<BTreeSet<_>>(),
                seed,
                mar_driver,
            };
            let (injected, ground_truth) = inject_missing(&d, &spec)?;
            write_csv(&injected, &out)?;
            if let Some(truth_path) = truth {
                ground_truth.write_csv(&truth_path)?;
            }
            eprintln!("masked {} cells across {} rows", ground_truth.len(), d.n_rows());
            Ok(())
        }
        Command::Impute {
            input,
            out,
            algo,
            seed,
            fcmi_args,
            trace,
        } => {
            let d = read_input(&input)?;
            let spec =
                AlgorithmSpec::from_cli_name(&algo, fcmi_args.config(seed), KnnConfig::default().k)?;
            let imputed = match spec {
                AlgorithmSpec::Mean => mean_mode_impute(&d)?,
                AlgorithmSpec::Knn { k } => knn_impute(&d, &KnnConfig { k })?.dataset,
                AlgorithmSpec::MiceLite { sweeps, tol } => {
                    iterative_impute(&d, &IterativeConfig { sweeps, tol })?
                }
                AlgorithmSpec::Fcmi { config } => {
                    let (imputed, reports) = fcmi_impute_mixed(&d, &config)?;
                    if let Some(trace_path) = trace {
                        let mut file = std::fs::File::create(trace_path)?;
                        for (column, report) in &reports {
                            for (i, step) in report.trajectory.iter().enumerate() {
                                writeln!(
                                    file,
                                    "{}",
                                    serde_json::json!({
                                        "column": column,
                                        "iteration": i,
                                        "e": step.e,
                                        "kl": step.kl,
                                        "total": step.total,
                                    })
                                )?;
                            }
                        }
                    }
                    for (column, report) in &reports {
                        match &report.fallback {
                            Some(reason) => eprintln!("{column}: fallback ({reason})"),
                            None => eprintln!(
                                "{column}: {} iterations, final loss {:.6}",
                                report.iterations,
                                report.trajectory.last().map_or(f64::NAN, |l| l.total)
                            ),
                        }
                    }
                    imputed
                }
            };
            write_csv(&imputed, &out)
        }
        Command::Corr { input, target, out } => {
            let d = read_input(&input)?;
            let names: Vec<String> = d.names().to_vec();
            let cv = fcmi::correlation::correlation_vector(&d, &target, &names)?;
            let mut text = String::from("column,r\n");
            for (name, r) in &cv.entries {
                match r {
                    Some(r) => text.push_str(&format!("{name},{r}\n")),
                    None => text.push_str(&format!("{name},NA\n")),
                }
            }
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Evaluate { config, out } => {
            let spec = load_spec(&config)?;
            let result = run_experiment(&spec)?;
            match out {
                Some(path) => result.write_json(&path)?,
                None => println!("{}", serde_json::to_string_pretty(&result).expect("serializable")),
            }
            Ok(())
        }
        Command::Benchmark { config, out } => {
            let spec = load_spec(&config)?;
            let result = run_experiment(&spec)?;
            match out {
                Some(path) => result.write_flat_csv(std::fs::File::create(path)?)?,
                None => result.write_flat_csv(std::io::stdout().lock())?,
            }
            for agg in &result.aggregates {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
                eprintln!(
                    "{}: rmse {} +/- {}, accuracy {} +/- {}",
                    agg.algorithm,
                    fmt(agg.rmse_mean),
                    fmt(agg.rmse_std),
                    fmt(agg.accuracy_mean),
                    fmt(agg.accuracy_std)
                );
            }
            Ok(())
        }
    }
}
