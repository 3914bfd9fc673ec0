//! `hipar` command-line front end: fit a rule set, cross-validate, or
//! predict with a saved rule set.
//!
//! Exit codes: 0 on success, 1 for bad input (arguments, files, data), 2 when
//! an internal invariant is violated.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hipar_core::data::{read_records, Dataset};
use hipar_core::evaluation::{count_elements, cross_validate};
use hipar_core::pipeline::{run_hipar, RunConfig, Variant};
use hipar_core::regression::ErrorMetric;
use hipar_core::rules_io::{load_rules, serialize_rules, text_path};
use hipar_core::{fmt_sig, Error};

#[derive(Debug, Parser)]
#[command(name = "hipar", version, about = "Mine and apply hybrid regression rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mine a rule set on a CSV file and save it.
    Fit {
        #[command(flatten)]
        train: TrainArgs,
        /// Where to write the JSON rule set; a text rendering goes to PATH.txt.
        #[arg(long, value_name = "PATH")]
        rules_out: PathBuf,
    },
    /// Cross-validate against a global least-squares baseline.
    Eval {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Where to write the JSON report; printed to stdout when absent.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Predict the target for every row of a CSV file.
    Predict {
        #[arg(long, value_name = "PATH")]
        rules: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Output file, one prediction per line; stdout when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "COL")]
    target: String,
    /// Columns to treat as categorical even if they parse as numbers.
    #[arg(long, value_delimiter = ',', value_name = "A,B")]
    categorical: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    min_support: f64,
    #[arg(long, default_value_t = 1.0)]
    support_bias: f64,
    #[arg(long, default_value_t = 1.0)]
    overlap_bias: f64,
    #[arg(long, default_value = "rmse", value_parser = ["rmse", "meae"])]
    metric: String,
    #[arg(long, default_value = "standard", value_parser = ["standard", "f", "sd"])]
    variant: String,
    /// Rule count for the sd variant.
    #[arg(long)]
    sd_q: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainArgs {
    fn load(&self) -> Result<Dataset, Error> {
        let categorical: BTreeSet<String> = self.categorical.iter().cloned().collect();
        Dataset::load_csv(&self.input, &self.target, &categorical)
    }

    fn config(&self, folds: usize) -> Result<RunConfig, Error> {
        Ok(RunConfig {
            theta: self.min_support,
            support_bias: self.support_bias,
            overlap_bias: self.overlap_bias,
            metric: self.metric.parse::<ErrorMetric>()?,
            variant: self.variant.parse::<Variant>()?,
            sd_q: self.sd_q,
            seed: self.seed,
            folds,
            ..RunConfig::default()
        })
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn fit(train: &TrainArgs, rules_out: &Path) -> Result<(), Error> {
    let d = train.load()?;
    let cfg = train.config(RunConfig::default().folds)?;
    let model = run_hipar(&d, &cfg)?;
    serialize_rules(&model.selection, &d, rules_out)?;
    println!(
        "{} candidates, {} rules, {} elements; wrote {} and {}",
        model.candidates.rules.len(),
        model.selection.chosen.len(),
        count_elements(&model.selection),
        rules_out.display(),
        text_path(rules_out).display()
    );
    Ok(())
}

fn eval(train: &TrainArgs, folds: usize, report: Option<&Path>) -> Result<(), Error> {
    let d = train.load()?;
    let cfg = train.config(folds)?;
    let r = cross_validate(&d, &cfg)?;
    let json = serde_json::to_string_pretty(&r)?;
    match report {
        Some(path) => {
            fs::write(path, json).map_err(io_error(path))?;
            let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{}%", fmt_sig(x)));
            println!(
                "{} folds: mean rmse reduction {}, median meae reduction {}, {} rules, {} elements on average",
                r.folds.len(),
                show(r.mean_rho_rmse),
                show(r.median_rho_meae),
                fmt_sig(r.mean_rules),
                fmt_sig(r.mean_elements)
            );
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn predict(rules: &Path, input: &Path, out: Option<&Path>) -> Result<(), Error> {
    let file = load_rules(rules)?;
    let predictor = file.predictor()?;
    let reader = File::open(input).map_err(io_error(input))?;
    let records = read_records(reader, &file.schema)?;
    let predictions = predictor.predict_batch(&records)?;
    let write = |w: &mut dyn Write| -> io::Result<()> {
        for p in &predictions {
            writeln!(w, "{p}")?;
        }
        w.flush()
    };
    match out {
        Some(path) => {
            let f = File::create(path).map_err(io_error(path))?;
            write(&mut BufWriter::new(f)).map_err(io_error(path))
        }
        None => write(&mut io::stdout().lock()).map_err(io_error(Path::new("<stdout>"))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors, which is reserved for invariants
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Fit { train, rules_out } => fit(train, rules_out),
        Command::Eval { train, folds, report } => eval(train, *folds, report.as_deref()),
        Command::Predict { rules, input, out } => predict(rules, input, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
