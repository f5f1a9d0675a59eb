//! `pantolab` command-line front end.

mod cmd;
mod config;
mod fail;
mod output;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::cmd::eval::EvalArgs;
use crate::cmd::solve::SolveArgs;
use crate::cmd::verify::{GrowthArgs, LemmaArgs};
use crate::cmd::zeros::{FitArgs, ZerosArgs};
use crate::cmd::Outcome;
use crate::config::{echo, keys, overlay, Common, FileConfig};
use crate::fail::{CliError, EXIT_CHECK_FAILED};

#[derive(Debug, Parser)]
#[command(name = "pantolab", version, about = "Evaluate, continue and analyse solutions of y'(x) = a y(lambda x) + b y(x)")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Evaluate the analytic solution by series, contour integral or asymptotics.
    Eval(EvalArgs),
    /// Enumerate positive zeros and run the asymptotic checks.
    Zeros(ZerosArgs),
    /// Continue an initial function by the method of steps and sample it.
    Solve(SolveArgs),
    /// Check the zero-map lemma against its error bound.
    VerifyLemma(LemmaArgs),
    /// Growth probes for y^(m)(x) = sum a y^(k)(alpha x).
    VerifyGrowth(GrowthArgs),
    /// Re-run the zero fits on a stored zero table.
    Fit(FitArgs),
}

/// Merge flags over the config file for one subcommand's arguments.
fn merged<T: Serialize + DeserializeOwned + Default>(flags: &T, file: &FileConfig) -> Result<T, CliError> {
    file.check_keys(&[keys::<Common>(), keys::<T>()])?;
    overlay(flags, &file.extract::<T>()?)
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file = FileConfig::load(cli.common.config.as_deref())?;
    let common = overlay(&cli.common, &file.extract::<Common>()?)?;
    let r = common.resolve()?;
    if let Some(n) = r.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::input(format!("threads: {e}")))?;
    }
    let mut config: Map<String, Value> = echo(&r.common);
    // the thread cap does not change results, so it stays out of the artifact
    config.remove("threads");
    config.remove("output");
    match cli.cmd {
        Cmd::Eval(a) => cmd::eval::run(&r, merged(&a, &file)?, config),
        Cmd::Zeros(a) => cmd::zeros::run(&r, merged(&a, &file)?, config),
        Cmd::Solve(a) => cmd::solve::run(&r, merged(&a, &file)?, config),
        Cmd::VerifyLemma(a) => cmd::verify::run_lemma(&r, merged(&a, &file)?, config),
        Cmd::VerifyGrowth(a) => cmd::verify::run_growth(&r, merged(&a, &file)?, config),
        Cmd::Fit(a) => cmd::zeros::run_fit(&r, merged(&a, &file)?, config),
    }
    .and_then(|out| {
        out.artifact.write(r.format, r.common.output.as_deref())?;
        Ok(out)
    })
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(out) if out.pass => 0,
        Ok(_) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
