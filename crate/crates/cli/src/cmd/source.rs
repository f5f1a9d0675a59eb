//! Which solution a command works on: the analytic one, an initial function
//! from a JSON file, or a seeded random one.

use std::path::PathBuf;

use clap::Args;
use pantolab::series::PantographParams;
use pantolab::solver::InitialFunction;
use pantolab::{Float, PrecCtx};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{de, parse_real, Resolved};
use crate::fail::CliError;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceArgs {
    /// Use the entire solution with y(0) = 1 (the default).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub analytic: Option<bool>,
    /// Initial function on [lambda x0, x0] as JSON.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    /// Random continuous piecewise-linear initial function with this many pieces.
    #[arg(long)]
    pub random_pieces: Option<usize>,
    /// Right end of the initial interval [default: 1].
    #[arg(long)]
    #[serde(deserialize_with = "de::string")]
    pub x0: Option<String>,
}

pub enum Source {
    Analytic,
    File(String),
    Random(usize),
}

impl SourceArgs {
    /// Picks the source and fills in defaults so the echo is complete.
    pub fn resolve(&mut self) -> Result<Source, CliError> {
        let chosen = [self.analytic == Some(true), self.init_file.is_some(), self.random_pieces.is_some()];
        if chosen.iter().filter(|c| **c).count() > 1 {
            return Err(CliError::input("choose one of --analytic, --init-file, --random-pieces"));
        }
        let src = if let Some(path) = &self.init_file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            Source::File(text)
        } else if let Some(n) = self.random_pieces {
            Source::Random(n)
        } else {
            self.analytic = Some(true);
            Source::Analytic
        };
        if !matches!(src, Source::File(_)) {
            self.x0.get_or_insert_with(|| "1".into());
        }
        Ok(src)
    }
}

pub fn params(r: &Resolved) -> Result<PantographParams, CliError> {
    Ok(PantographParams::new(&r.lambda, &r.a, &r.b, &r.ctx)?)
}

/// Real initial function for a non-analytic source.
pub fn real_initial(src: &Source, args: &SourceArgs, r: &Resolved) -> Result<InitialFunction<Float>, CliError> {
    initial::<Float>(src, args, r, |x0, n, ctx| {
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        Ok(InitialFunction::random_piecewise_linear(&r.lambda, x0, n, &mut rng, ctx)?)
    })
}

pub fn initial<T: pantolab::numerics::Scalar>(
    src: &Source,
    args: &SourceArgs,
    r: &Resolved,
    random: impl FnOnce(&Float, usize, &PrecCtx) -> Result<InitialFunction<T>, CliError>,
) -> Result<InitialFunction<T>, CliError> {
    let x0 = || parse_real(args.x0.as_deref().unwrap_or("1"), &r.ctx);
    match src {
        Source::Analytic => Ok(InitialFunction::analytic(&params(r)?, &x0()?, &r.ctx)?),
        Source::File(text) => Ok(InitialFunction::from_json(text, &r.lambda, &r.ctx)?),
        Source::Random(n) => random(&x0()?, *n, &r.ctx),
    }
}
