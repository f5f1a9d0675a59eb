use clap::{Args, ValueEnum};
use pantolab::numerics::Scalar;
use pantolab::series::pantograph_eval_direct;
use pantolab::solver::{continue_solution, InitialFunction, PiecewiseSolution};
use pantolab::{Complex, Float};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cmd::source::{initial, params, Source, SourceArgs};
use crate::cmd::Outcome;
use crate::config::{de, echo, parse_real, Resolved};
use crate::fail::CliError;
use crate::output::{Artifact, Cell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Continue up to this point [default: 50].
    #[arg(long)]
    #[serde(deserialize_with = "de::string")]
    pub x_max: Option<String>,
    /// Sample points on [lambda x0, x_max] [default: 200].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sample spacing [default: uniform].
    #[arg(long, value_enum)]
    pub spacing: Option<Spacing>,
    /// Compare with the power series of the solution with y(0) = 1.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub compare_series: Option<bool>,
    /// Largest accepted deviation from the series [default: 1e-12].
    #[arg(long)]
    pub compare_tol: Option<f64>,
    /// Residual probes per piece [default: 8].
    #[arg(long)]
    pub residual_probes: Option<usize>,
}

fn grid(lo: &Float, hi: &Float, n: usize, spacing: Spacing) -> Vec<Float> {
    let p = lo.prec();
    if n == 1 {
        return vec![lo.clone()];
    }
    (0..n)
        .map(|j| {
            let t = Float::with_val(p, j as u32) / (n - 1) as u32;
            let x = match spacing {
                Spacing::Uniform => Float::with_val(p, hi - lo) * t + lo,
                Spacing::Geometric => Float::with_val(p, Float::with_val(p, hi / lo).ln() * t).exp() * lo,
            };
            // keep the end points exact
            if j + 1 == n { hi.clone() } else { x }
        })
        .collect()
}

fn report<T: Scalar>(
    sol: &PiecewiseSolution<T>,
    r: &Resolved,
    args: &SolveArgs,
    config: Map<String, Value>,
) -> Result<Outcome, CliError> {
    let ctx = &r.ctx;
    let (lo, hi) = sol.domain();
    let xs = grid(&lo, &hi, args.samples.unwrap(), args.spacing.unwrap());
    let ys = sol.sample(&xs)?;
    let x0 = sol.phi().x0().clone();
    let compare = args.compare_series.unwrap();
    let prm = params(r)?;
    let mut cols = vec!["x", "y_re", "y_im", "dy_re", "dy_im"];
    if compare {
        cols.push("rel_dev_series");
    }
    let mut art = Artifact::new("solve", config, &cols);
    let mut max_dev = 0f64;
    for (x, y) in xs.iter().zip(&ys) {
        let y = y.to_complex();
        let dy = if *x >= x0 { Some(sol.eval_derivative(x)?.to_complex()) } else { None };
        let mut row: Vec<Cell> = vec![
            x.to_f64().into(),
            y.real().to_f64().into(),
            y.imag().to_f64().into(),
            dy.as_ref().map(|d| d.real().to_f64()).into(),
            dy.as_ref().map(|d| d.imag().to_f64()).into(),
        ];
        if compare {
            let s = pantograph_eval_direct(&prm, &Complex::with_val(ctx.bits(), (x, 0)), ctx)?.value;
            let p = ctx.bits();
            let d = Float::with_val(p, Complex::with_val(p, &y - &s).abs_ref()) / Float::with_val(p, s.abs_ref());
            let d = d.to_f64();
            max_dev = max_dev.max(d);
            row.push(d.into());
        }
        art.push(row);
    }
    let res = sol.residual_check(args.residual_probes.unwrap())?;
    let mut summary = json!({
        "domain": [lo.to_f64(), hi.to_f64()],
        "pieces": sol.pieces().len(),
        "global_err": sol.global_err().to_f64(),
        "residual": { "max_rel": res.max_rel, "worst_x": res.worst_x, "samples": res.samples },
    });
    let mut pass = true;
    if compare {
        let tol = args.compare_tol.unwrap();
        pass = max_dev <= tol;
        summary["series_comparison"] = json!({ "max_rel_dev": max_dev, "tolerance": tol, "pass": pass });
    }
    art.section("summary", summary);
    Ok(Outcome { artifact: art, pass })
}

pub fn run(r: &Resolved, mut args: SolveArgs, mut config: Map<String, Value>) -> Result<Outcome, CliError> {
    let ctx = &r.ctx;
    let src = args.source.resolve()?;
    let x_max = parse_real(args.x_max.get_or_insert_with(|| "50".into()), ctx)?;
    args.samples.get_or_insert(200);
    args.spacing.get_or_insert(Spacing::Uniform);
    args.residual_probes.get_or_insert(8);
    if *args.compare_series.get_or_insert(false) {
        args.compare_tol.get_or_insert(1e-12);
    }
    if args.samples == Some(0) {
        return Err(CliError::input("samples must be positive"));
    }
    config.extend(echo(&args));
    let prm = params(r)?;

    // real arithmetic when everything is real, complex otherwise
    let real_phi = if prm.is_real() {
        match initial::<Float>(&src, &args.source, r, |x0, n, c| {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            Ok(InitialFunction::random_piecewise_linear(&r.lambda, x0, n, &mut rng, c)?)
        }) {
            Ok(phi) => Some(phi),
            Err(e) if e.message.contains("complex-valued") => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    match real_phi {
        Some(phi) => report(&continue_solution(&prm, &phi, &x_max, ctx)?, r, &args, config),
        None => {
            if matches!(src, Source::Random(_)) {
                return Err(CliError::input("random initial functions are real; use real a and b"));
            }
            let phi = initial::<Complex>(&src, &args.source, r, |_, _, _| unreachable!("handled above"))?;
            report(&continue_solution(&prm, &phi, &x_max, ctx)?, r, &args, config)
        }
    }
}
