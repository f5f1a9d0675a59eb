use std::path::PathBuf;

use clap::Args;
use pantolab::solver::continue_solution;
use pantolab::zeros::{
    enumerate_zeros, gamma_fit, ratio_check_with, robinson_check_with, zhang_check, AnalyticSolution, RealFunction, ZeroRecord, ZeroSource,
};
use pantolab::{Float, PrecCtx};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cmd::source::{params, real_initial, Source, SourceArgs};
use crate::cmd::Outcome;
use crate::config::{de, echo, parse_real, Resolved};
use crate::fail::CliError;
use crate::output::{read_csv_table, write_text, Artifact, Cell};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ZerosArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Number of zeros to find [default: 20].
    #[arg(long)]
    pub count: Option<usize>,
    /// Scan start [default: 0 for the analytic solution, x0 otherwise].
    #[arg(long)]
    #[serde(deserialize_with = "de::string")]
    pub x_lo: Option<String>,
    /// Scan end; for initial functions also the continuation range [default: 1e12 analytic, 3e5 otherwise].
    #[arg(long)]
    #[serde(deserialize_with = "de::string")]
    pub x_hi: Option<String>,
    /// Also print zeros with this many significant digits.
    #[arg(long)]
    pub digits: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub checks: CheckArgs,
    /// Write the check reports to this JSON file as well.
    #[arg(long)]
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckArgs {
    /// Tolerance on the last |ratio/q - 1| [default: 0.1].
    #[arg(long)]
    pub ratio_tol: Option<f64>,
    /// Tolerance of the Robinson-form check [default: 0.05].
    #[arg(long)]
    pub robinson_tol: Option<f64>,
}

impl CheckArgs {
    fn fill(&mut self) -> (f64, f64) {
        (*self.ratio_tol.get_or_insert(0.1), *self.robinson_tol.get_or_insert(0.05))
    }
}

/// All checks on a zero list; a check without enough data is reported as skipped.
fn reports(zeros: &[ZeroRecord], q: f64, tols: (f64, f64), ctx: &PrecCtx) -> (Value, bool) {
    let skipped = |name: &str, e: pantolab::Error| json!({ "name": name, "skipped": e.to_string() });
    let ratio = ratio_check_with(zeros, q, tols.0);
    let pass = ratio.as_ref().map(|r| r.pass).unwrap_or(zeros.len() < 3);
    let v = json!({
        "ratio_check": ratio.map_or_else(|e| skipped("ratio_check", e), |r| json!(r)),
        "gamma_fit": gamma_fit(zeros, q, ctx).map_or_else(|e| skipped("gamma_fit", e), |f| json!(f)),
        "robinson_check": robinson_check_with(zeros, q, tols.1).map_or_else(|e| skipped("robinson_check", e), |r| json!(r)),
        "zhang_check": zhang_check(zeros, q, ctx).map_or_else(|e| skipped("zhang_check", e), |r| json!(r)),
    });
    (v, pass)
}

fn zero_table(zeros: &[ZeroRecord], q: f64, digits: Option<usize>, config: Map<String, Value>, command: &str) -> Artifact {
    let mut cols = vec!["n", "x_n", "enclosure", "ratio", "normalized_ratio"];
    if digits.is_some() {
        cols.push("x_n_text");
    }
    let mut art = Artifact::new(command, config, &cols);
    for (i, z) in zeros.iter().enumerate() {
        let ratio = (i > 0).then(|| Float::with_val(z.x.prec(), &z.x / &zeros[i - 1].x).to_f64());
        let mut row: Vec<Cell> = vec![
            z.n.into(),
            z.x.to_f64().into(),
            z.enclosure.to_f64().into(),
            ratio.into(),
            ratio.map(|r| r / q).into(),
        ];
        if let Some(d) = digits {
            row.push(Cell::Text(z.x.to_string_radix(10, Some(d.max(1)))));
        }
        art.push(row);
    }
    art
}

pub fn run(r: &Resolved, mut args: ZerosArgs, mut config: Map<String, Value>) -> Result<Outcome, CliError> {
    let ctx = &r.ctx;
    let src = args.source.resolve()?;
    let count = *args.count.get_or_insert(20);
    let tols = args.checks.fill();
    let q = Float::with_val(ctx.bits(), r.lambda.recip_ref()).to_f64();
    let analytic;
    let continued;
    let f: &dyn RealFunction = match &src {
        Source::Analytic => {
            args.x_lo.get_or_insert_with(|| "0".into());
            args.x_hi.get_or_insert_with(|| "1e12".into());
            analytic = AnalyticSolution::new(&params(r)?, ctx)?;
            &analytic
        }
        _ => {
            let phi = real_initial(&src, &args.source, r)?;
            args.x_lo.get_or_insert_with(|| crate::output::fmt_f64(phi.x0().to_f64()));
            let hi = parse_real(args.x_hi.get_or_insert_with(|| "3e5".into()), ctx)?;
            continued = continue_solution(&params(r)?, &phi, &hi, ctx)?;
            &continued
        }
    };
    let lo = parse_real(args.x_lo.as_deref().unwrap(), ctx)?;
    let hi = parse_real(args.x_hi.as_deref().unwrap(), ctx)?;
    let zeros = enumerate_zeros(f, &lo, &hi, count, ctx)?;

    config.extend(echo(&args));
    let mut art = zero_table(&zeros, q, args.digits, config, "zeros");
    let (rep, _) = reports(&zeros, q, tols, ctx);
    if let Some(path) = &args.reports {
        let mut text = serde_json::to_string_pretty(&rep).expect("plain data");
        text.push('\n');
        write_text(&text, Some(path))?;
    }
    art.section("reports", rep);
    art.section("summary", json!({ "found": zeros.len(), "requested": count }));
    Ok(Outcome { artifact: art, pass: true })
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FitArgs {
    /// Zero table written by `zeros` (CSV); only the x_n column is used.
    #[arg(long)]
    pub zeros_file: Option<PathBuf>,
    /// Column holding the zeros [default: x_n_text if present, else x_n].
    #[arg(long)]
    pub column: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub checks: CheckArgs,
}

/// Re-run the asymptotic fits on a stored zero table; the exit status
/// follows the ratio check.
pub fn run_fit(r: &Resolved, mut args: FitArgs, mut config: Map<String, Value>) -> Result<Outcome, CliError> {
    let ctx = &r.ctx;
    let path = args.zeros_file.clone().ok_or_else(|| CliError::input("fit needs --zeros-file"))?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let (header, rows) = read_csv_table(&text)?;
    let col = args
        .column
        .get_or_insert_with(|| if header.iter().any(|h| h == "x_n_text") { "x_n_text" } else { "x_n" }.into())
        .clone();
    let idx = header
        .iter()
        .position(|h| *h == col)
        .ok_or_else(|| CliError::input(format!("no column \"{col}\" in {}", path.display())))?;
    let zeros = rows
        .iter()
        .enumerate()
        .map(|(n, row)| {
            let cell = row.get(idx).ok_or_else(|| CliError::input(format!("row {n} has no column \"{col}\"")))?;
            Ok(ZeroRecord {
                n,
                x: parse_real(cell, ctx)?,
                enclosure: Float::new(ctx.bits()),
                source: ZeroSource::PiecewiseSolution,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let tols = args.checks.fill();
    let q = Float::with_val(ctx.bits(), r.lambda.recip_ref()).to_f64();
    let (rep, pass) = reports(&zeros, q, tols, ctx);

    config.extend(echo(&args));
    let mut art = Artifact::new("fit", config, &["check", "statistic", "value"]);
    if let Value::Object(m) = &rep {
        for (name, report) in m {
            let stats = report.get("statistics").and_then(Value::as_object);
            if let Some(stats) = stats {
                for (k, v) in stats {
                    art.push(vec![Cell::Text(name.clone()), Cell::Text(k.clone()), Cell::Text(plain(v))]);
                }
            } else if let Value::Object(fit) = report {
                for k in ["gamma", "c", "offset", "residual_norm", "plain_gamma", "plain_residual_norm", "skipped"] {
                    if let Some(v) = fit.get(k) {
                        art.push(vec![Cell::Text(name.clone()), Cell::Text(k.into()), Cell::Text(plain(v))]);
                    }
                }
            }
        }
    }
    art.section("reports", rep);
    art.section("summary", json!({ "zeros": zeros.len(), "pass": pass }));
    Ok(Outcome { artifact: art, pass })
}

/// JSON scalar as bare text.
fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), crate::output::fmt_f64),
        other => other.to_string(),
    }
}
