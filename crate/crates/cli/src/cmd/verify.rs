use clap::Args;
use pantolab::growth::{envelope_fit, growth_report};
use pantolab::solver::{continue_high_order, HighOrderFDE, InitialFunction};
use pantolab::zeros::lemma_check;
use pantolab::{Float, PrecCtx};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cmd::Outcome;
use crate::config::{de, echo, parse_complex, parse_real, Resolved};
use crate::fail::CliError;
use crate::output::{Artifact, Cell};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaArgs {
    /// Offset x0 of the zero map [default: 0.25].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::string")]
    pub x0: Option<String>,
    /// Constant M in the bound M log k / k [default: 3].
    #[arg(long)]
    pub bound_m: Option<f64>,
    #[arg(long)]
    pub k_lo: Option<u32>,
    #[arg(long)]
    pub k_hi: Option<u32>,
}

pub fn run_lemma(r: &Resolved, mut args: LemmaArgs, mut config: Map<String, Value>) -> Result<Outcome, CliError> {
    let ctx = &r.ctx;
    let x0 = parse_real(args.x0.get_or_insert_with(|| "0.25".into()), ctx)?;
    let m = *args.bound_m.get_or_insert(3.0);
    let k_lo = *args.k_lo.get_or_insert(5);
    let k_hi = *args.k_hi.get_or_insert(100);
    if k_lo < 2 || k_lo > k_hi {
        return Err(CliError::input(format!("need 2 <= k_lo <= k_hi, got [{k_lo}, {k_hi}]")));
    }
    let mut rep = lemma_check(&x0, &r.lambda, m, k_lo, k_hi, ctx)?;
    config.extend(echo(&args));
    let mut art = Artifact::new("verify-lemma", config, &["k", "x_k", "c_k", "rel_dev", "bound"]);
    for row in rep.data.as_array().into_iter().flatten() {
        let num = |k: &str| row.get(k).and_then(Value::as_f64).map_or(Cell::Empty, Cell::Num);
        let k = row.get("k").and_then(Value::as_u64).map_or(Cell::Empty, |k| Cell::Int(k as i64));
        art.push(vec![k, num("x"), num("c"), num("rel_dev"), num("bound")]);
    }
    let pass = rep.pass;
    // the per-k rows are already the table
    rep.data = Value::Null;
    art.section("report", json!(rep));
    Ok(Outcome { artifact: art, pass })
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthArgs {
    /// Order m of y^(m)(x) = sum a y^(k)(alpha x) [default: 2].
    #[arg(long)]
    pub order: Option<usize>,
    /// Right-hand term `k:a:alpha`, repeatable [default: 0:1:0.5].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::strings")]
    pub term: Option<Vec<String>>,
    /// Largest polynomial degree tested [default: 20].
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Degrees the polynomial detector must find; checked when given.
    #[arg(long, value_delimiter = ',')]
    pub expect_degrees: Option<Vec<u32>>,
    /// Solve and fit the growth envelope [default: true].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub envelope: Option<bool>,
    /// Initial values y, y', ..., y^(m-1), held constant on [alpha_min x0, x0] [default: 1, 0, ...].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::strings")]
    pub init: Option<Vec<String>>,
    #[arg(long)]
    #[serde(deserialize_with = "de::string")]
    pub x0: Option<String>,
    /// Envelope fit window [default: 2 .. 4096].
    #[arg(long)]
    #[serde(deserialize_with = "de::string")]
    pub x_lo: Option<String>,
    #[arg(long)]
    #[serde(deserialize_with = "de::string")]
    pub x_hi: Option<String>,
    /// Relative slack on both thresholds [default: 0.25].
    #[arg(long)]
    pub slack: Option<f64>,
}

fn parse_terms(specs: &[String], m: usize, ctx: &PrecCtx) -> Result<HighOrderFDE, CliError> {
    let mut alphas: Vec<Float> = Vec::new();
    let mut terms = Vec::new();
    for s in specs {
        let parts: Vec<&str> = s.split(':').collect();
        let [k, a, alpha] = parts[..] else {
            return Err(CliError::input(format!("term \"{s}\" is not k:a:alpha")));
        };
        let k: usize = k.trim().parse().map_err(|_| CliError::input(format!("term \"{s}\": bad derivative order")))?;
        let a = parse_complex(a, ctx)?;
        let alpha = parse_real(alpha, ctx)?;
        let j = match alphas.iter().position(|x| *x == alpha) {
            Some(j) => j,
            None => {
                alphas.push(alpha.clone());
                alphas.len() - 1
            }
        };
        terms.push((j, k, a, alpha));
    }
    Ok(HighOrderFDE::compressed(m, &terms)?)
}

pub fn run_growth(r: &Resolved, mut args: GrowthArgs, mut config: Map<String, Value>) -> Result<Outcome, CliError> {
    let ctx = &r.ctx;
    let m = *args.order.get_or_insert(2);
    let specs = args.term.get_or_insert_with(|| vec!["0:1:0.5".into()]).clone();
    let fde = parse_terms(&specs, m, ctx)?;
    let n_max = *args.n_max.get_or_insert(20);
    let slack = *args.slack.get_or_insert(0.25);
    let fit = if *args.envelope.get_or_insert(true) {
        let init = args
            .init
            .get_or_insert_with(|| (0..m).map(|k| if k == 0 { "1" } else { "0" }.to_string()).collect())
            .clone();
        if init.len() != m {
            return Err(CliError::input(format!("need {m} initial values, got {}", init.len())));
        }
        let x0 = parse_real(args.x0.get_or_insert_with(|| "1".into()), ctx)?;
        let lo = parse_real(args.x_lo.get_or_insert_with(|| "2".into()), ctx)?;
        let hi = parse_real(args.x_hi.get_or_insert_with(|| "4096".into()), ctx)?;
        let amin = fde.alpha_min().ok_or_else(|| CliError::input("equation has no terms"))?.clone();
        let phis = init
            .iter()
            .map(|v| Ok(InitialFunction::constant(&amin, &x0, parse_real(v, ctx)?, ctx)?))
            .collect::<Result<Vec<_>, CliError>>()?;
        let sol = continue_high_order(&fde, &phis, &hi, ctx)?;
        Some(envelope_fit(&sol, &lo, &hi, ctx)?)
    } else {
        None
    };
    let rep = growth_report(&fde, n_max, fit.as_ref(), ctx)?;

    let degrees_ok = args.expect_degrees.as_ref().map_or(true, |d| *d == rep.detected_polynomial_degrees);
    let envelope_ok = rep.envelope.as_ref().map_or(true, |v| {
        let [lower, upper] = v.thresholds;
        !v.fit.rejected && v.gamma_hat >= lower * (1.0 - slack) && v.gamma_hat <= upper * (1.0 + slack)
    });
    let pass = degrees_ok && envelope_ok;

    config.extend(echo(&args));
    let mut art = Artifact::new("verify-growth", config, &["x", "log_abs_y"]);
    if let Some(f) = &fit {
        for d in &f.data {
            art.push(vec![d[0].into(), d[1].into()]);
        }
    }
    art.section("report", json!(rep));
    art.section(
        "summary",
        json!({ "pass": pass, "degrees_match": degrees_ok, "envelope_within_thresholds": envelope_ok }),
    );
    Ok(Outcome { artifact: art, pass })
}
