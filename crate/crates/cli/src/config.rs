//! Run configuration: a flat TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pantolab::{Complex, Float, PrecCtx};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::fail::CliError;

/// Environment variable holding the default precision in bits.
pub const BITS_ENV: &str = "PANTOLAB_BITS";

/// Number-or-string fields, so `lambda = 0.5` and `lambda = "0.5"` both work.
pub(crate) mod de {
    use serde::{Deserialize, Deserializer};
    use toml::Value;

    fn text(v: Value) -> Result<String, String> {
        match v {
            Value::String(s) => Ok(s),
            Value::Integer(i) => Ok(i.to_string()),
            Value::Float(f) => Ok(f.to_string()),
            other => Err(format!("expected a number or string, found {}", other.type_str())),
        }
    }

    pub fn string<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
        Option::<Value>::deserialize(d)?
            .map(text)
            .transpose()
            .map_err(serde::de::Error::custom)
    }

    pub fn strings<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<String>>, D::Error> {
        let Some(v) = Option::<Value>::deserialize(d)? else {
            return Ok(None);
        };
        let items = match v {
            Value::Array(items) => items,
            single => vec![single],
        };
        items
            .into_iter()
            .map(text)
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Common {
    /// Flat TOML file supplying defaults for any flag (flags win).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Working precision in bits [default: $PANTOLAB_BITS or 256].
    #[arg(long, global = true)]
    pub bits: Option<u32>,
    /// Requested relative accuracy of final results.
    #[arg(long, global = true)]
    pub target_rel_err: Option<f64>,
    /// Scaling factor in (0, 1) [default: 0.5].
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::string")]
    pub lambda: Option<String>,
    /// Coefficient of y(lambda z), e.g. -1 or 1.5-2i [default: -1].
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::string")]
    pub a: Option<String>,
    /// Coefficient of y(z) [default: 0].
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::string")]
    pub b: Option<String>,
    /// Scaling factors of a multi-pantograph equation (series only).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::strings")]
    pub lambdas: Option<Vec<String>>,
    /// Coefficients matching --lambdas.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::strings")]
    pub a_list: Option<Vec<String>>,
    /// Artifact format [default: csv].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file [default: stdout].
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for randomized initial functions [default: 2024].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Fields of `T` as they appear in the config file.
pub fn keys<T: Default + Serialize>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

/// Parsed config file, kept as JSON so it can be split between structs.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: Map<String, Value>,
    toml: toml::Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let toml: toml::Table = text.parse().map_err(|e| CliError::input(format!("config file: {e}")))?;
        let mut values = Map::new();
        for (k, v) in &toml {
            if v.is_table() {
                return Err(CliError::input(format!("config file must be flat, but \"{k}\" is a table")));
            }
            let v = serde_json::to_value(v).map_err(|e| CliError::input(e.to_string()))?;
            values.insert(k.replace('-', "_"), v);
        }
        Ok(Self { values, toml })
    }

    /// Every key must belong to one of the given field lists.
    pub fn check_keys(&self, known: &[Vec<String>]) -> Result<(), CliError> {
        for k in self.values.keys() {
            if !known.iter().any(|ks| ks.contains(k)) {
                return Err(CliError::input(format!("unknown config key \"{k}\"")));
            }
        }
        Ok(())
    }

    /// The subset of the file that `T` knows about.
    pub fn extract<T: DeserializeOwned + Default + Serialize>(&self) -> Result<T, CliError> {
        let wanted = keys::<T>();
        let mut sub = toml::Table::new();
        for (k, v) in &self.toml {
            if wanted.contains(&k.replace('-', "_")) {
                sub.insert(k.replace('-', "_"), v.clone());
            }
        }
        sub.try_into().map_err(|e: toml::de::Error| CliError::input(format!("config file: {e}")))
    }
}

/// Flag values win over file values, field by field.
pub fn overlay<T: Serialize + DeserializeOwned>(flags: &T, file: &T) -> Result<T, CliError> {
    let (Value::Object(f), Value::Object(mut merged)) = (to_json(flags), to_json(file)) else {
        unreachable!("config structs serialize to maps")
    };
    for (k, v) in f {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::input(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config structs are plain data")
}

/// JSON echo of a config struct without unset fields.
pub fn echo<T: Serialize>(v: &T) -> Map<String, Value> {
    match to_json(v) {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// Common settings with defaults filled in and numbers parsed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub common: Common,
    pub ctx: PrecCtx,
    pub lambda: Float,
    pub a: Complex,
    pub b: Complex,
    pub format: Format,
    pub seed: u64,
}

impl Common {
    pub fn resolve(mut self) -> Result<Resolved, CliError> {
        let bits = match self.bits {
            Some(b) => b,
            None => match std::env::var(BITS_ENV) {
                Ok(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| CliError::input(format!("{BITS_ENV}=\"{s}\" is not a bit count")))?,
                Err(_) => PrecCtx::DEFAULT_BITS,
            },
        };
        let ctx = match self.target_rel_err {
            Some(t) => PrecCtx::new(bits, t)?,
            None => PrecCtx::with_bits(bits)?,
        };
        self.bits = Some(bits);
        self.target_rel_err = Some(ctx.target());
        let lambda_s = self.lambda.get_or_insert_with(|| "0.5".into()).clone();
        let a_s = self.a.get_or_insert_with(|| "-1".into()).clone();
        let b_s = self.b.get_or_insert_with(|| "0".into()).clone();
        let lambda = parse_real(&lambda_s, &ctx)?;
        if !(lambda > 0 && lambda < 1) {
            return Err(CliError::input(format!("lambda out of (0,1): {lambda_s}")));
        }
        let a = parse_complex(&a_s, &ctx)?;
        let b = parse_complex(&b_s, &ctx)?;
        let format = *self.format.get_or_insert(Format::Csv);
        let seed = *self.seed.get_or_insert(2024);
        Ok(Resolved {
            common: self,
            ctx,
            lambda,
            a,
            b,
            format,
            seed,
        })
    }
}

pub fn parse_real(s: &str, ctx: &PrecCtx) -> Result<Float, CliError> {
    ctx.parse(s).map_err(|_| CliError::input(format!("\"{s}\" is not a real number")))
}

/// `x`, `yi`, `x+yi` or `x-yi`, with `i` or `j` as the imaginary unit.
pub fn parse_complex(s: &str, ctx: &PrecCtx) -> Result<Complex, CliError> {
    let bad = || CliError::input(format!("\"{s}\" is not a complex number"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let p = ctx.bits();
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(Complex::with_val(p, (parse_real(&t, ctx).map_err(|_| bad())?, 0)));
    };
    // split before the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re = parse_real(re, ctx).map_err(|_| bad())?;
    let im = parse_real(im.trim_start_matches('+'), ctx).map_err(|_| bad())?;
    Ok(Complex::with_val(p, (re, im)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = PrecCtx::default();
        let cases = [
            ("1", (1.0, 0.0)),
            ("-3", (-3.0, 0.0)),
            ("5+2i", (5.0, 2.0)),
            ("5-2i", (5.0, -2.0)),
            ("2i", (0.0, 2.0)),
            ("-i", (0.0, -1.0)),
            ("1e-3+4.5e+2j", (1e-3, 450.0)),
            (" 30 + 10i ", (30.0, 10.0)),
        ];
        for (s, (re, im)) in cases {
            let z = parse_complex(s, &c).unwrap();
            assert_eq!((z.real().to_f64(), z.imag().to_f64()), (re, im), "{s}");
        }
        assert!(parse_complex("1+", &c).is_err());
        assert!(parse_complex("abc", &c).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig::parse("lambda = 0.3\nbits = 128\nseed = 7\n").unwrap();
        let from_file: Common = file.extract().unwrap();
        let flags = Common {
            bits: Some(192),
            ..Default::default()
        };
        let merged = overlay(&flags, &from_file).unwrap();
        assert_eq!(merged.bits, Some(192));
        assert_eq!(merged.lambda.as_deref(), Some("0.3"));
        assert_eq!(merged.seed, Some(7));
    }

    #[test]
    fn nested_and_unknown_keys_rejected() {
        assert!(FileConfig::parse("[eval]\nz = 1\n").is_err());
        let file = FileConfig::parse("lamda = 0.3\n").unwrap();
        assert!(file.check_keys(&[keys::<Common>()]).is_err());
    }

    #[test]
    fn lambda_range() {
        let c = Common {
            lambda: Some("1.2".into()),
            ..Default::default()
        };
        let e = c.resolve().unwrap_err();
        assert!(e.to_string().contains("lambda out of (0,1)"));
        assert_eq!(e.exit_code(), 2);
    }
}
