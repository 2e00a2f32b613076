//! Experiment configuration.
//!
//! Settings come from three layers: built-in defaults, an optional flat
//! `key = value` file, and command-line flags, later layers winning. Keys
//! are the long flag names with `-` replaced by `_`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use debias::heston::HestonParams;
use debias::sequences::{
    integrand, integrand_names, root_function, root_function_names, QuadratureRule,
};
use debias::AdaptiveLaw;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Toy,
    Quad,
    Root,
    Heston,
    Design,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Toy => "toy",
            ExperimentKind::Quad => "quad",
            ExperimentKind::Root => "root",
            ExperimentKind::Heston => "heston",
            ExperimentKind::Design => "design",
        }
    }

    fn model_keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Toy => &["a", "b", "r"],
            ExperimentKind::Quad => &["integrand", "rule", "lo", "hi"],
            ExperimentKind::Root => &["function", "target", "lo", "hi"],
            ExperimentKind::Heston => &[
                "preset", "s0", "strike", "rate", "maturity", "rho", "kappa", "theta", "sigma_v",
                "v0",
            ],
            ExperimentKind::Design => &["r", "a", "budget_levels", "budget_evals"],
        }
    }
}

const SHARED_KEYS: &[&str] = &[
    "experiment",
    "reps",
    "seed",
    "p",
    "shift",
    "adaptive",
    "epsilon",
    "n_max",
    "threads",
    "out",
    "format",
];

const ALL_KINDS: [ExperimentKind; 5] = [
    ExperimentKind::Toy,
    ExperimentKind::Quad,
    ExperimentKind::Root,
    ExperimentKind::Heston,
    ExperimentKind::Design,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawConfig {
    /// `p` is the per-level stopping probability.
    Geometric { p: f64, shift: usize },
    /// `decay` is the factor applied to the survival weight at levels whose
    /// increment is at most `epsilon`.
    Adaptive {
        decay: f64,
        epsilon: f64,
        n_max: usize,
        shift: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Toy {
        a: f64,
        b: f64,
        r: f64,
    },
    Quad {
        integrand: String,
        rule: QuadratureRule,
        lo: f64,
        hi: f64,
    },
    Root {
        function: String,
        target: f64,
        lo: f64,
        hi: f64,
    },
    Heston {
        preset: Option<String>,
        params: HestonParams,
    },
    Design {
        r: Option<f64>,
        a: f64,
        budget_levels: f64,
        budget_evals: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub law: LawConfig,
    pub model: ModelConfig,
    pub reps: usize,
    pub seed: u64,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Option<OutputFormat>,
}

/// Raw `key -> value` settings before typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(
                    "config",
                    format!(
                        "line {}: expected `key = value`, got `{}`",
                        number + 1,
                        raw.trim()
                    ),
                )
            })?;
            let key = key.trim().replace('-', "_");
            if !is_known_key(&key) {
                return Err(CliError::config(
                    key.clone(),
                    format!("unknown setting on line {}", number + 1),
                ));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Applies the values that are present, overriding existing ones.
    pub fn overlay<'a>(&mut self, overrides: impl IntoIterator<Item = (&'a str, Option<String>)>) {
        for (key, value) in overrides {
            if let Some(value) = value {
                self.set(key, value);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_or<T: FromStr>(&self, key: &'static str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.parse_opt(key).map(|v| v.unwrap_or(default))
    }

    fn parse_opt<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::config(key, format!("cannot parse `{raw}`: {e}"))),
        }
    }

    fn flag(&self, key: &'static str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "on") => Ok(true),
            Some("false" | "0" | "no" | "off") => Ok(false),
            Some(raw) => Err(CliError::config(
                key,
                format!("expected a boolean, got `{raw}`"),
            )),
        }
    }
}

fn is_known_key(key: &str) -> bool {
    SHARED_KEYS.contains(&key) || ALL_KINDS.iter().any(|k| k.model_keys().contains(&key))
}

struct Defaults {
    p: f64,
    shift: usize,
}

fn defaults(kind: ExperimentKind) -> Defaults {
    match kind {
        ExperimentKind::Toy => Defaults { p: 0.5, shift: 0 },
        ExperimentKind::Quad => Defaults { p: 0.75, shift: 2 },
        ExperimentKind::Root | ExperimentKind::Heston | ExperimentKind::Design => {
            Defaults { p: 0.75, shift: 4 }
        }
    }
}

impl ExperimentConfig {
    pub const DEFAULT_REPS: usize = 100_000;
    pub const DEFAULT_SEED: u64 = 1;
    pub const DEFAULT_EPSILON: f64 = 1e-3;

    pub fn from_settings(kind: ExperimentKind, settings: &Settings) -> Result<Self, CliError> {
        if let Some(named) = settings.get("experiment") {
            if named != kind.name() {
                return Err(CliError::config(
                    "experiment",
                    format!(
                        "config names `{named}` but the `{}` subcommand was run",
                        kind.name()
                    ),
                ));
            }
        }
        let d = defaults(kind);
        let reps = settings.parse_or("reps", Self::DEFAULT_REPS)?;
        if reps < 2 {
            return Err(CliError::config(
                "reps",
                format!("need at least 2 replicates, got {reps}"),
            ));
        }
        let shift = settings.parse_or("shift", d.shift)?;
        let p = settings.parse_or("p", d.p)?;
        let law = if settings.flag("adaptive")? {
            LawConfig::Adaptive {
                decay: p,
                epsilon: settings.parse_or("epsilon", Self::DEFAULT_EPSILON)?,
                n_max: settings.parse_or("n_max", AdaptiveLaw::DEFAULT_N_MAX)?,
                shift,
            }
        } else {
            LawConfig::Geometric { p, shift }
        };
        let threads = settings.parse_opt::<usize>("threads")?;
        if threads == Some(0) {
            return Err(CliError::config(
                "threads",
                "thread count must be at least 1",
            ));
        }
        Ok(Self {
            experiment: kind,
            law,
            model: model_config(kind, settings)?,
            reps,
            seed: settings.parse_or("seed", Self::DEFAULT_SEED)?,
            threads,
            out: settings.get("out").map(PathBuf::from),
            format: settings
                .parse_opt("format")
                .map_err(|e| e.with_field("format"))?,
        })
    }
}

fn model_config(kind: ExperimentKind, s: &Settings) -> Result<ModelConfig, CliError> {
    Ok(match kind {
        ExperimentKind::Toy => ModelConfig::Toy {
            a: s.parse_or("a", 1.0)?,
            b: s.parse_or("b", 1.0)?,
            r: s.parse_or("r", 0.5)?,
        },
        ExperimentKind::Quad => {
            let name = s.get("integrand").unwrap_or("sin_pi_x").to_string();
            if integrand(&name).is_none() {
                return Err(CliError::config(
                    "integrand",
                    format!(
                        "unknown integrand `{name}` (known: {})",
                        integrand_names().collect::<Vec<_>>().join(", ")
                    ),
                ));
            }
            let rule = match s.get("rule").unwrap_or("simpson") {
                "simpson" => QuadratureRule::Simpson,
                "trapezoid" => QuadratureRule::Trapezoid,
                other => {
                    return Err(CliError::config(
                        "rule",
                        format!("unknown rule `{other}` (simpson or trapezoid)"),
                    ))
                }
            };
            ModelConfig::Quad {
                integrand: name,
                rule,
                lo: s.parse_or("lo", 0.0)?,
                hi: s.parse_or("hi", 1.0)?,
            }
        }
        ExperimentKind::Root => {
            let name = s.get("function").unwrap_or("cubic_root").to_string();
            if root_function(&name).is_none() {
                return Err(CliError::config(
                    "function",
                    format!(
                        "unknown function `{name}` (known: {})",
                        root_function_names().collect::<Vec<_>>().join(", ")
                    ),
                ));
            }
            ModelConfig::Root {
                function: name,
                target: s.parse_or("target", 1.0)?,
                lo: s.parse_or("lo", -2.0)?,
                hi: s.parse_or("hi", 3.0)?,
            }
        }
        ExperimentKind::Heston => {
            let preset = s.get("preset").map(str::to_string);
            let base = match &preset {
                Some(name) => HestonParams::preset(name).ok_or_else(|| {
                    CliError::config(
                        "preset",
                        format!(
                            "unknown preset `{name}` (known: {})",
                            HestonParams::PRESETS.join(", ")
                        ),
                    )
                })?,
                None => HestonParams::broadie_kaya_1(),
            };
            let params = HestonParams {
                s0: s.parse_or("s0", base.s0)?,
                strike: s.parse_or("strike", base.strike)?,
                rate: s.parse_or("rate", base.rate)?,
                maturity: s.parse_or("maturity", base.maturity)?,
                rho: s.parse_or("rho", base.rho)?,
                kappa: s.parse_or("kappa", base.kappa)?,
                theta: s.parse_or("theta", base.theta)?,
                sigma_v: s.parse_or("sigma_v", base.sigma_v)?,
                v0: s.parse_or("v0", base.v0)?,
            };
            let preset = preset.or_else(|| (params == base).then(|| "broadie_kaya_1".to_string()));
            ModelConfig::Heston { preset, params }
        }
        ExperimentKind::Design => ModelConfig::Design {
            r: s.parse_opt("r")?,
            a: s.parse_or("a", 1.0)?,
            budget_levels: s.parse_or("budget_levels", 5.0)?,
            budget_evals: s.parse_or("budget_evals", 100.0)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let s =
            Settings::parse("# comment\nreps = 500\n\nseed=9 # trailing\nn-max = 10\n").unwrap();
        assert_eq!(s.get("reps"), Some("500"));
        assert_eq!(s.get("seed"), Some("9"));
        assert_eq!(s.get("n_max"), Some("10"));
        assert!(Settings::parse("reps 500").is_err());
        let err = Settings::parse("bogus = 1").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn command_line_beats_file_beats_defaults() {
        let mut s = Settings::parse("reps = 500\nseed = 9").unwrap();
        s.overlay([("seed", Some("11".to_string())), ("p", None)]);
        let cfg = ExperimentConfig::from_settings(ExperimentKind::Quad, &s).unwrap();
        assert_eq!(cfg.reps, 500);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.law, LawConfig::Geometric { p: 0.75, shift: 2 });
    }

    #[test]
    fn errors_name_the_field() {
        let s = Settings::parse("reps = many").unwrap();
        let err = ExperimentConfig::from_settings(ExperimentKind::Toy, &s).unwrap_err();
        assert!(err.to_string().contains("reps"), "{err}");
        let s = Settings::parse("integrand = tan").unwrap();
        let err = ExperimentConfig::from_settings(ExperimentKind::Quad, &s).unwrap_err();
        assert!(err.to_string().contains("integrand"), "{err}");
        let s = Settings::parse("reps = 1").unwrap();
        assert!(ExperimentConfig::from_settings(ExperimentKind::Toy, &s).is_err());
        let s = Settings::parse("experiment = quad").unwrap();
        assert!(ExperimentConfig::from_settings(ExperimentKind::Toy, &s).is_err());
    }

    #[test]
    fn adaptive_law_uses_p_as_decay() {
        let s = Settings::parse("adaptive = true\np = 0.8\nepsilon = 1e-4").unwrap();
        let cfg = ExperimentConfig::from_settings(ExperimentKind::Root, &s).unwrap();
        assert_eq!(
            cfg.law,
            LawConfig::Adaptive {
                decay: 0.8,
                epsilon: 1e-4,
                n_max: 1_000_000,
                shift: 4
            }
        );
    }

    #[test]
    fn heston_presets_and_overrides() {
        let s = Settings::parse("preset = broadie_kaya_2\nrho = 0").unwrap();
        let cfg = ExperimentConfig::from_settings(ExperimentKind::Heston, &s).unwrap();
        match cfg.model {
            ModelConfig::Heston { preset, params } => {
                assert_eq!(preset.as_deref(), Some("broadie_kaya_2"));
                assert_eq!(params.rho, 0.0);
                assert_eq!(params.kappa, 6.21);
            }
            other => panic!("unexpected model {other:?}"),
        }
        let s = Settings::parse("preset = heston_3").unwrap();
        assert!(ExperimentConfig::from_settings(ExperimentKind::Heston, &s).is_err());
    }
}
