//! Command-line interface.

use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, ExperimentKind, OutputFormat, Settings};
use crate::error::CliError;
use crate::experiment::run_experiment;
use crate::report::{render, summary};

#[derive(Debug, Parser)]
#[command(
    name = "debias",
    version,
    about = "Unbiased Monte Carlo estimates from convergent approximation sequences"
)]
pub struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geometric sequence X_n = b + a r^n.
    Toy {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Integral by nested trapezoid or Simpson rules.
    Quad {
        #[command(flatten)]
        common: CommonArgs,
        /// sin_pi_x, exp, x_squared or sqrt.
        #[arg(long)]
        integrand: Option<String>,
        /// simpson or trapezoid.
        #[arg(long)]
        rule: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<f64>,
    },
    /// Root of h(x) = target by Newton iteration from a uniform start.
    Root {
        #[command(flatten)]
        common: CommonArgs,
        /// cubic_root, square_root or log.
        #[arg(long)]
        function: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<f64>,
    },
    /// European call under stochastic volatility.
    Heston {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        params: HestonArgs,
    },
    /// Optimal truncation designs for the geometric sequence.
    Design {
        #[command(flatten)]
        common: CommonArgs,
        /// Single ratio; defaults to a grid over (0, 1).
        #[arg(long, allow_hyphen_values = true)]
        r: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        /// Target E[N] for the geometric design.
        #[arg(long)]
        budget_levels: Option<f64>,
        /// Target E[2^N] for the cost-constrained design.
        #[arg(long)]
        budget_evals: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Number of replicates.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stopping probability of the geometric law, or the decay factor with --adaptive.
    #[arg(long)]
    pub p: Option<f64>,
    /// First level of the telescoping sum.
    #[arg(long)]
    pub shift: Option<usize>,
    /// Decay the survival weight only after increments below --epsilon.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Level guard for adaptive replicates.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct HestonArgs {
    /// broadie_kaya_1 or broadie_kaya_2.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub strike: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub maturity: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub sigma_v: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

impl CommonArgs {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("reps", s(&self.reps)),
            ("seed", s(&self.seed)),
            ("p", s(&self.p)),
            ("shift", s(&self.shift)),
            ("adaptive", self.adaptive.then(|| "true".to_string())),
            ("epsilon", s(&self.epsilon)),
            ("n_max", s(&self.n_max)),
            ("threads", s(&self.threads)),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            (
                "format",
                self.format.map(|f| match f {
                    FormatArg::Csv => "csv".to_string(),
                    FormatArg::Json => "json".to_string(),
                }),
            ),
        ]
    }
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Toy { .. } => ExperimentKind::Toy,
            Command::Quad { .. } => ExperimentKind::Quad,
            Command::Root { .. } => ExperimentKind::Root,
            Command::Heston { .. } => ExperimentKind::Heston,
            Command::Design { .. } => ExperimentKind::Design,
        }
    }

    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        let (common, mut extra) = match self {
            Command::Toy { common, a, b, r } => {
                (common, vec![("a", s(a)), ("b", s(b)), ("r", s(r))])
            }
            Command::Quad {
                common,
                integrand,
                rule,
                lo,
                hi,
            } => (
                common,
                vec![
                    ("integrand", integrand.clone()),
                    ("rule", rule.clone()),
                    ("lo", s(lo)),
                    ("hi", s(hi)),
                ],
            ),
            Command::Root {
                common,
                function,
                target,
                lo,
                hi,
            } => (
                common,
                vec![
                    ("function", function.clone()),
                    ("target", s(target)),
                    ("lo", s(lo)),
                    ("hi", s(hi)),
                ],
            ),
            Command::Heston { common, params: p } => (
                common,
                vec![
                    ("preset", p.preset.clone()),
                    ("s0", s(&p.s0)),
                    ("strike", s(&p.strike)),
                    ("rate", s(&p.rate)),
                    ("maturity", s(&p.maturity)),
                    ("rho", s(&p.rho)),
                    ("kappa", s(&p.kappa)),
                    ("theta", s(&p.theta)),
                    ("sigma_v", s(&p.sigma_v)),
                    ("v0", s(&p.v0)),
                ],
            ),
            Command::Design {
                common,
                r,
                a,
                budget_levels,
                budget_evals,
            } => (
                common,
                vec![
                    ("r", s(r)),
                    ("a", s(a)),
                    ("budget_levels", s(budget_levels)),
                    ("budget_evals", s(budget_evals)),
                ],
            ),
        };
        let mut all = common.overrides();
        all.append(&mut extra);
        all
    }
}

impl Cli {
    /// Merges defaults, the config file and flags.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut settings = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        settings.overlay(self.command.overrides());
        ExperimentConfig::from_settings(self.command.kind(), &settings)
    }

    /// Runs the command. The machine-readable report goes to `--out` or, with
    /// an explicit `--format`, to standard output; the summary goes to
    /// standard output unless the report already does.
    pub fn execute(&self) -> Result<(), CliError> {
        let cfg = self.resolve()?;
        let start = Instant::now();
        let outcome = run_experiment(&cfg)?;
        let wall = start.elapsed();
        let text = summary(&cfg, &outcome, wall);
        let report_to_stdout = cfg.out.is_none() && cfg.format.is_some();
        if report_to_stdout {
            eprint!("{text}");
        } else {
            print!("{text}");
        }
        let format = cfg.format.unwrap_or_else(|| match &cfg.out {
            Some(p) if p.extension().is_some_and(|e| e == "json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        });
        if cfg.out.is_none() && cfg.format.is_none() {
            return Ok(());
        }
        let rendered = render(&cfg, &outcome, format)?;
        match &cfg.out {
            Some(path) => std::fs::write(path, rendered).map_err(|e| CliError::io(path, e)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(rendered.as_bytes())
                    .and_then(|()| stdout.flush())
                    .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))
            }
        }
    }
}
