use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use jnk_core::freq::{linspace, DEFAULT_RANGE_SIZE};
use jnk_core::{Color, SignificanceConfig, StyleConfig, Thresholds};

#[derive(Debug, Parser)]
#[command(
    name = "jnk",
    version,
    about = "Johnson-Neyman regions and JNK heatmaps for two- and three-way interactions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-way interaction from coefficients and their covariance (JSON)
    Freq2(RunArgs),
    /// Three-way interaction from coefficients and their covariance (JSON)
    Freq3(RunArgs),
    /// Two-way interaction from posterior draws (CSV)
    Bayes2(RunArgs),
    /// Three-way interaction from posterior draws (CSV)
    Bayes3(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Model spec JSON (frequentist) or posterior draws CSV (Bayesian).
    /// With --grouped: a JSON array of specs, or a directory of CSV files.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub theta1: String,
    #[arg(long)]
    pub theta2: String,
    #[arg(long)]
    pub theta3: Option<String>,
    /// Moderator values for theta1: `a,b,c` or `min:max:count`
    #[arg(long, allow_hyphen_values = true)]
    pub theta1_vals: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2_vals: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta3_vals: Option<String>,
    /// Significance level (frequentist modes)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Grid points per moderator axis (frequentist modes)
    #[arg(long)]
    pub range_size: Option<usize>,
    /// Bayesian p-value interval treated as non-significant: `t1,t2`
    #[arg(long)]
    pub thresholds: Option<String>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Run once per group and write each group into its own subdirectory
    #[arg(long)]
    pub grouped: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Plot width in pixels
    #[arg(long, default_value_t = 800)]
    pub width: i64,
    /// Plot height in pixels
    #[arg(long, default_value_t = 600)]
    pub height: i64,
    #[command(flatten)]
    pub style: StyleArgs,
}

#[derive(Debug, Default, Args)]
pub struct StyleArgs {
    #[arg(long)]
    pub sig_color: Option<Color>,
    #[arg(long)]
    pub non_sig_color: Option<Color>,
    #[arg(long)]
    pub line_color: Option<Color>,
    #[arg(long)]
    pub color_low: Option<Color>,
    #[arg(long)]
    pub color_mid: Option<Color>,
    #[arg(long)]
    pub color_high: Option<Color>,
    #[arg(long)]
    pub color_grid: Option<Color>,
    #[arg(long)]
    pub grid_density: Option<f64>,
    #[arg(long)]
    pub grid_spacing: Option<f64>,
    #[arg(long)]
    pub color_values: Option<Color>,
    #[arg(long)]
    pub crosshatch_non_sig: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Freq2,
    Freq3,
    Bayes2,
    Bayes3,
}

impl Mode {
    pub fn is_bayes(self) -> bool {
        matches!(self, Mode::Bayes2 | Mode::Bayes3)
    }

    pub fn order(self) -> usize {
        match self {
            Mode::Freq2 | Mode::Bayes2 => 2,
            Mode::Freq3 | Mode::Bayes3 => 3,
        }
    }
}

/// Validated settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: PathBuf,
    pub thetas: Vec<String>,
    /// Explicit moderator values per theta; `None` falls back to the spec range.
    pub values: Vec<Option<Vec<f64>>>,
    pub significance: SignificanceConfig,
    pub range_size: usize,
    pub thresholds: Thresholds,
    pub burn_in: usize,
    pub thin: usize,
    pub grouped: bool,
    pub out: PathBuf,
    pub style: StyleConfig,
    pub width: i64,
    pub height: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Parses `a,b,c` or `min:max:count` into strictly increasing values.
pub fn parse_values(flag: &str, raw: &str) -> Result<Vec<f64>, UsageError> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("--{flag}: '{}' is not a finite number", s.trim())))
    };
    let values = if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        let [min, max, count] = parts.as_slice() else {
            return Err(usage(format!(
                "--{flag}: expected min:max:count, got '{raw}'"
            )));
        };
        let (min, max) = (number(min)?, number(max)?);
        let count: usize = count.trim().parse().map_err(|_| {
            usage(format!(
                "--{flag}: count '{}' is not an integer",
                count.trim()
            ))
        })?;
        if count < 2 || min >= max {
            return Err(usage(format!(
                "--{flag}: need min < max and count >= 2, got '{raw}'"
            )));
        }
        linspace(min, max, count)
    } else {
        raw.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!(
            "--{flag}: values must be strictly increasing"
        )));
    }
    Ok(values)
}

fn parse_thresholds(raw: &str) -> Result<Thresholds, UsageError> {
    let parts: Vec<&str> = raw.split(',').collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(usage(format!("--thresholds: expected t1,t2, got '{raw}'")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("--thresholds: '{}' is not a number", s.trim())))
    };
    Thresholds::new(parse(lo)?, parse(hi)?).map_err(|e| usage(format!("--thresholds: {e}")))
}

impl StyleArgs {
    fn apply(&self, mut style: StyleConfig) -> Result<StyleConfig, UsageError> {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { style.$field = v; })*
            };
        }
        set!(
            sig_color,
            non_sig_color,
            line_color,
            color_low,
            color_mid,
            color_high,
            color_grid,
            grid_density,
            grid_spacing,
            color_values,
            crosshatch_non_sig
        );
        for (flag, v) in [
            ("grid-density", style.grid_density),
            ("grid-spacing", style.grid_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("--{flag} must be positive, got {v}")));
            }
        }
        Ok(style)
    }
}

impl RunConfig {
    pub fn from_command(command: Command) -> Result<Self, UsageError> {
        let (mode, args) = match command {
            Command::Freq2(a) => (Mode::Freq2, a),
            Command::Freq3(a) => (Mode::Freq3, a),
            Command::Bayes2(a) => (Mode::Bayes2, a),
            Command::Bayes3(a) => (Mode::Bayes3, a),
        };

        let mut thetas = vec![args.theta1.clone(), args.theta2.clone()];
        match (&args.theta3, mode.order()) {
            (Some(t), 3) => thetas.push(t.clone()),
            (None, 3) => return Err(usage("three-way modes require --theta3")),
            (Some(_), _) => return Err(usage("--theta3 is only valid for three-way modes")),
            (None, _) => {}
        }
        for (i, t) in thetas.iter().enumerate() {
            if t.trim().is_empty() {
                return Err(usage(format!("--theta{} must not be empty", i + 1)));
            }
            if thetas[..i].contains(t) {
                return Err(usage(format!("theta '{t}' given twice")));
            }
        }

        let raw_vals = [&args.theta1_vals, &args.theta2_vals, &args.theta3_vals];
        if mode.order() == 2 && args.theta3_vals.is_some() {
            return Err(usage("--theta3-vals is only valid for three-way modes"));
        }
        let values = raw_vals[..mode.order()]
            .iter()
            .enumerate()
            .map(|(i, raw)| {
                let flag = format!("theta{}-vals", i + 1);
                match raw {
                    Some(r) => parse_values(&flag, r).map(Some),
                    None if mode.is_bayes() => Err(usage(format!(
                        "Bayesian modes require --{flag}: moderator values must always be supplied"
                    ))),
                    None => Ok(None),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        if mode.is_bayes() {
            if args.alpha.is_some() || args.range_size.is_some() {
                return Err(usage(
                    "--alpha and --range-size apply to frequentist modes only",
                ));
            }
        } else if args.thresholds.is_some() || args.burn_in.is_some() || args.thin.is_some() {
            return Err(usage(
                "--thresholds, --burn-in and --thin apply to Bayesian modes only",
            ));
        }

        let alpha = args.alpha.unwrap_or(0.05);
        let significance = SignificanceConfig::new(alpha)
            .map_err(|_| usage(format!("--alpha must lie in (0, 1), got {alpha}")))?;
        let range_size = args.range_size.unwrap_or(DEFAULT_RANGE_SIZE);
        if range_size < 2 {
            return Err(usage(format!(
                "--range-size must be at least 2, got {range_size}"
            )));
        }
        let thresholds = match &args.thresholds {
            Some(raw) => parse_thresholds(raw)?,
            None => Thresholds::default(),
        };
        let thin = args.thin.unwrap_or(1);
        if thin == 0 {
            return Err(usage("--thin must be at least 1"));
        }
        if args.width <= 0 || args.height <= 0 {
            return Err(usage(format!(
                "plot dimensions must be positive, got {}x{}",
                args.width, args.height
            )));
        }
        let style = args.style.apply(StyleConfig::default())?;

        Ok(RunConfig {
            mode,
            input: args.input,
            thetas,
            values,
            significance,
            range_size,
            thresholds,
            burn_in: args.burn_in.unwrap_or(0),
            thin,
            grouped: args.grouped,
            out: args.out,
            style,
            width: args.width,
            height: args.height,
        })
    }
}

/// Parses and validates a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseFailure::Clap)?;
    RunConfig::from_command(cli.command).map_err(ParseFailure::Usage)
}

#[derive(Debug)]
pub enum ParseFailure {
    /// Includes `--help` and `--version`, which clap reports as errors.
    Clap(clap::Error),
    Usage(UsageError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &str) -> Result<RunConfig, ParseFailure> {
        parse_args(std::iter::once("jnk").chain(line.split_whitespace()))
    }

    fn usage_err(line: &str) -> String {
        match parse(line) {
            Err(ParseFailure::Usage(e)) => e.0,
            Err(ParseFailure::Clap(e)) => {
                assert_eq!(e.exit_code(), 2, "{e}");
                e.to_string()
            }
            Ok(cfg) => panic!("expected a usage error, got {cfg:?}"),
        }
    }

    #[test]
    fn freq2_defaults() {
        let cfg = parse("freq2 --input m.json --theta1 x --theta2 z").unwrap();
        assert_eq!(cfg.mode, Mode::Freq2);
        assert_eq!(cfg.thetas, ["x", "z"]);
        assert_eq!(cfg.significance.alpha(), 0.05);
        assert_eq!(cfg.range_size, 50);
        assert_eq!(cfg.values, vec![None, None]);
        assert_eq!(cfg.style, StyleConfig::default());
        assert!(!cfg.grouped);
    }

    #[test]
    fn bayes_requires_values() {
        let msg = usage_err("bayes2 --input d.csv --theta1 x --theta2 z --theta2-vals 0,1");
        assert!(msg.contains("--theta1-vals"), "{msg}");
        let cfg = parse(
            "bayes2 --input d.csv --theta1 x --theta2 z --theta1-vals -1,0,1 --theta2-vals -3:3:7",
        )
        .unwrap();
        assert_eq!(cfg.values[0], Some(vec![-1.0, 0.0, 1.0]));
        assert_eq!(
            cfg.values[1],
            Some(vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        );
        assert_eq!(cfg.thresholds, Thresholds::default());
    }

    #[test]
    fn rejects_bad_alpha() {
        let msg = usage_err("freq3 --input m.json --theta1 x --theta2 z --theta3 w --alpha 1.5");
        assert!(msg.contains("alpha"), "{msg}");
        usage_err("freq2 --input m.json --theta1 x --theta2 z --alpha abc");
    }

    #[test]
    fn mode_specific_arguments() {
        usage_err("freq3 --input m.json --theta1 x --theta2 z");
        usage_err("freq2 --input m.json --theta1 x --theta2 z --theta3 w");
        usage_err("freq2 --input m.json --theta1 x --theta2 z --thin 2");
        usage_err("bayes2 --input d.csv --theta1 x --theta2 z --theta1-vals 0,1 --theta2-vals 0,1 --alpha 0.1");
        usage_err("freq2 --input m.json --theta1 x --theta2 x");
        usage_err("freq2 --input m.json --theta1 x");
        usage_err("freq2 --input m.json --theta1 x --theta2 z --bogus");
    }

    #[test]
    fn value_list_forms() {
        assert_eq!(parse_values("v", "1, 2,3").unwrap(), [1.0, 2.0, 3.0]);
        assert_eq!(parse_values("v", "0:1:3").unwrap(), [0.0, 0.5, 1.0]);
        assert!(parse_values("v", "1,1").is_err());
        assert!(parse_values("v", "2,1").is_err());
        assert!(parse_values("v", "0:1").is_err());
        assert!(parse_values("v", "0:1:1").is_err());
        assert!(parse_values("v", "1:0:5").is_err());
        assert!(parse_values("v", "1,nan").is_err());
        assert!(parse_values("v", "").is_err());
    }

    #[test]
    fn thresholds_and_style() {
        let cfg = parse(
            "bayes3 --input d.csv --theta1 x --theta2 z --theta3 w --theta1-vals 0,1 --theta2-vals 0,1 \
             --theta3-vals 0,1 --thresholds 0.1,0.9 --burn-in 100 --thin 5 --sig-color seagreen \
             --crosshatch-non-sig false --grid-spacing 0.2",
        )
        .unwrap();
        assert_eq!(cfg.thresholds, Thresholds::new(0.1, 0.9).unwrap());
        assert_eq!((cfg.burn_in, cfg.thin), (100, 5));
        assert_eq!(cfg.style.sig_color.to_string(), "#2E8B57");
        assert!(!cfg.style.crosshatch_non_sig);
        assert_eq!(cfg.style.grid_spacing, 0.2);

        let base = "bayes2 --input d.csv --theta1 x --theta2 z --theta1-vals 0,1 --theta2-vals 0,1";
        usage_err(&format!("{base} --thresholds 0.9,0.1"));
        usage_err(&format!("{base} --thresholds 0.5"));
        usage_err(&format!("{base} --thin 0"));
        usage_err(&format!("{base} --sig-color nope"));
        usage_err(&format!("{base} --grid-density -1"));
        usage_err(&format!("{base} --width 0"));
    }
}
