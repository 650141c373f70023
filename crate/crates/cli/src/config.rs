//! Command-line arguments and their validation into a [`RunConfig`].

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "levy-groups", version, about = "Brownian kernels on SU(2), SO(3) and SO(n)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Group: su2, so3 or son (with --n).
    #[arg(long, global = true, value_enum, default_value_t = GroupArg::So3)]
    pub group: GroupArg,
    /// Dimension for --group son.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<usize>,
    /// Highest character order.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 50)]
    pub lmax: usize,
    /// Number of group points (grid bins for `densities`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub points: Option<usize>,
    /// Restarts for the witness search.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 10)]
    pub trials: usize,
    /// Field realizations for `simulate`.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 10_000)]
    pub realizations: usize,
    /// Monte Carlo / Haar draws for `coeffs` and `densities`.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 100_000)]
    pub samples: usize,
    /// RNG seed (u64), or `random`.
    #[arg(long, global = true, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    /// RNG stream id.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 0)]
    pub stream: u64,
    /// Quadrature tolerance.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Metric scale factor on SO(n).
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Stream-splitting width for Monte Carlo.
    #[arg(long, global = true, allow_hyphen_values = true, env = "LEVY_GROUPS_THREADS")]
    pub threads: Option<usize>,
    /// Omit volatile fields (timestamps) from JSON output.
    #[arg(long, global = true)]
    pub no_meta: bool,
    /// Also write sampled field values (`simulate`).
    #[arg(long, global = true)]
    pub values_out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = ValuesFormat::Csv)]
    pub values_format: ValuesFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Character coefficients of the distance (closed form, quadrature, Monte Carlo).
    Coeffs,
    /// Angle and trace densities with empirical histograms.
    Densities,
    /// Definiteness audit of a Haar configuration.
    Check,
    /// Search for a certificate of non-negative-definiteness.
    Witness,
    /// Simulate the Brownian field and its variogram.
    Simulate,
    /// Raw Haar samples.
    Haar,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Coeffs => "coeffs",
            Command::Densities => "densities",
            Command::Check => "check",
            Command::Witness => "witness",
            Command::Simulate => "simulate",
            Command::Haar => "haar",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Su2,
    So3,
    Son,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValuesFormat {
    Csv,
    Bin,
}

/// The group a run operates on, after validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Su2,
    So3,
    Son(usize),
}

impl Group {
    pub fn name(&self) -> String {
        match self {
            Group::Su2 => "su2".into(),
            Group::So3 => "so3".into(),
            Group::Son(n) => format!("so{n}"),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Group::Su2 => 2,
            Group::So3 => 3,
            Group::Son(n) => *n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub group: Group,
    pub lmax: usize,
    pub points: usize,
    pub trials: usize,
    pub realizations: usize,
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
    pub tol: f64,
    pub scale: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub no_meta: bool,
    pub values_out: Option<PathBuf>,
    pub values_format: ValuesFormat,
}

/// Invalid argument combination, naming the offending flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgError {
    pub flag: &'static str,
    pub message: String,
}

impl fmt::Display for ArgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {}", self.flag, self.message)
    }
}

fn bad(flag: &'static str, message: impl Into<String>) -> ArgError {
    ArgError {
        flag,
        message: message.into(),
    }
}

impl Cli {
    pub fn validate(&self) -> Result<RunConfig, ArgError> {
        let cmd = self.command;
        let group = match (self.group, self.n) {
            (GroupArg::Son, None) => return Err(bad("--n", "required with --group son")),
            (GroupArg::Son, Some(n)) if n < 2 => return Err(bad("--n", format!("SO(n) needs n >= 2, got {n}"))),
            (GroupArg::Son, Some(3)) => Group::So3,
            (GroupArg::Son, Some(n)) => Group::Son(n),
            (_, Some(_)) => return Err(bad("--n", "only meaningful with --group son")),
            (GroupArg::Su2, None) => Group::Su2,
            (GroupArg::So3, None) => Group::So3,
        };

        match cmd {
            Command::Coeffs | Command::Densities if matches!(group, Group::Son(_)) => {
                return Err(bad("--group", format!("`{cmd}` supports su2 and so3 only")));
            }
            Command::Simulate if matches!(group, Group::Son(_)) => {
                return Err(bad("--group", "`simulate` supports su2 (and so3 as a diagnostic)"));
            }
            Command::Witness if group == Group::Son(2) => {
                return Err(bad("--n", "witness search needs n >= 3"));
            }
            _ => {}
        }

        let default_points = match cmd {
            Command::Simulate | Command::Densities => 50,
            _ => 100,
        };
        let points = self.points.unwrap_or(default_points);
        let min_points = match cmd {
            Command::Witness => 4,
            Command::Check => 2,
            _ => 1,
        };
        if points < min_points {
            return Err(bad("--points", format!("`{cmd}` needs at least {min_points}, got {points}")));
        }
        if self.trials == 0 {
            return Err(bad("--trials", "must be positive"));
        }
        if cmd == Command::Simulate && self.realizations < levy_groups::field_sim::VARIOGRAM_MIN_REALIZATIONS {
            return Err(bad(
                "--realizations",
                format!(
                    "variogram estimation needs at least {}",
                    levy_groups::field_sim::VARIOGRAM_MIN_REALIZATIONS
                ),
            ));
        }
        let min_samples = match cmd {
            Command::Coeffs => levy_groups::harmonic::MC_MIN_SAMPLES,
            _ => 1,
        };
        if self.samples < min_samples {
            return Err(bad("--samples", format!("`{cmd}` needs at least {min_samples}")));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(bad("--tol", "must be a positive number"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(bad("--scale", "must be a positive number"));
        }
        let threads = self.threads.unwrap_or(1);
        if threads == 0 {
            return Err(bad("--threads", "must be positive"));
        }
        let seed = match self.seed.as_str() {
            "random" => rand::random::<u64>(),
            s => s
                .parse::<u64>()
                .map_err(|_| bad("--seed", format!("expected an unsigned 64-bit integer or `random`, got '{s}'")))?,
        };
        let format = match (cmd, self.format) {
            (Command::Witness, Some(Format::Csv)) => {
                return Err(bad("--format", "certificates are JSON only"));
            }
            (_, Some(f)) => f,
            (Command::Witness | Command::Check, None) => Format::Json,
            (_, None) => Format::Csv,
        };
        if self.values_out.is_some() && cmd != Command::Simulate {
            return Err(bad("--values-out", "only used by `simulate`"));
        }

        Ok(RunConfig {
            command: cmd,
            group,
            lmax: self.lmax,
            points,
            trials: self.trials,
            realizations: self.realizations,
            samples: self.samples,
            seed,
            stream: self.stream,
            tol: self.tol,
            scale: self.scale,
            format,
            out: self.out.clone(),
            threads,
            no_meta: self.no_meta,
            values_out: self.values_out.clone(),
            values_format: self.values_format,
        })
    }
}
