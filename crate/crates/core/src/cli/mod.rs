//! Command-line front end.

mod commands;
pub mod output;
mod reproduce;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use output::{ErrorBody, ErrorRecord, Table, SCHEMA, TOOLKIT, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "gpvortex", version, about = "Vortex branches of the rotating Gross-Pitaevskii equation")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Radial modes per angular index
    #[arg(long = "nr", global = true, default_value_t = crate::radial::DEFAULT_NR)]
    pub n_r: usize,
    /// Harmonic cutoff |k| <= K of the secondary sector
    #[arg(long = "k", global = true, default_value_t = crate::secondary::DEFAULT_K)]
    pub k_max: usize,
    /// Residual a converged secondary point must reach
    #[arg(long, global = true, default_value_t = crate::secondary::SECONDARY_TOL)]
    pub tol: f64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (reproduce: output directory); stdout if absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Leading-order two-mode field
    Truncated,
    /// Converged secondary branch point
    Converged,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Cartesian,
    Polar,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Counts, curve list, reduced matrices and midrange signatures for one m0
    Atlas {
        #[arg(long)]
        m0: u32,
    },
    /// Primary branch omega(a) over an amplitude grid
    Branch {
        #[arg(long)]
        m0: u32,
        /// Comma-separated increasing amplitudes
        #[arg(long = "a", value_delimiter = ',', required = true, allow_negative_numbers = true)]
        a: Vec<f64>,
    },
    /// Lowest eigenvalues of the Hessian block H_m(a, Omega)
    Spectrum {
        #[arg(long)]
        m0: u32,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        m: i32,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Eigenvalue tracks over an Omega sweep and the detected bifurcation points
    Crossings {
        #[arg(long)]
        m0: u32,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
        omega_min: f64,
        #[arg(long, default_value_t = 1.99, allow_negative_numbers = true)]
        omega_max: f64,
        #[arg(long, default_value_t = 199)]
        steps: usize,
        /// Tracked eigenvalues per block
        #[arg(long, default_value_t = 4)]
        tracks: usize,
    },
    /// Continue the secondary branch of curve (m, n) over an amplitude grid
    Secondary {
        #[arg(long)]
        m0: u32,
        #[arg(long)]
        m: i32,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long)]
        a: f64,
        /// Comma-separated amplitudes along the bifurcating direction
        #[arg(long = "b", value_delimiter = ',', required = true, allow_negative_numbers = true)]
        b: Vec<f64>,
        /// Skip the sector Morse counts
        #[arg(long)]
        no_morse: bool,
    },
    /// Sample a branch field on a grid
    Field {
        #[arg(long)]
        m0: u32,
        #[arg(long)]
        m: i32,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, value_enum, default_value_t = Source::Truncated)]
        source: Source,
        #[arg(long, value_enum, default_value_t = GridKind::Cartesian)]
        grid: GridKind,
        /// Half width (cartesian) or outer radius (polar)
        #[arg(long, default_value_t = 3.0)]
        extent: f64,
        /// Points per side (cartesian) or radii and angles (polar)
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Locate and classify the zeros of a branch field
    Zeros {
        #[arg(long)]
        m0: u32,
        #[arg(long)]
        m: i32,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, value_enum, default_value_t = Source::Converged)]
        source: Source,
        #[arg(long, default_value_t = crate::vortex::DEFAULT_R_REF)]
        r_ref: f64,
    },
    /// Regenerate the reference data set into the --out directory and check it
    Reproduce,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Atlas { .. } => "atlas",
            Command::Branch { .. } => "branch",
            Command::Spectrum { .. } => "spectrum",
            Command::Crossings { .. } => "crossings",
            Command::Secondary { .. } => "secondary",
            Command::Field { .. } => "field",
            Command::Zeros { .. } => "zeros",
            Command::Reproduce => "reproduce",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Spectrum { .. } => Format::Text,
            _ => Format::Json,
        }
    }
}

/// Everything that determines a run's output; hashed into every file.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub a_grid: Vec<f64>,
    pub omega_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    pub n_r: usize,
    pub k_max: usize,
    pub tol: f64,
    pub format: Format,
    /// No run draws random numbers; kept in the record for completeness.
    pub deterministic: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: "config".into(), message: msg.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self { code: EXIT_CONFIG, kind: "io".into(), message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::UnsupportedMode { .. }
            | Error::Resolution { .. }
            | Error::InsufficientBlocks { .. }
            | Error::Aliasing(_) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        };
        let dbg = format!("{e:?}");
        let kind = dbg.split(['(', ' ', '{']).next().unwrap_or("error").to_string();
        Self { code, kind, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn check_grid(name: &str, g: &[f64]) -> CliResult<()> {
    if g.is_empty() {
        return Err(CliError::config(format!("{name} grid is empty")));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(CliError::config(format!("{name} grid has non-finite entries")));
    }
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::config(format!("{name} grid is not strictly increasing")));
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let c = &cli.common;
        let (mut a_grid, mut omega_grid, mut b_grid) = (Vec::new(), Vec::new(), Vec::new());
        match &cli.command {
            Command::Branch { a, .. } => a_grid = a.clone(),
            Command::Spectrum { a, omega, .. } => {
                a_grid = vec![*a];
                omega_grid = vec![*omega];
            }
            Command::Crossings { a, omega_min, omega_max, steps, .. } => {
                if *steps < 2 {
                    return Err(CliError::config("crossings needs at least 2 sweep points"));
                }
                a_grid = vec![*a];
                omega_grid = linspace(*omega_min, *omega_max, *steps);
            }
            Command::Secondary { a, b, .. } => {
                a_grid = vec![*a];
                b_grid = b.clone();
            }
            Command::Field { a, b, .. } | Command::Zeros { a, b, .. } => {
                a_grid = vec![*a];
                b_grid = vec![*b];
            }
            Command::Atlas { .. } | Command::Reproduce => {}
        }
        let cfg = RunConfig {
            command: cli.command.clone(),
            a_grid,
            omega_grid,
            b_grid,
            n_r: c.n_r,
            k_max: c.k_max,
            tol: c.tol,
            format: c.format.unwrap_or(cli.command.default_format()),
            deterministic: true,
            out: c.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.n_r < 2 {
            return Err(CliError::config("--nr must be at least 2"));
        }
        if self.k_max < 2 {
            return Err(CliError::config("--k must be at least 2"));
        }
        match &self.command {
            Command::Atlas { .. } | Command::Reproduce => {}
            Command::Branch { .. } => check_grid("a", &self.a_grid)?,
            Command::Crossings { .. } => check_grid("Omega", &self.omega_grid)?,
            Command::Secondary { .. } => check_grid("b", &self.b_grid)?,
            _ => {}
        }
        if self.a_grid.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(CliError::config("amplitudes a must be finite and nonnegative"));
        }
        if self.omega_grid.iter().any(|w| !w.is_finite()) || self.b_grid.iter().any(|b| !b.is_finite()) {
            return Err(CliError::config("non-finite grid entry"));
        }
        if let Command::Reproduce = self.command {
            if self.out.is_none() {
                return Err(CliError::config("reproduce needs --out <directory>"));
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        output::config_hash(self)
    }
}

/// Rendered payloads of one command; the selected format picks one.
pub struct Report {
    pub json: serde_json::Value,
    pub csv: Option<Table>,
    pub text: Option<String>,
}

impl Report {
    pub fn render(&self, cfg: &RunConfig, hash: &str) -> CliResult<String> {
        let name = cfg.command.name();
        match cfg.format {
            Format::Json => Ok(output::to_json(&output::Envelope {
                schema: SCHEMA,
                toolkit: TOOLKIT,
                version: VERSION,
                command: name,
                config: cfg,
                config_hash: hash,
                result: &self.json,
            })),
            Format::Csv => self
                .csv
                .as_ref()
                .map(|t| t.render(name, hash))
                .ok_or_else(|| CliError::config(format!("{name} has no csv output"))),
            Format::Text => self
                .text
                .clone()
                .ok_or_else(|| CliError::config(format!("{name} has no text output"))),
        }
    }
}

fn write_out(path: Option<&Path>, body: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(p, body).map_err(|e| CliError::io(p, e))
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Runs one command; returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let name = cli.command.name();
    let cfg = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => return report_error(name, None, &e),
    };
    let hash = cfg.hash();
    let result = match &cfg.command {
        Command::Reproduce => reproduce::run(&cfg, &hash),
        _ => commands::execute(&cfg)
            .and_then(|r| r.render(&cfg, &hash))
            .and_then(|body| write_out(cfg.out.as_deref(), &body))
            .map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => report_error(name, Some(&hash), &e),
    }
}

fn report_error(command: &str, hash: Option<&str>, e: &CliError) -> i32 {
    let rec = ErrorRecord {
        schema: SCHEMA,
        toolkit: TOOLKIT,
        version: VERSION,
        command,
        config_hash: hash,
        error: ErrorBody { exit_code: e.code, kind: &e.kind, message: &e.message },
    };
    eprintln!("error: {}", e.message);
    print!("{}", output::to_json(&rec));
    e.code
}
