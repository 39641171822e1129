//! Command-line flags, the optional JSON config file and their merge into a [`RunConfig`].

use crate::descriptor::{check_increasing, check_n_list, parse_grid, parse_n_list, parse_potential, parse_system};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mfs_core::{DepthPolicy, PotentialSpec, SystemSpec};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "mfs", version, about = "Pressure, free energy and multifractal spectra of conformal IFS")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pressure enclosures P(t, β) over t and β grids.
    Pressure(Flags),
    /// Free energy t(β) over a β grid.
    FreeEnergy(Flags),
    /// Legendre spectrum f(α) over an α grid.
    Spectrum(Flags),
    /// Convergence report along the truncations I_n.
    Exhaust(Flags),
    /// ρ distance between two systems.
    Rho(Flags),
    /// Single-symbol derivative ratio check between an approximant and a target.
    LambdaCheck(Flags),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Pressure(_) => CommandKind::Pressure,
            Command::FreeEnergy(_) => CommandKind::FreeEnergy,
            Command::Spectrum(_) => CommandKind::Spectrum,
            Command::Exhaust(_) => CommandKind::Exhaust,
            Command::Rho(_) => CommandKind::Rho,
            Command::LambdaCheck(_) => CommandKind::LambdaCheck,
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Pressure(f)
            | Command::FreeEnergy(f)
            | Command::Spectrum(f)
            | Command::Exhaust(f)
            | Command::Rho(f)
            | Command::LambdaCheck(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Pressure,
    FreeEnergy,
    Spectrum,
    Exhaust,
    Rho,
    LambdaCheck,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// JSON file with default values; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub psi: Option<String>,
    /// β grid, `a:b:step` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// t grid for `pressure`.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Truncation sizes, comma separated.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub symbol_cap: Option<u64>,
    #[arg(long)]
    pub target_width: Option<f64>,
    /// Largest |t| tried when bracketing the free energy.
    #[arg(long)]
    pub t_cap: Option<f64>,
    /// Word length the free energy may escalate to for unresolved signs.
    #[arg(long)]
    pub escalate: Option<usize>,
    /// Skip the untruncated system in `exhaust`.
    #[arg(long)]
    pub no_full: bool,
    #[arg(long)]
    pub system_a: Option<String>,
    #[arg(long)]
    pub system_b: Option<String>,
    /// Symbol depth for `rho`.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Ratio bound R for `lambda-check`.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Symbols compared explicitly by `lambda-check` for two infinite laws.
    #[arg(long)]
    pub lambda_cap: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, env = "MFS_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(untagged)]
enum GridText {
    #[default]
    Missing,
    Text(String),
    List(Vec<f64>),
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum CountText {
    Text(String),
    List(Vec<u64>),
}

/// Schema of the config file. Every key is optional.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    system: Option<String>,
    psi: Option<String>,
    #[serde(default)]
    beta: GridText,
    #[serde(default)]
    alpha: GridText,
    #[serde(default)]
    t: GridText,
    n: Option<CountText>,
    tol: Option<f64>,
    max_depth: Option<usize>,
    symbol_cap: Option<u64>,
    target_width: Option<f64>,
    t_cap: Option<f64>,
    escalate: Option<usize>,
    include_full: Option<bool>,
    system_a: Option<String>,
    system_b: Option<String>,
    depth: Option<u32>,
    ratio: Option<f64>,
    lambda_cap: Option<u64>,
    format: Option<Format>,
    output: Option<PathBuf>,
    threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub system: Option<SystemSpec>,
    pub psi: Option<PotentialSpec>,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub t: Vec<f64>,
    pub n_list: Vec<u64>,
    pub tol: f64,
    pub policy: DepthPolicy,
    pub t_cap: f64,
    pub escalate: Option<usize>,
    pub include_full: bool,
    pub system_a: Option<SystemSpec>,
    pub system_b: Option<SystemSpec>,
    pub depth: u32,
    pub ratio: f64,
    pub lambda_cap: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_BETA: &str = "-5:5:0.1";

fn read_file(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn grid(flag: &Option<String>, file: GridText) -> Result<Option<Vec<f64>>, String> {
    match (flag, file) {
        (Some(s), _) => parse_grid(s).map(Some),
        (None, GridText::Text(s)) => parse_grid(&s).map(Some),
        (None, GridText::List(v)) => check_increasing(&v).map(|_| Some(v)),
        (None, GridText::Missing) => Ok(None),
    }
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("missing --{what}"))
}

/// Merges flags over the config file and applies per-command requirements.
pub fn parse_config(command: &Command) -> Result<RunConfig, String> {
    let kind = command.kind();
    let f = command.flags();
    let file = match &f.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    let pick_str = |flag: &Option<String>, file: Option<String>| flag.clone().or(file);

    let system = pick_str(&f.system, file.system).map(|s| parse_system(&s)).transpose()?;
    let psi = pick_str(&f.psi, file.psi).map(|s| parse_potential(&s)).transpose()?;
    let system_a = pick_str(&f.system_a, file.system_a).map(|s| parse_system(&s)).transpose()?;
    let system_b = pick_str(&f.system_b, file.system_b).map(|s| parse_system(&s)).transpose()?;
    let beta = grid(&f.beta, file.beta)?;
    let alpha = grid(&f.alpha, file.alpha)?;
    let t = grid(&f.t, file.t)?;
    let n_list = match (&f.n, file.n) {
        (Some(s), _) => Some(parse_n_list(s)?),
        (None, Some(CountText::Text(s))) => Some(parse_n_list(&s)?),
        (None, Some(CountText::List(v))) => Some(check_n_list(&v).map(|_| v)?),
        (None, None) => None,
    };

    let tol = f.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err("tol must be positive".into());
    }
    let base = DepthPolicy::default();
    let policy = DepthPolicy {
        max_depth: f.max_depth.or(file.max_depth).unwrap_or(base.max_depth),
        symbol_cap: f.symbol_cap.or(file.symbol_cap).unwrap_or(base.symbol_cap),
        target_width: f.target_width.or(file.target_width).unwrap_or(base.target_width),
    };
    policy.validate().map_err(|e| e.to_string())?;
    let t_cap = f.t_cap.or(file.t_cap).unwrap_or(64.0);
    if !(t_cap > 1.0) || !t_cap.is_finite() {
        return Err("t-cap must be a finite number above 1".into());
    }
    let ratio = f.ratio.or(file.ratio).unwrap_or(2.0);
    if !(ratio > 1.0) {
        return Err("ratio must exceed 1".into());
    }
    let threads = f.threads.or(file.threads);
    if threads == Some(0) {
        return Err("threads must be positive".into());
    }

    let mut cfg = RunConfig {
        command: kind,
        system,
        psi,
        beta: Vec::new(),
        alpha: alpha.unwrap_or_default(),
        t: t.unwrap_or_default(),
        n_list: n_list.unwrap_or_default(),
        tol,
        policy,
        t_cap,
        escalate: f.escalate.or(file.escalate),
        include_full: !f.no_full && file.include_full.unwrap_or(true),
        system_a,
        system_b,
        depth: f.depth.or(file.depth).unwrap_or(20),
        ratio,
        lambda_cap: f.lambda_cap.or(file.lambda_cap).unwrap_or(4096),
        format: f.format.or(file.format).unwrap_or_default(),
        output: f.output.clone().or(file.output),
        threads,
    };
    let default_beta = || parse_grid(DEFAULT_BETA).expect("default grid");
    match kind {
        CommandKind::Pressure => {
            need(cfg.system.as_ref(), "system")?;
            need(cfg.psi.as_ref(), "psi")?;
            if cfg.t.is_empty() {
                return Err("missing --t".into());
            }
            cfg.beta = beta.unwrap_or_else(|| vec![0.0]);
        }
        CommandKind::FreeEnergy | CommandKind::Spectrum | CommandKind::Exhaust => {
            need(cfg.system.as_ref(), "system")?;
            need(cfg.psi.as_ref(), "psi")?;
            cfg.beta = beta.unwrap_or_else(default_beta);
            if kind != CommandKind::FreeEnergy {
                if cfg.alpha.is_empty() {
                    return Err("missing --alpha".into());
                }
                if cfg.beta.len() < 3 {
                    return Err("the β grid needs at least 3 points".into());
                }
            }
            if kind == CommandKind::Exhaust && cfg.n_list.is_empty() {
                return Err("missing --n".into());
            }
        }
        CommandKind::Rho | CommandKind::LambdaCheck => {
            if cfg.system_a.is_none() {
                cfg.system_a = cfg.system.clone();
            }
            need(cfg.system_a.as_ref(), "system-a")?;
            need(cfg.system_b.as_ref(), "system-b")?;
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> Result<RunConfig, String> {
        let cli = Cli::try_parse_from(std::iter::once("mfs").chain(args.iter().copied())).map_err(|e| e.to_string())?;
        parse_config(&cli.command)
    }

    #[test]
    fn spectrum_grid() {
        let c = cfg(&["spectrum", "--system", "gauss", "--psi", "neg2log", "--alpha", "0.2:0.95:0.05"]).unwrap();
        assert_eq!(c.alpha.len(), 16);
        assert_eq!(c.beta.len(), 101);
        assert_eq!(c.tol, 1e-3);
        assert_eq!(c.policy, DepthPolicy::default());
    }

    #[test]
    fn exhaust_and_rho() {
        let c = cfg(&["exhaust", "--system", "glueroth", "--psi", "negid", "--n", "3,5,10", "--alpha", "1.2,1.3"]).unwrap();
        assert_eq!(c.n_list, vec![3, 5, 10]);
        let c = cfg(&["rho", "--system-a", "gauss", "--system-b", "gauss:trunc=8", "--depth", "12"]).unwrap();
        assert_eq!(c.system_b, Some(SystemSpec::gauss().truncate(8).unwrap()));
        assert_eq!(c.depth, 12);
    }

    #[test]
    fn negative_grid_values() {
        let c = cfg(&["free-energy", "--system", "lueroth", "--psi", "negid", "--beta", "-2:-1:0.5"]).unwrap();
        assert_eq!(c.beta, vec![-2.0, -1.5, -1.0]);
    }

    #[test]
    fn usage_errors() {
        assert!(cfg(&["spectrum", "--system", "gauss", "--psi", "neg2log"]).is_err());
        assert!(cfg(&["free-energy", "--system", "nope", "--psi", "negid"]).is_err());
        assert!(cfg(&["free-energy", "--system", "gauss", "--psi", "negid", "--tol", "0"]).is_err());
        assert!(cfg(&["free-energy", "--system", "gauss", "--psi", "negid", "--bogus", "1"]).is_err());
    }
}
