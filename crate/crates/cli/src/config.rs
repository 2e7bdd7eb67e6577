//! Flags, key=value config files and the resolved run configuration.

use anyhow::{anyhow, bail, Result};
use choquard::grid::{Grading, GridSpec};
use choquard::variational::MinOptions;
use clap::{Args, Parser};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const COMMANDS: [&str; 9] =
    ["constants", "eigen", "rayleigh", "cinf", "groundstate", "scan", "landscape", "asymptotics", "verify"];

pub const DEFAULT_SEED: u64 = 20240531;

/// Raised for anything the user can fix by changing the invocation; maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "choquard", version, about = "Numerical laboratory for lower-critical Choquard problems")]
pub struct Cli {
    /// One of: constants, eigen, rayleigh, cinf, groundstate, scan, landscape, asymptotics, verify
    pub command: String,
    #[command(flatten)]
    pub flags: Flags,
}

/// Every flag is optional so that a config file can fill the gaps.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Plain-text key=value file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dimension N ≥ 3
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Riesz order α ∈ (0, N)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Potential depth μ ≥ 0
    #[arg(long)]
    pub mu: Option<f64>,
    /// Potential width ν > 0
    #[arg(long)]
    pub nu: Option<f64>,
    /// Exponent of the trial profile ν^{2p}(ν²+r²)^{−p} (rayleigh)
    #[arg(long)]
    pub p: Option<f64>,
    /// Truncation radius
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    /// Number of radial nodes
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// sinh or uniform
    #[arg(long)]
    pub grading: Option<String>,
    /// Core radius of the sinh grading
    #[arg(long)]
    pub core: Option<f64>,
    /// Highest angular sector searched by eigen and landscape
    #[arg(long = "l-max")]
    pub l_max: Option<usize>,
    /// Number of eigenpairs
    #[arg(long)]
    pub count: Option<usize>,
    /// ε schedule for the energy defect (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// ε of the linking probe
    #[arg(long = "link-eps")]
    pub link_eps: Option<f64>,
    /// μ points of the threshold scan (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub mus: Vec<f64>,
    /// Dimensions of the asymptotic table (comma separated)
    #[arg(long = "n-list", value_delimiter = ',')]
    pub n_list: Vec<usize>,
    /// Path resolutions of the d_mu probe (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub resolutions: Vec<usize>,
    /// Seed of every random stream (linking probe, verify suites)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo samples of the linking probe
    #[arg(long)]
    pub samples: Option<usize>,
    /// Stopping tolerance on the projected gradient
    #[arg(long = "grad-tol")]
    pub grad_tol: Option<f64>,
    /// Allowed deviation of G(u) from 1
    #[arg(long = "constraint-tol")]
    pub constraint_tol: Option<f64>,
    /// Iteration cap of the constrained minimiser
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Directory receiving CSV/JSON artifacts
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional SVG plot of the main curve
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Parser, Debug)]
struct FileArgs {
    #[command(flatten)]
    flags: Flags,
}

macro_rules! fill {
    ($dst:ident, $src:ident; $($opt:ident),*; $($vec:ident),*) => {
        $( if $dst.$opt.is_none() { $dst.$opt = $src.$opt.clone(); } )*
        $( if $dst.$vec.is_empty() { $dst.$vec = $src.$vec.clone(); } )*
    };
}

impl Flags {
    /// Fills every flag still unset from `other`.
    pub fn or(mut self, other: Flags) -> Flags {
        fill!(self, other;
            n, alpha, mu, nu, p, r_max, m, grading, core, l_max, count, link_eps, seed, samples,
            grad_tol, constraint_tol, max_iter, out, plot, threads;
            eps, mus, n_list, resolutions);
        self
    }

    /// Parses a key=value file. Keys are the long flag names; `_` and `-` are interchangeable.
    pub fn from_config_text(text: &str) -> std::result::Result<Flags, UsageError> {
        let mut args = vec!["config".to_string()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("config line {}: expected key=value, got {raw:?}", lineno + 1)))?;
            let key = k.trim().replace('_', "-");
            if key == "config" {
                return Err(UsageError("config files cannot include other config files".into()));
            }
            args.push(format!("--{key}"));
            args.push(v.trim().to_string());
        }
        FileArgs::try_parse_from(args).map(|f| f.flags).map_err(|e| UsageError(format!("config file: {}", e.kind())))
    }
}

/// Fully resolved settings of one run. Everything that can change a number is here, and
/// all of it is written into the provenance header.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub alpha: f64,
    /// None means the command picks μ (documented per command).
    pub mu: Option<f64>,
    pub nu: f64,
    pub p: Option<f64>,
    pub grid: GridSpec,
    pub l_max: usize,
    pub count: usize,
    pub eps: Vec<f64>,
    pub link_eps: f64,
    pub mus: Vec<f64>,
    pub n_list: Vec<usize>,
    pub resolutions: Vec<usize>,
    pub seed: u64,
    pub samples: usize,
    pub min: MinOptions,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    if v.is_empty() {
        return "auto".into();
    }
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn resolve(command: &str, flags: Flags) -> Result<RunConfig> {
        if !COMMANDS.contains(&command) {
            return Err(UsageError(format!("unknown command {command:?}; expected one of {}", COMMANDS.join(", "))).into());
        }
        let flags = match &flags.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| UsageError(format!("reading config {}: {e}", path.display())))?;
                let file = Flags::from_config_text(&text)?;
                flags.or(file)
            }
            None => flags,
        };
        let n = flags.n.unwrap_or(3);
        let alpha = flags.alpha.unwrap_or(2.0);
        let nu = flags.nu.unwrap_or(1.0);
        // the spectral commands resolve the tail of the eigenfunctions; the kernel commands
        // need room for slowly decaying minimisers but pay O(M²) per kernel
        let spectral = matches!(command, "eigen" | "rayleigh");
        let r_max = flags.r_max.unwrap_or(if spectral { 80.0 * nu } else { 1000.0 * nu });
        let m = flags.m.unwrap_or(if spectral { 1600 } else { 500 });
        let core = flags.core.unwrap_or(nu);
        let grading = match flags.grading.as_deref().unwrap_or("sinh") {
            "sinh" => Grading::Sinh { core },
            "uniform" => Grading::Uniform,
            other => return Err(UsageError(format!("grading must be sinh or uniform, got {other:?}")).into()),
        };
        let defaults = MinOptions::default();
        let min = MinOptions {
            max_iter: flags.max_iter.unwrap_or(defaults.max_iter),
            grad_tol: flags.grad_tol.unwrap_or(defaults.grad_tol),
            constraint_tol: flags.constraint_tol.unwrap_or(defaults.constraint_tol),
            ..defaults
        };
        let cfg = RunConfig {
            command: command.to_string(),
            n,
            alpha,
            mu: flags.mu,
            nu,
            p: flags.p,
            grid: GridSpec::new(n, r_max, m, grading),
            l_max: flags.l_max.unwrap_or(4),
            count: flags.count.unwrap_or(10),
            eps: if flags.eps.is_empty() { vec![0.4, 0.2, 0.1, 0.05] } else { flags.eps },
            link_eps: flags.link_eps.unwrap_or(0.05),
            mus: flags.mus,
            n_list: if flags.n_list.is_empty() { vec![10, 25, 50, 100, 200, 400] } else { flags.n_list },
            resolutions: if flags.resolutions.is_empty() { vec![100, 1000, 10000] } else { flags.resolutions },
            seed: flags.seed.unwrap_or(DEFAULT_SEED),
            samples: flags.samples.unwrap_or(2048),
            min,
            out: flags.out,
            plot: flags.plot,
            threads: flags.threads,
        };
        if cfg.threads == Some(0) {
            bail!(UsageError("--threads must be positive".into()));
        }
        if cfg.count == 0 || cfg.samples == 0 {
            bail!(UsageError("--count and --samples must be positive".into()));
        }
        Ok(cfg)
    }

    /// Canonical text form of every result-affecting setting. Output locations and the
    /// thread count are left out: they do not change any number.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "command={} N={} alpha={} mu={} nu={} p={} {} l-max={} count={} eps={} link-eps={} mus={} n-list={} resolutions={} seed={} samples={}",
            self.command,
            self.n,
            self.alpha,
            self.mu.map_or("auto".into(), |m| m.to_string()),
            self.nu,
            self.p.map_or("auto".into(), |p| p.to_string()),
            self.grid.descriptor().split_once(' ').map_or(String::new(), |(_, rest)| rest.to_string()),
            self.l_max,
            self.count,
            list(&self.eps),
            self.link_eps,
            list(&self.mus),
            list(&self.n_list),
            list(&self.resolutions),
            self.seed,
            self.samples,
        );
        s
    }

    pub fn tolerances(&self) -> String {
        format!(
            "grad-tol={:e} constraint-tol={:e} max-iter={} polish-below={:e} truncation={:e} resonance={:e}",
            self.min.grad_tol,
            self.min.constraint_tol,
            self.min.max_iter,
            self.min.polish_below,
            choquard::variational::TRUNCATION_THRESHOLD,
            choquard::landscape::RESONANCE_TOL
        )
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{}\n{}", self.canonical(), self.tolerances()).as_bytes());
        format!("{digest:x}")
    }

    pub fn mu_or(&self, fallback: f64) -> f64 {
        self.mu.unwrap_or(fallback)
    }
}

pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args)
}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_overrides_file() {
        let file = Flags::from_config_text("# comment\nN = 4\nalpha=1.5\nr_max = 200 # trailing\nmus=0.5,1.0\n").unwrap();
        let cli = Cli::try_parse_from(["choquard", "scan", "--N", "5"]).unwrap();
        let merged = cli.flags.or(file);
        assert_eq!(merged.n, Some(5));
        assert_eq!(merged.alpha, Some(1.5));
        assert_eq!(merged.r_max, Some(200.0));
        assert_eq!(merged.mus, vec![0.5, 1.0]);
    }

    #[test]
    fn bad_config_lines_are_usage_errors() {
        assert!(Flags::from_config_text("N 4").is_err());
        assert!(Flags::from_config_text("frobnicate = 1").is_err());
        assert!(Flags::from_config_text("config = other.cfg").is_err());
    }

    #[test]
    fn hash_ignores_output_locations() {
        let a = RunConfig::resolve("constants", Flags::default()).unwrap();
        let b = RunConfig::resolve("constants", Flags { out: Some("x".into()), threads: Some(2), ..Flags::default() }).unwrap();
        let c = RunConfig::resolve("constants", Flags { nu: Some(2.0), ..Flags::default() }).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert!(RunConfig::resolve("frobnicate", Flags::default()).is_err());
    }
}
