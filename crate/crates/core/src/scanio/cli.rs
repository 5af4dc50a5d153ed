//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{read_config, to_args};
use super::{
    compact_spectrum, convergence_scan, degeneracy_scan, fmt_num, scan_radius, scan_toy_mu, write_scan_csv,
    ScanResult, StepControl, ToyBases,
};
use crate::density::{density_grid, grid_integral, localization_from_coeffs, parity_adapted_vectors, write_density_csv};
use crate::matrixbuild::{alpha_geometric, write_matrix_dump, BasisSpec};
use crate::potential::{
    fourier_cutoff, potential_closed, potential_fourier_sum, potential_image_sum, potential_image_sum_corrected,
    ModelConfig,
};
use crate::shooting::ShootingConfig;
use crate::{Error, R_CRIT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "kk-hydrogen",
    version,
    about = "Hydrogen on R^3 x S^1: potentials, spectra and densities"
)]
struct Cli {
    /// File of `key = value` lines used as defaults for the subcommand flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest levels of the compactified atom against the radius R.
    #[command(args_override_self = true)]
    SpectrumScan(SpectrumArgs),
    /// Coulomb + Yukawa ground state against 1/mu by shooting and both bases.
    #[command(args_override_self = true)]
    ToyScan(ToyArgs),
    /// Ground energy against the Fourier cutoff Q.
    #[command(args_override_self = true)]
    Convergence(ConvergenceArgs),
    /// l = 0 and l = 1 levels against R, plus the first Kaluza-Klein level.
    #[command(args_override_self = true)]
    Degeneracy(DegeneracyArgs),
    /// |psi|^2 of one eigenstate on an (r, theta) grid.
    #[command(args_override_self = true)]
    Density(DensityArgs),
    /// Image-sum, closed and Fourier forms of the potential on a grid.
    #[command(args_override_self = true)]
    PotentialTable(PotentialArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BasisKind {
    Hydrogen,
    Exponential,
}

#[derive(Args, Debug, Clone)]
struct BasisArgs {
    #[arg(long, value_enum, default_value_t = BasisKind::Hydrogen)]
    basis: BasisKind,
    /// Hydrogen: largest principal number. Exponential: number of exponents.
    #[arg(long = "N", default_value_t = 7)]
    n: u32,
    /// Angular momentum channel (hydrogen only).
    #[arg(long, default_value_t = 0)]
    l: u32,
    /// First exponent of the geometric sequence alpha_n = A B^(n-1).
    #[arg(long = "A", default_value_t = 0.1)]
    a: f64,
    #[arg(long = "B", default_value_t = 1.5)]
    b: f64,
}

impl BasisArgs {
    fn spec(&self, q_max: Option<u32>) -> Result<BasisSpec, Error> {
        match self.basis {
            BasisKind::Hydrogen => BasisSpec::hydrogen(self.n, self.l, q_max),
            BasisKind::Exponential => {
                if self.l != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "the exponential basis is s-wave only, got l = {}",
                        self.l
                    )));
                }
                BasisSpec::exponential(alpha_geometric(self.a, self.b, self.n as usize)?, q_max)
            }
        }
    }
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(long = "Q", default_value_t = 30)]
    q: u32,
    #[arg(long, default_value_t = 0.02)]
    rmin: f64,
    #[arg(long, default_value_t = R_CRIT)]
    rmax: f64,
    /// Number of levels per row.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Target of |E1''| dR^2 per step.
    #[arg(long, default_value_t = 1e-3)]
    budget: f64,
    /// Order levels by eigenvector overlap with the previous radius.
    #[arg(long)]
    track: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ToyArgs {
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0.2:6:0.2")]
    invmu: String,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    /// Size of the hydrogen basis.
    #[arg(long = "N", default_value_t = 10)]
    n: u32,
    #[arg(long = "A", default_value_t = 0.1)]
    a: f64,
    #[arg(long = "B", default_value_t = 1.5)]
    b: f64,
    /// Size of the exponential basis.
    #[arg(long = "Nexp", default_value_t = 10)]
    n_exp: usize,
    #[arg(long, default_value_t = 1e-10)]
    ode_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(long, default_value_t = 1)]
    qmin: u32,
    #[arg(long, default_value_t = 50)]
    qmax: u32,
    #[arg(long = "R", default_value_t = R_CRIT)]
    radius: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DegeneracyArgs {
    #[arg(long = "N", default_value_t = 7)]
    n: u32,
    #[arg(long = "Q", default_value_t = 30)]
    q: u32,
    /// `start:stop:step` (inclusive) or a comma-separated list of radii.
    #[arg(long = "R", default_value = "0.02:0.2:0.02")]
    radii: String,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(long = "Q", default_value_t = 30)]
    q: u32,
    #[arg(long = "R", default_value_t = 0.1)]
    radius: f64,
    /// Eigenstate index, 0 for the ground state.
    #[arg(long, default_value_t = 0)]
    state: usize,
    #[arg(long, default_value_t = 10.0)]
    rmax: f64,
    #[arg(long, default_value_t = 200)]
    nr: usize,
    #[arg(long, default_value_t = 181)]
    ntheta: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the Hamiltonian (and overlap, if any) to this file.
    #[arg(long, value_name = "FILE")]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PotentialArgs {
    #[arg(long = "R", default_value_t = 0.1)]
    radius: f64,
    #[arg(long, default_value_t = 2.0)]
    rmax: f64,
    #[arg(long, default_value_t = 20)]
    nr: usize,
    #[arg(long, default_value_t = 20)]
    ntheta: usize,
    /// Images on each side in the image sum.
    #[arg(long, default_value_t = 10_000)]
    nmax: u64,
    /// Relative size of the last kept Fourier term.
    #[arg(long, default_value_t = 1e-16)]
    fourier_eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of one CLI invocation, with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_)
            | Error::SourcePoint
            | Error::DimensionMismatch { .. }
            | Error::StateIndex { .. } => EXIT_USAGE,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or `a,b,c`.
fn parse_range(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let bad = |why: &str| Failure::usage(format!("invalid range for {what} `{text}`: {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(bad("too many points"));
        }
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad("no values"));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(bad("values must increase"));
    }
    Ok(values)
}

fn check_model_radius(radius: f64) -> Result<(), Failure> {
    if radius > R_CRIT {
        return Err(Failure::usage(format!(
            "R = {radius} exceeds the critical radius a/4 = {R_CRIT}: the atom has no ground state there, \
             so spectra are only computed for R <= {R_CRIT}"
        )));
    }
    if !(radius > 0.0) {
        return Err(Failure::usage(format!("invalid range: R must be positive, got {radius}")));
    }
    Ok(())
}

fn open_out(path: &Option<PathBuf>, stdout: &mut dyn Write, body: &dyn Fn(&mut dyn Write) -> crate::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("cannot write {}: {e}", p.display()),
            })?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
        }
        None => body(stdout)?,
    }
    Ok(())
}

fn emit_scan(result: &ScanResult, out: &Option<PathBuf>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    open_out(out, stdout, &|w| write_scan_csv(w, result))?;
    if result.failures.is_empty() {
        return Ok(());
    }
    for (x, msg) in &result.failures {
        let _ = writeln!(stderr, "warning: {} = {} failed: {msg}", result.axis_name, fmt_num(*x));
    }
    Err(Failure {
        code: EXIT_NUMERICAL,
        message: format!("{} of the scan points failed", result.failures.len()),
    })
}

fn run_spectrum(a: &SpectrumArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    check_model_radius(a.rmax)?;
    if !(a.rmin > 0.0 && a.rmin < a.rmax) {
        return Err(Failure::usage(format!(
            "invalid range: need 0 < rmin < rmax (rmin = {}, rmax = {})",
            a.rmin, a.rmax
        )));
    }
    let spec = a.basis.spec(Some(a.q))?;
    let ctl = StepControl {
        curvature_budget: a.budget,
        track_levels: a.track,
    };
    let result = scan_radius(&spec, a.rmin, a.rmax, a.levels, &ctl)?;
    emit_scan(&result, &a.out, stdout, stderr)
}

fn run_toy(a: &ToyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let inv_mu = parse_range(&a.invmu, "--invmu")?;
    if inv_mu[0] <= 0.0 {
        return Err(Failure::usage(format!("invalid range for --invmu: 1/mu must be positive, got {}", inv_mu[0])));
    }
    let bases = ToyBases {
        hydrogen_n: a.n,
        alphas: alpha_geometric(a.a, a.b, a.n_exp)?,
        g: a.g,
    };
    let shooting = ShootingConfig {
        ode_tol: a.ode_tol,
        ..ShootingConfig::default()
    };
    let result = scan_toy_mu(&inv_mu, &bases, &shooting)?;
    emit_scan(&result, &a.out, stdout, stderr)
}

fn run_convergence(a: &ConvergenceArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    check_model_radius(a.radius)?;
    if a.qmin > a.qmax {
        return Err(Failure::usage(format!("invalid range: qmin = {} > qmax = {}", a.qmin, a.qmax)));
    }
    let spec = a.basis.spec(None)?;
    let qs: Vec<u32> = (a.qmin..=a.qmax).collect();
    let result = convergence_scan(&spec, &qs, a.radius)?;
    emit_scan(&result, &a.out, stdout, stderr)
}

fn run_degeneracy(a: &DegeneracyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let radii = parse_range(&a.radii, "--R")?;
    for &r in &radii {
        check_model_radius(r)?;
    }
    let result = degeneracy_scan(a.n, a.q, &radii, a.levels)?;
    emit_scan(&result, &a.out, stdout, stderr)
}

fn run_density(a: &DensityArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    check_model_radius(a.radius)?;
    let spec = a.basis.spec(Some(a.q))?;
    let (pair, spectrum) = compact_spectrum(&spec, a.radius)?;
    if let Some(path) = &a.dump_matrix {
        let cfg = ModelConfig::new(a.radius)?;
        let mut sink = Vec::new();
        open_out(&Some(path.clone()), &mut sink, &|w| {
            write_matrix_dump(&mut *w, &pair.h, &spec, &cfg)?;
            if let Some(s) = &pair.s {
                writeln!(w, "overlap")?;
                write_matrix_dump(&mut *w, s, &spec, &cfg)?;
            }
            Ok(())
        })?;
    }
    let mut grid = density_grid(&spec, &spectrum, a.state, a.rmax, a.nr, a.ntheta)?;
    grid.meta.radius = Some(a.radius);
    let vectors = parity_adapted_vectors(&spec, &spectrum)?;
    let coeffs: Vec<f64> = vectors.column(a.state).iter().copied().collect();
    let extra = vec![
        ("localization".to_string(), fmt_num(localization_from_coeffs(&spec, &coeffs)?)),
        ("grid_norm".to_string(), fmt_num(grid_integral(&grid))),
        ("rmax".to_string(), a.rmax.to_string()),
    ];
    open_out(&a.out, stdout, &|w| write_density_csv(w, &grid, &extra))
}

fn run_potential(a: &PotentialArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    if !(a.radius > 0.0) || !(a.rmax > 0.0) || a.nr == 0 || a.ntheta == 0 {
        return Err(Failure::usage("invalid range: need R > 0, rmax > 0, nr >= 1, ntheta >= 1"));
    }
    let cfg = ModelConfig::new(a.radius)?;
    let thetas = crate::density::theta_nodes(a.ntheta);
    let body = |w: &mut dyn Write| -> crate::Result<()> {
        writeln!(w, "# kk-hydrogen {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# units: lengths in a, energies in e^2/2a")?;
        writeln!(w, "# R = {}", a.radius)?;
        writeln!(w, "# nmax = {}", a.nmax)?;
        writeln!(w, "# fourier_eps = {}", a.fourier_eps)?;
        writeln!(w, "r,theta,closed,image_sum,image_sum_corrected,fourier")?;
        for i in 1..=a.nr {
            let r = a.rmax * i as f64 / a.nr as f64;
            let k_max = fourier_cutoff(r, &cfg, a.fourier_eps);
            for &t in &thetas {
                let cells = [
                    r,
                    t,
                    potential_closed(r, t, &cfg)?,
                    potential_image_sum(r, t, &cfg, a.nmax)?,
                    potential_image_sum_corrected(r, t, &cfg, a.nmax)?,
                    potential_fourier_sum(r, t, &cfg, k_max)?,
                ];
                let row: Vec<String> = cells.iter().map(|v| fmt_num(*v)).collect();
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    };
    open_out(&a.out, stdout, &body)
}

/// Splits `--config FILE` / `--config=FILE` out of `argv`.
fn take_config(argv: &[String]) -> (Vec<String>, Option<String>, bool) {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut dangling = false;
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            match it.next() {
                Some(p) => path = Some(p.clone()),
                None => dangling = true,
            }
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg.clone());
        }
    }
    (rest, path, dangling)
}

fn parse_args(argv: &[String]) -> Result<Cli, Failure> {
    let (mut args, config, dangling) = take_config(argv);
    if dangling {
        return Err(Failure::usage("--config needs a file name"));
    }
    if let Some(path) = config {
        let pairs = read_config(Path::new(&path)).map_err(|e| Failure::usage(e.to_string()))?;
        let extra = to_args(&pairs);
        let sub_pos = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1);
        let Some(sub_pos) = sub_pos else {
            return Err(Failure::usage("a subcommand is required"));
        };
        // The config alone must parse, so that its mistakes are reported as such.
        let mut alone = args[..=sub_pos].to_vec();
        alone.extend(extra.iter().cloned());
        if let Err(e) = Cli::try_parse_from(&alone) {
            if !matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let first = e.to_string();
                let first = first.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
                return Err(Failure::usage(format!("bad entry in config file {path}: {first}")));
            }
        }
        args.splice(sub_pos + 1..sub_pos + 1, extra);
    }
    Cli::try_parse_from(&args).map_err(|e| Failure {
        code: match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                EXIT_OK
            }
            _ => EXIT_USAGE,
        },
        message: e.to_string(),
    })
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_cli_with(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match parse_args(argv) {
        Ok(cli) => cli,
        Err(f) => {
            let sink: &mut dyn Write = if f.code == EXIT_OK { stdout } else { stderr };
            let msg = f.message.trim_end();
            let _ = if msg.starts_with("error:") || f.code == EXIT_OK {
                writeln!(sink, "{msg}")
            } else {
                writeln!(sink, "error: {msg}")
            };
            return f.code;
        }
    };
    let outcome = match &cli.command {
        Command::SpectrumScan(a) => run_spectrum(a, stdout, stderr),
        Command::ToyScan(a) => run_toy(a, stdout, stderr),
        Command::Convergence(a) => run_convergence(a, stdout, stderr),
        Command::Degeneracy(a) => run_degeneracy(a, stdout, stderr),
        Command::Density(a) => run_density(a, stdout),
        Command::PotentialTable(a) => run_potential(a, stdout),
    };
    match outcome {
        Ok(()) => {
            let _ = stdout.flush();
            EXIT_OK
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

/// Runs the CLI on the process streams.
pub fn run_cli(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_syntax() {
        let v = parse_range("0.2:1:0.2", "x").unwrap();
        assert_eq!(v.len(), 5);
        assert!((v[4] - 1.0).abs() < 1e-12);
        assert_eq!(parse_range("1,2,4", "x").unwrap(), vec![1.0, 2.0, 4.0]);
        for bad in ["1:2", "1:0:0.1", "1:2:0", "a,b", "2,1", ""] {
            assert!(parse_range(bad, "x").is_err(), "{bad}");
        }
    }

    #[test]
    fn config_is_split_out() {
        let argv: Vec<String> = ["kk", "--config", "f", "density", "--R", "0.1"].iter().map(|s| s.to_string()).collect();
        let (rest, path, dangling) = take_config(&argv);
        assert_eq!(rest, vec!["kk", "density", "--R", "0.1"]);
        assert_eq!(path.as_deref(), Some("f"));
        assert!(!dangling);
    }
}
