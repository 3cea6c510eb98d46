//! Command-line front end: sweeps over drive amplitude and probe frequency
//! rendered as long-format CSV, plus JSON symmetry reports.

pub mod config;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dipole::dipole_elements;
use crate::error::{Error, Result};
use crate::floquet::{floquet_solve, match_branches, FloquetSolution};
use crate::models::ModelBundle;
use crate::response::susceptibility;
use crate::symmetry::{self, ModelSymmetryReport};

pub use config::{Artifact, Grid, ModelFactory, PopulationSource, RunConfig};

/// Clamp for `log10 |chi|` at exact zeros.
pub const LOG10_FLOOR: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Quasienergies,
    Susceptibility,
    Dipoles,
    SymmetryReport,
    DarkScan,
}

impl Command {
    pub fn artifact(self) -> Artifact {
        match self {
            Command::Quasienergies => Artifact::Quasienergies,
            Command::Susceptibility => Artifact::Susceptibility,
            Command::Dipoles => Artifact::Dipoles,
            Command::SymmetryReport => Artifact::SymmetryReport,
            Command::DarkScan => Artifact::DarkScan,
        }
    }
}

/// An error with the sweep point it occurred at.
#[derive(Debug)]
pub struct CommandError {
    pub drive: Option<f64>,
    pub error: Error,
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.drive {
            Some(d) => write!(f, "at f/Omega = {}: {}", format_number(d), self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for CommandError {}

impl From<Error> for CommandError {
    fn from(error: Error) -> Self {
        Self { drive: None, error }
    }
}

impl CommandError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 4 for inapplicable symmetry rules in strict mode.
    pub fn exit_code(&self) -> i32 {
        match self.error {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Nyquist { .. }
            | Error::Cutoff { .. }
            | Error::Dimension { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Inapplicable { .. } => 4,
            Error::SolverAccuracy { .. }
            | Error::DefectiveMonodromy { .. }
            | Error::Truncation { .. }
            | Error::Classification { .. }
            | Error::Pairing { .. } => 3,
        }
    }
}

type CmdResult<T> = std::result::Result<T, CommandError>;

fn at(drive: f64) -> impl Fn(Error) -> CommandError {
    move |error| CommandError {
        drive: Some(drive),
        error,
    }
}

/// `%.12g`-style rendering with `-0` normalized to `0`.
pub fn format_number(x: f64) -> String {
    const DIGITS: usize = 12;
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One evaluated drive point.
struct Point {
    drive: f64,
    bundle: ModelBundle,
    solution: FloquetSolution,
}

/// The command runner for one configuration.
pub struct Runner {
    pub config: RunConfig,
    factory: ModelFactory,
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `base_dir` resolves relative custom-model paths; `workers = 0` uses
    /// all available cores.
    pub fn new(config: RunConfig, base_dir: &Path, workers: usize) -> CmdResult<Self> {
        config.validate()?;
        let factory = ModelFactory::new(&config.model, base_dir)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
        Ok(Self { config, factory, pool })
    }

    pub fn from_path(path: &Path, workers: usize) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        let config = RunConfig::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::new(config, base, workers)
    }

    pub fn drive_grid(&self) -> Vec<f64> {
        match &self.config.sweep.drive {
            Some(g) => g.points(),
            None => vec![self.factory.default_drive()],
        }
    }

    pub fn probe_grid(&self) -> Vec<f64> {
        self.config.sweep.probe.unwrap_or(config::DEFAULT_PROBE_GRID).points()
    }

    /// Evaluates `f` on every drive point in parallel; results keep grid order.
    fn sweep<T: Send>(&self, f: impl Fn(&Point) -> Result<T> + Sync) -> CmdResult<Vec<T>> {
        let grid = self.drive_grid();
        self.pool.install(|| {
            grid.par_iter()
                .map(|&drive| {
                    let point = self.solve(drive).map_err(at(drive))?;
                    log::debug!("solved f/Omega = {drive}");
                    f(&point).map_err(at(drive))
                })
                .collect()
        })
    }

    fn solve(&self, drive: f64) -> Result<Point> {
        let bundle = self.factory.build(drive)?;
        let solution = floquet_solve(&bundle.hamiltonian, &self.config.solver)?;
        Ok(Point {
            drive,
            bundle,
            solution,
        })
    }

    pub fn run(&self, command: Command) -> CmdResult<String> {
        match command {
            Command::Quasienergies => self.quasienergies(),
            Command::Susceptibility => self.susceptibility(),
            Command::Dipoles => self.dipoles(),
            Command::SymmetryReport => self.symmetry_report(),
            Command::DarkScan => self.dark_scan(),
        }
    }

    /// Rows `f_over_omega,branch,eps_over_omega`, continued across the sweep.
    pub fn quasienergies(&self) -> CmdResult<String> {
        let points = self.sweep(|p| Ok((p.drive, p.solution.clone())))?;
        let mut out = String::from("f_over_omega,branch,eps_over_omega\n");
        let mut state_of_branch: Vec<usize> = Vec::new();
        let mut previous: Option<&FloquetSolution> = None;
        for (drive, sol) in &points {
            state_of_branch = match previous {
                None => (0..sol.dim()).collect(),
                Some(prev) => {
                    let m = match_branches(prev, sol);
                    if m.discontinuous {
                        log::warn!("branch continuation ambiguous at f/Omega = {drive}");
                    }
                    state_of_branch.iter().map(|&s| m.permutation[s]).collect()
                }
            };
            for (branch, &state) in state_of_branch.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    format_number(*drive),
                    branch,
                    format_number(sol.quasienergies[state] / sol.omega)
                );
            }
            previous = Some(sol);
        }
        Ok(out)
    }

    /// Rows `f_over_omega,omega_p_over_omega,band,re_chi,im_chi,abs_chi,log10_abs_chi`.
    pub fn susceptibility(&self) -> CmdResult<String> {
        let probe = self.probe_grid();
        let harmonics = self.config.analysis.harmonics;
        let section = &self.config.response;
        let blocks = self.sweep(|p| {
            let omega = p.solution.omega;
            let cfg = section.to_config(omega);
            let ds = dipole_elements(&p.solution, &p.bundle.probe, harmonics)?;
            let pops = section.populations.populations(&p.bundle, &p.solution)?;
            let grid: Vec<f64> = probe.iter().map(|w| w * omega).collect();
            let spectra = cfg
                .bands
                .iter()
                .map(|&band| susceptibility(&ds, &p.solution, &pops, &cfg, band, &grid))
                .collect::<Result<Vec<_>>>()?;
            let mut block = String::new();
            for (i, w) in probe.iter().enumerate() {
                for s in &spectra {
                    // chi scales with 1/energy through the resonance denominators
                    let chi = s.chi[i] * omega;
                    let abs = chi.norm();
                    let log = if abs > 0.0 { abs.log10().max(LOG10_FLOOR) } else { LOG10_FLOOR };
                    let _ = writeln!(
                        block,
                        "{},{},{},{},{},{},{}",
                        format_number(p.drive),
                        format_number(*w),
                        s.band,
                        format_number(chi.re),
                        format_number(chi.im),
                        format_number(abs),
                        format_number(log)
                    );
                }
            }
            Ok(block)
        })?;
        let mut out = String::from("f_over_omega,omega_p_over_omega,band,re_chi,im_chi,abs_chi,log10_abs_chi\n");
        out.extend(blocks);
        Ok(out)
    }

    /// Rows `f_over_omega,mu,nu,n,re_v,im_v,abs_v` for `|n| <= n_range`.
    pub fn dipoles(&self) -> CmdResult<String> {
        let harmonics = self.config.analysis.harmonics;
        let n_max = self.config.analysis.n_range.min(harmonics) as i64;
        let blocks = self.sweep(|p| {
            let ds = dipole_elements(&p.solution, &p.bundle.probe, harmonics)?;
            let mut block = String::new();
            for mu in 0..ds.dim() {
                for nu in 0..ds.dim() {
                    for n in -n_max..=n_max {
                        let v = ds.get(n, mu, nu);
                        let _ = writeln!(
                            block,
                            "{},{mu},{nu},{n},{},{},{}",
                            format_number(p.drive),
                            format_number(v.re),
                            format_number(v.im),
                            format_number(v.norm())
                        );
                    }
                }
            }
            Ok(block)
        })?;
        let mut out = String::from("f_over_omega,mu,nu,n,re_v,im_v,abs_v\n");
        out.extend(blocks);
        Ok(out)
    }

    /// Rows `f_over_omega,mu,nu,n,abs_v_over_max` for `|n| <= n_range`.
    pub fn dark_scan(&self) -> CmdResult<String> {
        let harmonics = self.config.analysis.harmonics;
        let n_max = self.config.analysis.n_range.min(harmonics) as i64;
        let blocks = self.sweep(|p| {
            let ds = dipole_elements(&p.solution, &p.bundle.probe, harmonics)?;
            let max = ds.max_abs();
            let mut block = String::new();
            for mu in 0..ds.dim() {
                for nu in 0..ds.dim() {
                    for n in -n_max..=n_max {
                        let ratio = if max > 0.0 { ds.get(n, mu, nu).norm() / max } else { 0.0 };
                        let _ = writeln!(block, "{},{mu},{nu},{n},{}", format_number(p.drive), format_number(ratio));
                    }
                }
            }
            Ok(block)
        })?;
        let mut out = String::from("f_over_omega,mu,nu,n,abs_v_over_max\n");
        out.extend(blocks);
        Ok(out)
    }

    /// Per drive point symmetry analysis, as pretty-printed JSON.
    pub fn symmetry_report(&self) -> CmdResult<String> {
        #[derive(Serialize)]
        struct Entry {
            f_over_omega: f64,
            #[serde(flatten)]
            report: ModelSymmetryReport,
        }
        let harmonics = self.config.analysis.harmonics;
        let n_range = self.config.analysis.n_range.min(harmonics);
        let entries = self.sweep(|p| {
            let report = symmetry::analyze(&p.bundle, &p.solution, harmonics, n_range)?;
            Ok(Entry {
                f_over_omega: p.drive,
                report,
            })
        })?;
        if self.config.strict {
            for e in &entries {
                let reasons = e.report.inapplicability();
                if !reasons.is_empty() {
                    return Err(CommandError {
                        drive: Some(e.f_over_omega),
                        error: Error::Inapplicable { reasons },
                    });
                }
            }
        }
        let mut text = serde_json::to_string_pretty(&entries).map_err(Error::from)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes every artifact listed in `outputs` into `dir`.
    pub fn run_all(&self, dir: &Path) -> CmdResult<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        let mut written = Vec::new();
        for artifact in &self.config.outputs {
            let command = match artifact {
                Artifact::Quasienergies => Command::Quasienergies,
                Artifact::Susceptibility => Command::Susceptibility,
                Artifact::Dipoles => Command::Dipoles,
                Artifact::SymmetryReport => Command::SymmetryReport,
                Artifact::DarkScan => Command::DarkScan,
            };
            let text = self.run(command)?;
            let path = dir.join(artifact.file_name());
            std::fs::write(&path, text).map_err(Error::from)?;
            written.push(path);
        }
        Ok(written)
    }
}
